#pragma once

// Little-endian byte buffer helpers shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "gae/errors.hpp"

namespace gae::detail {

using Bytes = std::vector<unsigned char>;

inline void put_u64(Bytes& out, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(value >> (8 * b)));
}

inline void put_u16(Bytes& out, std::uint16_t value) {
  out.push_back(static_cast<unsigned char>(value));
  out.push_back(static_cast<unsigned char>(value >> 8));
}

inline void put_f32(Bytes& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

inline void put_bytes(Bytes& out, std::string_view bytes) {
  out.insert(out.end(), bytes.begin(), bytes.end());
}

/// Bounds-checked sequential reader over an in-memory file image.
class Reader {
 public:
  Reader(const Bytes& data, std::string source) : data_(data), source_(std::move(source)) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void require(std::size_t count, const char* what) const {
    if (remaining() < count)
      throw FormatError(source_ + ": truncated " + what + ": expected " +
                        std::to_string(pos_ + count) + " bytes, file has " +
                        std::to_string(data_.size()));
  }

  std::uint64_t u64() {
    require(8, "integer field");
    std::uint64_t value = 0;
    for (int b = 0; b < 8; ++b) value |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return value;
  }

  std::int16_t i16() {
    require(2, "label");
    const auto bits = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return static_cast<std::int16_t>(bits);
  }

  float f32() {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return std::bit_cast<float>(bits);
  }

  std::string bytes(std::size_t count, const char* what) {
    require(count, what);
    std::string out(reinterpret_cast<const char*>(data_.data() + pos_), count);
    pos_ += count;
    return out;
  }

 private:
  const Bytes& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

}  // namespace gae::detail
