#include "gae/png.hpp"

#include <zlib.h>

#include <string>

#include "gae/detail/binary_io.hpp"

namespace gae {

namespace {

void put_be32(detail::Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(detail::Bytes& out, const char* type, const detail::Bytes& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
  if (width <= 0 || height <= 0 ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw ShapeError("write_png_gray: pixel buffer does not match dimensions");

  detail::Bytes raw;
  raw.reserve(static_cast<std::size_t>(height) * (static_cast<std::size_t>(width) + 1));
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);  // filter type: none
    const auto* row = pixels.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(width);
    raw.insert(raw.end(), row, row + width);
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  detail::Bytes packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw IoError("write_png_gray: zlib compression failed");
  packed.resize(packed_len);

  detail::Bytes header;
  put_be32(header, static_cast<std::uint32_t>(width));
  put_be32(header, static_cast<std::uint32_t>(height));
  header.insert(header.end(), {8, 0, 0, 0, 0});  // depth 8, grayscale, deflate, no filter, no interlace

  detail::Bytes out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  put_chunk(out, "IHDR", header);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  detail::write_file(path, out);
}

PngInfo read_png_info(const std::filesystem::path& path) {
  const detail::Bytes bytes = detail::read_file(path);
  if (bytes.size() < 33 || bytes[0] != 0x89 || bytes[1] != 'P' ||
      std::string(bytes.begin() + 12, bytes.begin() + 16) != "IHDR")
    throw FormatError(path.string() + ": not a PNG file");
  const auto be32 = [&bytes](std::size_t at) {
    return static_cast<int>((bytes[at] << 24) | (bytes[at + 1] << 16) | (bytes[at + 2] << 8) | bytes[at + 3]);
  };
  return {be32(16), be32(20), bytes[24], bytes[25]};
}

}  // namespace gae
