#include "gae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gae/detail/binary_io.hpp"

namespace gae {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr char kPairMagic[] = "GAEPAIR1";

std::uint32_t read_be32(const detail::Bytes& bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

// Exact (cos, sin) for right angles so those rotations are permutations.
std::pair<double, double> cos_sin_degrees(double degrees) {
  double wrapped = std::fmod(degrees, 360.0);
  if (wrapped < 0) wrapped += 360.0;
  if (wrapped == 0.0) return {1.0, 0.0};
  if (wrapped == 90.0) return {0.0, 1.0};
  if (wrapped == 180.0) return {-1.0, 0.0};
  if (wrapped == 270.0) return {0.0, -1.0};
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

float sample_bilinear(const Image& image, double row, double col) {
  const double r0 = std::floor(row);
  const double c0 = std::floor(col);
  const double fr = row - r0;
  const double fc = col - c0;
  const auto at = [&image](double r, double c) -> double {
    if (r < 0 || c < 0 || r >= static_cast<double>(image.rows()) ||
        c >= static_cast<double>(image.cols()))
      return 0.0;
    return image(static_cast<Index>(r), static_cast<Index>(c));
  };
  double value = 0.0;
  if ((1 - fr) * (1 - fc) != 0.0) value += (1 - fr) * (1 - fc) * at(r0, c0);
  if ((1 - fr) * fc != 0.0) value += (1 - fr) * fc * at(r0, c0 + 1);
  if (fr * (1 - fc) != 0.0) value += fr * (1 - fc) * at(r0 + 1, c0);
  if (fr * fc != 0.0) value += fr * fc * at(r0 + 1, c0 + 1);
  return static_cast<float>(value);
}

// 1-D area-averaging weights: out x in, rows sum to one.
Eigen::MatrixXf area_weights(Index in, Index out) {
  Eigen::MatrixXf weights = Eigen::MatrixXf::Zero(out, in);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = lo + scale;
    for (Index k = static_cast<Index>(std::floor(lo)); k < in && static_cast<double>(k) < hi; ++k) {
      const double overlap = std::min(hi, static_cast<double>(k + 1)) - std::max(lo, static_cast<double>(k));
      if (overlap > 0) weights(i, k) = static_cast<float>(overlap / scale);
    }
  }
  return weights;
}

double segment_distance(double r, double c, double r0, double c0, double r1, double c1) {
  const double dr = r1 - r0;
  const double dc = c1 - c0;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0 ? ((r - r0) * dr + (c - c0) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double pr = r0 + t * dr - r;
  const double pc = c0 + t * dc - c;
  return std::sqrt(pr * pr + pc * pc);
}

Eigen::VectorXd normalized_copy(const Image& image) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXf>(image.data(), image.size()).cast<double>();
  v.array() -= v.mean();
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd > 0) v /= sd;
  return v;
}

Image draw_shape(Index size, Rng& rng) {
  Image image = Image::Zero(size, size);
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  const double s = static_cast<double>(size);
  const auto paint = [&](auto&& intensity) {
    for (Index r = 0; r < size; ++r)
      for (Index c = 0; c < size; ++c)
        image(r, c) = std::max(image(r, c), static_cast<float>(intensity(static_cast<double>(r),
                                                                          static_cast<double>(c))));
  };

  const int bars = 1 + static_cast<int>(uniform_index(rng, 2));
  for (int b = 0; b < bars; ++b) {
    const double rad = uniform(rng, 0.0, 0.3 * s);
    const double phi = uniform(rng, 0.0, 2 * std::numbers::pi);
    const double cr = center + rad * std::sin(phi);
    const double cc = center + rad * std::cos(phi);
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double half = uniform(rng, 0.15, 0.3) * s;
    const double width = uniform(rng, 0.04, 0.07) * s;
    const double amp = uniform(rng, 0.6, 1.0);
    const double r0 = cr - half * std::sin(theta), c0 = cc - half * std::cos(theta);
    const double r1 = cr + half * std::sin(theta), c1 = cc + half * std::cos(theta);
    paint([&](double r, double c) {
      const double d = segment_distance(r, c, r0, c0, r1, c1);
      return amp * std::exp(-d * d / (2 * width * width));
    });
  }
  const int blobs = 1 + static_cast<int>(uniform_index(rng, 2));
  for (int b = 0; b < blobs; ++b) {
    const double rad = uniform(rng, 0.1 * s, 0.33 * s);
    const double phi = uniform(rng, 0.0, 2 * std::numbers::pi);
    const double br = center + rad * std::sin(phi);
    const double bc = center + rad * std::cos(phi);
    const double sigma = uniform(rng, 0.06, 0.11) * s;
    const double amp = uniform(rng, 0.5, 1.0);
    paint([&](double r, double c) {
      const double d2 = (r - br) * (r - br) + (c - bc) * (c - bc);
      return amp * std::exp(-d2 / (2 * sigma * sigma));
    });
  }
  image = (image.array() < 0.05f).select(0.0f, image);
  return apply_circular_mask(std::move(image));
}

bool acceptable_shape(const Image& image) {
  const Index nonzero = (image.array() > 0.0f).count();
  if (static_cast<double>(nonzero) < 0.1 * static_cast<double>(image.size())) return false;
  const Eigen::VectorXd base = normalized_copy(image);
  for (double angle : {90.0, 180.0, 270.0}) {
    if ((base - normalized_copy(rotate_image(image, angle))).norm() <= 0.1) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

TransformationSet TransformationSet::mnist_r20() {
  TransformationSet t{TransformationName::kMnistR20, {}};
  for (int a = -180; a <= 160; a += 20) t.angles.push_back(a);
  return t;
}

TransformationSet TransformationSet::mnist_r20_10() {
  TransformationSet t{TransformationName::kMnistR20_10, {}};
  for (int a = -170; a <= 170; a += 20) t.angles.push_back(a);
  return t;
}

TransformationSet TransformationSet::mnist_r1() {
  TransformationSet t{TransformationName::kMnistR1, {}};
  for (int a = -180; a <= 179; ++a) t.angles.push_back(a);
  return t;
}

TransformationSet TransformationSet::custom(std::vector<int> angles) {
  for (int a : angles)
    if (a < -180 || a > 179) throw ConfigError("angle " + std::to_string(a) + " outside [-180, 179]");
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
  return {TransformationName::kCustom, std::move(angles)};
}

TransformationSet TransformationSet::from_name(const std::string& name) {
  if (name == "mnistr20") return mnist_r20();
  if (name == "mnistr20_10" || name == "mnistr20/10") return mnist_r20_10();
  if (name == "mnistr1") return mnist_r1();
  throw ConfigError("unknown transformation set '" + name + "'");
}

bool TransformationSet::contains(int angle) const {
  return std::binary_search(angles.begin(), angles.end(), angle);
}

std::string to_string(TransformationName name) {
  switch (name) {
    case TransformationName::kMnistR20: return "mnistr20";
    case TransformationName::kMnistR20_10: return "mnistr20_10";
    case TransformationName::kMnistR1: return "mnistr1";
    case TransformationName::kCustom: return "custom";
  }
  return "custom";
}

ImageSet parse_idx_images(const std::vector<unsigned char>& bytes, const std::string& source,
                          Split split) {
  if (bytes.size() < 16) throw FormatError(source + ": file too short for an IDX image header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) {
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08X", magic);
    throw FormatError(source + ": bad IDX image magic " + buf);
  }
  const std::uint64_t count = read_be32(bytes, 4);
  const std::uint64_t rows = read_be32(bytes, 8);
  const std::uint64_t cols = read_be32(bytes, 12);
  if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536)
    throw FormatError(source + ": IDX image dimensions out of range");
  const std::uint64_t per_image = rows * cols;
  if (count > (std::uint64_t{1} << 40) / per_image)
    throw FormatError(source + ": IDX dimension product overflows");
  const std::uint64_t expected = 16 + count * per_image;
  if (bytes.size() < expected)
    throw FormatError(source + ": truncated IDX payload: expected " + std::to_string(expected) +
                      " bytes, file has " + std::to_string(bytes.size()));
  ImageSet set;
  set.split = split;
  set.images.reserve(count);
  std::size_t offset = 16;
  for (std::uint64_t i = 0; i < count; ++i) {
    Image image(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < image.rows(); ++r)
      for (Index c = 0; c < image.cols(); ++c) image(r, c) = static_cast<float>(bytes[offset++]) / 255.0f;
    set.images.push_back(std::move(image));
  }
  return set;
}

ImageSet load_idx(const std::filesystem::path& path, Split split) {
  return parse_idx_images(detail::read_file(path), path.string(), split);
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  const detail::Bytes bytes = detail::read_file(path);
  if (bytes.size() < 8) throw FormatError(path.string() + ": file too short for an IDX label header");
  if (read_be32(bytes, 0) != kIdxLabelMagic) throw FormatError(path.string() + ": bad IDX label magic");
  const std::uint64_t count = read_be32(bytes, 4);
  if (bytes.size() < 8 + count)
    throw FormatError(path.string() + ": truncated IDX label payload");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

Image rotate_image(const Image& image, double degrees) {
  const auto [cs, sn] = cos_sin_degrees(degrees);
  const double cy = (static_cast<double>(image.rows()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(image.cols()) - 1.0) / 2.0;
  Image out(image.rows(), image.cols());
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      // Destination offset with the y axis pointing up, rotated back by -angle.
      const double dx = static_cast<double>(c) - cx;
      const double dy = cy - static_cast<double>(r);
      const double sx = cs * dx + sn * dy;
      const double sy = -sn * dx + cs * dy;
      out(r, c) = sample_bilinear(image, cy - sy, cx + sx);
    }
  }
  return out;
}

Image apply_circular_mask(Image image) {
  const double cy = (static_cast<double>(image.rows()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(image.cols()) - 1.0) / 2.0;
  const double radius = std::min(cy, cx) + 0.5;
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const double dr = static_cast<double>(r) - cy;
      const double dc = static_cast<double>(c) - cx;
      if (dr * dr + dc * dc > radius * radius) image(r, c) = 0.0f;
    }
  return image;
}

Image crop_and_resample(const Image& image, Index crop, Index out_size) {
  if (image.rows() != image.cols()) throw ShapeError("crop_and_resample: image must be square");
  if (crop < 1 || crop > image.rows() || out_size < 1 || out_size > crop)
    throw ConfigError("crop_and_resample: need 1 <= out_size <= crop <= side");
  const Index offset = (image.rows() - crop) / 2;
  const Image cropped = image.block(offset, offset, crop, crop);
  if (out_size == crop) return cropped;
  const Eigen::MatrixXf weights = area_weights(crop, out_size);
  return weights * cropped * weights.transpose();
}

PairDataset make_rotation_pairs(const ImageSet& images, const TransformationSet& tset,
                                std::uint64_t seed, const PairOptions& options) {
  if (images.images.empty()) throw ConfigError("make_rotation_pairs: empty image set");
  if (tset.angles.empty()) throw ConfigError("make_rotation_pairs: empty angle set");
  if (options.pairs_per_image < 1) throw ConfigError("make_rotation_pairs: pairs_per_image must be >= 1");
  const Index side = images.side();
  const Index n = images.size() * options.pairs_per_image;
  PairDataset out;
  out.x.resize(n, side * side);
  out.y.resize(n, side * side);
  out.angle_label.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Image& base_image = images.images[static_cast<std::size_t>(i / options.pairs_per_image)];
    if (base_image.rows() != side || base_image.cols() != side)
      throw ShapeError("make_rotation_pairs: images must share one square size");
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const double base = uniform(rng, 0.0, 360.0);
    const int angle = tset.angles[uniform_index(rng, tset.angles.size())];
    Image x = rotate_image(base_image, base);
    Image y = rotate_image(base_image, base + angle);
    if (options.circular_mask) {
      x = apply_circular_mask(std::move(x));
      y = apply_circular_mask(std::move(y));
    }
    out.x.row(i) = image_to_row(x);
    out.y.row(i) = image_to_row(y);
    out.angle_label[static_cast<std::size_t>(i)] = angle;
  }
  return out;
}

void contrast_normalize_rows(Eigen::MatrixXf& rows) {
  for (Index i = 0; i < rows.rows(); ++i) {
    Eigen::RowVectorXd row = rows.row(i).cast<double>();
    const double mean = row.mean();
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
    if (!(sd >= 1e-8))
      throw NumericalError("contrast_normalize: row " + std::to_string(i) +
                           " is constant (degenerate input)");
    rows.row(i) = (row / sd).cast<float>();
  }
}

PairDataset contrast_normalize(PairDataset dataset) {
  contrast_normalize_rows(dataset.x);
  contrast_normalize_rows(dataset.y);
  dataset.normalized = true;
  return dataset;
}

ImageSet synthetic_shapes(Index n, Index size, std::uint64_t seed) {
  if (size < 8) throw ConfigError("synthetic_shapes: size must be >= 8");
  if (n < 0) throw ConfigError("synthetic_shapes: negative image count");
  ImageSet set;
  set.images.reserve(static_cast<std::size_t>(n));
  Rng rng = make_rng(seed, 0x5ea9e5);
  while (set.size() < n) {
    Image image = draw_shape(size, rng);
    if (acceptable_shape(image)) set.images.push_back(std::move(image));
  }
  return set;
}

void save_pairs(const PairDataset& dataset, const std::filesystem::path& path) {
  if (dataset.x.rows() != dataset.y.rows() || dataset.x.cols() != dataset.y.cols() ||
      static_cast<Index>(dataset.angle_label.size()) != dataset.x.rows())
    throw ShapeError("save_pairs: inconsistent dataset shapes");
  detail::Bytes out;
  out.reserve(24 + 8 * static_cast<std::size_t>(dataset.x.size()) + 2 * dataset.angle_label.size());
  detail::put_bytes(out, std::string_view(kPairMagic, 8));
  detail::put_u64(out, static_cast<std::uint64_t>(dataset.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(dataset.input_dim()));
  for (const Eigen::MatrixXf* side : {&dataset.x, &dataset.y})
    for (Index i = 0; i < side->rows(); ++i)
      for (Index j = 0; j < side->cols(); ++j) detail::put_f32(out, (*side)(i, j));
  for (int label : dataset.angle_label) detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(label)));
  detail::write_file(path, out);
}

PairDataset load_pairs(const std::filesystem::path& path) {
  const detail::Bytes bytes = detail::read_file(path);
  detail::Reader in(bytes, path.string());
  if (in.bytes(8, "magic") != std::string(kPairMagic, 8))
    throw FormatError(path.string() + ": not a GAEPAIR1 file (bad magic)");
  const std::uint64_t n = in.u64();
  const std::uint64_t p = in.u64();
  if (p == 0 || n > (std::uint64_t{1} << 32) || p > (std::uint64_t{1} << 24))
    throw FormatError(path.string() + ": implausible pair dataset dimensions");
  in.require(8 * n * p + 2 * n, "pair payload");
  PairDataset out;
  out.x.resize(static_cast<Index>(n), static_cast<Index>(p));
  out.y.resize(static_cast<Index>(n), static_cast<Index>(p));
  for (Eigen::MatrixXf* side : {&out.x, &out.y})
    for (Index i = 0; i < side->rows(); ++i)
      for (Index j = 0; j < side->cols(); ++j) (*side)(i, j) = in.f32();
  out.angle_label.resize(n);
  for (auto& label : out.angle_label) label = in.i16();
  const auto row_ok = [](const Eigen::MatrixXf& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      const Eigen::RowVectorXd row = m.row(i).cast<double>();
      const double mean = row.mean();
      const double sd = std::sqrt((row.array() - mean).square().sum() / static_cast<double>(row.size()));
      if (std::abs(mean) >= 1e-5 || std::abs(sd - 1.0) >= 1e-5) return false;
    }
    return true;
  };
  out.normalized = row_ok(out.x) && row_ok(out.y);
  return out;
}

Index image_side(Index input_dim) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(input_dim))));
  if (side * side != input_dim)
    throw ShapeError("input_dim " + std::to_string(input_dim) + " is not a square image");
  return side;
}

Image row_to_image(const Eigen::Ref<const Eigen::RowVectorXf>& row) {
  const Index side = image_side(row.size());
  Image image(side, side);
  for (Index r = 0; r < side; ++r) image.row(r) = row.segment(r * side, side);
  return image;
}

Eigen::RowVectorXf image_to_row(const Image& image) {
  Eigen::RowVectorXf row(image.size());
  for (Index r = 0; r < image.rows(); ++r) row.segment(r * image.cols(), image.cols()) = image.row(r);
  return row;
}

}  // namespace gae
