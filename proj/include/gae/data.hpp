#pragma once

// Image sets, rotated pair construction and the GAEPAIR1 pair file format.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gae/errors.hpp"
#include "gae/random.hpp"

namespace gae {

using Eigen::Index;

/// Square grayscale image, row-major pixel order when flattened.
using Image = Eigen::MatrixXf;

enum class Split { kTrain, kValidation, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct ImageSet {
  std::vector<Image> images;
  Split split = Split::kTrain;

  Index size() const { return static_cast<Index>(images.size()); }
  Index side() const { return images.empty() ? 0 : images.front().rows(); }
};

enum class TransformationName { kMnistR20, kMnistR20_10, kMnistR1, kCustom };

struct TransformationSet {
  TransformationName name = TransformationName::kCustom;
  std::vector<int> angles;  // sorted degrees in [-180, 179]

  static TransformationSet mnist_r20();     // -180, -160, ..., 160
  static TransformationSet mnist_r20_10();  // -170, -150, ..., 170
  static TransformationSet mnist_r1();      // -180 .. 179
  static TransformationSet custom(std::vector<int> angles);
  static TransformationSet from_name(const std::string& name);

  bool contains(int angle) const;
};

std::string to_string(TransformationName name);

/// Matched image pairs, one pair per row of x and y.
struct PairDataset {
  Eigen::MatrixXf x;  // N x P
  Eigen::MatrixXf y;  // N x P
  std::vector<int> angle_label;
  bool normalized = false;

  Index size() const { return x.rows(); }
  Index input_dim() const { return x.cols(); }
};

// IDX (MNIST distribution format) -------------------------------------------

/// Reads an IDX image file (magic 0x00000803); pixels scaled to [0, 1].
ImageSet load_idx(const std::filesystem::path& path, Split split = Split::kTrain);
/// Reads an IDX label file (magic 0x00000801).
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);
/// Parses an IDX image file already held in memory.
ImageSet parse_idx_images(const std::vector<unsigned char>& bytes, const std::string& source,
                          Split split = Split::kTrain);

// Image operations -----------------------------------------------------------

/// Counter-clockwise rotation about the image center with bilinear
/// interpolation; samples outside the image read as zero. Multiples of 90
/// degrees are exact index permutations.
Image rotate_image(const Image& image, double degrees);

/// Zeroes every pixel whose center lies outside the inscribed disk.
Image apply_circular_mask(Image image);

/// Center crop to `crop` pixels followed by area-averaging resampling to
/// `out_size`. crop == out_size == side leaves the image unchanged.
Image crop_and_resample(const Image& image, Index crop, Index out_size);

// Pair construction ----------------------------------------------------------

struct PairOptions {
  int pairs_per_image = 1;
  bool circular_mask = true;
};

/// For every pair: base angle uniform in [0, 360), class angle uniform from
/// the set, x = rotate(image, base), y = rotate(image, base + angle). Each
/// pair draws from its own stream derived from (seed, pair index).
PairDataset make_rotation_pairs(const ImageSet& images, const TransformationSet& tset,
                                std::uint64_t seed, const PairOptions& options = {});

/// Per-row zero mean and unit population standard deviation.
PairDataset contrast_normalize(PairDataset dataset);
void contrast_normalize_rows(Eigen::MatrixXf& rows);

/// Random oriented bars and blobs on a size x size grid, none of them
/// invariant under 90/180/270 degree rotations.
ImageSet synthetic_shapes(Index n, Index size, std::uint64_t seed);

// GAEPAIR1 files ---------------------------------------------------------------

void save_pairs(const PairDataset& dataset, const std::filesystem::path& path);
PairDataset load_pairs(const std::filesystem::path& path);

/// Image side of a square flattened row, or an error if not square.
Index image_side(Index input_dim);
Image row_to_image(const Eigen::Ref<const Eigen::RowVectorXf>& row);
Eigen::RowVectorXf image_to_row(const Image& image);

}  // namespace gae
