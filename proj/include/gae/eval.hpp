#pragma once

// Evaluation: reconstruction metrics, cluster quality of mapping codes,
// KNN rotation-angle error and analogy rendering.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gae/cir.hpp"
#include "gae/data.hpp"
#include "gae/detail/parallel.hpp"
#include "gae/model.hpp"

namespace gae {

struct MetricsReport {
  double msre = 0.0;
  double mscre = 0.0;
  double dbi = 0.0;
  double rotation_error_deg = 0.0;
  std::string gae_data;
  std::string eval_data;
  Index n_pairs = 0;

  static std::string csv_header();
  /// gae_data,eval_data,n_pairs,msre,mscre,dbi,rotation_error_deg
  std::string csv_row() const;
};

struct EvalOptions {
  Index mscre_k = 10;  // partner pool for MSCRE
  Index knn_k = 5;     // voters for the rotation classifier
  std::uint64_t seed = 20240611;
};

/// Dataset rows as input_dim x N columns in the requested precision.
template <typename Scalar>
Matrix<Scalar> as_columns(const Eigen::MatrixXf& rows) {
  return rows.transpose().template cast<Scalar>();
}

/// Mapping codes for clean inputs, num_mappings x N.
template <typename Scalar>
Matrix<Scalar> dataset_codes(const GaeParams<Scalar>& params, const PairDataset& data) {
  return infer_mapping(params, as_columns<Scalar>(data.x), as_columns<Scalar>(data.y));
}

/// Mean over pairs of the symmetric reconstruction error on clean inputs.
template <typename Scalar>
double msre(const GaeParams<Scalar>& params, const PairDataset& data) {
  if (data.size() == 0) throw InsufficientPopulationError("msre: empty dataset");
  const Matrix<Scalar> x = as_columns<Scalar>(data.x);
  const Matrix<Scalar> y = as_columns<Scalar>(data.y);
  return static_cast<double>(symmetric_recon_error(params, x, y)) / static_cast<double>(data.size());
}

/// Partner index for every pair: uniform among its k nearest codes,
/// drawn sequentially from one stream seeded by `seed`.
std::vector<Index> draw_partners(const Eigen::MatrixXd& code_rows, Index k, std::uint64_t seed);

/// Mean over pairs of the symmetric cross-reconstruction error, each pair
/// reconstructed through the code of a random one of its k nearest
/// neighbors in mapping space.
template <typename Scalar>
double mscre(const GaeParams<Scalar>& params, const PairDataset& data, Index k, std::uint64_t seed) {
  if (data.size() < k + 1)
    throw InsufficientPopulationError("mscre: need at least k + 1 = " + std::to_string(k + 1) +
                                      " pairs, dataset has " + std::to_string(data.size()));
  const Matrix<Scalar> x = as_columns<Scalar>(data.x);
  const Matrix<Scalar> y = as_columns<Scalar>(data.y);
  const Matrix<Scalar> codes = infer_mapping(params, x, y);
  const std::vector<Index> partner = draw_partners(codes.transpose().template cast<double>(), k, seed);
  Matrix<Scalar> partner_codes(codes.rows(), codes.cols());
  for (Index i = 0; i < codes.cols(); ++i) partner_codes.col(i) = codes.col(partner[static_cast<std::size_t>(i)]);
  return static_cast<double>(symmetric_cross_recon_error(params, partner_codes, x, y)) /
         static_cast<double>(data.size());
}

struct ClusterStats {
  std::vector<int> labels;    // sorted distinct class labels
  Eigen::MatrixXd centroids;  // one row per class
  Eigen::VectorXd scatters;   // mean distance of members to their centroid
};

/// `codes` holds one code per row.
ClusterStats cluster_stats(const Eigen::MatrixXd& codes, const std::vector<int>& labels);

/// Davies-Bouldin index: mean over classes of max_{j != i} (s_i + s_j) / d_ij.
double davies_bouldin(const Eigen::MatrixXd& codes, const std::vector<int>& labels);

/// Majority vote of the K nearest training codes (rows). Vote ties go to the
/// label with the smaller mean voter distance, then to the smaller angle.
std::vector<int> knn_classify(const Eigen::MatrixXd& train_codes, const std::vector<int>& train_labels,
                              const Eigen::MatrixXd& query_codes, Index k);

/// Circular distance between two angles in degrees, in [0, 180].
double angular_distance(double a, double b);

/// Mean circular distance between predicted and true angles.
double rotation_error(const std::vector<int>& predictions, const std::vector<int>& truths);

/// All four metrics for one (trained model, evaluation set) combination.
/// KNN training codes come from `knn_reference` (the evaluation data's
/// own training split) projected through the same model.
MetricsReport evaluate(const GaeParams<float>& params, const PairDataset& eval_set,
                       const PairDataset& knn_reference, const EvalOptions& options,
                       const std::string& gae_data, const std::string& eval_data);

/// Applies the transformation a -> b to c: reconstruct_y(infer_mapping(a, b), c).
template <typename Scalar>
Vector<Scalar> make_analogy(const GaeParams<Scalar>& params, const ConstMatrixRef<Scalar>& a,
                            const ConstMatrixRef<Scalar>& b, const ConstMatrixRef<Scalar>& c) {
  if (a.cols() != 1 || b.cols() != 1 || c.cols() != 1)
    throw ShapeError("make_analogy: expects single image vectors");
  detail::check_images(params, a, b, "make_analogy");
  detail::check_images(params, c, c, "make_analogy");
  const Matrix<Scalar> m = infer_mapping(params, a, b);
  return reconstruct_y(params, m, c);
}

/// Writes a row-major grid of equally sized cells as one grayscale PNG with
/// 2-pixel separators. Each cell is min-max scaled to [0, 255] on its own;
/// empty (0x0) cells render black.
void render_grid(const std::vector<std::vector<Image>>& cells, const std::filesystem::path& path);

/// Pixel dimensions (height, width) render_grid produces.
std::pair<Index, Index> grid_extent(Index rows, Index cols, Index cell_side);

}  // namespace gae
