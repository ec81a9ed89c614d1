#include "gae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "gae/png.hpp"

namespace gae {

namespace {

constexpr Index kSeparator = 2;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// The k nearest rows of `table` to `query` as (squared distance, index),
// ascending with index tie-break.
std::vector<std::pair<double, Index>> k_nearest(const Eigen::MatrixXd& table,
                                                const Eigen::RowVectorXd& query, Index k) {
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(table.rows()));
  for (Index j = 0; j < table.rows(); ++j) {
    double d = 0.0;
    for (Index c = 0; c < table.cols(); ++c) {
      const double diff = table(j, c) - query(c);
      d += diff * diff;
    }
    dist[static_cast<std::size_t>(j)] = {d, j};
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  dist.resize(static_cast<std::size_t>(k));
  return dist;
}

}  // namespace

std::string MetricsReport::csv_header() {
  return "gae_data,eval_data,n_pairs,msre,mscre,dbi,rotation_error_deg";
}

std::string MetricsReport::csv_row() const {
  return gae_data + "," + eval_data + "," + std::to_string(n_pairs) + "," + fixed6(msre) + "," +
         fixed6(mscre) + "," + fixed6(dbi) + "," + fixed6(rotation_error_deg);
}

std::vector<Index> draw_partners(const Eigen::MatrixXd& code_rows, Index k, std::uint64_t seed) {
  const Index n = code_rows.rows();
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  detail::parallel_for(n, [&](long i) { lists[static_cast<std::size_t>(i)] = nearest_neighbors(code_rows, i, k); });
  Rng rng = make_rng(seed, 0x3c5e);
  std::vector<Index> partner(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < lists.size(); ++i) partner[i] = sample_partner(lists[i], rng);
  return partner;
}

ClusterStats cluster_stats(const Eigen::MatrixXd& codes, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != codes.rows())
    throw ShapeError("cluster_stats: one label per code row required");
  std::map<int, std::vector<Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Index>(i));
  ClusterStats stats;
  stats.centroids.resize(static_cast<Index>(members.size()), codes.cols());
  stats.scatters.resize(static_cast<Index>(members.size()));
  Index c = 0;
  for (const auto& [label, rows] : members) {
    stats.labels.push_back(label);
    const Eigen::MatrixXd block = codes(rows, Eigen::all);
    const Eigen::RowVectorXd centroid = block.colwise().mean();
    stats.centroids.row(c) = centroid;
    stats.scatters(c) = (block.rowwise() - centroid).rowwise().norm().mean();
    ++c;
  }
  return stats;
}

double davies_bouldin(const Eigen::MatrixXd& codes, const std::vector<int>& labels) {
  const ClusterStats stats = cluster_stats(codes, labels);
  const Index classes = static_cast<Index>(stats.labels.size());
  if (classes < 2) throw InsufficientPopulationError("davies_bouldin: need at least two classes");
  double total = 0.0;
  for (Index i = 0; i < classes; ++i) {
    double worst = 0.0;
    for (Index j = 0; j < classes; ++j) {
      if (j == i) continue;
      const double d = (stats.centroids.row(i) - stats.centroids.row(j)).norm();
      if (d == 0.0)
        throw NumericalError("davies_bouldin: classes " + std::to_string(stats.labels[static_cast<std::size_t>(i)]) +
                             " and " + std::to_string(stats.labels[static_cast<std::size_t>(j)]) +
                             " have coincident centroids");
      worst = std::max(worst, (stats.scatters(i) + stats.scatters(j)) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(classes);
}

std::vector<int> knn_classify(const Eigen::MatrixXd& train_codes, const std::vector<int>& train_labels,
                              const Eigen::MatrixXd& query_codes, Index k) {
  if (train_codes.rows() == 0) throw InsufficientPopulationError("knn_classify: empty training set");
  if (static_cast<Index>(train_labels.size()) != train_codes.rows())
    throw ShapeError("knn_classify: one label per training code required");
  if (k < 1 || k > train_codes.rows())
    throw InsufficientPopulationError("knn_classify: K = " + std::to_string(k) + " exceeds training size " +
                                      std::to_string(train_codes.rows()));
  if (query_codes.cols() != train_codes.cols()) throw ShapeError("knn_classify: code length mismatch");

  std::vector<int> predicted(static_cast<std::size_t>(query_codes.rows()));
  detail::parallel_for(query_codes.rows(), [&](long q) {
    const auto nearest = k_nearest(train_codes, query_codes.row(q), k);
    struct Tally {
      int votes = 0;
      double distance = 0.0;
    };
    std::map<int, Tally> tally;
    for (const auto& [d2, j] : nearest) {
      Tally& t = tally[train_labels[static_cast<std::size_t>(j)]];
      ++t.votes;
      t.distance += std::sqrt(d2);
    }
    // std::map iterates angles ascending, so strict comparisons keep the smaller angle.
    int best_label = tally.begin()->first;
    Tally best = tally.begin()->second;
    for (const auto& [label, t] : tally) {
      const double mean = t.distance / t.votes;
      const double best_mean = best.distance / best.votes;
      if (t.votes > best.votes || (t.votes == best.votes && mean < best_mean)) {
        best_label = label;
        best = t;
      }
    }
    predicted[static_cast<std::size_t>(q)] = best_label;
  });
  return predicted;
}

double angular_distance(double a, double b) {
  const double diff = std::fmod(std::abs(a - b), 360.0);
  return std::min(diff, 360.0 - diff);
}

double rotation_error(const std::vector<int>& predictions, const std::vector<int>& truths) {
  if (predictions.size() != truths.size())
    throw ShapeError("rotation_error: prediction and truth lists differ in length");
  if (predictions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) total += angular_distance(predictions[i], truths[i]);
  return total / static_cast<double>(predictions.size());
}

MetricsReport evaluate(const GaeParams<float>& params, const PairDataset& eval_set,
                       const PairDataset& knn_reference, const EvalOptions& options,
                       const std::string& gae_data, const std::string& eval_data) {
  for (const PairDataset* d : {&eval_set, &knn_reference})
    if (d->input_dim() != params.config.input_dim)
      throw ShapeError("evaluate: dataset input_dim " + std::to_string(d->input_dim()) +
                       " does not match model input_dim " + std::to_string(params.config.input_dim));
  MetricsReport report;
  report.gae_data = gae_data;
  report.eval_data = eval_data;
  report.n_pairs = eval_set.size();
  report.msre = msre(params, eval_set);
  report.mscre = mscre(params, eval_set, options.mscre_k, options.seed);

  const Eigen::MatrixXd codes = dataset_codes(params, eval_set).transpose().cast<double>();
  report.dbi = davies_bouldin(codes, eval_set.angle_label);
  const Eigen::MatrixXd reference = dataset_codes(params, knn_reference).transpose().cast<double>();
  const std::vector<int> predicted = knn_classify(reference, knn_reference.angle_label, codes, options.knn_k);
  report.rotation_error_deg = rotation_error(predicted, eval_set.angle_label);
  return report;
}

std::pair<Index, Index> grid_extent(Index rows, Index cols, Index cell_side) {
  return {rows * cell_side + (rows - 1) * kSeparator, cols * cell_side + (cols - 1) * kSeparator};
}

void render_grid(const std::vector<std::vector<Image>>& cells, const std::filesystem::path& path) {
  if (cells.empty() || cells.front().empty()) throw ShapeError("render_grid: empty grid");
  const std::size_t cols = cells.front().size();
  Index side = 0;
  for (const auto& row : cells) {
    if (row.size() != cols) throw ShapeError("render_grid: ragged grid rows");
    for (const Image& cell : row) {
      if (cell.size() == 0) continue;
      if (cell.rows() != cell.cols()) throw ShapeError("render_grid: cells must be square");
      if (side == 0) side = cell.rows();
      if (cell.rows() != side) throw ShapeError("render_grid: cells differ in size");
    }
  }
  if (side == 0) throw ShapeError("render_grid: grid has no image cells");

  const auto [height, width] = grid_extent(static_cast<Index>(cells.size()), static_cast<Index>(cols), side);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(height * width), 255);
  for (std::size_t gr = 0; gr < cells.size(); ++gr) {
    for (std::size_t gc = 0; gc < cols; ++gc) {
      const Image& cell = cells[gr][gc];
      const Index top = static_cast<Index>(gr) * (side + kSeparator);
      const Index left = static_cast<Index>(gc) * (side + kSeparator);
      const float lo = cell.size() ? cell.minCoeff() : 0.0f;
      const float hi = cell.size() ? cell.maxCoeff() : 0.0f;
      for (Index r = 0; r < side; ++r)
        for (Index c = 0; c < side; ++c) {
          std::uint8_t value = 0;
          if (cell.size() && hi > lo)
            value = static_cast<std::uint8_t>(std::lround(255.0 * (cell(r, c) - lo) / (hi - lo)));
          pixels[static_cast<std::size_t>((top + r) * width + left + c)] = value;
        }
    }
  }
  write_png_gray(path, static_cast<int>(width), static_cast<int>(height), pixels);
}

}  // namespace gae
