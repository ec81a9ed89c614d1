#pragma once

// Content-invariance regularization support: nearest neighbors in mapping
// space, partner sampling and the lambda/k bootstrapping schedule.

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gae/errors.hpp"
#include "gae/random.hpp"

namespace gae {

using Eigen::Index;

/// Indices of the k rows closest (Euclidean) to row i, nearest first.
/// Row i itself is excluded; equal distances resolve to the lower index.
template <typename Derived>
std::vector<Index> nearest_neighbors(const Eigen::MatrixBase<Derived>& codes, Index i, Index k) {
  const Index n = codes.rows();
  if (i < 0 || i >= n) throw std::out_of_range("nearest_neighbors: row index out of range");
  if (k < 1) throw InsufficientPopulationError("nearest_neighbors: k must be >= 1");
  if (k >= n)
    throw InsufficientPopulationError("nearest_neighbors: k = " + std::to_string(k) +
                                      " needs at least " + std::to_string(k + 1) +
                                      " rows, table has " + std::to_string(n));
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    double d = 0.0;
    for (Index c = 0; c < codes.cols(); ++c) {
      const double diff = static_cast<double>(codes(j, c)) - static_cast<double>(codes(i, c));
      d += diff * diff;
    }
    dist.emplace_back(d, j);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<Index> out(static_cast<std::size_t>(k));
  for (Index r = 0; r < k; ++r) out[static_cast<std::size_t>(r)] = dist[static_cast<std::size_t>(r)].second;
  return out;
}

/// Neighbor lists for every row of `codes`.
template <typename Derived>
std::vector<std::vector<Index>> all_nearest_neighbors(const Eigen::MatrixBase<Derived>& codes,
                                                      Index k) {
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(codes.rows()));
  for (Index i = 0; i < codes.rows(); ++i) lists[static_cast<std::size_t>(i)] = nearest_neighbors(codes, i, k);
  return lists;
}

/// Uniform draw from a neighbor list.
Index sample_partner(std::span<const Index> neighbors, Rng& rng);

enum class ScheduleMode { kLinear, kStepwise };

std::string to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(const std::string& name);

struct SchedulePoint {
  long epoch = 0;
  double lambda = 0.0;
  Index k = 1;

  bool operator==(const SchedulePoint&) const = default;
};

struct CirSchedule {
  ScheduleMode mode = ScheduleMode::kLinear;
  double lambda_max = 1.0;
  Index k_max = 10;
  long ramp_epochs = 3000;
  std::vector<SchedulePoint> steps;  // stepwise mode only, sorted by epoch

  void validate() const;
  bool active() const { return lambda_max > 0.0; }

  /// Steps at 25/50/75% of the ramp raising (lambda, k) to a quarter, half
  /// and the full maximum.
  static CirSchedule default_stepwise(long ramp_epochs, double lambda_max, Index k_max);

  bool operator==(const CirSchedule&) const = default;
};

struct CirParams {
  double lambda = 0.0;
  Index k = 1;

  bool operator==(const CirParams&) const = default;
};

CirParams schedule_at(const CirSchedule& schedule, long epoch);

}  // namespace gae
