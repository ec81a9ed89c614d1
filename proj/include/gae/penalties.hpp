#pragma once

#include "gae/model.hpp"

namespace gae {

/// Coefficients of the auxiliary training terms added on top of the
/// reconstruction objective (outside the lambda interpolation).
struct PenaltyWeights {
  double mapping_sparsity = 0.0;  // L1 of mapping activations
  double factor_sparsity = 0.0;   // L1 of pooled factor activations
  double weight_decay = 0.0;      // squared Frobenius norm of u, v, w
  double filter_norm = 0.0;       // filter norm/mean uniformity on rows of u, v

  bool any() const {
    return mapping_sparsity != 0.0 || factor_sparsity != 0.0 || weight_decay != 0.0 ||
           filter_norm != 0.0;
  }
  bool operator==(const PenaltyWeights&) const = default;
};

/// sum_f (||f|| - mean_g ||g||)^2 + (mean of f's entries)^2 over rows f.
template <typename Scalar>
double filter_norm_penalty(const Matrix<Scalar>& filters) {
  if (filters.rows() == 0) return 0.0;
  const Eigen::VectorXd norms = filters.template cast<double>().rowwise().norm();
  const Eigen::VectorXd means = filters.template cast<double>().rowwise().mean();
  const double mean_norm = norms.mean();
  return (norms.array() - mean_norm).square().sum() + means.squaredNorm();
}

/// Gradient of filter_norm_penalty. The derivative of the shared mean norm
/// cancels because the deviations sum to zero.
template <typename Scalar>
Matrix<Scalar> filter_norm_penalty_gradient(const Matrix<Scalar>& filters) {
  Matrix<Scalar> grad(filters.rows(), filters.cols());
  if (filters.rows() == 0) return grad;
  const Vector<Scalar> norms = filters.rowwise().norm();
  const Scalar mean_norm = norms.mean();
  const Scalar width = static_cast<Scalar>(filters.cols());
  for (Index r = 0; r < filters.rows(); ++r) {
    const Scalar row_mean = filters.row(r).mean();
    grad.row(r).setConstant(Scalar(2) * row_mean / width);
    if (norms(r) > Scalar(0))
      grad.row(r) += (Scalar(2) * (norms(r) - mean_norm) / norms(r)) * filters.row(r);
  }
  return grad;
}

/// Batch-mean sparsity terms plus the per-batch weight terms.
/// `pooled` and `codes` hold one column per pair.
template <typename Scalar>
double auxiliary_penalties(const GaeParams<Scalar>& p, const Matrix<Scalar>& pooled,
                           const Matrix<Scalar>& codes, const PenaltyWeights& weights) {
  double total = 0.0;
  const double batch = static_cast<double>(std::max<Index>(codes.cols(), 1));
  if (weights.mapping_sparsity != 0.0)
    total += weights.mapping_sparsity * static_cast<double>(codes.cwiseAbs().sum()) / batch;
  if (weights.factor_sparsity != 0.0)
    total += weights.factor_sparsity * static_cast<double>(pooled.cwiseAbs().sum()) / batch;
  if (weights.weight_decay != 0.0)
    total += weights.weight_decay *
             (static_cast<double>(p.u.squaredNorm()) + static_cast<double>(p.v.squaredNorm()) +
              static_cast<double>(p.w.squaredNorm()));
  if (weights.filter_norm != 0.0)
    total += weights.filter_norm * (filter_norm_penalty(p.u) + filter_norm_penalty(p.v));
  return total;
}

}  // namespace gae
