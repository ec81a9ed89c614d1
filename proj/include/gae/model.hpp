#pragma once

// Gated autoencoder: parameterization and forward computations.
//
// Everything here works column-wise: an input matrix of shape
// input_dim x B holds B images, a code matrix of shape num_mappings x B
// holds B mapping codes. Single pairs are simply B = 1.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>

#include "gae/errors.hpp"
#include "gae/random.hpp"

namespace gae {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
// Read-only view accepting any dense expression. The scalar is deduced from
// the parameter argument, never from the view.
template <typename Scalar>
using ConstMatrixRef = typename std::type_identity<Eigen::Ref<const Matrix<Scalar>>>::type;

/// A mapping code is one column of num_mappings entries.
template <typename Scalar>
using MappingCode = Vector<Scalar>;

enum class Nonlinearity { kSigmoid, kTanh };

inline std::string to_string(Nonlinearity nl) {
  return nl == Nonlinearity::kSigmoid ? "sigmoid" : "tanh";
}

inline Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "sigmoid") return Nonlinearity::kSigmoid;
  if (name == "tanh") return Nonlinearity::kTanh;
  throw ConfigError("unknown mapping nonlinearity '" + std::string(name) + "'");
}

struct GaeConfig {
  Index input_dim = 0;
  Index num_factors = 0;
  Index num_mappings = 0;
  Nonlinearity nonlinearity = Nonlinearity::kSigmoid;

  Index num_pooled() const { return num_factors / 2; }

  void validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (num_mappings < 1) throw ConfigError("num_mappings must be >= 1");
    if (num_factors < 2 || num_factors % 2 != 0)
      throw ConfigError("num_factors must be a positive even integer, got " +
                        std::to_string(num_factors));
  }

  bool operator==(const GaeConfig&) const = default;
};

/// Binary (num_factors/2) x num_factors matrix summing adjacent factor pairs:
/// row r has ones at columns 2r and 2r+1.
template <typename Scalar>
Matrix<Scalar> build_pooling_matrix(Index num_factors) {
  if (num_factors < 2 || num_factors % 2 != 0)
    throw ConfigError("pooling needs a positive even factor count, got " +
                      std::to_string(num_factors));
  Matrix<Scalar> pool = Matrix<Scalar>::Zero(num_factors / 2, num_factors);
  for (Index r = 0; r < num_factors / 2; ++r) {
    pool(r, 2 * r) = Scalar(1);
    pool(r, 2 * r + 1) = Scalar(1);
  }
  return pool;
}

/// Learnable filters u, v (factors x pixels), w (mappings x pooled factors)
/// and the fixed pooling matrix.
template <typename Scalar>
struct GaeParams {
  GaeConfig config;
  Matrix<Scalar> u;
  Matrix<Scalar> v;
  Matrix<Scalar> w;
  Matrix<Scalar> pool;

  static GaeParams zeros(const GaeConfig& config) {
    config.validate();
    GaeParams p;
    p.config = config;
    p.u = Matrix<Scalar>::Zero(config.num_factors, config.input_dim);
    p.v = Matrix<Scalar>::Zero(config.num_factors, config.input_dim);
    p.w = Matrix<Scalar>::Zero(config.num_mappings, config.num_pooled());
    p.pool = build_pooling_matrix<Scalar>(config.num_factors);
    return p;
  }

  /// Uniform in [-a, a] with a = 1/sqrt(fan-in) of each matrix.
  static GaeParams random(const GaeConfig& config, Rng& rng) {
    GaeParams p = zeros(config);
    const auto fill = [&rng](Matrix<Scalar>& m, double bound) {
      for (Index c = 0; c < m.cols(); ++c)
        for (Index r = 0; r < m.rows(); ++r)
          m(r, c) = static_cast<Scalar>(uniform(rng, -bound, bound));
    };
    fill(p.u, 1.0 / std::sqrt(static_cast<double>(config.input_dim)));
    fill(p.v, 1.0 / std::sqrt(static_cast<double>(config.input_dim)));
    fill(p.w, 1.0 / std::sqrt(static_cast<double>(config.num_pooled())));
    return p;
  }

  template <typename Other>
  GaeParams<Other> cast() const {
    GaeParams<Other> p;
    p.config = config;
    p.u = u.template cast<Other>();
    p.v = v.template cast<Other>();
    p.w = w.template cast<Other>();
    p.pool = pool.template cast<Other>();
    return p;
  }

  void check_shapes() const {
    config.validate();
    if (u.rows() != config.num_factors || u.cols() != config.input_dim ||
        v.rows() != config.num_factors || v.cols() != config.input_dim ||
        w.rows() != config.num_mappings || w.cols() != config.num_pooled())
      throw ShapeError("parameter shapes disagree with GaeConfig");
  }

  void check_finite() const {
    if (!u.allFinite()) throw NumericalError("non-finite entries in u");
    if (!v.allFinite()) throw NumericalError("non-finite entries in v");
    if (!w.allFinite()) throw NumericalError("non-finite entries in w");
  }
};

template <typename Scalar>
struct GaeGradients {
  Matrix<Scalar> du;
  Matrix<Scalar> dv;
  Matrix<Scalar> dw;

  static GaeGradients zeros_like(const GaeParams<Scalar>& p) {
    return {Matrix<Scalar>::Zero(p.u.rows(), p.u.cols()),
            Matrix<Scalar>::Zero(p.v.rows(), p.v.cols()),
            Matrix<Scalar>::Zero(p.w.rows(), p.w.cols())};
  }

  double global_norm() const {
    return std::sqrt(static_cast<double>(du.squaredNorm()) +
                     static_cast<double>(dv.squaredNorm()) +
                     static_cast<double>(dw.squaredNorm()));
  }

  void check_finite() const {
    if (!du.allFinite()) throw NumericalError("non-finite gradient for parameter u");
    if (!dv.allFinite()) throw NumericalError("non-finite gradient for parameter v");
    if (!dw.allFinite()) throw NumericalError("non-finite gradient for parameter w");
  }
};

/// Per-batch loss components. total = (1-lambda)*sre + lambda*scre + penalties.
struct LossBreakdown {
  double sre = 0.0;
  double scre = 0.0;
  double penalties = 0.0;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

inline double combined_loss(double sre, double scre, double lambda) {
  return (1.0 - lambda) * sre + lambda * scre;
}

namespace detail {

template <typename Scalar>
void check_images(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& a,
                  const ConstMatrixRef<Scalar>& b, const char* what) {
  if (a.rows() != p.config.input_dim || b.rows() != p.config.input_dim)
    throw ShapeError(std::string(what) + ": image length must equal input_dim (" +
                     std::to_string(p.config.input_dim) + ")");
  if (a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": paired inputs have different column counts");
}

template <typename Scalar>
void check_codes(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& m, Index cols,
                 const char* what) {
  if (m.rows() != p.config.num_mappings || m.cols() != cols)
    throw ShapeError(std::string(what) + ": mapping code shape mismatch");
}

}  // namespace detail

template <typename Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& pre, Nonlinearity nl) {
  if (nl == Nonlinearity::kSigmoid)
    return (Scalar(1) + (-pre.array()).exp()).inverse().matrix();
  return pre.array().tanh().matrix();
}

/// Derivative of the nonlinearity expressed through its output.
template <typename Scalar>
Matrix<Scalar> activation_slope(const Matrix<Scalar>& out, Nonlinearity nl) {
  if (nl == Nonlinearity::kSigmoid) return (out.array() * (Scalar(1) - out.array())).matrix();
  return (Scalar(1) - out.array().square()).matrix();
}

/// Pooled factors P (Ux .* Vy), one column per pair.
template <typename Scalar>
Matrix<Scalar> pooled_factors(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& x,
                              const ConstMatrixRef<Scalar>& y) {
  detail::check_images(p, x, y, "pooled_factors");
  const Matrix<Scalar> fx = p.u * x;
  const Matrix<Scalar> fy = p.v * y;
  return p.pool * fx.cwiseProduct(fy);
}

/// m = sigma(W P (Ux .* Vy)).
template <typename Scalar>
Matrix<Scalar> infer_mapping(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& x,
                             const ConstMatrixRef<Scalar>& y) {
  const Matrix<Scalar> pre = p.w * pooled_factors(p, x, y);
  return activate(pre, p.config.nonlinearity);
}

/// Factor-space gating signal P^T W^T m.
template <typename Scalar>
Matrix<Scalar> gating_signal(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& m) {
  return p.pool.transpose() * (p.w.transpose() * m);
}

/// x~ = U^T (P^T W^T m .* V y).
template <typename Scalar>
Matrix<Scalar> reconstruct_x(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& m,
                             const ConstMatrixRef<Scalar>& y) {
  detail::check_images(p, y, y, "reconstruct_x");
  detail::check_codes(p, m, y.cols(), "reconstruct_x");
  const Matrix<Scalar> fy = p.v * y;
  return p.u.transpose() * gating_signal(p, m).cwiseProduct(fy);
}

/// y~ = V^T (P^T W^T m .* U x).
template <typename Scalar>
Matrix<Scalar> reconstruct_y(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& m,
                             const ConstMatrixRef<Scalar>& x) {
  detail::check_images(p, x, x, "reconstruct_y");
  detail::check_codes(p, m, x.cols(), "reconstruct_y");
  const Matrix<Scalar> fx = p.u * x;
  return p.v.transpose() * gating_signal(p, m).cwiseProduct(fx);
}

template <typename Scalar>
struct Reconstruction {
  Matrix<Scalar> x;
  Matrix<Scalar> y;
};

/// Reconstructs both sides of pair(s) (x, y) through a code taken from
/// another pair. Output is linear, like the ordinary reconstructions.
template <typename Scalar>
Reconstruction<Scalar> cross_reconstruct(const GaeParams<Scalar>& p,
                                         const ConstMatrixRef<Scalar>& m_partner,
                                         const ConstMatrixRef<Scalar>& x,
                                         const ConstMatrixRef<Scalar>& y) {
  detail::check_images(p, x, y, "cross_reconstruct");
  return {reconstruct_x(p, m_partner, y), reconstruct_y(p, m_partner, x)};
}

/// ||x - x~||^2 + ||y - y~||^2 summed over columns, with the code inferred
/// from the corrupted inputs and the reconstructions gated by them as well.
template <typename Scalar>
Scalar symmetric_recon_error(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& x,
                             const ConstMatrixRef<Scalar>& y,
                             const ConstMatrixRef<Scalar>& x_corrupt,
                             const ConstMatrixRef<Scalar>& y_corrupt) {
  detail::check_images(p, x, y, "symmetric_recon_error");
  detail::check_images(p, x_corrupt, y_corrupt, "symmetric_recon_error");
  if (x.cols() != x_corrupt.cols())
    throw ShapeError("symmetric_recon_error: clean and corrupted batches differ in size");
  const Matrix<Scalar> m = infer_mapping(p, x_corrupt, y_corrupt);
  return (x - reconstruct_x(p, m, y_corrupt)).squaredNorm() +
         (y - reconstruct_y(p, m, x_corrupt)).squaredNorm();
}

template <typename Scalar>
Scalar symmetric_recon_error(const GaeParams<Scalar>& p, const ConstMatrixRef<Scalar>& x,
                             const ConstMatrixRef<Scalar>& y) {
  return symmetric_recon_error(p, x, y, x, y);
}

/// ||x - x~'||^2 + ||y - y~'||^2 summed over columns.
template <typename Scalar>
Scalar symmetric_cross_recon_error(const GaeParams<Scalar>& p,
                                   const ConstMatrixRef<Scalar>& m_partner,
                                   const ConstMatrixRef<Scalar>& x,
                                   const ConstMatrixRef<Scalar>& y) {
  const Reconstruction<Scalar> r = cross_reconstruct(p, m_partner, x, y);
  return (x - r.x).squaredNorm() + (y - r.y).squaredNorm();
}

}  // namespace gae
