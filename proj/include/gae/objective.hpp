#pragma once

// Training objective and its analytic gradient.
//
// For a batch of B pairs (clean targets x, y; corrupted inputs xc, yc):
//
//   fx = U xc, fy = V yc, q = P (fx .* fy), m = sigma(W q), h = P^T W^T m
//   sre  = mean ||x - U^T(h .* fy)||^2 + ||y - V^T(h .* fx)||^2
//   scre = same with h' = P^T W^T m_partner (m_partner held constant)
//   total = (1 - lambda) sre + lambda scre + penalties
//
// Without partner codes the scre branch is skipped entirely; with
// lambda = 0 the two paths produce bit-identical losses and gradients.

#include "gae/model.hpp"
#include "gae/penalties.hpp"

namespace gae {

template <typename Scalar>
struct Batch {
  Matrix<Scalar> x;  // clean targets, input_dim x B
  Matrix<Scalar> y;
  Matrix<Scalar> x_corrupt;  // network inputs
  Matrix<Scalar> y_corrupt;

  Index size() const { return x.cols(); }

  static Batch clean(Matrix<Scalar> x, Matrix<Scalar> y) {
    Batch b{std::move(x), std::move(y), {}, {}};
    b.x_corrupt = b.x;
    b.y_corrupt = b.y;
    return b;
  }
};

template <typename Scalar>
struct ObjectiveResult {
  LossBreakdown loss;
  GaeGradients<Scalar> grads;
  Matrix<Scalar> codes;  // mapping codes of the corrupted inputs
};

namespace detail {

template <typename Scalar>
ObjectiveResult<Scalar> objective_impl(const GaeParams<Scalar>& p, const Batch<Scalar>& batch,
                                       const Matrix<Scalar>* partner_codes, double lambda,
                                       const PenaltyWeights& weights, bool want_gradients) {
  check_images(p, batch.x, batch.y, "objective");
  check_images(p, batch.x_corrupt, batch.y_corrupt, "objective");
  const Index n = batch.size();
  if (n == 0) throw ShapeError("objective: empty batch");
  if (batch.x_corrupt.cols() != n) throw ShapeError("objective: corrupted batch size differs");
  if (partner_codes != nullptr) check_codes(p, *partner_codes, n, "objective");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");

  const Nonlinearity nl = p.config.nonlinearity;
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar own_weight = static_cast<Scalar>(1.0 - lambda);
  const Scalar cross_weight = static_cast<Scalar>(lambda);

  const Matrix<Scalar> fx = p.u * batch.x_corrupt;
  const Matrix<Scalar> fy = p.v * batch.y_corrupt;
  const Matrix<Scalar> q = p.pool * fx.cwiseProduct(fy);
  const Matrix<Scalar> m = activate<Scalar>(p.w * q, nl);
  const Matrix<Scalar> h = p.pool.transpose() * (p.w.transpose() * m);
  const Matrix<Scalar> gx = h.cwiseProduct(fy);
  const Matrix<Scalar> gy = h.cwiseProduct(fx);
  const Matrix<Scalar> rx = p.u.transpose() * gx - batch.x;
  const Matrix<Scalar> ry = p.v.transpose() * gy - batch.y;

  ObjectiveResult<Scalar> out;
  out.loss.sre = (static_cast<double>(rx.squaredNorm()) + static_cast<double>(ry.squaredNorm())) /
                 static_cast<double>(n);

  // Cross branch forward pass (kept for the backward pass below).
  Matrix<Scalar> hp, gxp, gyp, rxp, ryp;
  if (partner_codes != nullptr) {
    hp = p.pool.transpose() * (p.w.transpose() * *partner_codes);
    gxp = hp.cwiseProduct(fy);
    gyp = hp.cwiseProduct(fx);
    rxp = p.u.transpose() * gxp - batch.x;
    ryp = p.v.transpose() * gyp - batch.y;
    out.loss.scre =
        (static_cast<double>(rxp.squaredNorm()) + static_cast<double>(ryp.squaredNorm())) /
        static_cast<double>(n);
  }
  out.loss.penalties = auxiliary_penalties(p, q, m, weights);
  out.loss.total = combined_loss(out.loss.sre, out.loss.scre, lambda) + out.loss.penalties;
  if (!want_gradients) {
    out.codes = m;
    return out;
  }

  GaeGradients<Scalar>& g = out.grads;
  const Scalar own_scale = Scalar(2) * own_weight * inv_n;
  const Matrix<Scalar> ex = own_scale * rx;
  const Matrix<Scalar> ey = own_scale * ry;
  g.du.noalias() = gx * ex.transpose();
  g.dv.noalias() = gy * ey.transpose();
  const Matrix<Scalar> dgx = p.u * ex;
  const Matrix<Scalar> dgy = p.v * ey;
  const Matrix<Scalar> dh = dgx.cwiseProduct(fy) + dgy.cwiseProduct(fx);
  Matrix<Scalar> dfy = dgx.cwiseProduct(h);
  Matrix<Scalar> dfx = dgy.cwiseProduct(h);

  const Matrix<Scalar> pooled_dh = p.pool * dh;
  g.dw.noalias() = m * pooled_dh.transpose();

  if (partner_codes != nullptr) {
    const Scalar cross_scale = Scalar(2) * cross_weight * inv_n;
    const Matrix<Scalar> ex_cross = cross_scale * rxp;
    const Matrix<Scalar> ey_cross = cross_scale * ryp;
    g.du.noalias() += gxp * ex_cross.transpose();
    g.dv.noalias() += gyp * ey_cross.transpose();
    const Matrix<Scalar> dgxp = p.u * ex_cross;
    const Matrix<Scalar> dgyp = p.v * ey_cross;
    dfy += dgxp.cwiseProduct(hp);
    dfx += dgyp.cwiseProduct(hp);
    const Matrix<Scalar> dhp = dgxp.cwiseProduct(fy) + dgyp.cwiseProduct(fx);
    g.dw.noalias() += *partner_codes * (p.pool * dhp).transpose();
  }

  Matrix<Scalar> dm = p.w * pooled_dh;
  if (weights.mapping_sparsity != 0.0)
    dm += (static_cast<Scalar>(weights.mapping_sparsity) * inv_n) * m.cwiseSign();
  const Matrix<Scalar> da = dm.cwiseProduct(activation_slope(m, nl));
  g.dw.noalias() += da * q.transpose();
  Matrix<Scalar> dq = p.w.transpose() * da;
  if (weights.factor_sparsity != 0.0)
    dq += (static_cast<Scalar>(weights.factor_sparsity) * inv_n) * q.cwiseSign();
  const Matrix<Scalar> df = p.pool.transpose() * dq;
  dfx += df.cwiseProduct(fy);
  dfy += df.cwiseProduct(fx);
  g.du.noalias() += dfx * batch.x_corrupt.transpose();
  g.dv.noalias() += dfy * batch.y_corrupt.transpose();

  if (weights.weight_decay != 0.0) {
    const Scalar decay = Scalar(2) * static_cast<Scalar>(weights.weight_decay);
    g.du += decay * p.u;
    g.dv += decay * p.v;
    g.dw += decay * p.w;
  }
  if (weights.filter_norm != 0.0) {
    const Scalar coeff = static_cast<Scalar>(weights.filter_norm);
    g.du += coeff * filter_norm_penalty_gradient(p.u);
    g.dv += coeff * filter_norm_penalty_gradient(p.v);
  }
  g.check_finite();
  out.codes = m;
  return out;
}

}  // namespace detail

/// Loss and gradients of the regularized objective; partner codes
/// (num_mappings x B, column i partnered with pair i) are constants.
template <typename Scalar>
ObjectiveResult<Scalar> loss_gradients(const GaeParams<Scalar>& p, const Batch<Scalar>& batch,
                                       const Matrix<Scalar>& partner_codes, double lambda,
                                       const PenaltyWeights& weights) {
  return detail::objective_impl(p, batch, &partner_codes, lambda, weights, true);
}

/// Plain gated-autoencoder objective (no cross-reconstruction branch).
template <typename Scalar>
ObjectiveResult<Scalar> loss_gradients(const GaeParams<Scalar>& p, const Batch<Scalar>& batch,
                                       const PenaltyWeights& weights) {
  return detail::objective_impl<Scalar>(p, batch, nullptr, 0.0, weights, true);
}

template <typename Scalar>
LossBreakdown objective_value(const GaeParams<Scalar>& p, const Batch<Scalar>& batch,
                              const Matrix<Scalar>* partner_codes, double lambda,
                              const PenaltyWeights& weights) {
  return detail::objective_impl(p, batch, partner_codes, lambda, weights, false).loss;
}

}  // namespace gae
