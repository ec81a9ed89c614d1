#pragma once

// Straight-line reference implementations used as test oracles. Everything
// is written with explicit loops over entries so that no code path is shared
// with the library's matrix expressions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Params {
  Mat u, v, w;  // factors x pixels, factors x pixels, mappings x (factors/2)
  bool tanh = false;
};

struct Forward {
  std::vector<double> fx, fy, q, m, h;
};

inline Forward forward(const Params& p, const Mat& x, const Mat& y, Eigen::Index col) {
  const auto factors = p.u.rows();
  const auto pixels = p.u.cols();
  Forward f;
  f.fx.assign(factors, 0.0);
  f.fy.assign(factors, 0.0);
  for (Eigen::Index o = 0; o < factors; ++o)
    for (Eigen::Index i = 0; i < pixels; ++i) {
      f.fx[o] += p.u(o, i) * x(i, col);
      f.fy[o] += p.v(o, i) * y(i, col);
    }
  f.q.assign(factors / 2, 0.0);
  for (Eigen::Index r = 0; r < factors / 2; ++r)
    f.q[r] = f.fx[2 * r] * f.fy[2 * r] + f.fx[2 * r + 1] * f.fy[2 * r + 1];
  f.m.assign(p.w.rows(), 0.0);
  for (Eigen::Index l = 0; l < p.w.rows(); ++l) {
    double a = 0.0;
    for (Eigen::Index r = 0; r < p.w.cols(); ++r) a += p.w(l, r) * f.q[r];
    f.m[l] = p.tanh ? std::tanh(a) : sigmoid(a);
  }
  return f;
}

/// Gating signal P^T W^T m for one code.
inline std::vector<double> gate(const Params& p, const std::vector<double>& m) {
  std::vector<double> h(p.u.rows(), 0.0);
  for (Eigen::Index o = 0; o < p.u.rows(); ++o)
    for (Eigen::Index l = 0; l < p.w.rows(); ++l) h[o] += p.w(l, o / 2) * m[l];
  return h;
}

/// U^T (h .* f) for one code's gate and factor responses.
inline std::vector<double> decode(const Mat& filters, const std::vector<double>& h,
                                  const std::vector<double>& f) {
  std::vector<double> out(filters.cols(), 0.0);
  for (Eigen::Index i = 0; i < filters.cols(); ++i)
    for (Eigen::Index o = 0; o < filters.rows(); ++o) out[i] += filters(o, i) * h[o] * f[o];
  return out;
}

inline double sq_err(const Mat& target, Eigen::Index col, const std::vector<double>& recon) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < target.rows(); ++i) s += (target(i, col) - recon[i]) * (target(i, col) - recon[i]);
  return s;
}

/// Symmetric (cross-)reconstruction error of column `col`; `code` replaces
/// the pair's own code when given.
inline double pair_error(const Params& p, const Mat& x, const Mat& y, const Mat& xc, const Mat& yc,
                         Eigen::Index col, const std::vector<double>* code = nullptr) {
  const Forward f = forward(p, xc, yc, col);
  const std::vector<double> h = gate(p, code ? *code : f.m);
  return sq_err(x, col, decode(p.u, h, f.fy)) + sq_err(y, col, decode(p.v, h, f.fx));
}

inline double filter_norm(const Mat& filters) {
  std::vector<double> norms(filters.rows(), 0.0);
  double means_sq = 0.0;
  for (Eigen::Index o = 0; o < filters.rows(); ++o) {
    double ss = 0.0, sum = 0.0;
    for (Eigen::Index i = 0; i < filters.cols(); ++i) {
      ss += filters(o, i) * filters(o, i);
      sum += filters(o, i);
    }
    norms[o] = std::sqrt(ss);
    means_sq += (sum / filters.cols()) * (sum / filters.cols());
  }
  const double mean = std::accumulate(norms.begin(), norms.end(), 0.0) / norms.size();
  double dev = 0.0;
  for (double n : norms) dev += (n - mean) * (n - mean);
  return dev + means_sq;
}

struct Weights {
  double mapping = 0, factor = 0, decay = 0, filter = 0;
};

/// Full objective value: (1 - lambda) * mean sre + lambda * mean scre + penalties.
/// `partners` holds one code per column (num_mappings x B) or is empty.
inline double objective(const Params& p, const Mat& x, const Mat& y, const Mat& xc, const Mat& yc,
                        const Mat& partners, double lambda, const Weights& wt) {
  const Eigen::Index batch = x.cols();
  double sre = 0.0, scre = 0.0, l1_m = 0.0, l1_q = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    sre += pair_error(p, x, y, xc, yc, b);
    if (partners.size() != 0) {
      std::vector<double> code(partners.rows());
      for (Eigen::Index l = 0; l < partners.rows(); ++l) code[l] = partners(l, b);
      scre += pair_error(p, x, y, xc, yc, b, &code);
    }
    const Forward f = forward(p, xc, yc, b);
    for (double m : f.m) l1_m += std::abs(m);
    for (double q : f.q) l1_q += std::abs(q);
  }
  double decay = 0.0;
  for (const Mat* m : {&p.u, &p.v, &p.w})
    for (Eigen::Index i = 0; i < m->size(); ++i) decay += m->data()[i] * m->data()[i];
  const double penalties = wt.mapping * l1_m / batch + wt.factor * l1_q / batch + wt.decay * decay +
                           wt.filter * (filter_norm(p.u) + filter_norm(p.v));
  return (1.0 - lambda) * sre / batch + lambda * scre / batch + penalties;
}

/// Indices of all other rows sorted by (squared distance, index).
inline std::vector<Eigen::Index> sorted_neighbors(const Mat& rows, Eigen::Index i) {
  std::vector<std::pair<double, Eigen::Index>> all;
  for (Eigen::Index j = 0; j < rows.rows(); ++j) {
    if (j == i) continue;
    double d = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) d += (rows(j, c) - rows(i, c)) * (rows(j, c) - rows(i, c));
    all.push_back({d, j});
  }
  std::sort(all.begin(), all.end());
  std::vector<Eigen::Index> out;
  for (const auto& e : all) out.push_back(e.second);
  return out;
}

}  // namespace oracle
