#include "gae/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace gae {

namespace {

enum StreamId : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kCorruptionStream = 3, kPartnerStream = 4 };

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.sre) && std::isfinite(l.scre) && std::isfinite(l.penalties) &&
         std::isfinite(l.total);
}

void scale_to_norm(Matrix<Real>& m, double max_norm) {
  const double norm = static_cast<double>(m.norm());
  if (norm > max_norm) m *= static_cast<Real>(max_norm / norm);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(input_dropout_rate >= 0.0 && input_dropout_rate < 1.0))
    throw ConfigError("train.input_dropout_rate must lie in [0, 1)");
  for (const auto& [name, value] :
       {std::pair{"mapping_sparsity_coeff", penalties.mapping_sparsity},
        std::pair{"factor_sparsity_coeff", penalties.factor_sparsity},
        std::pair{"weight_decay_coeff", penalties.weight_decay},
        std::pair{"filter_norm_penalty_coeff", penalties.filter_norm}})
    if (!(value >= 0.0) || !std::isfinite(value))
      throw ConfigError(std::string("train.") + name + " must be finite and non-negative");
  if (max_weight_norm && !(*max_weight_norm > 0.0)) throw ConfigError("train.max_weight_norm must be positive");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) throw ConfigError("train.grad_clip_norm must be positive");
  cir.validate();
  if (cir.active() && batch_size < 2) throw ConfigError("train.batch_size must be >= 2 when CIR is active");
}

RngStreams RngStreams::from_seed(std::uint64_t seed) {
  return {make_rng(seed, kShuffleStream), make_rng(seed, kCorruptionStream),
          make_rng(seed, kPartnerStream)};
}

std::string RngStreams::serialize() const {
  return serialize_rng(shuffle) + "\n" + serialize_rng(corruption) + "\n" + serialize_rng(partner);
}

RngStreams RngStreams::deserialize(const std::string& text) {
  std::istringstream in(text);
  RngStreams s;
  in >> s.shuffle >> s.corruption >> s.partner;
  if (in.fail()) throw FormatError("malformed RNG stream state");
  return s;
}

TrainState initial_state(const GaeConfig& model, const TrainConfig& config) {
  model.validate();
  config.validate();
  Rng init = make_rng(config.seed, kInitStream);
  TrainState state;
  state.params = GaeParams<Real>::random(model, init);
  state.rng = RngStreams::from_seed(config.seed);
  return state;
}

std::pair<Matrix<Real>, Matrix<Real>> corrupt_inputs(const Matrix<Real>& x, const Matrix<Real>& y,
                                                     double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("corruption rate must lie in [0, 1)");
  if (rate == 0.0) return {x, y};
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  const auto mask = [&](const Matrix<Real>& in) {
    Matrix<Real> out(in.rows(), in.cols());
    for (Index c = 0; c < in.cols(); ++c)
      for (Index r = 0; r < in.rows(); ++r)
        out(r, c) = uniform01(rng) < rate ? Real(0) : in(r, c) * keep_scale;
    return out;
  };
  Matrix<Real> xc = mask(x);
  Matrix<Real> yc = mask(y);
  return {std::move(xc), std::move(yc)};
}

void clip_gradients(GaeGradients<Real>& grads, double clip) {
  const double norm = grads.global_norm();
  if (norm > clip) {
    const auto scale = static_cast<Real>(clip / norm);
    grads.du *= scale;
    grads.dv *= scale;
    grads.dw *= scale;
  }
}

void project_weight_norms(GaeParams<Real>& params, double max_norm) {
  scale_to_norm(params.u, max_norm);
  scale_to_norm(params.v, max_norm);
  scale_to_norm(params.w, max_norm);
}

void apply_update(GaeParams<Real>& params, GaeGradients<Real>& grads, const TrainConfig& config) {
  if (config.grad_clip_norm) clip_gradients(grads, *config.grad_clip_norm);
  const auto lr = static_cast<Real>(config.learning_rate);
  params.u -= lr * grads.du;
  params.v -= lr * grads.dv;
  params.w -= lr * grads.dw;
  if (config.max_weight_norm) project_weight_norms(params, *config.max_weight_norm);
}

LossBreakdown train_epoch(TrainState& state, const PairDataset& dataset, const TrainConfig& config,
                          ObjectivePath path) {
  GaeParams<Real>& params = state.params;
  if (dataset.input_dim() != params.config.input_dim)
    throw ShapeError("train_epoch: dataset input_dim " + std::to_string(dataset.input_dim()) +
                     " does not match model input_dim " + std::to_string(params.config.input_dim));
  const Index n = dataset.size();
  if (n == 0) throw ShapeError("train_epoch: empty dataset");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[uniform_index(state.rng.shuffle, i)]);

  const bool regularized = path == ObjectivePath::kRegularized ||
                           (path == ObjectivePath::kAuto && config.cir.active());
  const CirParams cir = schedule_at(config.cir, state.epoch);

  LossBreakdown sum;
  long batch_index = 0;
  for (Index start = 0; start < n; start += config.batch_size, ++batch_index) {
    const Index count = std::min(config.batch_size, n - start);
    const std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
    Batch<Real> batch;
    batch.x = dataset.x(rows, Eigen::all).transpose();
    batch.y = dataset.y(rows, Eigen::all).transpose();
    std::tie(batch.x_corrupt, batch.y_corrupt) =
        corrupt_inputs(batch.x, batch.y, config.input_dropout_rate, state.rng.corruption);

    const auto diverged = [&](const std::string& detail) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << state.epoch << ", batch " << batch_index << ": " << detail;
      return DivergenceError(msg.str());
    };

    ObjectiveResult<Real> result;
    try {
      if (regularized && count >= 2) {
        const Matrix<Real> codes = infer_mapping(params, batch.x_corrupt, batch.y_corrupt);
        const Index k = std::min<Index>(cir.k, count - 1);
        const auto lists = all_nearest_neighbors(codes.transpose(), k);
        Matrix<Real> partners(codes.rows(), codes.cols());
        for (Index i = 0; i < count; ++i)
          partners.col(i) = codes.col(sample_partner(lists[static_cast<std::size_t>(i)], state.rng.partner));
        result = loss_gradients(params, batch, partners, cir.lambda, config.penalties);
      } else {
        result = loss_gradients(params, batch, config.penalties);
      }
    } catch (const DivergenceError&) {
      throw;
    } catch (const NumericalError& e) {
      throw diverged(e.what());
    }

    if (!finite(result.loss)) {
      std::ostringstream msg;
      msg << "non-finite loss sre=" << result.loss.sre << " scre=" << result.loss.scre
          << " penalties=" << result.loss.penalties << " total=" << result.loss.total;
      throw diverged(msg.str());
    }
    apply_update(params, result.grads, config);

    const double w = static_cast<double>(count);
    sum.sre += w * result.loss.sre;
    sum.scre += w * result.loss.scre;
    sum.penalties += w * result.loss.penalties;
    sum.total += w * result.loss.total;
  }

  const double inv = 1.0 / static_cast<double>(n);
  const LossBreakdown mean{sum.sre * inv, sum.scre * inv, sum.penalties * inv, sum.total * inv};
  state.history.push_back(mean);
  ++state.epoch;
  return mean;
}

}  // namespace gae
