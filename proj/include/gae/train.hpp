#pragma once

// SGD training loop with denoising corruption, auxiliary penalties,
// gradient clipping, weight-norm projection and the CIR schedule.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gae/cir.hpp"
#include "gae/data.hpp"
#include "gae/model.hpp"
#include "gae/objective.hpp"
#include "gae/penalties.hpp"
#include "gae/random.hpp"

namespace gae {

/// Training always runs in single precision; checkpoints store float32.
using Real = float;

struct TrainConfig {
  double learning_rate = 0.01;
  Index batch_size = 100;
  long epochs = 600;
  double input_dropout_rate = 0.5;
  PenaltyWeights penalties{1e-3, 1e-3, 1e-4, 1e-2};
  std::optional<double> max_weight_norm;
  std::optional<double> grad_clip_norm;
  CirSchedule cir;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Independent engines so that the CIR partner draws never perturb the
/// shuffling or corruption streams.
struct RngStreams {
  Rng shuffle;
  Rng corruption;
  Rng partner;

  static RngStreams from_seed(std::uint64_t seed);
  std::string serialize() const;
  static RngStreams deserialize(const std::string& text);

  bool operator==(const RngStreams&) const = default;
};

struct TrainState {
  GaeParams<Real> params;
  long epoch = 0;  // completed epochs
  RngStreams rng;
  std::vector<LossBreakdown> history;
};

/// Fresh parameters and RNG streams derived from config.seed.
TrainState initial_state(const GaeConfig& model, const TrainConfig& config);

/// Which objective the loop optimizes. kAuto runs the regularized branch
/// exactly when the schedule can become active (lambda_max > 0).
enum class ObjectivePath { kAuto, kVanilla, kRegularized };

/// Independent zero masks on x and y; kept units are scaled by
/// 1 / (1 - rate) so clean inputs match the training-time expectation.
std::pair<Matrix<Real>, Matrix<Real>> corrupt_inputs(const Matrix<Real>& x, const Matrix<Real>& y,
                                                     double rate, Rng& rng);

/// Rescales gradients so their global L2 norm is at most `clip`.
void clip_gradients(GaeGradients<Real>& grads, double clip);

/// Rescales each of u, v, w so its Frobenius norm is at most `max_norm`.
void project_weight_norms(GaeParams<Real>& params, double max_norm);

/// clip -> SGD step -> norm projection, as configured.
void apply_update(GaeParams<Real>& params, GaeGradients<Real>& grads, const TrainConfig& config);

/// Raised when a batch loss is not finite.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// One shuffled pass over the dataset; appends the epoch-mean loss to the
/// state's history and advances state.epoch.
LossBreakdown train_epoch(TrainState& state, const PairDataset& dataset, const TrainConfig& config,
                          ObjectivePath path = ObjectivePath::kAuto);

}  // namespace gae
