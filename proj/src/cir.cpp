#include "gae/cir.hpp"

#include <cmath>

namespace gae {

Index sample_partner(std::span<const Index> neighbors, Rng& rng) {
  if (neighbors.empty()) throw InsufficientPopulationError("sample_partner: empty neighbor list");
  return neighbors[uniform_index(rng, neighbors.size())];
}

std::string to_string(ScheduleMode mode) {
  return mode == ScheduleMode::kLinear ? "linear" : "stepwise";
}

ScheduleMode parse_schedule_mode(const std::string& name) {
  if (name == "linear") return ScheduleMode::kLinear;
  if (name == "stepwise") return ScheduleMode::kStepwise;
  throw ConfigError("unknown CIR schedule mode '" + name + "'");
}

void CirSchedule::validate() const {
  if (!(lambda_max >= 0.0 && lambda_max <= 1.0)) throw ConfigError("cir.lambda_max must lie in [0, 1]");
  if (k_max < 1) throw ConfigError("cir.k_max must be >= 1");
  if (ramp_epochs < 1) throw ConfigError("cir.ramp_epochs must be >= 1");
  if (mode == ScheduleMode::kStepwise) {
    for (std::size_t s = 0; s < steps.size(); ++s) {
      if (!(steps[s].lambda >= 0.0 && steps[s].lambda <= 1.0))
        throw ConfigError("cir step lambda must lie in [0, 1]");
      if (steps[s].k < 1) throw ConfigError("cir step k must be >= 1");
      if (s > 0 && steps[s].epoch < steps[s - 1].epoch)
        throw ConfigError("cir steps must be sorted by epoch");
    }
  }
}

CirSchedule CirSchedule::default_stepwise(long ramp_epochs, double lambda_max, Index k_max) {
  CirSchedule s;
  s.mode = ScheduleMode::kStepwise;
  s.lambda_max = lambda_max;
  s.k_max = k_max;
  s.ramp_epochs = ramp_epochs;
  const auto k_at = [k_max](double frac) {
    return std::max<Index>(1, static_cast<Index>(std::floor(frac * static_cast<double>(k_max) + 0.5)));
  };
  s.steps = {{ramp_epochs / 4, 0.25 * lambda_max, k_at(0.3)},
             {ramp_epochs / 2, 0.5 * lambda_max, k_at(0.6)},
             {(3 * ramp_epochs) / 4, lambda_max, k_max}};
  return s;
}

CirParams schedule_at(const CirSchedule& schedule, long epoch) {
  if (schedule.mode == ScheduleMode::kStepwise) {
    CirParams out;
    for (const SchedulePoint& step : schedule.steps) {
      if (step.epoch > epoch) break;
      out = {step.lambda, step.k};
    }
    return out;
  }
  const double progress =
      std::clamp(static_cast<double>(epoch) / static_cast<double>(schedule.ramp_epochs), 0.0, 1.0);
  const double k_real = 1.0 + static_cast<double>(schedule.k_max - 1) * progress;
  const Index k = std::clamp<Index>(static_cast<Index>(std::floor(k_real + 0.5)), 1, schedule.k_max);
  return {schedule.lambda_max * progress, k};
}

}  // namespace gae
