#pragma once

// Plain-text run configuration (INI sections: model, train, cir, data, run).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gae/model.hpp"
#include "gae/train.hpp"

namespace gae {

struct RunConfig {
  GaeConfig model{0, 128, 32, Nonlinearity::kSigmoid};  // input_dim 0: take it from the data
  TrainConfig train;
  std::string data_name = "data";
  std::filesystem::path train_pairs;
  std::filesystem::path test_pairs;
  std::filesystem::path output_dir = "run";
  long checkpoint_every = 0;  // 0: only the final checkpoint
};

/// Parses an INI document over the built-in defaults. Unknown sections or
/// keys and unparsable values raise ConfigError naming the key.
RunConfig parse_run_config(std::istream& in, const std::string& source, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Sets one "section.key" entry from its textual value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every key of the merged configuration, one "section.key" per entry.
std::vector<std::string> config_keys();

/// The merged configuration as an INI document.
std::string format_run_config(const RunConfig& config);

/// "epoch:lambda:k" entries separated by commas.
std::vector<SchedulePoint> parse_schedule_steps(const std::string& text);

}  // namespace gae
