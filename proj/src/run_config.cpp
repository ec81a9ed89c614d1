#include "gae/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gae {

namespace {

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("configuration key '" + key + "': expected a number, got '" + text + "'");
  return value;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("configuration key '" + key + "': expected an integer, got '" + text + "'");
  return value;
}

std::optional<double> to_optional(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "none" || t.empty()) return std::nullopt;
  return to_double(key, t);
}

std::string show(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string show(const std::optional<double>& v) { return v ? show(*v) : "none"; }

std::string show_steps(const std::vector<SchedulePoint>& steps) {
  std::string out;
  for (const SchedulePoint& s : steps) {
    if (!out.empty()) out += ",";
    out += std::to_string(s.epoch) + ":" + show(s.lambda) + ":" + std::to_string(s.k);
  }
  return out;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    const auto number = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = to_double(key, v); },
                [member](RunConfig c) { return show(member(c)); }};
    };
    const auto integer = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) {
                  member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_integer(key, v));
                },
                [member](RunConfig c) { return std::to_string(member(c)); }};
    };
    const auto optional = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = to_optional(key, v); },
                [member](RunConfig c) { return show(member(c)); }};
    };
    const auto text = [&t](const std::string& key, auto member) {
      t[key] = {[member](RunConfig& c, const std::string& v) { member(c) = trim(v); },
                [member](RunConfig c) { return std::string(member(c)); }};
    };

    integer("model.input_dim", [](RunConfig& c) -> Index& { return c.model.input_dim; });
    integer("model.num_factors", [](RunConfig& c) -> Index& { return c.model.num_factors; });
    integer("model.num_mappings", [](RunConfig& c) -> Index& { return c.model.num_mappings; });
    t["model.mapping_nonlinearity"] = {
        [](RunConfig& c, const std::string& v) { c.model.nonlinearity = parse_nonlinearity(trim(v)); },
        [](const RunConfig& c) { return to_string(c.model.nonlinearity); }};

    number("train.learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; });
    integer("train.batch_size", [](RunConfig& c) -> Index& { return c.train.batch_size; });
    integer("train.epochs", [](RunConfig& c) -> long& { return c.train.epochs; });
    number("train.input_dropout_rate", [](RunConfig& c) -> double& { return c.train.input_dropout_rate; });
    number("train.mapping_sparsity_coeff", [](RunConfig& c) -> double& { return c.train.penalties.mapping_sparsity; });
    number("train.factor_sparsity_coeff", [](RunConfig& c) -> double& { return c.train.penalties.factor_sparsity; });
    number("train.weight_decay_coeff", [](RunConfig& c) -> double& { return c.train.penalties.weight_decay; });
    number("train.filter_norm_penalty_coeff", [](RunConfig& c) -> double& { return c.train.penalties.filter_norm; });
    optional("train.max_weight_norm", [](RunConfig& c) -> std::optional<double>& { return c.train.max_weight_norm; });
    optional("train.grad_clip_norm", [](RunConfig& c) -> std::optional<double>& { return c.train.grad_clip_norm; });
    integer("train.checkpoint_every", [](RunConfig& c) -> long& { return c.checkpoint_every; });

    t["cir.mode"] = {[](RunConfig& c, const std::string& v) { c.train.cir.mode = parse_schedule_mode(trim(v)); },
                     [](const RunConfig& c) { return to_string(c.train.cir.mode); }};
    number("cir.lambda_max", [](RunConfig& c) -> double& { return c.train.cir.lambda_max; });
    integer("cir.k_max", [](RunConfig& c) -> Index& { return c.train.cir.k_max; });
    integer("cir.ramp_epochs", [](RunConfig& c) -> long& { return c.train.cir.ramp_epochs; });
    t["cir.steps"] = {[](RunConfig& c, const std::string& v) { c.train.cir.steps = parse_schedule_steps(v); },
                      [](const RunConfig& c) { return show_steps(c.train.cir.steps); }};

    text("data.name", [](RunConfig& c) -> std::string& { return c.data_name; });
    t["data.train"] = {[](RunConfig& c, const std::string& v) { c.train_pairs = trim(v); },
                       [](const RunConfig& c) { return c.train_pairs.string(); }};
    t["data.test"] = {[](RunConfig& c, const std::string& v) { c.test_pairs = trim(v); },
                      [](const RunConfig& c) { return c.test_pairs.string(); }};

    t["run.seed"] = {[](RunConfig& c, const std::string& v) {
                       c.train.seed = static_cast<std::uint64_t>(to_integer("run.seed", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.train.seed); }};
    t["run.output_dir"] = {[](RunConfig& c, const std::string& v) { c.output_dir = trim(v); },
                           [](const RunConfig& c) { return c.output_dir.string(); }};
    return t;
  }();
  return table;
}

}  // namespace

std::vector<SchedulePoint> parse_schedule_steps(const std::string& text) {
  std::vector<SchedulePoint> steps;
  std::stringstream list(text);
  std::string entry;
  while (std::getline(list, entry, ',')) {
    entry = trim(entry);
    if (entry.empty()) continue;
    const auto a = entry.find(':');
    const auto b = entry.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw ConfigError("configuration key 'cir.steps': expected epoch:lambda:k, got '" + entry + "'");
    steps.push_back({static_cast<long>(to_integer("cir.steps", entry.substr(0, a))),
                     to_double("cir.steps", entry.substr(a + 1, b - a - 1)),
                     static_cast<Index>(to_integer("cir.steps", entry.substr(b + 1)))});
  }
  return steps;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second.set(config, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : fields()) keys.push_back(key);
  return keys;
}

RunConfig parse_run_config(std::istream& in, const std::string& source, RunConfig base) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty())
      throw ConfigError(source + ": key '" + section + "' must live inside a section");
    for (const auto& [key, value] : entries) set_config_value(base, section + "." + key, value.data());
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration '" + path.string() + "'");
  return parse_run_config(in, path.string(), std::move(base));
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  std::string current;
  for (const char* section : {"model", "train", "cir", "data", "run"}) {
    out += std::string(out.empty() ? "" : "\n") + "[" + section + "]\n";
    for (const auto& [key, field] : fields()) {
      if (key.rfind(std::string(section) + ".", 0) != 0) continue;
      out += key.substr(std::string(section).size() + 1) + " = " + field.get(config) + "\n";
    }
  }
  return out;
}

}  // namespace gae
