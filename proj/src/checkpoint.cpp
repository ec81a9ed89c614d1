#include "gae/checkpoint.hpp"

#include <json.hpp>

#include "gae/detail/binary_io.hpp"

namespace gae {

namespace {

using nlohmann::json;

constexpr char kMagic[] = "GAECKPT1";
constexpr int kFormatVersion = 1;

json optional_to_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<double> optional_from_json(const json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

json metadata_json(const Checkpoint& ckpt) {
  const GaeConfig& m = ckpt.model();
  const TrainConfig& t = ckpt.train;
  json steps = json::array();
  for (const SchedulePoint& s : t.cir.steps) steps.push_back({s.epoch, s.lambda, s.k});
  json history = json::array();
  for (const LossBreakdown& l : ckpt.state.history) history.push_back({l.sre, l.scre, l.penalties, l.total});
  return {
      {"format_version", kFormatVersion},
      {"model",
       {{"input_dim", m.input_dim},
        {"num_factors", m.num_factors},
        {"num_mappings", m.num_mappings},
        {"mapping_nonlinearity", to_string(m.nonlinearity)}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"input_dropout_rate", t.input_dropout_rate},
        {"mapping_sparsity_coeff", t.penalties.mapping_sparsity},
        {"factor_sparsity_coeff", t.penalties.factor_sparsity},
        {"weight_decay_coeff", t.penalties.weight_decay},
        {"filter_norm_penalty_coeff", t.penalties.filter_norm},
        {"max_weight_norm", optional_to_json(t.max_weight_norm)},
        {"grad_clip_norm", optional_to_json(t.grad_clip_norm)},
        {"seed", t.seed}}},
      {"cir",
       {{"mode", to_string(t.cir.mode)},
        {"lambda_max", t.cir.lambda_max},
        {"k_max", t.cir.k_max},
        {"ramp_epochs", t.cir.ramp_epochs},
        {"steps", steps}}},
      {"epoch", ckpt.state.epoch},
      {"loss_history", history},
  };
}

void parse_metadata(const json& meta, Checkpoint& ckpt) {
  if (meta.at("format_version").get<int>() != kFormatVersion)
    throw FormatError("unsupported checkpoint format version " + meta.at("format_version").dump());
  GaeConfig model;
  const json& m = meta.at("model");
  model.input_dim = m.at("input_dim").get<Index>();
  model.num_factors = m.at("num_factors").get<Index>();
  model.num_mappings = m.at("num_mappings").get<Index>();
  model.nonlinearity = parse_nonlinearity(m.at("mapping_nonlinearity").get<std::string>());
  model.validate();

  TrainConfig& t = ckpt.train;
  const json& tj = meta.at("train");
  t.learning_rate = tj.at("learning_rate").get<double>();
  t.batch_size = tj.at("batch_size").get<Index>();
  t.epochs = tj.at("epochs").get<long>();
  t.input_dropout_rate = tj.at("input_dropout_rate").get<double>();
  t.penalties.mapping_sparsity = tj.at("mapping_sparsity_coeff").get<double>();
  t.penalties.factor_sparsity = tj.at("factor_sparsity_coeff").get<double>();
  t.penalties.weight_decay = tj.at("weight_decay_coeff").get<double>();
  t.penalties.filter_norm = tj.at("filter_norm_penalty_coeff").get<double>();
  t.max_weight_norm = optional_from_json(tj.at("max_weight_norm"));
  t.grad_clip_norm = optional_from_json(tj.at("grad_clip_norm"));
  t.seed = tj.at("seed").get<std::uint64_t>();
  const json& cj = meta.at("cir");
  t.cir.mode = parse_schedule_mode(cj.at("mode").get<std::string>());
  t.cir.lambda_max = cj.at("lambda_max").get<double>();
  t.cir.k_max = cj.at("k_max").get<Index>();
  t.cir.ramp_epochs = cj.at("ramp_epochs").get<long>();
  t.cir.steps.clear();
  for (const json& s : cj.at("steps"))
    t.cir.steps.push_back({s.at(0).get<long>(), s.at(1).get<double>(), s.at(2).get<Index>()});

  ckpt.state.params = GaeParams<Real>::zeros(model);
  ckpt.state.epoch = meta.at("epoch").get<long>();
  ckpt.state.history.clear();
  for (const json& l : meta.at("loss_history"))
    ckpt.state.history.push_back(
        {l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>(), l.at(3).get<double>()});
  if (static_cast<long>(ckpt.state.history.size()) != ckpt.state.epoch)
    throw FormatError("checkpoint loss history length disagrees with its epoch count");
}

void put_matrix(detail::Bytes& out, const Matrix<Real>& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) detail::put_f32(out, m(r, c));
}

void read_matrix(detail::Reader& in, Matrix<Real>& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = in.f32();
}

}  // namespace

std::string checkpoint_metadata(const Checkpoint& checkpoint) {
  return metadata_json(checkpoint).dump(2);
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint) {
  checkpoint.state.params.check_shapes();
  const std::string meta = metadata_json(checkpoint).dump();
  const std::string rng = checkpoint.state.rng.serialize();
  detail::Bytes out;
  detail::put_bytes(out, std::string_view(kMagic, 8));
  detail::put_u64(out, meta.size());
  detail::put_bytes(out, meta);
  put_matrix(out, checkpoint.state.params.u);
  put_matrix(out, checkpoint.state.params.v);
  put_matrix(out, checkpoint.state.params.w);
  detail::put_u64(out, rng.size());
  detail::put_bytes(out, rng);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& source) {
  detail::Reader in(bytes, source);
  if (in.remaining() < 8 || in.bytes(8, "magic") != std::string(kMagic, 8))
    throw FormatError(source + ": not a GAECKPT1 checkpoint (bad magic)");
  const std::uint64_t meta_len = in.u64();
  const std::string meta_text = in.bytes(meta_len, "metadata");
  Checkpoint ckpt;
  try {
    parse_metadata(json::parse(meta_text), ckpt);
  } catch (const json::exception& e) {
    throw FormatError(source + ": malformed checkpoint metadata: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(source + ": inconsistent checkpoint dimensions: " + e.what());
  }
  GaeParams<Real>& p = ckpt.state.params;
  const std::size_t payload = 4 * static_cast<std::size_t>(p.u.size() + p.v.size() + p.w.size());
  in.require(payload + 8, "weight payload");
  read_matrix(in, p.u);
  read_matrix(in, p.v);
  read_matrix(in, p.w);
  const std::uint64_t rng_len = in.u64();
  ckpt.state.rng = RngStreams::deserialize(in.bytes(rng_len, "RNG state"));
  if (in.remaining() != 0)
    throw FormatError(source + ": " + std::to_string(in.remaining()) + " trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path), path.string());
}

}  // namespace gae
