#include "gae/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include "gae/checkpoint.hpp"
#include "gae/data.hpp"
#include "gae/eval.hpp"
#include "gae/run_config.hpp"
#include "gae/train.hpp"

namespace gae::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for argument combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a checkpoint and a dataset or config do not fit together.
class IncompatibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenDataArgs {
  std::string source = "synthetic";
  std::string tset = "mnistr20";
  long n = 2000;
  long size = 16;
  std::uint64_t seed = 1;
  std::string out;
  std::string idx;
  std::string split = "train";
  int pairs_per_image = 1;
  bool no_mask = false;
};

struct TrainArgs {
  std::string config;
  bool no_cir = false;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<long> epochs;
  std::optional<long> stop_after;
  std::string train;
  std::string out;
  std::vector<std::string> overrides;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string ref;
  long k = 10;
  long knn = 5;
  std::uint64_t seed = 20240611;
  std::string gae_name;
  std::string eval_name;
  std::string results;
};

struct AnalogyArgs {
  std::vector<std::string> checkpoints;
  std::string data;
  long sources = 3;
  long queries = 5;
  bool identity = false;
  std::uint64_t seed = 1;
  std::string out;
};

ImageSet mnist_images(const GenDataArgs& a) {
  ImageSet set = load_idx(a.idx, parse_split(a.split));
  // The 60k training file is split 50k train / 10k validation.
  if (set.size() == 60000 && a.split != "test") {
    const auto first = a.split == "train" ? set.images.begin() : set.images.begin() + 50000;
    set.images = std::vector<Image>(first, first + (a.split == "train" ? 50000 : 10000));
  }
  for (Image& image : set.images)
    if (image.rows() != a.size) image = crop_and_resample(image, std::min<Index>(24, image.rows()), a.size);
  return set;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const TransformationSet tset = TransformationSet::from_name(a.tset);
  if (a.n < 1) throw UsageError("--n must be >= 1");
  if (a.pairs_per_image < 1) throw UsageError("--pairs-per-image must be >= 1");
  const long images_needed = (a.n + a.pairs_per_image - 1) / a.pairs_per_image;

  ImageSet images;
  if (a.source == "synthetic") {
    images = synthetic_shapes(images_needed, a.size, a.seed);
  } else if (a.source == "mnist") {
    if (a.idx.empty()) throw UsageError("--source mnist requires --idx <images.idx>");
    images = mnist_images(a);
    if (images.size() < images_needed)
      throw UsageError("IDX file holds " + std::to_string(images.size()) + " images, " +
                       std::to_string(images_needed) + " needed");
    images.images.resize(static_cast<std::size_t>(images_needed));
  } else {
    throw UsageError("--source must be 'synthetic' or 'mnist'");
  }

  PairOptions options;
  options.pairs_per_image = a.pairs_per_image;
  options.circular_mask = !a.no_mask;
  PairDataset pairs = make_rotation_pairs(images, tset, a.seed ^ 0x9e3779b97f4a7c15ULL, options);
  if (pairs.size() > a.n) {
    pairs.x.conservativeResize(a.n, Eigen::NoChange);
    pairs.y.conservativeResize(a.n, Eigen::NoChange);
    pairs.angle_label.resize(static_cast<std::size_t>(a.n));
  }
  pairs = contrast_normalize(std::move(pairs));
  save_pairs(pairs, a.out);

  std::map<int, long> histogram;
  for (int label : pairs.angle_label) ++histogram[label];
  out << "pairs: " << pairs.size() << "\n";
  out << "input_dim: " << pairs.input_dim() << "\n";
  out << "classes: " << histogram.size() << "\n";
  for (const auto& [angle, count] : histogram) out << "  " << angle << ": " << count << "\n";
  return kOk;
}

void write_loss_log(const fs::path& path, const std::vector<LossBreakdown>& history) {
  std::ofstream log(path, std::ios::trunc);
  if (!log) throw IoError("cannot write loss log '" + path.string() + "'");
  log << "epoch,sre,scre,penalties,total\n";
  log.precision(9);
  for (std::size_t e = 0; e < history.size(); ++e)
    log << e << "," << history[e].sre << "," << history[e].scre << "," << history[e].penalties << ","
        << history[e].total << "\n";
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  for (const std::string& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (!a.train.empty()) cfg.train_pairs = a.train;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.no_cir) cfg.train.cir.lambda_max = 0.0;
  if (cfg.train_pairs.empty()) throw UsageError("no training data: set data.train or pass --train");
  cfg.train.validate();

  const PairDataset data = load_pairs(cfg.train_pairs);
  if (cfg.model.input_dim != 0 && cfg.model.input_dim != data.input_dim())
    throw IncompatibleError("model.input_dim " + std::to_string(cfg.model.input_dim) +
                            " does not match training data input_dim " + std::to_string(data.input_dim()));
  GaeConfig model = cfg.model;
  model.input_dim = data.input_dim();
  model.validate();

  Checkpoint ckpt;
  ckpt.train = cfg.train;
  if (!a.resume.empty()) {
    Checkpoint previous = load_checkpoint(a.resume);
    TrainConfig expected = previous.train;
    expected.epochs = cfg.train.epochs;
    if (!(previous.model() == model) || !(expected == cfg.train))
      throw IncompatibleError("checkpoint '" + a.resume + "' was trained with a different configuration");
    ckpt.state = std::move(previous.state);
  } else {
    ckpt.state = initial_state(model, cfg.train);
  }

  fs::create_directories(cfg.output_dir);
  {
    std::ofstream echo(cfg.output_dir / "effective.cfg", std::ios::trunc);
    if (!echo) throw IoError("cannot write into output directory '" + cfg.output_dir.string() + "'");
    echo << format_run_config(cfg);
  }
  const fs::path log_path = cfg.output_dir / "loss.csv";
  write_loss_log(log_path, ckpt.state.history);
  std::ofstream log(log_path, std::ios::app);
  log.precision(9);

  out << "training " << (cfg.train.cir.active() ? "GAE+CIR" : "GAE") << " on " << data.size()
      << " pairs, input_dim " << model.input_dim << ", from epoch " << ckpt.state.epoch << " to "
      << cfg.train.epochs << "\n";
  long ran = 0;
  while (ckpt.state.epoch < cfg.train.epochs) {
    if (a.stop_after && ran >= *a.stop_after) break;
    const long epoch = ckpt.state.epoch;
    const LossBreakdown loss = train_epoch(ckpt.state, data, cfg.train);
    ++ran;
    log << epoch << "," << loss.sre << "," << loss.scre << "," << loss.penalties << "," << loss.total << "\n";
    if ((epoch + 1) % 50 == 0 || ckpt.state.epoch == cfg.train.epochs)
      out << "epoch " << epoch + 1 << " sre " << loss.sre << " scre " << loss.scre << " total " << loss.total
          << "\n";
    if (cfg.checkpoint_every > 0 && ckpt.state.epoch % cfg.checkpoint_every == 0)
      save_checkpoint(ckpt, cfg.output_dir / ("epoch_" + std::to_string(ckpt.state.epoch) + ".gaeckpt"));
  }
  const fs::path final_path = cfg.output_dir / "final.gaeckpt";
  save_checkpoint(ckpt, final_path);
  out << "checkpoint: " << final_path.string() << "\n";
  return kOk;
}

void require_dims(const Checkpoint& ckpt, const PairDataset& data, const std::string& what) {
  if (ckpt.model().input_dim != data.input_dim())
    throw IncompatibleError("checkpoint input_dim " + std::to_string(ckpt.model().input_dim) + " vs " + what +
                            " input_dim " + std::to_string(data.input_dim()));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const PairDataset data = load_pairs(a.data);
  const PairDataset ref = load_pairs(a.ref);
  require_dims(ckpt, data, "evaluation data");
  require_dims(ckpt, ref, "KNN reference data");
  EvalOptions options;
  options.mscre_k = a.k;
  options.knn_k = a.knn;
  options.seed = a.seed;
  const std::string gae_name = a.gae_name.empty() ? fs::path(a.checkpoint).stem().string() : a.gae_name;
  const std::string eval_name = a.eval_name.empty() ? fs::path(a.data).stem().string() : a.eval_name;
  const MetricsReport report = evaluate(ckpt.state.params, data, ref, options, gae_name, eval_name);
  out << report.csv_row() << "\n";
  if (!a.results.empty()) {
    const bool fresh = !fs::exists(a.results) || fs::file_size(a.results) == 0;
    std::ofstream results(a.results, std::ios::app);
    if (!results) throw IoError("cannot write results file '" + a.results + "'");
    if (fresh) results << MetricsReport::csv_header() << "\n";
    results << report.csv_row() << "\n";
  }
  return kOk;
}

int cmd_analogy(const AnalogyArgs& a, std::ostream& out) {
  if (a.sources < 1 || a.queries < 1) throw UsageError("--sources and --queries must be >= 1");
  std::vector<Checkpoint> models;
  for (const std::string& path : a.checkpoints) models.push_back(load_checkpoint(path));
  const PairDataset data = load_pairs(a.data);
  for (const Checkpoint& m : models) require_dims(m, data, "analogy data");
  if (data.size() < a.sources + a.queries)
    throw UsageError("dataset has " + std::to_string(data.size()) + " pairs, need " +
                     std::to_string(a.sources + a.queries));

  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = make_rng(a.seed, 0xa7a1);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  const auto column = [&data](const Eigen::MatrixXf& side, Index row) -> Vector<Real> {
    return side.row(row).transpose();
  };
  const Index group_cols = 1 + static_cast<Index>(models.size());
  const Index cols = a.sources * group_cols;
  std::vector<std::vector<Image>> grid(static_cast<std::size_t>(a.queries + 1),
                                       std::vector<Image>(static_cast<std::size_t>(cols)));
  for (Index s = 0; s < a.sources; ++s) {
    const Index src = order[static_cast<std::size_t>(s)];
    const Vector<Real> pa = column(data.x, src);
    const Vector<Real> pb = a.identity ? pa : column(data.y, src);
    grid[0][static_cast<std::size_t>(s * group_cols)] = row_to_image(pa.transpose());
    grid[0][static_cast<std::size_t>(s * group_cols + 1)] = row_to_image(pb.transpose());
    for (Index q = 0; q < a.queries; ++q) {
      const Vector<Real> c = column(data.x, order[static_cast<std::size_t>(a.sources + q)]);
      auto& row = grid[static_cast<std::size_t>(q + 1)];
      row[static_cast<std::size_t>(s * group_cols)] = row_to_image(c.transpose());
      for (std::size_t m = 0; m < models.size(); ++m) {
        const Vector<Real> result = make_analogy<Real>(models[m].state.params, pa, pb, c);
        row[static_cast<std::size_t>(s * group_cols + 1 + static_cast<Index>(m))] = row_to_image(result.transpose());
      }
    }
  }
  render_grid(grid, a.out);
  const auto [h, w] = grid_extent(a.queries + 1, cols, image_side(data.input_dim()));
  out << "analogy grid: " << a.out << " (" << w << "x" << h << ")\n";
  return kOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(path);
  out << checkpoint_metadata(ckpt) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated autoencoders with content-invariance regularization", "gae"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a rotated pair dataset (GAEPAIR1)");
  gen_cmd->add_option("--source", gen.source, "synthetic | mnist")->capture_default_str();
  gen_cmd->add_option("--tset", gen.tset, "mnistr20 | mnistr20_10 | mnistr1")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of pairs")->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "image side in pixels")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output pair file")->required();
  gen_cmd->add_option("--idx", gen.idx, "IDX image file (mnist source)");
  gen_cmd->add_option("--split", gen.split, "train | validation | test")->capture_default_str();
  gen_cmd->add_option("--pairs-per-image", gen.pairs_per_image)->capture_default_str();
  gen_cmd->add_flag("--no-mask", gen.no_mask, "disable the circular mask");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a gated autoencoder");
  train_cmd->add_option("--config", train.config, "run configuration file");
  train_cmd->add_flag("--no-cir", train.no_cir, "baseline GAE (lambda_max = 0)");
  train_cmd->add_option("--resume", train.resume, "continue from a checkpoint");
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--stop-after", train.stop_after, "stop after this many epochs in this invocation");
  train_cmd->add_option("--train", train.train, "training pair file");
  train_cmd->add_option("--out", train.out, "output directory");
  train_cmd->add_option("--set", train.overrides, "override section.key=value");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a pair dataset");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--data", ev.data, "evaluation (test) pairs")->required();
  eval_cmd->add_option("--ref", ev.ref, "KNN reference (train split of the evaluation data)")->required();
  eval_cmd->add_option("--k", ev.k, "neighbor pool for MSCRE")->capture_default_str();
  eval_cmd->add_option("--knn", ev.knn, "K of the rotation classifier")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed)->capture_default_str();
  eval_cmd->add_option("--gae-name", ev.gae_name);
  eval_cmd->add_option("--eval-name", ev.eval_name);
  eval_cmd->add_option("--results", ev.results, "append the CSV row to this file");

  AnalogyArgs an;
  auto* analogy_cmd = app.add_subcommand("analogy", "Render an analogy grid");
  analogy_cmd->add_option("--checkpoint", an.checkpoints, "one or more checkpoints")->required();
  analogy_cmd->add_option("--data", an.data)->required();
  analogy_cmd->add_option("--sources", an.sources)->capture_default_str();
  analogy_cmd->add_option("--queries", an.queries)->capture_default_str();
  analogy_cmd->add_flag("--identity", an.identity, "use b = a for every source pair");
  analogy_cmd->add_option("--seed", an.seed)->capture_default_str();
  analogy_cmd->add_option("--out", an.out)->required();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print checkpoint metadata");
  inspect_cmd->add_option("checkpoint", inspect_path)->required();

  CLI::App* active = &app;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (analogy_cmd->parsed()) return cmd_analogy(an, out);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_path, out);
    return kUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    err << "error: " << e.what() << "\n" << active->help();
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const IncompatibleError& e) {
    err << "incompatible inputs: " << e.what() << "\n";
    return kIncompatible;
  } catch (const ShapeError& e) {
    err << "incompatible inputs: " << e.what() << "\n";
    return kIncompatible;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace gae::cli
