#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gae/checkpoint.hpp"
#include "gae/cli.hpp"
#include "gae/data.hpp"
#include "gae/detail/binary_io.hpp"
#include "gae/png.hpp"
#include "gae/run_config.hpp"

using namespace gae;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gae_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run configuration files") {
  std::istringstream good("[model]\nnum_factors = 64\n[train]\nlearning_rate = 0.005\nmax_weight_norm = 4\n"
                          "[cir]\nmode = stepwise\nsteps = 10:0.5:3, 20:1:6\n[run]\nseed = 9\n");
  const RunConfig c = parse_run_config(good, "good.cfg");
  CHECK(c.model.num_factors == 64);
  CHECK(c.train.learning_rate == 0.005);
  CHECK(c.train.max_weight_norm == 4.0);
  CHECK(c.train.cir.mode == ScheduleMode::kStepwise);
  CHECK(c.train.cir.steps == std::vector<SchedulePoint>{{10, 0.5, 3}, {20, 1.0, 6}});
  CHECK(c.train.seed == 9);

  std::istringstream echoed(format_run_config(c));
  const RunConfig again = parse_run_config(echoed, "echo");
  CHECK(again.train == c.train);
  CHECK(again.model == c.model);

  std::istringstream unknown("[train]\nlerning_rate = 0.1\n");
  std::string message;
  try {
    parse_run_config(unknown, "bad.cfg");
  } catch (const ConfigError& e) {
    message = e.what();
  }
  CHECK(message.find("train.lerning_rate") != std::string::npos);

  std::istringstream not_a_number("[train]\nbatch_size = many\n");
  CHECK_THROWS_AS(parse_run_config(not_a_number, "bad.cfg"), ConfigError);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("codes");

  SUBCASE("usage errors") {
    CHECK(run_cli({}).code == cli::kUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
    const Outcome mnist = run_cli({"gen-data", "--source", "mnist", "--out", (dir / "m.gaepair").string()});
    CHECK(mnist.code == cli::kUsage);
    CHECK(mnist.err.find("--idx") != std::string::npos);
    CHECK(mnist.err.find("Usage") != std::string::npos);
  }

  SUBCASE("missing files") {
    CHECK(run_cli({"inspect", (dir / "nope.gaeckpt").string()}).code == cli::kIo);
    CHECK(run_cli({"analogy", "--checkpoint", (dir / "nope.gaeckpt").string(), "--data", "x", "--out", "y.png"}).code ==
          cli::kIo);
  }

  SUBCASE("malformed configuration key names the key") {
    std::ofstream(dir / "bad.cfg") << "[train]\nbogus_key = 1\n";
    const Outcome r = run_cli({"train", "--config", (dir / "bad.cfg").string(), "--train", "whatever"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("train.bogus_key") != std::string::npos);
  }
}

TEST_CASE("command line pipeline") {
  const fs::path dir = scratch("pipeline");
  const std::string train = (dir / "train.gaepair").string();
  const std::string big = (dir / "big.gaepair").string();

  const Outcome gen = run_cli({"gen-data", "--n", "60", "--size", "8", "--seed", "4", "--out", train});
  REQUIRE(gen.code == cli::kOk);
  const PairDataset d = load_pairs(train);
  CHECK(d.size() == 60);
  CHECK(d.input_dim() == 64);
  CHECK(d.normalized);
  for (int a : d.angle_label) CHECK(TransformationSet::mnist_r20().contains(a));

  std::ofstream(dir / "run.cfg") << "[model]\nnum_factors = 8\nnum_mappings = 4\n[train]\nbatch_size = 20\n"
                                    "epochs = 6\nlearning_rate = 0.001\ncheckpoint_every = 3\n[cir]\nramp_epochs = 4\nk_max = 3\n";
  const std::string cfg = (dir / "run.cfg").string();

  const Outcome full = run_cli({"train", "--config", cfg, "--train", train, "--out", (dir / "full").string()});
  REQUIRE(full.code == cli::kOk);
  CHECK(fs::exists(dir / "full" / "epoch_3.gaeckpt"));
  CHECK(fs::exists(dir / "full" / "effective.cfg"));

  SUBCASE("resume after interruption reproduces the full run") {
    REQUIRE(run_cli({"train", "--config", cfg, "--train", train, "--out", (dir / "part").string(), "--stop-after", "2"})
                .code == cli::kOk);
    REQUIRE(run_cli({"train", "--config", cfg, "--train", train, "--out", (dir / "part").string(), "--resume",
                     (dir / "part" / "final.gaeckpt").string()})
                .code == cli::kOk);
    CHECK(detail::read_file(dir / "part" / "final.gaeckpt") == detail::read_file(dir / "full" / "final.gaeckpt"));
    std::ifstream log(dir / "part" / "loss.csv");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 7);
  }

  SUBCASE("resuming with a different configuration is refused") {
    const Outcome r = run_cli({"train", "--config", cfg, "--train", train, "--out", (dir / "other").string(),
                               "--resume", (dir / "full" / "epoch_3.gaeckpt").string(), "--set",
                               "train.learning_rate=0.5"});
    CHECK(r.code == cli::kIncompatible);
  }

  SUBCASE("evaluation and dimension mismatch") {
    const std::string ckpt = (dir / "full" / "final.gaeckpt").string();
    const Outcome ev = run_cli({"eval", "--checkpoint", ckpt, "--data", train, "--ref", train, "--results",
                                (dir / "results.csv").string()});
    REQUIRE(ev.code == cli::kOk);
    CHECK(ev.out.rfind("final,train,60,", 0) == 0);
    REQUIRE(run_cli({"gen-data", "--n", "20", "--size", "16", "--out", big}).code == cli::kOk);
    CHECK(run_cli({"eval", "--checkpoint", ckpt, "--data", big, "--ref", big}).code == cli::kIncompatible);
    CHECK(run_cli({"analogy", "--checkpoint", ckpt, "--data", big, "--out", (dir / "a.png").string()}).code ==
          cli::kIncompatible);
  }

  SUBCASE("analogy grid layout") {
    const std::string ckpt = (dir / "full" / "final.gaeckpt").string();
    const fs::path png = dir / "analogy.png";
    REQUIRE(run_cli({"analogy", "--checkpoint", ckpt, "--data", train, "--sources", "1", "--queries", "5", "--out",
                     png.string()})
                .code == cli::kOk);
    const PngInfo info = read_png_info(png);
    CHECK(info.width == 2 * 8 + 2);
    CHECK(info.height == 6 * 8 + 5 * 2);
  }

  SUBCASE("inspect prints metadata") {
    const Outcome r = run_cli({"inspect", (dir / "full" / "final.gaeckpt").string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("\"epoch\": 6") != std::string::npos);
  }
}

TEST_CASE("full-circle angle set covers every class") {
  const fs::path dir = scratch("r1");
  const std::string path = (dir / "r1.gaepair").string();
  REQUIRE(run_cli({"gen-data", "--tset", "mnistr1", "--n", "6000", "--size", "8", "--out", path}).code == cli::kOk);
  const PairDataset d = load_pairs(path);
  CHECK(std::set<int>(d.angle_label.begin(), d.angle_label.end()).size() == 360);
}
