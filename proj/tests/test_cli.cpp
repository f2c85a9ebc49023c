#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "projectron/checkpoint.hpp"
#include "projectron/cli.hpp"
#include "projectron/io_util.hpp"

using namespace projectron;
using namespace projectron::cli;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Bars dataset: class "horizontal" and class "vertical", 12x12 PGM files
// with a bar at a random offset, listed in manifest.csv without a split.
class BarsDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "projectron_cli_bars";
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> pos(1, 10);
    std::ofstream manifest(root_ / "manifest.csv");
    manifest << "path,class\n";
    for (int i = 0; i < 60; ++i) {
      const bool vertical = i % 2;
      const int p = pos(rng);
      const std::string name = (vertical ? "v/" : "h/") + std::to_string(i) + ".pgm";
      fs::create_directories((root_ / name).parent_path());
      std::ofstream img(root_ / name, std::ios::binary);
      img << "P5\n12 12\n255\n";
      for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 12; ++c) {
          const bool on = vertical ? (c == p || c == p + 1) : (r == p || r == p + 1);
          img.put(static_cast<char>(on ? 230 : 20 + (r * 7 + c * 3) % 20));
        }
      }
      manifest << name << ',' << (vertical ? "vertical" : "horizontal") << '\n';
    }
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  RunConfig base(const std::string& out_name) const {
    RunConfig cfg;
    cfg.dataset = root_;
    cfg.out = fs::temp_directory_path() / "projectron_cli_out" / out_name;
    fs::remove_all(cfg.out);
    cfg.target_side = 12;
    cfg.encode_width = 16;
    cfg.hidden_width = 8;
    cfg.max_epochs = 30;
    cfg.batch_size = 8;
    cfg.holdout_fraction = 0.2;
    cfg.seed = 3;
    return cfg;
  }

  static fs::path root_;
};

fs::path BarsDataset::root_;

int run_args(std::vector<std::string> args, std::string* out_text = nullptr,
             std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(RunConfigJson, UnknownKeyRejectedByName) {
  try {
    apply_config_json({}, R"({"seed": 1, "learning_rat": 0.1})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
}

TEST(RunConfigJson, TypeErrors) {
  EXPECT_THROW(apply_config_json({}, R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(apply_config_json({}, R"({"seed": 1.5})"), ConfigError);
  EXPECT_THROW(apply_config_json({}, R"({"arch": 3})"), ConfigError);
  EXPECT_THROW(apply_config_json({}, R"({"include_deep": 1})"), ConfigError);
  EXPECT_THROW(apply_config_json({}, R"([1, 2])"), ConfigError);
  EXPECT_THROW(apply_config_json({}, "{not json"), ConfigError);
}

TEST(RunConfigJson, RoundTripThroughEcho) {
  RunConfig cfg;
  cfg.seed = 17;
  cfg.mlp_hidden_widths = {12, 6};
  cfg.learning_rate = 0.0025;
  cfg.dataset = "/data/x";
  const RunConfig back = apply_config_json({}, to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_EQ(back.mlp_hidden_widths, cfg.mlp_hidden_widths);
}

TEST(RunConfigJson, ValidationNamesKey) {
  RunConfig cfg;
  cfg.encode_width = 7;
  try {
    cfg.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("encode_width"), std::string::npos);
  }
  cfg = {};
  cfg.arch = "cnn";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.split = "validation";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Run, PrecedenceFlagsOverFileOverDefaults) {
  const fs::path dir = fs::temp_directory_path() / "projectron_cli_precedence";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"seed": 5, "hidden_width": 9, "threshold": 0.001})";
  }
  ASSERT_EQ(run_args({"gradcheck", "--config", (dir / "cfg.json").string(), "--seed", "8", "--out",
                      (dir / "out").string()}),
            kExitOk);
  const RunConfig echoed = apply_config_json({}, read_text(dir / "out" / "config.json"));
  EXPECT_EQ(echoed.seed, 8u);             // flag
  EXPECT_EQ(echoed.hidden_width, 9u);     // file
  EXPECT_EQ(echoed.threshold, 0.001);     // file
  EXPECT_EQ(echoed.encode_width, 1024u);  // default
  fs::remove_all(dir);
}

TEST(Run, UsageErrors) {
  std::string err;
  EXPECT_EQ(run_args({}, nullptr, &err), kExitUsage);
  EXPECT_EQ(run_args({"fly"}), kExitUsage);
  EXPECT_EQ(run_args({"train", "--seed", "abc"}), kExitUsage);
  EXPECT_EQ(run_args({"train", "--set", "bogus_key=3"}, nullptr, &err), kExitUsage);
  EXPECT_NE(err.find("bogus_key"), std::string::npos);
  EXPECT_EQ(run_args({"train", "--out", "/tmp/projectron_cli_nodata"}, nullptr, &err), kExitUsage);
  EXPECT_NE(err.find("dataset"), std::string::npos);
  EXPECT_EQ(run_args({"train", "--dataset", "/nonexistent/dir", "--out", "/tmp/projectron_cli_nodata"},
                     nullptr, &err),
            kExitFailure);
  EXPECT_NE(err.find("/nonexistent/dir"), std::string::npos);
  fs::remove_all("/tmp/projectron_cli_nodata");
}

TEST(Run, GradCheckThresholds) {
  const std::string out = (fs::temp_directory_path() / "projectron_cli_gc").string();
  std::string first, second;
  EXPECT_EQ(run_args({"gradcheck", "--out", out, "--seed", "4"}, &first), kExitOk);
  EXPECT_EQ(run_args({"gradcheck", "--out", out, "--seed", "4"}, &second), kExitOk);
  EXPECT_EQ(first, second);
  EXPECT_NE(first.find("PASS"), std::string::npos);
  EXPECT_EQ(run_args({"gradcheck", "--out", out, "--threshold", "1e-12"}), kExitFailure);
  fs::remove_all(out);
}

TEST(GradCheckCommand, PassesAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.out = fs::temp_directory_path() / "projectron_cli_gc_seeds";
    std::ostringstream log;
    const auto r = cmd_gradcheck(cfg, log);
    EXPECT_TRUE(r.passed) << "seed " << seed << " error " << r.max_relative_error;
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
  fs::remove_all(fs::temp_directory_path() / "projectron_cli_gc_seeds");
}

TEST_F(BarsDataset, ManifestWithoutSplitUsesSeededSeventyThirty) {
  const RunConfig cfg = base("split");
  const LoadedData data = load_data(cfg);
  EXPECT_EQ(data.train.size(), 42u);
  EXPECT_EQ(data.test.size(), 18u);
  EXPECT_EQ(data.train.class_names, (std::vector<std::string>{"horizontal", "vertical"}));
  EXPECT_EQ(load_data(cfg).train.labels, data.train.labels);
}

TEST_F(BarsDataset, ExtractIsIdempotentAndFollowsAngleStep) {
  RunConfig cfg = base("extract");
  std::ostringstream log;
  const auto first = cmd_extract(cfg, log);
  EXPECT_EQ(first.images, 60u);
  EXPECT_EQ(first.feature_width, 12u * 17u);
  const std::string features = read_text(cfg.out / "features.csv");
  const std::string sino = read_text(cfg.out / "sinograms" / "h_0.csv");
  const std::string pgm = read_text(cfg.out / "sinograms" / "h_0.pgm");
  cmd_extract(cfg, log);
  EXPECT_EQ(read_text(cfg.out / "features.csv"), features);
  EXPECT_EQ(read_text(cfg.out / "sinograms" / "h_0.csv"), sino);
  EXPECT_EQ(read_text(cfg.out / "sinograms" / "h_0.pgm"), pgm);

  cfg.angles_delta = 45;
  cfg.extract_limit = 3;
  cfg.out /= "coarse";
  EXPECT_EQ(cmd_extract(cfg, log).images, 3u);
  std::ifstream csv(cfg.out / "sinograms" / "h_0.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 5u);  // header plus 4 angles
}

TEST_F(BarsDataset, TrainEvalRoundTrip) {
  const RunConfig cfg = base("train");
  std::ostringstream log;
  const TrainSummary trained = cmd_train(cfg, log);
  EXPECT_GT(trained.holdout_accuracy, 0.9);
  EXPECT_TRUE(fs::exists(cfg.out / "model.ckpt"));

  RunConfig eval_cfg = cfg;
  eval_cfg.checkpoint = cfg.out / "model.ckpt";
  eval_cfg.out = cfg.out / "eval";
  eval_cfg.split = "holdout";
  const EvalSummary holdout = cmd_eval(eval_cfg, log);
  EXPECT_EQ(holdout.accuracy, trained.holdout_accuracy);
  EXPECT_EQ(holdout.params, trained.params);
  EXPECT_TRUE(fs::exists(holdout.confusion_path));

  eval_cfg.split = "test";
  EXPECT_GT(cmd_eval(eval_cfg, log).accuracy, 0.8);

  eval_cfg.angles_delta = 45;
  EXPECT_THROW(cmd_eval(eval_cfg, log), std::invalid_argument);
}

TEST_F(BarsDataset, TrainIsDeterministic) {
  RunConfig a = base("det_a"), b = base("det_b");
  a.max_epochs = b.max_epochs = 5;
  std::ostringstream log;
  cmd_train(a, log);
  cmd_train(b, log);
  EXPECT_EQ(read_text(a.out / "history.csv"), read_text(b.out / "history.csv"));
  EXPECT_EQ(read_file_bytes(a.out / "model.ckpt"), read_file_bytes(b.out / "model.ckpt"));
}

TEST_F(BarsDataset, CompareReportMatchesPerCheckpointEval) {
  RunConfig cfg = base("compare");
  cfg.include_deep = true;
  cfg.deep_depth = 3;
  std::ostringstream log;
  const ComparisonReport report = cmd_compare(cfg, log);
  ASSERT_EQ(report.rows.size(), 4u);
  const std::string csv = read_text(cfg.out / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,accuracy,params");
  for (const ArmResult& row : report.rows) {
    RunConfig eval_cfg = cfg;
    eval_cfg.arch = method_id(row.method);
    eval_cfg.checkpoint = cfg.out / method_id(row.method) / "model.ckpt";
    eval_cfg.out = cfg.out / "eval" / method_id(row.method);
    const EvalSummary e = cmd_eval(eval_cfg, log);
    EXPECT_EQ(e.accuracy, row.test_accuracy) << method_id(row.method);
    EXPECT_EQ(e.params, row.params);
    EXPECT_NE(csv.find(method_id(row.method) + "," + format_number(row.test_accuracy) + "," +
                       std::to_string(row.params)),
              std::string::npos);
  }
  EXPECT_NE(read_text(cfg.out / "report.txt").find("Projectron"), std::string::npos);
}
