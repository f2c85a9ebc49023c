#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "projectron/dataset.hpp"
#include "projectron/experiment.hpp"
#include "projectron/metrics.hpp"

namespace projectron::cli {

/// Raised for invalid configuration: unknown keys, bad values, wrong types.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Every setting a command may read once all configuration sources are merged.
/// Later sources take precedence over earlier ones.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path out = "projectron_out";
  std::string arch = "projectron";
  std::uint64_t seed = 0;

  std::size_t target_side = 28;
  double angles_delta = AngleSet::kDefaultDelta;
  bool normalize_projections = false;

  std::size_t encode_width = 1024;
  std::size_t hidden_width = 512;
  std::vector<std::size_t> mlp_hidden_widths;
  bool include_deep = false;
  std::size_t deep_depth = 7;

  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double min_improvement = 1e-6;
  double holdout_fraction = 0.1;

  /// Seeded subsample sizes; 0 keeps every item.
  std::size_t train_subsample = 0;
  std::size_t test_subsample = 0;
  /// Test share for manifest rows without a split column.
  double test_fraction = 0.3;
  /// Maximum images written by extract; 0 writes all.
  std::size_t extract_limit = 0;

  double threshold = 1e-4;
  std::filesystem::path checkpoint;
  std::string split = "test";

  void validate() const;
  ExperimentConfig experiment() const;
};

/// Reads a JSON object whose keys are RunConfig field names, applied on top
/// of `base`. Unknown keys and mistyped values raise ConfigError.
RunConfig apply_config_json(RunConfig base, const std::string& json_text);
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
std::string to_json(const RunConfig& cfg);

/// Training and test images resolved from cfg.dataset: an MNIST directory of
/// IDX files, or a directory holding manifest.csv. Subsampling is applied.
struct LoadedData {
  ImageSet train;
  ImageSet test;
};
LoadedData load_data(const RunConfig& cfg);

struct ExtractResult {
  std::size_t images = 0;
  std::size_t feature_width = 0;
};
ExtractResult cmd_extract(const RunConfig& cfg, std::ostream& log);

struct TrainSummary {
  double holdout_accuracy = 0.0;
  std::size_t params = 0;
  double seconds = 0.0;
  TrainHistory history;
};
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvalSummary {
  double accuracy = 0.0;
  std::size_t params = 0;
  std::size_t items = 0;
  std::filesystem::path confusion_path;
};
EvalSummary cmd_eval(const RunConfig& cfg, std::ostream& log);

struct GradCheckSummary {
  double max_relative_error = 0.0;
  bool passed = false;
};
GradCheckSummary cmd_gradcheck(const RunConfig& cfg, std::ostream& log);

ComparisonReport cmd_compare(const RunConfig& cfg, std::ostream& log);

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime error or failed check
inline constexpr int kExitUsage = 2;    // bad flags or configuration

/// Parses `args` (without the program name) and runs the chosen subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace projectron::cli
