#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "projectron/dataset.hpp"
#include "projectron/features.hpp"
#include "projectron/model_zoo.hpp"
#include "projectron/training.hpp"

namespace projectron {

enum class Method { projectron, mlp_raw, mlp_radon, mlp_deep };

/// CLI spelling: projectron, mlp-raw, mlp-radon, mlp-deep.
std::string method_id(Method m);
/// Table spelling: Projectron, MLP+Raw, MLP+Radon, Deep MLP+Radon.
std::string method_label(Method m);
Method parse_method(const std::string& id);

struct ExperimentConfig {
  double delta_degrees = AngleSet::kDefaultDelta;
  bool normalize_projections = false;
  ArchitectureConfig arch;
  TrainConfig train;
  /// Seeded slice of the training images monitored for early stopping.
  double holdout_fraction = 0.1;
  bool include_deep = false;
  std::size_t deep_depth = 7;
};

FeatureOptions feature_options(Method m, const ExperimentConfig& cfg);

/// Projectron uses cfg.arch; MLP+Raw and MLP+Radon use
/// cfg.arch.mlp_hidden_widths or one hidden layer of half the input; the deep
/// MLP uses deep_depth successive halvings.
Model build_model(Method m, std::size_t input_width, std::size_t classes,
                  const ExperimentConfig& cfg);

/// Training images split into fit and holdout parts by the seeded slice.
struct TrainSplit {
  ImageSet fit;
  ImageSet holdout;
};
TrainSplit split_training(const ImageSet& train, const ExperimentConfig& cfg);

struct ArmResult {
  Method method = Method::projectron;
  double test_accuracy = 0.0;
  std::size_t params = 0;
  TrainResult trained;
  double seconds = 0.0;
};
/// Trains one method on the split and evaluates it on the test set.
ArmResult run_arm(Method m, const TrainSplit& split, const ImageSet& test,
                  const ExperimentConfig& cfg);

struct ComparisonReport {
  std::vector<ArmResult> rows;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// Every baseline plus the Projectron (and the deep MLP when requested), all
/// under the same seed and split.
ComparisonReport compare_experiment(const ImageSet& train, const ImageSet& test,
                                    const ExperimentConfig& cfg);

void write_report_table(const ComparisonReport& report, std::ostream& out);
/// Columns: method,accuracy,params.
void write_report_csv(const ComparisonReport& report, const std::filesystem::path& path);

}  // namespace projectron
