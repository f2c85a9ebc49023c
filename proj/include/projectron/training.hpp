#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "projectron/dataset.hpp"
#include "projectron/network.hpp"

namespace projectron {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  AdamHyper adam;
  bool shuffle = true;
  /// Holdout loss must drop by more than this to count as improvement.
  double min_improvement = 1e-6;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double holdout_loss = 0.0;
  double holdout_accuracy = 0.0;
};

enum class StopReason { patience_exhausted, max_epochs };

std::string to_string(StopReason reason);

struct TrainHistory {
  std::vector<EpochRecord> records;
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t best_epoch = 0;  // 1-based epoch whose parameters were returned
};

/// CSV with header epoch,train_loss,train_acc,holdout_loss,holdout_acc.
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

/// Tracks the best holdout loss and decides when patience runs out.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_improvement);

  /// Records the holdout loss of `epoch`; true when this epoch is the new best.
  bool observe(std::size_t epoch, double holdout_loss);
  bool should_stop() const { return stale_epochs_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double min_improvement_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  std::size_t stale_epochs_ = 0;
};

/// Optional instrumentation for train().
struct TrainHooks {
  /// Replaces the measured holdout loss of an epoch (for scripted runs).
  std::function<double(std::size_t epoch, double measured)> holdout_loss;
  /// Called after every epoch with the current parameters.
  std::function<void(std::size_t epoch, const Model& model)> on_epoch_end;
  /// Called with the training-set indices of each mini-batch before its step.
  std::function<void(std::size_t epoch, std::span<const std::size_t> batch)> on_batch;
};

struct TrainResult {
  Model model;  // parameters from the best holdout epoch
  TrainHistory history;
};

/// Mini-batch Adam over shuffled epochs with early stopping on holdout loss.
TrainResult train(Model model, const Dataset& train_set, const Dataset& holdout,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

/// |correct| / |test_set|.
double evaluate(const Model& model, const Dataset& test_set);

/// Mean cross-entropy over the set.
double dataset_loss(const Model& model, const Dataset& set);

std::vector<std::size_t> predictions(const Model& model, const Dataset& set);

using ModelBuilder =
    std::function<Model(std::size_t input_width, std::size_t classes, std::uint64_t seed)>;

struct LeaveOneOutOptions {
  /// Fraction of each fold's training items monitored for early stopping.
  double holdout_fraction = 0.1;
};

/// One model per item, trained on the rest and scored on the excluded item.
/// Items are put in a canonical order first, so the result does not depend
/// on input order; fold i uses seed cfg.seed + i.
double leave_one_out(const Dataset& dataset, const TrainConfig& cfg,
                     const ModelBuilder& build, const LeaveOneOutOptions& options = {});

}  // namespace projectron
