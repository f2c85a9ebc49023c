#include "projectron/training.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "projectron/io_util.hpp"
#include "projectron/model_zoo.hpp"

namespace projectron {

namespace {

constexpr Eigen::Index kEvalChunk = 2048;

void check_width(const Model& model, const Dataset& set, const char* what) {
  if (set.width() != model.input_width) {
    throw std::invalid_argument(std::string(what) + " feature width " +
                                std::to_string(set.width()) +
                                " does not match model input width " +
                                std::to_string(model.input_width));
  }
}

Matrix gather(const Matrix& features, std::span<const std::size_t> idx) {
  Matrix out(features.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(idx[j]));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

std::string to_string(StopReason reason) {
  return reason == StopReason::patience_exhausted ? "patience_exhausted" : "max_epochs";
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "epoch,train_loss,train_acc,holdout_loss,holdout_acc\n";
  for (const auto& r : history.records) {
    out << r.epoch << ',' << format_number(r.train_loss) << ','
        << format_number(r.train_accuracy) << ',' << format_number(r.holdout_loss) << ','
        << format_number(r.holdout_accuracy) << '\n';
  }
  finish_write(out, path);
}

EarlyStopping::EarlyStopping(std::size_t patience, double min_improvement)
    : patience_(patience), min_improvement_(min_improvement) {}

bool EarlyStopping::observe(std::size_t epoch, double holdout_loss) {
  if (best_epoch_ == 0 || holdout_loss < best_loss_ - min_improvement_) {
    best_epoch_ = epoch;
    best_loss_ = holdout_loss;
    stale_epochs_ = 0;
    return true;
  }
  ++stale_epochs_;
  return false;
}

std::vector<std::size_t> predictions(const Model& model, const Dataset& set) {
  check_width(model, set, "dataset");
  std::vector<std::size_t> out;
  out.reserve(set.size());
  for (Eigen::Index start = 0; start < set.features.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, set.features.cols() - start);
    const auto chunk = predict_batch(model, set.features.middleCols(start, n));
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  return out;
}

double evaluate(const Model& model, const Dataset& test_set) {
  if (test_set.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  const auto pred = predictions(model, test_set);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test_set.labels[i];
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

double dataset_loss(const Model& model, const Dataset& set) {
  if (set.size() == 0) throw std::invalid_argument("dataset_loss: empty set");
  check_width(model, set, "dataset");
  double total = 0.0;
  for (Eigen::Index start = 0; start < set.features.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, set.features.cols() - start);
    const std::span<const std::size_t> labels(set.labels.data() + start,
                                              static_cast<std::size_t>(n));
    total += batch_loss(model, set.features.middleCols(start, n), labels) *
             static_cast<double>(n);
  }
  return total / static_cast<double>(set.size());
}

TrainResult train(Model model, const Dataset& train_set, const Dataset& holdout,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (holdout.size() == 0) throw std::invalid_argument("train: empty holdout set");
  check_width(model, train_set, "training");
  check_width(model, holdout, "holdout");

  AdamState adam = AdamState::for_model(model, cfg.adam);
  EarlyStopping stopping(cfg.patience, cfg.min_improvement);
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  std::vector<std::size_t> batch_labels;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      if (hooks.on_batch) hooks.on_batch(epoch, idx);
      batch_labels.resize(n);
      for (std::size_t j = 0; j < n; ++j) batch_labels[j] = train_set.labels[idx[j]];
      const auto step = backward_batch(model, gather(train_set.features, idx), batch_labels);
      loss_sum += step.loss * static_cast<double>(n);
      correct += step.correct;
      adam_step(model, step.grads, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.holdout_loss = dataset_loss(model, holdout);
    if (hooks.holdout_loss) rec.holdout_loss = hooks.holdout_loss(epoch, rec.holdout_loss);
    rec.holdout_accuracy = evaluate(model, holdout);
    result.history.records.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);

    if (stopping.observe(epoch, rec.holdout_loss)) result.model = model;
    if (stopping.should_stop()) {
      result.history.stop_reason = StopReason::patience_exhausted;
      break;
    }
  }
  result.history.best_epoch = stopping.best_epoch();
  return result;
}

double leave_one_out(const Dataset& dataset, const TrainConfig& cfg,
                     const ModelBuilder& build, const LeaveOneOutOptions& options) {
  if (dataset.size() < 2) {
    throw std::invalid_argument("leave_one_out needs at least 2 items, got " +
                                std::to_string(dataset.size()));
  }
  dataset.validate();

  // Canonical order: lexicographic on (features, label).
  std::vector<std::size_t> canon(dataset.size());
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::stable_sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    const auto fa = dataset.features.col(static_cast<Eigen::Index>(a));
    const auto fb = dataset.features.col(static_cast<Eigen::Index>(b));
    for (Eigen::Index r = 0; r < fa.size(); ++r) {
      if (fa[r] != fb[r]) return fa[r] < fb[r];
    }
    return dataset.labels[a] < dataset.labels[b];
  });
  const Dataset ordered = dataset.select(canon);

  std::size_t correct = 0;
  for (std::size_t fold = 0; fold < ordered.size(); ++fold) {
    const std::uint64_t seed = cfg.seed + fold;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (i != fold) rest.push_back(i);
    }
    std::vector<std::size_t> fit_idx = rest, watch_idx = rest;
    if (rest.size() >= 2 && options.holdout_fraction > 0.0) {
      auto [kept, held] = split_indices(rest.size(), options.holdout_fraction, seed);
      fit_idx.clear();
      watch_idx.clear();
      for (std::size_t k : kept) fit_idx.push_back(rest[k]);
      for (std::size_t h : held) watch_idx.push_back(rest[h]);
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = seed;
    Model model = build(ordered.width(), ordered.classes, seed);
    const auto trained =
        train(std::move(model), ordered.select(fit_idx), ordered.select(watch_idx), fold_cfg);
    const Dataset probe = ordered.select({fold});
    correct += predictions(trained.model, probe)[0] == probe.labels[0];
  }
  return static_cast<double>(correct) / static_cast<double>(ordered.size());
}

}  // namespace projectron
