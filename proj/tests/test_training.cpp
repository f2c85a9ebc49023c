#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "projectron/checkpoint.hpp"
#include "projectron/model_zoo.hpp"
#include "projectron/training.hpp"

using namespace projectron;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& points,
                     const std::vector<std::size_t>& labels, std::size_t classes) {
  Dataset d;
  d.features = Matrix(points.at(0).size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t r = 0; r < points[i].size(); ++r) d.features(r, i) = points[i][r];
  }
  d.labels = labels;
  d.classes = classes;
  return d;
}

// Two clusters centred at (-2, -2) and (2, 2), each point within distance 1.
Dataset blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi), radius(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    const double c = label ? 2.0 : -2.0;
    const double a = angle(rng), r = radius(rng);
    pts.push_back({c + r * std::cos(a), c + r * std::sin(a)});
    labels.push_back(label);
  }
  return make_dataset(pts, labels, 2);
}

// Searches directions on a fine grid for a line that separates the classes.
bool linearly_separable(const Dataset& d) {
  for (int step = 0; step < 3600; ++step) {
    const double a = step * std::numbers::pi / 1800.0;
    const double u = std::cos(a), v = std::sin(a);
    double max0 = -1e300, min1 = 1e300;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double proj = u * d.features(0, i) + v * d.features(1, i);
      if (d.labels[i] == 0) max0 = std::max(max0, proj);
      else min1 = std::min(min1, proj);
    }
    if (max0 < min1) return true;
  }
  return false;
}

ArchitectureConfig small_arch(std::size_t e, std::size_t h, std::size_t classes) {
  ArchitectureConfig a;
  a.encode_width = e;
  a.hidden_width = h;
  a.classes = classes;
  return a;
}

Model constant_model(std::size_t width, std::size_t classes) {
  Model m;
  m.input_width = width;
  m.classes = classes;
  m.layers.emplace_back(
      DenseLayer{Matrix::Zero(classes, width), Vector::Zero(classes), Activation::none});
  return m;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(TrainConfig, RejectsInvalidValues) {
  TrainConfig cfg;
  cfg.validate();
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.patience = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.adam.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(EarlyStoppingRule, CountsStaleEpochs) {
  EarlyStopping s(2, 1e-6);
  EXPECT_TRUE(s.observe(1, 1.0));
  EXPECT_TRUE(s.observe(2, 0.5));
  EXPECT_FALSE(s.observe(3, 0.5 - 1e-7));  // below the improvement threshold
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.observe(4, 0.9));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_DOUBLE_EQ(s.best_loss(), 0.5);
}

TEST(Train, SeparableBlobsReachFullTrainingAccuracy) {
  const Dataset data = blobs(200, 1);
  ASSERT_TRUE(linearly_separable(data));
  const Dataset holdout = blobs(40, 2);
  TrainConfig cfg;
  cfg.max_epochs = 49;
  cfg.patience = 49;
  cfg.batch_size = 16;
  cfg.seed = 3;
  const auto result = train(build_projectron(2, small_arch(8, 8, 2), 3), data, holdout, cfg);
  double best = 0.0;
  for (const auto& r : result.history.records) best = std::max(best, r.train_accuracy);
  EXPECT_EQ(evaluate(result.model, data), 1.0);
  EXPECT_EQ(best, 1.0);
}

TEST(Train, ScriptedPlateauStopsAfterPatienceAndReturnsBest) {
  const Dataset data = blobs(40, 4);
  const Dataset holdout = blobs(10, 5);
  TrainConfig cfg;
  cfg.patience = 3;
  cfg.seed = 8;
  std::vector<std::uint8_t> snapshot_epoch2;
  TrainHooks hooks;
  hooks.holdout_loss = [](std::size_t epoch, double) { return epoch == 1 ? 1.0 : 0.5; };
  hooks.on_epoch_end = [&](std::size_t epoch, const Model& m) {
    if (epoch == 2) snapshot_epoch2 = serialize_model(m);
  };
  const auto result = train(build_mlp(2, {4}, 2, 8), data, holdout, cfg, hooks);
  EXPECT_EQ(result.history.records.size(), 5u);
  EXPECT_EQ(result.history.best_epoch, 2u);
  EXPECT_EQ(result.history.stop_reason, StopReason::patience_exhausted);
  EXPECT_EQ(serialize_model(result.model), snapshot_epoch2);
}

TEST(Train, NeverExceedsBestPlusPatience) {
  const Dataset data = blobs(60, 6);
  const Dataset holdout = blobs(20, 7);
  std::mt19937_64 rng(9);
  for (std::size_t patience = 1; patience <= 4; ++patience) {
    TrainConfig cfg;
    cfg.patience = patience;
    cfg.max_epochs = 30;
    cfg.seed = patience;
    TrainHooks hooks;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    hooks.holdout_loss = [&](std::size_t, double) { return u(rng); };
    const auto result = train(build_mlp(2, {3}, 2, patience), data, holdout, cfg, hooks);
    const auto& recs = result.history.records;
    EXPECT_LE(recs.size(), result.history.best_epoch + patience);
    const double best = recs[result.history.best_epoch - 1].holdout_loss;
    for (const auto& r : recs) EXPECT_GE(r.holdout_loss, best - 1e-6);
  }
}

TEST(Train, StopsAtMaxEpochsWhenImproving) {
  TrainConfig cfg;
  cfg.max_epochs = 4;
  TrainHooks hooks;
  hooks.holdout_loss = [](std::size_t epoch, double) { return 10.0 - epoch; };
  const auto result = train(build_mlp(2, {3}, 2, 0), blobs(20, 1), blobs(6, 2), cfg, hooks);
  EXPECT_EQ(result.history.records.size(), 4u);
  EXPECT_EQ(result.history.stop_reason, StopReason::max_epochs);
  EXPECT_EQ(result.history.best_epoch, 4u);
}

TEST(Train, ShufflingVisitsEveryItemOncePerEpoch) {
  const Dataset data = blobs(37, 3);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 5;
  std::vector<std::vector<std::size_t>> seen(4);
  TrainHooks hooks;
  hooks.on_batch = [&](std::size_t epoch, std::span<const std::size_t> b) {
    seen[epoch].insert(seen[epoch].end(), b.begin(), b.end());
  };
  train(build_mlp(2, {3}, 2, 0), data, blobs(5, 4), cfg, hooks);
  std::vector<std::size_t> all(37);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t e = 1; e <= 3; ++e) {
    EXPECT_NE(seen[e], all);  // reordered
    std::sort(seen[e].begin(), seen[e].end());
    EXPECT_EQ(seen[e], all);
  }
}

TEST(Train, DeterministicUnderFixedSeed) {
  const Dataset data = blobs(80, 11);
  const Dataset holdout = blobs(20, 12);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.seed = 5;
  const auto a = train(build_projectron(2, small_arch(6, 4, 2), 5), data, holdout, cfg);
  const auto b = train(build_projectron(2, small_arch(6, 4, 2), 5), data, holdout, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "projectron_history_test";
  write_history_csv(a.history, dir / "a.csv");
  write_history_csv(b.history, dir / "b.csv");
  EXPECT_EQ(read_text(dir / "a.csv"), read_text(dir / "b.csv"));
  EXPECT_EQ(read_text(dir / "a.csv").substr(0, 51),
            "epoch,train_loss,train_acc,holdout_loss,holdout_acc");
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  std::filesystem::remove_all(dir);
}

TEST(Train, Errors) {
  const Dataset data = blobs(10, 1);
  Dataset empty = data.select({});
  TrainConfig cfg;
  EXPECT_THROW(train(build_mlp(2, {3}, 2, 0), empty, data, cfg), std::invalid_argument);
  EXPECT_THROW(train(build_mlp(2, {3}, 2, 0), data, empty, cfg), std::invalid_argument);
  EXPECT_THROW(train(build_mlp(3, {3}, 2, 0), data, data, cfg), std::invalid_argument);
}

TEST(Evaluate, Examples) {
  std::vector<std::vector<double>> pts(168, {0.0});
  std::vector<std::size_t> labels(168);
  for (std::size_t i = 0; i < 168; ++i) labels[i] = i % 2;
  EXPECT_DOUBLE_EQ(evaluate(constant_model(1, 2), make_dataset(pts, labels, 2)), 0.5);

  std::vector<std::size_t> ten(1000);
  for (std::size_t i = 0; i < ten.size(); ++i) ten[i] = i % 10;
  EXPECT_DOUBLE_EQ(
      evaluate(constant_model(1, 10), make_dataset(std::vector(1000, std::vector{1.0}), ten, 10)),
      0.1);

  Model sign = constant_model(1, 2);
  std::get<DenseLayer>(sign.layers[0]).weights << -1.0, 1.0;
  EXPECT_DOUBLE_EQ(evaluate(sign, make_dataset({{-1.0}, {2.0}}, {0, 1}, 2)), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(sign, make_dataset({{-1.0}}, {1}, 2)), 0.0);
  EXPECT_THROW(evaluate(sign, make_dataset({{1.0}}, {0}, 2).select({})), std::invalid_argument);
}

TEST(LeaveOneOut, SeparableFourItems) {
  const Dataset d = make_dataset({{-2.0, -2.0}, {-1.5, -2.5}, {2.0, 2.0}, {2.5, 1.5}}, {0, 0, 1, 1}, 2);
  ASSERT_TRUE(linearly_separable(d));
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.05;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.seed = 1;
  const ModelBuilder builder = [](std::size_t in, std::size_t classes, std::uint64_t seed) {
    return build_mlp(in, {4}, classes, seed);
  };
  LeaveOneOutOptions options;
  options.holdout_fraction = 0.0;
  EXPECT_DOUBLE_EQ(leave_one_out(d, cfg, builder, options), 1.0);
}

TEST(LeaveOneOut, SingleClass) {
  const Dataset d = make_dataset({{0.1}, {0.7}, {-0.3}, {0.2}}, {0, 0, 0, 0}, 2);
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.05;
  cfg.max_epochs = 20;
  const ModelBuilder builder = [](std::size_t in, std::size_t classes, std::uint64_t seed) {
    return build_mlp(in, {3}, classes, seed);
  };
  EXPECT_DOUBLE_EQ(leave_one_out(d, cfg, builder), 1.0);
}

TEST(LeaveOneOut, InvariantToItemOrder) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 12; ++i) {
    pts.push_back({n(rng), n(rng)});
    labels.push_back(i % 3);
  }
  const Dataset d = make_dataset(pts, labels, 3);
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.02;
  cfg.max_epochs = 15;
  cfg.seed = 4;
  const ModelBuilder builder = [](std::size_t in, std::size_t classes, std::uint64_t seed) {
    return build_projectron(in, small_arch(4, 3, classes), seed);
  };
  const double base = leave_one_out(d, cfg, builder);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_EQ(leave_one_out(d.select(perm), cfg, builder), base);
  }
}

TEST(LeaveOneOut, NeedsTwoItems) {
  const ModelBuilder builder = [](std::size_t in, std::size_t classes, std::uint64_t seed) {
    return build_mlp(in, {2}, classes, seed);
  };
  EXPECT_THROW(leave_one_out(make_dataset({{1.0}}, {0}, 2), TrainConfig{}, builder),
               std::invalid_argument);
}
