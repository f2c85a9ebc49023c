#include "projectron/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "projectron/io_util.hpp"

namespace projectron {

std::string method_id(Method m) {
  switch (m) {
    case Method::projectron: return "projectron";
    case Method::mlp_raw: return "mlp-raw";
    case Method::mlp_radon: return "mlp-radon";
    case Method::mlp_deep: return "mlp-deep";
  }
  return "?";
}

std::string method_label(Method m) {
  switch (m) {
    case Method::projectron: return "Projectron";
    case Method::mlp_raw: return "MLP+Raw";
    case Method::mlp_radon: return "MLP+Radon";
    case Method::mlp_deep: return "Deep MLP+Radon";
  }
  return "?";
}

Method parse_method(const std::string& id) {
  for (Method m : {Method::projectron, Method::mlp_raw, Method::mlp_radon, Method::mlp_deep}) {
    if (method_id(m) == id) return m;
  }
  throw std::invalid_argument("unknown architecture '" + id +
                              "' (expected projectron, mlp-raw, mlp-radon or mlp-deep)");
}

FeatureOptions feature_options(Method m, const ExperimentConfig& cfg) {
  FeatureOptions f;
  f.kind = m == Method::mlp_raw ? FeatureKind::raw : FeatureKind::radon;
  f.delta_degrees = cfg.delta_degrees;
  f.normalize_projections = cfg.normalize_projections;
  return f;
}

Model build_model(Method m, std::size_t input_width, std::size_t classes,
                  const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.train.seed;
  switch (m) {
    case Method::projectron: {
      ArchitectureConfig arch = cfg.arch;
      arch.classes = classes;
      return build_projectron(input_width, arch, seed);
    }
    case Method::mlp_raw:
    case Method::mlp_radon: {
      auto widths = cfg.arch.mlp_hidden_widths;
      if (widths.empty()) widths = halving_chain(input_width, 1);
      return build_mlp(input_width, widths, classes, seed);
    }
    case Method::mlp_deep:
      return build_mlp(input_width, halving_chain(input_width, cfg.deep_depth), classes, seed);
  }
  throw std::logic_error("unhandled method");
}

TrainSplit split_training(const ImageSet& train, const ExperimentConfig& cfg) {
  auto [kept, held] = split_indices(train.size(), cfg.holdout_fraction, cfg.train.seed);
  if (held.empty()) throw std::invalid_argument("training set too small for a holdout slice");
  return {train.select(kept), train.select(held)};
}

ArmResult run_arm(Method m, const TrainSplit& split, const ImageSet& test,
                  const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto features = feature_options(m, cfg);
  const Dataset fit = make_features(split.fit, features);
  const Dataset holdout = make_features(split.holdout, features);
  const Dataset test_set = make_features(test, features);

  ArmResult arm;
  arm.method = m;
  Model model = build_model(m, fit.width(), fit.classes, cfg);
  arm.params = param_count(model);
  arm.trained = train(std::move(model), fit, holdout, cfg.train);
  arm.test_accuracy = evaluate(arm.trained.model, test_set);
  arm.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return arm;
}

ComparisonReport compare_experiment(const ImageSet& train, const ImageSet& test,
                                    const ExperimentConfig& cfg) {
  if (train.size() == 0 || test.size() == 0) {
    throw std::invalid_argument("compare_experiment needs non-empty train and test sets");
  }
  ComparisonReport report;
  report.train_count = train.size();
  report.test_count = test.size();
  const TrainSplit split = split_training(train, cfg);
  std::vector<Method> methods = {Method::mlp_raw, Method::mlp_radon, Method::projectron};
  if (cfg.include_deep) methods.push_back(Method::mlp_deep);
  for (Method m : methods) report.rows.push_back(run_arm(m, split, test, cfg));
  return report;
}

void write_report_table(const ComparisonReport& report, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof(line), "(%zu images training and %zu images for testing)\n",
                report.train_count, report.test_count);
  out << line;
  std::snprintf(line, sizeof(line), "%-16s %10s %12s %8s\n", "Method", "Accuracy", "|h|",
                "Epochs");
  out << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-16s %9.2f%% %12zu %8zu\n",
                  method_label(row.method).c_str(), row.test_accuracy * 100.0, row.params,
                  row.trained.history.records.size());
    out << line;
  }
}

void write_report_csv(const ComparisonReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "method,accuracy,params\n";
  for (const auto& row : report.rows) {
    out << method_id(row.method) << ',' << format_number(row.test_accuracy) << ','
        << row.params << '\n';
  }
  finish_write(out, path);
}

}  // namespace projectron
