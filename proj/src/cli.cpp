#include "projectron/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "projectron/checkpoint.hpp"
#include "projectron/features.hpp"
#include "projectron/io_util.hpp"
#include "projectron/model_zoo.hpp"
#include "projectron/network.hpp"
#include "projectron/radon.hpp"
#include "projectron/training.hpp"

namespace projectron::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Field {
  std::function<void(const json&, RunConfig&)> read;
  std::function<json(const RunConfig&)> write;
};

[[noreturn]] void type_error(const std::string& key, const char* expected, const json& v) {
  throw ConfigError("config key '" + key + "' expects " + expected + ", got " + v.dump());
}

template <typename T>
T read_value(const std::string& key, const json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) type_error(key, "a boolean", v);
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_unsigned()) type_error(key, "a non-negative integer", v);
    return v.get<T>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) type_error(key, "a number", v);
    return v.get<double>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) type_error(key, "a string", v);
    return v.get<std::string>();
  } else if constexpr (std::is_same_v<T, fs::path>) {
    if (!v.is_string()) type_error(key, "a path string", v);
    return fs::path(v.get<std::string>());
  } else {
    if (!v.is_array()) type_error(key, "an array of non-negative integers", v);
    T out;
    for (const auto& item : v) out.push_back(read_value<std::size_t>(key, item));
    return out;
  }
}

template <typename T>
Field field(const std::string& key, T RunConfig::*member) {
  return {[key, member](const json& v, RunConfig& cfg) { cfg.*member = read_value<T>(key, v); },
          [member](const RunConfig& cfg) -> json {
            if constexpr (std::is_same_v<T, fs::path>) {
              return (cfg.*member).generic_string();
            } else {
              return cfg.*member;
            }
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset", field("dataset", &RunConfig::dataset)},
      {"out", field("out", &RunConfig::out)},
      {"arch", field("arch", &RunConfig::arch)},
      {"seed", field("seed", &RunConfig::seed)},
      {"target_side", field("target_side", &RunConfig::target_side)},
      {"angles_delta", field("angles_delta", &RunConfig::angles_delta)},
      {"normalize_projections", field("normalize_projections", &RunConfig::normalize_projections)},
      {"encode_width", field("encode_width", &RunConfig::encode_width)},
      {"hidden_width", field("hidden_width", &RunConfig::hidden_width)},
      {"mlp_hidden_widths", field("mlp_hidden_widths", &RunConfig::mlp_hidden_widths)},
      {"include_deep", field("include_deep", &RunConfig::include_deep)},
      {"deep_depth", field("deep_depth", &RunConfig::deep_depth)},
      {"batch_size", field("batch_size", &RunConfig::batch_size)},
      {"max_epochs", field("max_epochs", &RunConfig::max_epochs)},
      {"patience", field("patience", &RunConfig::patience)},
      {"learning_rate", field("learning_rate", &RunConfig::learning_rate)},
      {"beta1", field("beta1", &RunConfig::beta1)},
      {"beta2", field("beta2", &RunConfig::beta2)},
      {"epsilon", field("epsilon", &RunConfig::epsilon)},
      {"min_improvement", field("min_improvement", &RunConfig::min_improvement)},
      {"holdout_fraction", field("holdout_fraction", &RunConfig::holdout_fraction)},
      {"train_subsample", field("train_subsample", &RunConfig::train_subsample)},
      {"test_subsample", field("test_subsample", &RunConfig::test_subsample)},
      {"test_fraction", field("test_fraction", &RunConfig::test_fraction)},
      {"extract_limit", field("extract_limit", &RunConfig::extract_limit)},
      {"threshold", field("threshold", &RunConfig::threshold)},
      {"checkpoint", field("checkpoint", &RunConfig::checkpoint)},
      {"split", field("split", &RunConfig::split)},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return &f;
  }
  return nullptr;
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError("config key '" + key + "': " + message);
}

void echo_config(const RunConfig& cfg) {
  const fs::path path = cfg.out / "config.json";
  auto out = open_for_write(path);
  out << to_json(cfg);
  finish_write(out, path);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Re-samples images to the configured side when a loader produced another size.
ImageSet resample(ImageSet set, std::size_t side) {
  for (Image& img : set.images) {
    if (img.side() == side) continue;
    RawImage raw;
    raw.width = raw.height = img.side();
    raw.channels = 1;
    raw.data.assign(img.pixels().begin(), img.pixels().end());
    img = preprocess(raw, side);
  }
  return set;
}

bool is_mnist_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / "train-images-idx3-ubyte") &&
         fs::is_regular_file(dir / "t10k-images-idx3-ubyte");
}

std::string file_tag(const std::string& relative) {
  std::string tag = fs::path(relative).replace_extension().generic_string();
  std::replace(tag.begin(), tag.end(), '/', '_');
  return tag;
}

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu", prefix, i);
  return buf;
}

struct NamedImage {
  std::string name;
  const Image* image;
  std::string label;
};

TrainSplit training_split(const RunConfig& cfg, const ImageSet& train) {
  return split_training(train, cfg.experiment());
}

void check_feature_width(const Model& model, const Dataset& data) {
  if (model.input_width != data.width()) {
    throw std::invalid_argument("checkpoint expects " + std::to_string(model.input_width) +
                                " input features but the dataset provides " +
                                std::to_string(data.width()) +
                                " (check arch, angles_delta and target_side)");
  }
}

// Inputs whose ReLU pre-activations all sit at least `margin` from zero, so
// that central differences do not straddle a kink.
Vector kink_free_input(const Model& model, std::mt19937_64& rng, double margin) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vector x(static_cast<Eigen::Index>(model.input_width));
    for (auto& v : x) v = normal(rng);
    Vector a = x;
    bool clear = true;
    for (const auto& layer : model.layers) {
      if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
        const Vector z = dense_forward(*dense, a);
        if (dense->activation == Activation::relu) {
          clear = clear && z.cwiseAbs().minCoeff() >= margin;
          a = relu(z);
        } else {
          a = z;
        }
      } else {
        a = rbf_pair_forward(std::get<RbfPairLayer>(layer), a);
      }
    }
    if (clear) return x;
  }
  throw std::runtime_error("could not draw an input clear of ReLU kinks");
}

}  // namespace

void RunConfig::validate() const {
  try {
    parse_method(arch);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key 'arch': ") + e.what());
  }
  require(target_side >= 2, "target_side", "must be at least 2");
  require(angles_delta > 0.0 && angles_delta <= 180.0, "angles_delta", "must lie in (0, 180]");
  require(encode_width >= 2 && encode_width % 2 == 0, "encode_width",
          "must be an even number of at least 2");
  require(hidden_width >= 1, "hidden_width", "must be at least 1");
  for (std::size_t w : mlp_hidden_widths) require(w >= 1, "mlp_hidden_widths", "widths must be >= 1");
  require(deep_depth >= 1, "deep_depth", "must be at least 1");
  require(batch_size >= 1, "batch_size", "must be at least 1");
  require(max_epochs >= 1, "max_epochs", "must be at least 1");
  require(patience >= 1, "patience", "must be at least 1");
  require(learning_rate > 0.0, "learning_rate", "must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1", "must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2", "must lie in [0, 1)");
  require(epsilon > 0.0, "epsilon", "must be positive");
  require(min_improvement >= 0.0, "min_improvement", "must be non-negative");
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction",
          "must lie in (0, 1)");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction", "must lie in (0, 1)");
  require(threshold > 0.0, "threshold", "must be positive");
  require(split == "test" || split == "holdout" || split == "train", "split",
          "must be test, holdout or train");
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.delta_degrees = angles_delta;
  e.normalize_projections = normalize_projections;
  e.arch.encode_width = encode_width;
  e.arch.hidden_width = hidden_width;
  e.arch.mlp_hidden_widths = mlp_hidden_widths;
  e.train.batch_size = batch_size;
  e.train.max_epochs = max_epochs;
  e.train.patience = patience;
  e.train.seed = seed;
  e.train.adam.learning_rate = learning_rate;
  e.train.adam.beta1 = beta1;
  e.train.adam.beta2 = beta2;
  e.train.adam.epsilon = epsilon;
  e.train.min_improvement = min_improvement;
  e.holdout_fraction = holdout_fraction;
  e.include_deep = include_deep;
  e.deep_depth = deep_depth;
  return e;
}

RunConfig apply_config_json(RunConfig base, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    f->read(value, base);
  }
  return base;
}

RunConfig load_config_file(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  try {
    return apply_config_json(std::move(base), text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_json(const RunConfig& cfg) {
  json doc = json::object();
  for (const auto& [name, f] : fields()) doc[name] = f.write(cfg);
  return doc.dump(2) + "\n";
}

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config key 'dataset': no dataset given");
  LoadedData data;
  const fs::path& root = cfg.dataset;
  if (is_mnist_dir(root)) {
    data.train = load_mnist_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte");
    data.test = load_mnist_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte");
    data.test.split = Split::test;
    data.train = resample(std::move(data.train), cfg.target_side);
    data.test = resample(std::move(data.test), cfg.target_side);
  } else if (fs::is_regular_file(root / "manifest.csv")) {
    auto manifest = read_manifest(root / "manifest.csv");
    std::sort(manifest.begin(), manifest.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    const ImageSet all = load_image_dir(root, manifest, cfg.target_side);

    std::vector<std::size_t> train_idx, test_idx, unassigned;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      if (!manifest[i].split) unassigned.push_back(i);
      else if (*manifest[i].split == Split::train) train_idx.push_back(i);
      else test_idx.push_back(i);
    }
    if (unassigned.size() >= 2) {
      const auto [kept, held] = split_indices(unassigned.size(), cfg.test_fraction, cfg.seed);
      for (std::size_t k : kept) train_idx.push_back(unassigned[k]);
      for (std::size_t h : held) test_idx.push_back(unassigned[h]);
    } else {
      train_idx.insert(train_idx.end(), unassigned.begin(), unassigned.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    data.train = all.select(train_idx);
    data.test = all.select(test_idx);
    data.train.split = Split::train;
    data.test.split = Split::test;
  } else {
    throw std::runtime_error("dataset " + root.string() +
                             " is neither an MNIST IDX directory nor a directory with manifest.csv");
  }
  data.train = data.train.select(subsample_indices(data.train.size(), cfg.train_subsample, cfg.seed));
  data.test = data.test.select(subsample_indices(data.test.size(), cfg.test_subsample, cfg.seed + 1));
  return data;
}

ExtractResult cmd_extract(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("config key 'dataset': no dataset given");
  echo_config(cfg);

  ImageSet single;
  LoadedData loaded;
  std::vector<NamedImage> items;
  const std::size_t limit = cfg.extract_limit == 0 ? SIZE_MAX : cfg.extract_limit;

  if (fs::is_regular_file(cfg.dataset)) {
    single.images.push_back(preprocess(read_raw_image(cfg.dataset), cfg.target_side));
    items.push_back({cfg.dataset.stem().string(), &single.images[0], ""});
  } else if (is_mnist_dir(cfg.dataset)) {
    RunConfig all = cfg;
    all.train_subsample = all.test_subsample = 0;
    loaded = load_data(all);
    for (std::size_t i = 0; i < loaded.train.size() && items.size() < limit; ++i) {
      items.push_back({padded("train", i), &loaded.train.images[i],
                       std::to_string(loaded.train.labels[i])});
    }
    for (std::size_t i = 0; i < loaded.test.size() && items.size() < limit; ++i) {
      items.push_back({padded("test", i), &loaded.test.images[i],
                       std::to_string(loaded.test.labels[i])});
    }
  } else if (fs::is_regular_file(cfg.dataset / "manifest.csv")) {
    auto manifest = read_manifest(cfg.dataset / "manifest.csv");
    std::sort(manifest.begin(), manifest.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    single = load_image_dir(cfg.dataset, manifest, cfg.target_side);
    for (std::size_t i = 0; i < single.size() && items.size() < limit; ++i) {
      items.push_back({file_tag(manifest[i].path), &single.images[i], manifest[i].class_name});
    }
  } else {
    throw std::runtime_error("cannot extract from " + cfg.dataset.string() +
                             ": not an image file, MNIST directory or manifest directory");
  }

  const AngleSet angles(cfg.angles_delta);
  FeatureOptions options = feature_options(Method::projectron, cfg.experiment());
  const std::size_t width = feature_width(FeatureKind::radon, cfg.target_side, cfg.angles_delta);

  const fs::path features_path = cfg.out / "features.csv";
  auto features = open_for_write(features_path);
  features << "name,label";
  for (std::size_t k = 0; k < width; ++k) features << ",f" << k;
  features << '\n';
  for (const NamedImage& item : items) {
    const Sinogram s = sinogram(*item.image, angles);
    write_sinogram_csv(s, cfg.out / "sinograms" / (item.name + ".csv"));
    write_sinogram_pgm(s, cfg.out / "sinograms" / (item.name + ".pgm"));
    features << item.name << ',' << item.label;
    for (double v : image_features(*item.image, options)) features << ',' << format_number(v);
    features << '\n';
  }
  finish_write(features, features_path);
  log << "extracted " << items.size() << " images (" << angles.size() << " angles x "
      << projection_length(cfg.target_side) << " bins) into " << cfg.out.string() << '\n';
  return {items.size(), width};
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  echo_config(cfg);
  const LoadedData data = load_data(cfg);
  const ExperimentConfig exp = cfg.experiment();
  const Method method = parse_method(cfg.arch);
  const TrainSplit split = training_split(cfg, data.train);
  const FeatureOptions options = feature_options(method, exp);
  const Dataset fit = make_features(split.fit, options);
  const Dataset holdout = make_features(split.holdout, options);

  Model model = build_model(method, fit.width(), fit.classes, exp);
  TrainSummary summary;
  summary.params = param_count(model);
  log << "training " << method_label(method) << " (" << summary.params << " parameters) on "
      << fit.size() << " items, holdout " << holdout.size() << '\n';

  TrainHooks hooks;
  hooks.on_epoch_end = [&](std::size_t epoch, const Model&) {
    log << "  epoch " << epoch << " done after " << format_number(seconds_since(start)) << " s\n";
  };
  TrainResult result = train(std::move(model), fit, holdout, exp.train, hooks);
  save_checkpoint(result.model, cfg.out / "model.ckpt");
  write_history_csv(result.history, cfg.out / "history.csv");

  summary.history = result.history;
  summary.holdout_accuracy =
      result.history.records[result.history.best_epoch - 1].holdout_accuracy;
  summary.seconds = seconds_since(start);

  const fs::path summary_path = cfg.out / "summary.csv";
  auto out = open_for_write(summary_path);
  out << "holdout_accuracy,params,best_epoch,epochs,stop_reason\n"
      << format_number(summary.holdout_accuracy) << ',' << summary.params << ','
      << result.history.best_epoch << ',' << result.history.records.size() << ','
      << to_string(result.history.stop_reason) << '\n';
  finish_write(out, summary_path);

  log << "holdout_accuracy=" << format_number(summary.holdout_accuracy)
      << " params=" << summary.params << " best_epoch=" << result.history.best_epoch
      << " seconds=" << format_number(summary.seconds) << '\n';
  return summary;
}

EvalSummary cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.checkpoint.empty()) throw ConfigError("config key 'checkpoint': no checkpoint given");
  echo_config(cfg);
  const Model model = load_checkpoint(cfg.checkpoint);
  const LoadedData data = load_data(cfg);
  const Method method = parse_method(cfg.arch);

  const ImageSet* images = &data.test;
  TrainSplit split;
  if (cfg.split != "test") {
    split = training_split(cfg, data.train);
    images = cfg.split == "holdout" ? &split.holdout : &split.fit;
  }
  if (images->size() == 0) throw std::invalid_argument("eval: the " + cfg.split + " split is empty");
  const Dataset set = make_features(*images, feature_options(method, cfg.experiment()));
  check_feature_width(model, set);

  EvalSummary summary;
  summary.items = set.size();
  summary.params = param_count(model);
  const auto predicted = predictions(model, set);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == set.labels[i];
  summary.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());

  summary.confusion_path = cfg.out / "confusion.csv";
  confusion_matrix(predicted, set.labels, std::max(set.classes, model.classes))
      .write_csv(summary.confusion_path);
  const fs::path eval_path = cfg.out / "eval.csv";
  auto out = open_for_write(eval_path);
  out << "split,items,accuracy,params\n"
      << cfg.split << ',' << summary.items << ',' << format_number(summary.accuracy) << ','
      << summary.params << '\n';
  finish_write(out, eval_path);

  log << "accuracy=" << format_number(summary.accuracy) << " items=" << summary.items
      << " params=" << summary.params << " confusion=" << summary.confusion_path.string() << '\n';
  return summary;
}

GradCheckSummary cmd_gradcheck(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  echo_config(cfg);
  constexpr std::size_t kInput = 8, kEncode = 4, kHidden = 3, kClasses = 3;
  ArchitectureConfig arch;
  arch.encode_width = kEncode;
  arch.hidden_width = kHidden;
  arch.classes = kClasses;
  Model model = build_projectron(kInput, arch, cfg.seed);

  std::mt19937_64 rng(cfg.seed);
  // Move the kernel widths off their initial value so every gamma is probed
  // at a distinct point.
  std::uniform_real_distribution<double> gamma(0.5, 2.0);
  for (auto& layer : model.layers) {
    if (auto* rbf = std::get_if<RbfPairLayer>(&layer)) {
      for (auto& g : rbf->gammas) g = gamma(rng);
    }
  }
  const Vector x = kink_free_input(model, rng, 1e-3);
  const std::size_t label = cfg.seed % kClasses;
  GradCheckOptions options;
  options.seed = cfg.seed;

  GradCheckSummary summary;
  summary.max_relative_error = grad_check(model, x, label, 1e-5, options);
  summary.passed = summary.max_relative_error < cfg.threshold;

  const fs::path path = cfg.out / "gradcheck.csv";
  auto out = open_for_write(path);
  out << "seed,params,max_relative_error,threshold,passed\n"
      << cfg.seed << ',' << param_count(model) << ',' << format_number(summary.max_relative_error)
      << ',' << format_number(cfg.threshold) << ',' << (summary.passed ? "true" : "false") << '\n';
  finish_write(out, path);

  log << "max_relative_error=" << format_number(summary.max_relative_error)
      << " threshold=" << format_number(cfg.threshold) << ' '
      << (summary.passed ? "PASS" : "FAIL") << '\n';
  return summary;
}

ComparisonReport cmd_compare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  echo_config(cfg);
  const LoadedData data = load_data(cfg);
  log << "comparing on " << data.train.size() << " training and " << data.test.size()
      << " test images\n";
  ComparisonReport report = compare_experiment(data.train, data.test, cfg.experiment());

  for (const ArmResult& row : report.rows) {
    const fs::path dir = cfg.out / method_id(row.method);
    save_checkpoint(row.trained.model, dir / "model.ckpt");
    write_history_csv(row.trained.history, dir / "history.csv");
    log << "  " << method_label(row.method) << ": " << format_number(row.seconds) << " s\n";
  }
  write_report_csv(report, cfg.out / "report.csv");
  const fs::path table_path = cfg.out / "report.txt";
  auto table = open_for_write(table_path);
  write_report_table(report, table);
  finish_write(table, table_path);
  write_report_table(report, log);
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radon-projection image classification toolkit", "projectron"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::vector<std::string> sets;
    std::string dataset, out, arch, checkpoint, split;
    double angles_delta = 0, threshold = 0;
    std::size_t target_side = 0, encode_width = 0, hidden_width = 0;
    std::uint64_t seed = 0;
  } flags;
  std::vector<CLI::Option*> given;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON configuration file");
    sub->add_option("--set", flags.sets, "Override any config key: key=value (value as JSON)");
    given.push_back(sub->add_option("--dataset", flags.dataset, "MNIST directory or manifest directory"));
    given.push_back(sub->add_option("--angles-delta", flags.angles_delta, "Angle step in degrees"));
    given.push_back(sub->add_option("--target-side", flags.target_side, "Side of the square input images"));
    given.push_back(sub->add_option("--encode-width", flags.encode_width, "Encoding layer width (even)"));
    given.push_back(sub->add_option("--hidden-width", flags.hidden_width, "Classifier hidden width"));
    given.push_back(sub->add_option("--seed", flags.seed, "Seed for initialisation, splits and shuffling"));
    given.push_back(sub->add_option("--out", flags.out, "Output directory"));
    given.push_back(sub->add_option("--arch", flags.arch, "projectron, mlp-raw, mlp-radon or mlp-deep"));
  };

  CLI::App* extract = app.add_subcommand("extract", "Write sinograms and feature vectors");
  CLI::App* train_cmd = app.add_subcommand("train", "Train one architecture with early stopping");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  CLI::App* compare = app.add_subcommand("compare", "Train and compare all architectures");
  for (CLI::App* sub : {extract, train_cmd, eval, gradcheck, compare}) common(sub);
  CLI::Option* checkpoint_opt = eval->add_option("--checkpoint", flags.checkpoint, "Checkpoint file");
  CLI::Option* split_opt = eval->add_option("--split", flags.split, "test, holdout or train");
  CLI::Option* threshold_opt =
      gradcheck->add_option("--threshold", flags.threshold, "Maximum accepted relative error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!flags.config.empty()) cfg = load_config_file(flags.config, cfg);
    if (!flags.sets.empty()) {
      json overrides = json::object();
      for (const std::string& s : flags.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
        try {
          overrides[key] = json::parse(value);
        } catch (const json::parse_error&) {
          overrides[key] = value;
        }
      }
      cfg = apply_config_json(cfg, overrides.dump());
    }
    for (CLI::Option* opt : given) {
      if (opt->count() == 0) continue;
      const std::string name = opt->get_name();
      if (name == "--dataset") cfg.dataset = flags.dataset;
      else if (name == "--angles-delta") cfg.angles_delta = flags.angles_delta;
      else if (name == "--target-side") cfg.target_side = flags.target_side;
      else if (name == "--encode-width") cfg.encode_width = flags.encode_width;
      else if (name == "--hidden-width") cfg.hidden_width = flags.hidden_width;
      else if (name == "--seed") cfg.seed = flags.seed;
      else if (name == "--out") cfg.out = flags.out;
      else if (name == "--arch") cfg.arch = flags.arch;
    }
    if (checkpoint_opt->count()) cfg.checkpoint = flags.checkpoint;
    if (split_opt->count()) cfg.split = flags.split;
    if (threshold_opt->count()) cfg.threshold = flags.threshold;

    if (extract->parsed()) cmd_extract(cfg, out);
    else if (train_cmd->parsed()) cmd_train(cfg, out);
    else if (eval->parsed()) cmd_eval(cfg, out);
    else if (compare->parsed()) cmd_compare(cfg, out);
    else if (gradcheck->parsed() && !cmd_gradcheck(cfg, out).passed) return kExitFailure;
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace projectron::cli
