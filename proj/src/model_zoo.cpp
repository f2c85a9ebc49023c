#include "projectron/model_zoo.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace projectron {

namespace {

DenseLayer glorot_dense(std::size_t in, std::size_t out, Activation act,
                        std::mt19937_64& rng) {
  DenseLayer layer;
  layer.activation = act;
  layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  layer.biases = Vector::Zero(static_cast<Eigen::Index>(out));
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      layer.weights(r, c) = dist(rng);
    }
  }
  return layer;
}

}  // namespace

void ArchitectureConfig::validate() const {
  if (encode_width < 2 || encode_width % 2 != 0) {
    throw std::invalid_argument("encode width must be even and >= 2, got " +
                                std::to_string(encode_width));
  }
  if (hidden_width < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (classes < 2) throw std::invalid_argument("need at least 2 classes");
}

Model build_projectron(std::size_t input_width, const ArchitectureConfig& cfg,
                       std::uint64_t seed) {
  cfg.validate();
  if (input_width < 1) throw std::invalid_argument("input width must be >= 1");
  std::mt19937_64 rng(seed);
  Model m;
  m.kind = ModelKind::projectron;
  m.input_width = input_width;
  m.classes = cfg.classes;
  const std::size_t pairs = cfg.encode_width / 2;
  m.layers.emplace_back(glorot_dense(input_width, cfg.encode_width, Activation::relu, rng));
  m.layers.emplace_back(RbfPairLayer{
      Vector::Constant(static_cast<Eigen::Index>(pairs), RbfPairLayer::kGammaInit)});
  m.layers.emplace_back(glorot_dense(pairs, cfg.hidden_width, Activation::relu, rng));
  m.layers.emplace_back(glorot_dense(cfg.hidden_width, cfg.classes, Activation::none, rng));
  m.validate();
  return m;
}

Model build_mlp(std::size_t input_width, const std::vector<std::size_t>& hidden_widths,
                std::size_t classes, std::uint64_t seed) {
  if (hidden_widths.empty()) throw std::invalid_argument("MLP needs at least one hidden layer");
  if (input_width < 1) throw std::invalid_argument("input width must be >= 1");
  if (classes < 2) throw std::invalid_argument("need at least 2 classes");
  std::mt19937_64 rng(seed);
  Model m;
  m.kind = ModelKind::mlp;
  m.input_width = input_width;
  m.classes = classes;
  std::size_t width = input_width;
  for (std::size_t h : hidden_widths) {
    if (h < 1) throw std::invalid_argument("hidden width must be >= 1");
    m.layers.emplace_back(glorot_dense(width, h, Activation::relu, rng));
    width = h;
  }
  m.layers.emplace_back(glorot_dense(width, classes, Activation::none, rng));
  m.validate();
  return m;
}

std::vector<std::size_t> halving_chain(std::size_t input_width, std::size_t depth) {
  std::vector<std::size_t> widths;
  std::size_t w = input_width;
  for (std::size_t i = 0; i < depth; ++i) {
    w /= 2;
    if (w < 1) throw std::invalid_argument("halving chain reaches zero width");
    widths.push_back(w);
  }
  return widths;
}

Vector forward(const Model& model, const Vector& x) {
  return probabilities_batch(model, Matrix(x)).col(0);
}

std::size_t argmax(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

std::size_t predict(const Model& model, const Vector& x) {
  return argmax(forward(model, x));
}

std::vector<std::size_t> predict_batch(const Model& model, const Matrix& inputs) {
  // Softmax is monotone, so argmax over logits is the same decision.
  const Matrix logits = logits_batch(model, inputs);
  std::vector<std::size_t> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    out[static_cast<std::size_t>(c)] = argmax(logits.col(c));
  }
  return out;
}

std::size_t param_count(const Model& model) {
  std::size_t n = 0;
  for (const auto& t : parameter_tensors(model)) n += t.size();
  return n;
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::projectron ? "projectron" : "mlp";
}

std::string summary(const Model& model) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-4s %-12s %8s %8s %12s\n", "#", "layer", "in",
                "out", "params");
  out << to_string(model.kind) << " (input " << model.input_width << ", classes "
      << model.classes << ")\n"
      << line;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const char* name = "rbf-pair";
    std::size_t in = 0, outw = 0, params = 0;
    if (const auto* d = std::get_if<DenseLayer>(&model.layers[i])) {
      name = d->activation == Activation::relu ? "dense+relu" : "dense";
      in = d->in_width();
      outw = d->out_width();
      params = in * outw + outw;
    } else {
      const auto& r = std::get<RbfPairLayer>(model.layers[i]);
      in = r.in_width();
      outw = r.out_width();
      params = outw;
    }
    std::snprintf(line, sizeof(line), "%-4zu %-12s %8zu %8zu %12zu\n", i, name, in,
                  outw, params);
    out << line;
  }
  out << "total trainable parameters: " << param_count(model) << '\n';
  return out.str();
}

}  // namespace projectron
