#include "projectron/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace projectron {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::size_t layer_in(const Layer& layer) {
  return std::visit([](const auto& l) { return l.in_width(); }, layer);
}
std::size_t layer_out(const Layer& layer) {
  return std::visit([](const auto& l) { return l.out_width(); }, layer);
}

void check_input(const Model& model, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != model.input_width) {
    throw std::invalid_argument("input width " + std::to_string(rows) +
                                " does not match model input width " +
                                std::to_string(model.input_width));
  }
}

void check_label(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw std::out_of_range("label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
  }
}

void softmax_columns(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    auto col = m.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    col /= col.sum();
  }
}

// Activations retained by the forward pass for the reverse sweep.
struct LayerCache {
  Matrix input;
  Matrix pre;  // dense: pre-activation; rbf: pair differences
  Matrix out;  // rbf: kernel output
};

Matrix forward_cached(const Model& model, const Matrix& inputs,
                      std::vector<LayerCache>* caches) {
  Matrix a = inputs;
  if (caches) caches->resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Matrix next = std::visit(
        Overloaded{
            [&](const DenseLayer& l) {
              Matrix z(l.weights.rows(), a.cols());
              z.noalias() = l.weights * a;
              z.colwise() += l.biases;
              Matrix result =
                  l.activation == Activation::relu ? Matrix(z.cwiseMax(0.0)) : z;
              if (caches) (*caches)[i].pre = std::move(z);
              return result;
            },
            [&](const RbfPairLayer& l) {
              const Eigen::Index k_count = l.gammas.size();
              Matrix diff(k_count, a.cols());
              for (Eigen::Index k = 0; k < k_count; ++k) {
                const auto [p, q] = rbf_pair(k);
                diff.row(k) = a.row(p) - a.row(q);
              }
              Matrix out(k_count, a.cols());
              for (Eigen::Index k = 0; k < k_count; ++k) {
                const double g2 = l.gammas[k] * l.gammas[k];
                out.row(k) = (-g2 * diff.row(k).array().square()).exp();
              }
              if (caches) {
                (*caches)[i].pre = std::move(diff);
                (*caches)[i].out = out;
              }
              return out;
            }},
        model.layers[i]);
    if (caches) (*caches)[i].input = std::move(a);
    a = std::move(next);
  }
  return a;
}

double mean_loss(const Matrix& probs, std::span<const std::size_t> labels) {
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double p = probs(static_cast<Eigen::Index>(labels[b]),
                           static_cast<Eigen::Index>(b));
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

void check_batch(const Model& model, const Matrix& inputs,
                 std::span<const std::size_t> labels) {
  check_input(model, inputs.rows());
  if (static_cast<std::size_t>(inputs.cols()) != labels.size() ||
      labels.empty()) {
    throw std::invalid_argument("batch has " + std::to_string(inputs.cols()) +
                                " inputs but " + std::to_string(labels.size()) +
                                " labels");
  }
  for (std::size_t label : labels) check_label(label, model.classes);
}

}  // namespace

void Model::validate() const {
  if (layers.empty()) throw std::invalid_argument("model has no layers");
  std::size_t width = input_width;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layer_in(layers[i]) != width) {
      throw std::invalid_argument("layer " + std::to_string(i) + " expects width " +
                                  std::to_string(layer_in(layers[i])) +
                                  " but receives " + std::to_string(width));
    }
    if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
      if (static_cast<std::size_t>(d->biases.size()) != d->out_width()) {
        throw std::invalid_argument("layer " + std::to_string(i) +
                                    ": bias length does not match weights");
      }
    }
    width = layer_out(layers[i]);
  }
  const auto* last = std::get_if<DenseLayer>(&layers.back());
  if (!last || last->activation != Activation::none) {
    throw std::invalid_argument("final layer must be a linear dense layer");
  }
  if (width != classes || classes < 2) {
    throw std::invalid_argument("final width " + std::to_string(width) +
                                " does not match class count " +
                                std::to_string(classes));
  }
}

std::vector<std::span<double>> parameter_tensors(Model& model) {
  std::vector<std::span<double>> out;
  for (auto& layer : model.layers) {
    std::visit(Overloaded{[&](DenseLayer& l) {
                            out.emplace_back(l.weights.data(), l.weights.size());
                            out.emplace_back(l.biases.data(), l.biases.size());
                          },
                          [&](RbfPairLayer& l) {
                            out.emplace_back(l.gammas.data(), l.gammas.size());
                          }},
               layer);
  }
  return out;
}

std::vector<std::span<const double>> parameter_tensors(const Model& model) {
  auto mutable_views = parameter_tensors(const_cast<Model&>(model));
  return {mutable_views.begin(), mutable_views.end()};
}

Gradients zero_gradients(const Model& model) {
  Gradients g;
  for (const auto& layer : model.layers) {
    std::visit(Overloaded{[&](const DenseLayer& l) {
                            g.tensors.push_back(Matrix::Zero(l.weights.rows(),
                                                             l.weights.cols()));
                            g.tensors.push_back(Matrix::Zero(l.biases.size(), 1));
                          },
                          [&](const RbfPairLayer& l) {
                            g.tensors.push_back(Matrix::Zero(l.gammas.size(), 1));
                          }},
               layer);
  }
  return g;
}

Vector dense_forward(const DenseLayer& layer, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != layer.in_width()) {
    throw std::invalid_argument("dense_forward: input length " +
                                std::to_string(x.size()) + " != in-width " +
                                std::to_string(layer.in_width()));
  }
  return layer.weights * x + layer.biases;
}

Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

Vector rbf_pair_forward(const RbfPairLayer& layer, const Vector& a) {
  if (a.size() % 2 != 0) {
    throw std::invalid_argument("rbf_pair_forward: odd input length " +
                                std::to_string(a.size()));
  }
  if (static_cast<std::size_t>(a.size()) != layer.in_width()) {
    throw std::invalid_argument("rbf_pair_forward: input length " +
                                std::to_string(a.size()) + " != 2 * pairs " +
                                std::to_string(layer.in_width()));
  }
  Vector out(layer.gammas.size());
  for (Eigen::Index k = 0; k < layer.gammas.size(); ++k) {
    const auto [p, q] = rbf_pair(k);
    const double u = layer.gammas[k] * std::abs(a[p] - a[q]);
    out[k] = std::exp(-u * u);
  }
  return out;
}

Vector softmax(const Vector& logits) {
  Matrix m = logits;
  softmax_columns(m);
  return m.col(0);
}

double cross_entropy(const Vector& p, std::size_t label) {
  check_label(label, static_cast<std::size_t>(p.size()));
  return -std::log(std::max(p[static_cast<Eigen::Index>(label)], kProbabilityFloor));
}

Matrix logits_batch(const Model& model, const Matrix& inputs) {
  check_input(model, inputs.rows());
  return forward_cached(model, inputs, nullptr);
}

Matrix probabilities_batch(const Model& model, const Matrix& inputs) {
  Matrix p = logits_batch(model, inputs);
  softmax_columns(p);
  return p;
}

double batch_loss(const Model& model, const Matrix& inputs,
                  std::span<const std::size_t> labels) {
  check_batch(model, inputs, labels);
  return mean_loss(probabilities_batch(model, inputs), labels);
}

LossAndGradients backward_batch(const Model& model, const Matrix& inputs,
                                std::span<const std::size_t> labels) {
  check_batch(model, inputs, labels);
  std::vector<LayerCache> caches;
  Matrix delta = forward_cached(model, inputs, &caches);
  softmax_columns(delta);

  LossAndGradients result;
  result.loss = mean_loss(delta, labels);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    Eigen::Index best = 0;
    delta.col(static_cast<Eigen::Index>(b)).maxCoeff(&best);
    if (static_cast<std::size_t>(best) == labels[b]) ++result.correct;
  }

  // d(mean CE)/d(logits) = (p - onehot) / batch
  const double inv_batch = 1.0 / static_cast<double>(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    delta(static_cast<Eigen::Index>(labels[b]), static_cast<Eigen::Index>(b)) -= 1.0;
  }
  delta *= inv_batch;

  std::vector<std::vector<Matrix>> per_layer(model.layers.size());
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const LayerCache& cache = caches[i];
    const bool need_input_grad = i > 0;
    std::visit(
        Overloaded{
            [&](const DenseLayer& l) {
              if (l.activation == Activation::relu) {
                delta = (cache.pre.array() > 0.0).select(delta, 0.0);
              }
              Matrix dw(l.weights.rows(), l.weights.cols());
              dw.noalias() = delta * cache.input.transpose();
              Matrix db = delta.rowwise().sum();
              per_layer[i] = {std::move(dw), std::move(db)};
              if (need_input_grad) {
                Matrix upstream(l.weights.cols(), delta.cols());
                upstream.noalias() = l.weights.transpose() * delta;
                delta = std::move(upstream);
              }
            },
            [&](const RbfPairLayer& l) {
              const Eigen::Index k_count = l.gammas.size();
              Matrix dgamma(k_count, 1);
              Matrix upstream = Matrix::Zero(2 * k_count, delta.cols());
              for (Eigen::Index k = 0; k < k_count; ++k) {
                const double g = l.gammas[k];
                const auto d = cache.pre.row(k).array();
                const auto weighted = delta.row(k).array() * cache.out.row(k).array();
                // out = exp(-g^2 d^2): d out/d g = -2 g d^2 out, d out/d d = -2 g^2 d out
                dgamma(k, 0) = (-2.0 * g * (weighted * d.square())).sum();
                if (need_input_grad) {
                  const auto [p, q] = rbf_pair(k);
                  upstream.row(p) = -2.0 * g * g * (weighted * d);
                  upstream.row(q) = -upstream.row(p);
                }
              }
              per_layer[i] = {std::move(dgamma)};
              delta = std::move(upstream);
            }},
        model.layers[i]);
  }
  for (auto& tensors : per_layer) {
    for (auto& t : tensors) result.grads.tensors.push_back(std::move(t));
  }
  return result;
}

LossAndGradients backward(const Model& model, const Vector& x, std::size_t label) {
  const std::size_t labels[1] = {label};
  return backward_batch(model, Matrix(x), labels);
}

AdamState AdamState::for_model(const Model& model, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const auto& t : parameter_tensors(model)) {
    state.first_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(t.size())));
    state.second_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(t.size())));
  }
  return state;
}

void clamp_gammas(Model& model) {
  for (auto& layer : model.layers) {
    if (auto* rbf = std::get_if<RbfPairLayer>(&layer)) {
      rbf->gammas = rbf->gammas.cwiseMax(RbfPairLayer::kGammaMin)
                        .cwiseMin(RbfPairLayer::kGammaMax);
    }
  }
}

void adam_step(Model& model, const Gradients& grads, AdamState& state) {
  auto params = parameter_tensors(model);
  if (grads.tensors.size() != params.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: tensor count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(params[i].size());
    if (grads.tensors[i].size() != n || state.first_moment[i].size() != n ||
        state.second_moment[i].size() != n) {
      throw std::invalid_argument("adam_step: shape mismatch in tensor " +
                                  std::to_string(i));
    }
  }

  ++state.step;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(h.beta1, t);
  const double correct2 = 1.0 - std::pow(h.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Vector> p(params[i].data(), static_cast<Eigen::Index>(params[i].size()));
    Eigen::Map<const Vector> g(grads.tensors[i].data(), grads.tensors[i].size());
    Vector& m = state.first_moment[i];
    Vector& v = state.second_moment[i];
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
    p.array() -= h.learning_rate * (m.array() / correct1) /
                 ((v.array() / correct2).sqrt() + h.epsilon);
  }
  clamp_gammas(model);
}

double grad_check(const Model& model, const Vector& x, std::size_t label,
                  double h, const GradCheckOptions& options,
                  const GradientFn& gradient_fn) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be > 0");
  const LossAndGradients analytic =
      gradient_fn ? gradient_fn(model, x, label) : backward(model, x, label);

  Model probe = model;
  auto params = parameter_tensors(probe);
  const std::size_t labels[1] = {label};
  const Matrix input = x;

  // (tensor, index) pairs to test.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t j = 0; j < params[t].size(); ++j) coords.emplace_back(t, j);
  }
  if (coords.size() > options.max_full_params) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.subsample);
  }

  double worst = 0.0;
  for (const auto& [t, j] : coords) {
    double& w = params[t][j];
    const double saved = w;
    w = saved + h;
    const double plus = batch_loss(probe, input, labels);
    w = saved - h;
    const double minus = batch_loss(probe, input, labels);
    w = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double exact = analytic.grads.tensors[t].data()[j];
    const double scale =
        std::max({std::abs(exact), std::abs(numeric), options.scale_floor});
    worst = std::max(worst, std::abs(exact - numeric) / scale);
  }
  return worst;
}

}  // namespace projectron
