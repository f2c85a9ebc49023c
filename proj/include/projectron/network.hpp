#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace projectron {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation : std::uint32_t { none = 0, relu = 1 };

/// Affine layer W x + b followed by an optional ReLU.
struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::none;

  std::size_t in_width() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_width() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Gaussian kernel over disjoint pairs of upstream units:
/// out_k = exp(-(gamma_k * |a_{2k} - a_{2k+1}|)^2).
struct RbfPairLayer {
  static constexpr double kGammaMin = 0.0;
  static constexpr double kGammaMax = 10.0;
  static constexpr double kGammaInit = 1.0;

  Vector gammas;  // one per pair

  std::size_t in_width() const { return 2 * static_cast<std::size_t>(gammas.size()); }
  std::size_t out_width() const { return static_cast<std::size_t>(gammas.size()); }
};

/// Upstream indices feeding RBF unit k. Consecutive pairs (0,1), (2,3), ...
struct UnitPair {
  Eigen::Index first;
  Eigen::Index second;
};
inline UnitPair rbf_pair(Eigen::Index k) { return {2 * k, 2 * k + 1}; }

using Layer = std::variant<DenseLayer, RbfPairLayer>;

enum class ModelKind : std::uint32_t { projectron = 0, mlp = 1 };

/// Ordered layer chain. The last layer is a linear dense layer producing the
/// class logits; softmax is applied on top of it.
struct Model {
  ModelKind kind = ModelKind::mlp;
  std::size_t input_width = 0;
  std::size_t classes = 0;
  std::vector<Layer> layers;

  /// Throws std::invalid_argument if widths do not chain.
  void validate() const;
};

/// Per-parameter-tensor gradients in declaration order: dense weights, dense
/// biases, RBF gammas. Vectors are stored as single-column matrices.
struct Gradients {
  std::vector<Matrix> tensors;
};

struct LossAndGradients {
  double loss = 0.0;
  /// Batch items whose argmax matched the label.
  std::size_t correct = 0;
  Gradients grads;
};

/// Mutable views over every parameter tensor, in declaration order.
std::vector<std::span<double>> parameter_tensors(Model& model);
std::vector<std::span<const double>> parameter_tensors(const Model& model);

/// Zero gradients shaped like the model's parameters.
Gradients zero_gradients(const Model& model);

Vector dense_forward(const DenseLayer& layer, const Vector& x);
Vector relu(const Vector& x);
Vector rbf_pair_forward(const RbfPairLayer& layer, const Vector& a);
/// Max-shifted, so large logits do not overflow.
Vector softmax(const Vector& logits);

inline constexpr double kProbabilityFloor = 1e-12;
/// -ln(max(p[label], 1e-12)).
double cross_entropy(const Vector& p, std::size_t label);

/// Logits for a batch of column vectors (input_width x batch).
Matrix logits_batch(const Model& model, const Matrix& inputs);
/// Column-wise softmax of logits_batch.
Matrix probabilities_batch(const Model& model, const Matrix& inputs);

/// Mean cross-entropy over the batch and its gradient with respect to every
/// parameter. ReLU'(0) is taken as 0.
LossAndGradients backward_batch(const Model& model, const Matrix& inputs,
                                std::span<const std::size_t> labels);
LossAndGradients backward(const Model& model, const Vector& x, std::size_t label);

/// Loss only; cheaper than backward_batch.
double batch_loss(const Model& model, const Matrix& inputs,
                  std::span<const std::size_t> labels);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;

  static AdamState for_model(const Model& model, AdamHyper hyper = {});
};

/// One bias-corrected Adam update in place, then every gamma is clamped
/// into [0, 10].
void adam_step(Model& model, const Gradients& grads, AdamState& state);

void clamp_gammas(Model& model);

/// Computes analytic gradients for grad_check. Defaults to backward().
using GradientFn =
    std::function<LossAndGradients(const Model&, const Vector&, std::size_t)>;

struct GradCheckOptions {
  /// Denominator floor: error = |a - n| / max(|a|, |n|, floor).
  double scale_floor = 1e-3;
  /// Models larger than this are checked on a seeded random subsample.
  std::size_t max_full_params = 10000;
  std::size_t subsample = 2000;
  std::uint64_t seed = 0;
};

/// Largest relative error between analytic gradients and central differences
/// with step h, over all parameters (or a subsample on large models).
double grad_check(const Model& model, const Vector& x, std::size_t label,
                  double h, const GradCheckOptions& options = {},
                  const GradientFn& gradient_fn = {});

}  // namespace projectron
