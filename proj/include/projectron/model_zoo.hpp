#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "projectron/network.hpp"

namespace projectron {

struct ArchitectureConfig {
  std::size_t encode_width = 1024;
  std::size_t hidden_width = 512;
  /// Baseline MLP hidden widths; empty means one layer of half the input.
  std::vector<std::size_t> mlp_hidden_widths;
  std::size_t classes = 10;

  void validate() const;
};

/// Dense(in->E)+ReLU, RbfPair(E->E/2), Dense(E/2->H)+ReLU, Dense(H->classes).
/// Glorot-uniform weights from seed, zero biases, gammas 1.
Model build_projectron(std::size_t input_width, const ArchitectureConfig& cfg,
                       std::uint64_t seed);

/// Dense+ReLU through hidden_widths, then Dense(classes).
Model build_mlp(std::size_t input_width, const std::vector<std::size_t>& hidden_widths,
                std::size_t classes, std::uint64_t seed);

/// depth successive floor-halvings of input_width: 480, 7 -> 240 ... 3.
std::vector<std::size_t> halving_chain(std::size_t input_width, std::size_t depth);

Vector forward(const Model& model, const Vector& x);

/// Argmax of forward; ties go to the lowest index.
std::size_t predict(const Model& model, const Vector& x);
std::vector<std::size_t> predict_batch(const Model& model, const Matrix& inputs);

std::size_t argmax(const Vector& v);

std::size_t param_count(const Model& model);

/// Layer table with widths and parameter counts.
std::string summary(const Model& model);

std::string to_string(ModelKind kind);

}  // namespace projectron
