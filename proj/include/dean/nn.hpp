#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dean/matrix.hpp"

namespace dean::nn {

enum class Activation { relu, selu, identity };

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

double activate(Activation a, double z);
double activation_derivative(Activation a, double z);
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

enum class BiasPolicy { all, none, all_but_last };
enum class LossKind { squared, absolute };

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind loss);

// Dense layer computing activation(W x + b); W is out x in.
struct Layer {
  Matrix weights;
  std::optional<std::vector<double>> bias;
  Activation activation = Activation::identity;

  std::size_t in() const { return weights.cols(); }
  std::size_t out() const { return weights.rows(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct Mlp {
  std::vector<Layer> layers;

  std::size_t input_width() const { return layers.front().in(); }
  std::size_t output_width() const { return layers.back().out(); }
  std::size_t parameter_count() const;

  // Parameters in canonical order: per layer, weights row-major then bias.
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;

  // Throws DataError on incompatible shapes or non-finite parameters.
  void validate() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Per-parameter gradients; `bias[k]` is empty when layer k has no bias.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Mlp& mlp);
  std::vector<double> flatten() const;
};

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;

  static AdamState for_model(const Mlp& mlp);
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t patience = 10;
  double learning_rate = 0.0001;
  std::size_t batch_size = 512;
  LossKind loss = LossKind::squared;
  std::uint64_t seed = 0;

  void validate() const;
};

// Extra loss term on network outputs. Receives the batch outputs (n x k,
// row-major) and the dataset row index of every batch row; returns the
// penalty and adds d(penalty)/d(output) into `d_outputs`. Must be safe to call
// concurrently.
using OutputPenalty = std::function<double(std::span<const double> outputs,
                                           std::span<const std::size_t> rows,
                                           std::span<double> d_outputs)>;

// Glorot-uniform weights from a generator seeded by `seed`; zero biases.
Mlp init_mlp(std::span<const std::size_t> layer_sizes, BiasPolicy bias_policy,
             std::span<const Activation> activations, std::uint64_t seed);

Matrix forward(const Mlp& mlp, const Matrix& batch);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

// Mean loss against a constant target vector (length = output width), plus
// reverse-mode gradients. `rows` are the dataset indices handed to `penalty`.
LossAndGradients loss_and_gradients(const Mlp& mlp, const Matrix& batch,
                                    std::span<const double> target, LossKind loss,
                                    const OutputPenalty* penalty = nullptr,
                                    std::span<const std::size_t> rows = {});

// Same with one target row per sample (targets is n x output width).
LossAndGradients loss_and_gradients(const Mlp& mlp, const Matrix& batch, const Matrix& targets,
                                    LossKind loss);

// Loss only (forward pass).
double evaluate_loss(const Mlp& mlp, const Matrix& batch, std::span<const double> target,
                     LossKind loss, const OutputPenalty* penalty = nullptr,
                     std::span<const std::size_t> rows = {});

// Bias-corrected Adam update in place.
void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state, double learning_rate);

struct TrainResult {
  Mlp net;                       // snapshot with the lowest recorded loss
  std::vector<double> history;   // full-train loss after each epoch
  std::size_t best_epoch = 0;
};

TrainResult train(Mlp mlp, const Matrix& train_data, std::span<const double> target,
                  const TrainConfig& config, const OutputPenalty* penalty = nullptr);

// Supervised variant: fits per-row targets (n x output width).
TrainResult train_regression(Mlp mlp, const Matrix& inputs, const Matrix& targets,
                             const TrainConfig& config);

// Central finite differences (L(p + eps) - L(p - eps)) / (2 eps) for every
// parameter under squared loss. `crosses_kink[i]` is set when the perturbed
// forward passes switch the side of any relu/selu pre-activation.
struct NumericGradient {
  std::vector<double> values;
  std::vector<bool> crosses_kink;
};

NumericGradient numeric_gradients(const Mlp& mlp, const Matrix& batch,
                                  std::span<const double> target, double eps);

// max |a - n| / max(|a|, |n|, 1e-12) over entries where `use` is true (all
// entries when `use` is empty).
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          const std::vector<bool>& use = {});

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_at_kinks = 0;
};

// Compares analytic and numeric gradients. Parameters whose stencil crosses an
// activation kink are not differentiable within eps and are skipped.
GradCheckResult grad_check(const Mlp& mlp, const Matrix& batch, std::span<const double> target,
                           double eps);

// Serial dense kernel: out = activation(in * W^T + b). Each output element
// is accumulated in a fixed order (bias first, then inputs by index), so a row
// gets the same bits whether it is evaluated alone or inside a batch.
void dense_forward(const Layer& layer, const Matrix& in, Matrix& pre_activation, Matrix& out);

}  // namespace dean::nn
