#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dean/matrix.hpp"
#include "dean/nn.hpp"

namespace dean::surrogate {

// Target pattern g of a surrogate model. A detector learns f ~ g on normal
// data and scores a sample by ||f(x) - g(x)||.
struct ConstantOne {};
struct ConstantVector {
  std::vector<double> c;
};
struct Identity {};
using SurrogateTarget = std::variant<ConstantOne, ConstantVector, Identity>;

// g(input) for the given target.
std::vector<double> target_value(const SurrogateTarget& target, std::span<const double> input,
                                 std::size_t output_width);

// Euclidean norm ||f_output - g(input)||.
double surrogate_score(std::span<const double> f_output, const SurrogateTarget& target,
                       std::span<const double> input);

struct FeatureMask {
  std::vector<std::size_t> indices;  // sorted, distinct, each < source_dim
  std::size_t source_dim = 0;

  std::size_t size() const { return indices.size(); }
  void validate() const;
  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

// All features when source_dim <= bag_size, otherwise bag_size indices drawn
// uniformly without replacement.
FeatureMask sample_feature_bag(std::size_t source_dim, std::size_t bag_size, std::uint64_t seed);

struct Submodel {
  nn::Mlp net;
  FeatureMask mask;
  double q = 0.0;  // mean net output over the training rows
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const Submodel&, const Submodel&) = default;
};

// Hidden layers use relu with bias; the scalar output layer uses selu and has
// no bias.
nn::Mlp make_dean_network(std::size_t input_width, std::span<const std::size_t> hidden,
                          std::uint64_t seed);

// Trains `net` (already sized for `mask`) towards the constant 1 on the masked
// columns of `train`, then sets q from the returned weights.
Submodel fit_submodel(nn::Mlp net, FeatureMask mask, const Matrix& train,
                      const nn::TrainConfig& config, std::uint64_t seed,
                      const nn::OutputPenalty* penalty = nullptr);

// Samples the mask with `seed`, initialises a DEAN network and fits it.
// `train` is expected to be standardized.
Submodel train_submodel(const Matrix& train, std::size_t bag_size,
                        std::span<const std::size_t> hidden, const nn::TrainConfig& config,
                        std::uint64_t seed, const nn::OutputPenalty* penalty = nullptr);

// Raw net outputs on the masked columns of full-width rows.
std::vector<double> submodel_outputs(const Submodel& sub, const Matrix& rows);

// |net(x restricted to mask) - q| for a single standardized full-width row.
double submodel_score(const Submodel& sub, std::span<const double> x);

// Batched variant of submodel_score.
std::vector<double> submodel_scores(const Submodel& sub, const Matrix& rows);

}  // namespace dean::surrogate
