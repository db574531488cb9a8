#pragma once

#include <cstdint>

#include "dean/data.hpp"
#include "dean/ensemble.hpp"
#include "dean/nn.hpp"
#include "dean/random.hpp"
#include "dean/surrogate.hpp"

namespace dean::fixtures {

inline Matrix random_rows(std::size_t r, std::size_t c, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

inline data::Dataset raw(Matrix m) {
  data::Dataset d;
  d.values = std::move(m);
  return d;
}

inline ensemble::EnsembleConfig small_config(std::size_t submodels, std::uint64_t seed) {
  ensemble::EnsembleConfig c;
  c.n_submodels = submodels;
  c.bag_size = 3;
  c.hidden = {8, 8};
  c.train.epochs = 4;
  c.train.batch_size = 32;
  c.train.learning_rate = 1e-3;
  c.master_seed = seed;
  c.threads = 1;
  return c;
}

inline ensemble::Ensemble small_ensemble(std::size_t submodels, std::uint64_t seed,
                                         std::size_t dim = 4) {
  const auto d = data::make_synthetic(data::SyntheticKind::gauss_blob, 150, 0, dim, seed);
  return ensemble::train_ensemble(d, small_config(submodels, seed));
}

// Submodel whose DEAN-shaped network outputs selu(pre) for every input and
// whose center equals that output, so it scores 0 everywhere.
inline surrogate::Submodel constant_submodel(std::size_t source_dim, double pre) {
  surrogate::Submodel s;
  s.mask.source_dim = source_dim;
  for (std::size_t j = 0; j < source_dim; ++j) s.mask.indices.push_back(j);
  nn::Layer hidden;
  hidden.weights = Matrix(2, source_dim, 0.0);
  hidden.bias = std::vector<double>{1.0, 0.0};
  hidden.activation = nn::Activation::relu;
  nn::Layer out;
  out.weights = Matrix(1, 2, {pre, 0.0});
  out.activation = nn::Activation::selu;
  s.net.layers = {hidden, out};
  s.q = nn::activate(nn::Activation::selu, pre);
  return s;
}

}  // namespace dean::fixtures
