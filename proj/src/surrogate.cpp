#include "dean/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dean/error.hpp"
#include "dean/random.hpp"

namespace dean::surrogate {

namespace {
constexpr double kTarget[] = {1.0};
}

std::vector<double> target_value(const SurrogateTarget& target, std::span<const double> input,
                                 std::size_t output_width) {
  if (std::holds_alternative<ConstantOne>(target)) return std::vector<double>(output_width, 1.0);
  if (const auto* c = std::get_if<ConstantVector>(&target)) return c->c;
  return {input.begin(), input.end()};
}

double surrogate_score(std::span<const double> f_output, const SurrogateTarget& target,
                       std::span<const double> input) {
  const auto g = target_value(target, input, f_output.size());
  if (g.size() != f_output.size()) {
    throw DataError("surrogate output has " + std::to_string(f_output.size()) +
                    " entries, target has " + std::to_string(g.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = f_output[i] - g[i];
    sq += d * d;
  }
  return g.size() == 1 ? std::abs(f_output[0] - g[0]) : std::sqrt(sq);
}

void FeatureMask::validate() const {
  if (indices.empty()) throw DataError("feature mask is empty");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= source_dim) throw DataError("feature mask index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw DataError("feature mask indices must be sorted and distinct");
    }
  }
}

FeatureMask sample_feature_bag(std::size_t source_dim, std::size_t bag_size, std::uint64_t seed) {
  if (source_dim == 0) throw UsageError("source dimension must be positive");
  if (bag_size == 0) throw UsageError("bag size must be positive");
  FeatureMask mask;
  mask.source_dim = source_dim;
  mask.indices.resize(source_dim);
  std::iota(mask.indices.begin(), mask.indices.end(), 0);
  if (source_dim <= bag_size) return mask;

  // Partial Fisher-Yates: the first bag_size slots become the sample.
  Rng rng(seed);
  for (std::size_t i = 0; i < bag_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, source_dim - 1);
    std::swap(mask.indices[i], mask.indices[pick(rng)]);
  }
  mask.indices.resize(bag_size);
  std::sort(mask.indices.begin(), mask.indices.end());
  return mask;
}

void Submodel::validate() const {
  mask.validate();
  net.validate();
  if (net.input_width() != mask.size()) {
    throw DataError("submodel network input width does not match its feature mask");
  }
  if (net.output_width() != 1) throw DataError("submodel network must have a scalar output");
  if (!std::isfinite(q)) throw DataError("submodel center is not finite");
}

nn::Mlp make_dean_network(std::size_t input_width, std::span<const std::size_t> hidden,
                          std::uint64_t seed) {
  std::vector<std::size_t> sizes{input_width};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  std::vector<nn::Activation> acts(hidden.size(), nn::Activation::relu);
  acts.push_back(nn::Activation::selu);
  return nn::init_mlp(sizes, nn::BiasPolicy::all_but_last, acts, seed);
}

Submodel fit_submodel(nn::Mlp net, FeatureMask mask, const Matrix& train,
                      const nn::TrainConfig& config, std::uint64_t seed,
                      const nn::OutputPenalty* penalty) {
  if (train.rows() == 0) throw DataError("empty training data");
  mask.validate();
  if (mask.source_dim != train.cols()) {
    throw DataError("feature mask expects " + std::to_string(mask.source_dim) +
                    " columns, data has " + std::to_string(train.cols()));
  }
  const Matrix masked = train.select_cols(mask.indices);
  auto trained = nn::train(std::move(net), masked, kTarget, config, penalty);

  Submodel sub{std::move(trained.net), std::move(mask), 0.0, seed};
  const Matrix out = nn::forward(sub.net, masked);
  const auto& v = out.values();
  double sum = 0.0;
  for (double y : v) sum += y;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  sub.q = std::clamp(sum / static_cast<double>(v.size()), *lo, *hi);
  if (!std::isfinite(sub.q)) throw NumericError("submodel center is not finite");
  return sub;
}

Submodel train_submodel(const Matrix& train, std::size_t bag_size,
                        std::span<const std::size_t> hidden, const nn::TrainConfig& config,
                        std::uint64_t seed, const nn::OutputPenalty* penalty) {
  if (train.rows() == 0) throw DataError("empty training data");
  FeatureMask mask = sample_feature_bag(train.cols(), bag_size, seed);
  nn::Mlp net = make_dean_network(mask.size(), hidden, derive_seed(seed, 1));
  nn::TrainConfig cfg = config;
  cfg.seed = derive_seed(seed, 2);
  return fit_submodel(std::move(net), std::move(mask), train, cfg, seed, penalty);
}

std::vector<double> submodel_outputs(const Submodel& sub, const Matrix& rows) {
  if (rows.cols() != sub.mask.source_dim) {
    throw DataError("row has " + std::to_string(rows.cols()) + " features, submodel expects " +
                    std::to_string(sub.mask.source_dim));
  }
  return nn::forward(sub.net, rows.select_cols(sub.mask.indices)).values();
}

std::vector<double> submodel_scores(const Submodel& sub, const Matrix& rows) {
  auto out = submodel_outputs(sub, rows);
  for (auto& y : out) y = std::abs(y - sub.q);
  return out;
}

double submodel_score(const Submodel& sub, std::span<const double> x) {
  const Matrix row(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return submodel_scores(sub, row)[0];
}

}  // namespace dean::surrogate
