#include "dean/ensemble.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>

#include "dean/error.hpp"
#include "dean/random.hpp"

namespace dean::ensemble {

namespace {
constexpr std::size_t kRowBlock = 256;
}

void EnsembleConfig::validate() const {
  if (n_submodels < 1) throw UsageError("ensemble needs at least one submodel");
  if (power < 1) throw UsageError("power must be >= 1");
  if (bag_size < 1) throw UsageError("bag size must be >= 1");
  if (std::find(hidden.begin(), hidden.end(), 0) != hidden.end()) {
    throw UsageError("hidden widths must be positive");
  }
  train.validate();
}

void Ensemble::validate() const {
  if (submodels.empty()) throw DataError("ensemble has no submodels");
  if (power < 1) throw DataError("ensemble power must be >= 1");
  if (weights.size() != submodels.size()) {
    throw DataError("ensemble weight count does not match submodel count");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw DataError("ensemble weights must be finite and >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw DataError("ensemble weights must have a positive sum");
  if (scaler.mean.size() != scaler.std.size() || scaler.mean.empty()) {
    throw DataError("ensemble scaler is malformed");
  }
  for (std::size_t j = 0; j < scaler.mean.size(); ++j) {
    if (!std::isfinite(scaler.mean[j]) || !std::isfinite(scaler.std[j]) ||
        scaler.std[j] < data::ScalerParams::kStdFloor) {
      throw DataError("ensemble scaler has invalid entries");
    }
  }
  for (const auto& s : submodels) {
    s.validate();
    if (s.mask.source_dim != source_dim()) {
      throw DataError("submodels disagree on the source dimension");
    }
  }
}

std::uint64_t submodel_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, index);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return static_cast<std::size_t>(std::max(1, omp_get_max_threads()));
}

std::vector<surrogate::Submodel> train_submodels_serial(const Matrix& standardized,
                                                        const EnsembleConfig& config,
                                                        const nn::OutputPenalty* penalty) {
  std::vector<surrogate::Submodel> out;
  out.reserve(config.n_submodels);
  for (std::size_t i = 0; i < config.n_submodels; ++i) {
    out.push_back(surrogate::train_submodel(standardized, config.bag_size, config.hidden,
                                            config.train,
                                            submodel_seed(config.master_seed, i), penalty));
  }
  return out;
}

std::vector<surrogate::Submodel> train_submodels(const Matrix& standardized,
                                                 const EnsembleConfig& config,
                                                 const nn::OutputPenalty* penalty,
                                                 std::size_t threads) {
  threads = resolve_threads(threads);
  if (threads == 1) return train_submodels_serial(standardized, config, penalty);

  const auto n = static_cast<std::int64_t>(config.n_submodels);
  std::vector<std::optional<surrogate::Submodel>> slots(config.n_submodels);
  std::vector<std::exception_ptr> errors(config.n_submodels);
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(threads))
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      slots[idx] = surrogate::train_submodel(standardized, config.bag_size, config.hidden,
                                             config.train,
                                             submodel_seed(config.master_seed, idx), penalty);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<surrogate::Submodel> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Ensemble train_ensemble(const data::LabeledDataset& train, const EnsembleConfig& config,
                        const PenaltyFactory& penalty) {
  config.validate();
  train.validate();
  data::LabeledDataset effective;
  if (train.labels) {
    std::vector<std::size_t> normal_rows;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      if ((*train.labels)[i] == 0) normal_rows.push_back(i);
    }
    effective = train.select_rows(normal_rows);
  } else {
    effective = train;
  }
  if (effective.rows() == 0) throw DataError("no normal rows to train on");

  Ensemble e;
  e.scaler = data::fit_standardizer(effective.data);
  const Matrix standardized = data::apply_standardizer(e.scaler, effective.data).values;
  std::optional<nn::OutputPenalty> extra;
  if (penalty) extra = penalty(effective);
  e.submodels = train_submodels(standardized, config, extra ? &*extra : nullptr, config.threads);
  e.power = config.power;
  e.weights.assign(e.submodels.size(), 1.0);
  e.config = config;
  e.config.threads = 0;
  return e;
}

Matrix base_scores_serial(std::span<const surrogate::Submodel> submodels,
                          const Matrix& standardized) {
  Matrix out(standardized.rows(), submodels.size());
  for (std::size_t j = 0; j < submodels.size(); ++j) {
    const auto s = surrogate::submodel_scores(submodels[j], standardized);
    for (std::size_t r = 0; r < s.size(); ++r) out(r, j) = s[r];
  }
  return out;
}

Matrix base_scores(std::span<const surrogate::Submodel> submodels, const Matrix& standardized,
                   std::size_t threads) {
  threads = resolve_threads(threads);
  const std::size_t n = standardized.rows();
  if (threads == 1 || n <= kRowBlock) return base_scores_serial(submodels, standardized);

  for (const auto& s : submodels) {
    if (s.mask.source_dim != standardized.cols()) {
      throw DataError("data has " + std::to_string(standardized.cols()) +
                      " columns, ensemble expects " + std::to_string(s.mask.source_dim));
    }
  }
  Matrix out(n, submodels.size());
  const auto n_blocks = static_cast<std::int64_t>((n + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(threads))
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    const std::size_t r0 = static_cast<std::size_t>(b) * kRowBlock;
    const std::size_t r1 = std::min(n, r0 + kRowBlock);
    std::vector<std::size_t> rows(r1 - r0);
    std::iota(rows.begin(), rows.end(), r0);
    const Matrix chunk = standardized.select_rows(rows);
    for (std::size_t j = 0; j < submodels.size(); ++j) {
      const auto s = surrogate::submodel_scores(submodels[j], chunk);
      for (std::size_t r = 0; r < s.size(); ++r) out(r0 + r, j) = s[r];
    }
  }
  return out;
}

double ipow(double x, unsigned power) {
  double result = 1.0;
  for (unsigned i = 0; i < power; ++i) result *= x;
  return result;
}

std::vector<double> aggregate(const Matrix& base, unsigned power, std::span<const double> weights,
                              const std::vector<bool>& keep) {
  if (weights.size() != base.cols() || (!keep.empty() && keep.size() != base.cols())) {
    throw DataError("weight count does not match submodel count");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < base.cols(); ++j) {
    if (keep.empty() || keep[j]) total += weights[j];
  }
  if (!(total > 0.0)) throw DataError("selected weights must have a positive sum");
  std::vector<double> out(base.rows());
  for (std::size_t r = 0; r < base.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < base.cols(); ++j) {
      if (keep.empty() || keep[j]) acc += weights[j] * ipow(base(r, j), power);
    }
    out[r] = acc / total;
  }
  return out;
}

Matrix ensemble_base_scores(const Ensemble& e, const data::Dataset& raw, std::size_t threads) {
  const auto standardized = data::apply_standardizer(e.scaler, raw);
  return base_scores(e.submodels, standardized.values, threads);
}

std::vector<double> ensemble_score(const Ensemble& e, const data::Dataset& raw,
                                   std::size_t threads) {
  return aggregate(ensemble_base_scores(e, raw, threads), e.power, e.weights);
}

std::vector<double> ensemble_score_serial(const Ensemble& e, const data::Dataset& raw) {
  const auto standardized = data::apply_standardizer(e.scaler, raw);
  return aggregate(base_scores_serial(e.submodels, standardized.values), e.power, e.weights);
}

Ensemble subset(const Ensemble& e, std::size_t k) {
  if (k < 1 || k > e.size()) {
    throw UsageError("subset size " + std::to_string(k) + " outside [1, " +
                     std::to_string(e.size()) + "]");
  }
  Ensemble out;
  out.submodels.assign(e.submodels.begin(), e.submodels.begin() + static_cast<std::ptrdiff_t>(k));
  out.weights.assign(e.weights.begin(), e.weights.begin() + static_cast<std::ptrdiff_t>(k));
  out.power = e.power;
  out.scaler = e.scaler;
  out.config = e.config;
  out.config.n_submodels = k;
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  if (!(sum > 0.0)) throw DataError("subset weights sum to zero");
  return out;
}

}  // namespace dean::ensemble
