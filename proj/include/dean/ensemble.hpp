#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dean/data.hpp"
#include "dean/matrix.hpp"
#include "dean/nn.hpp"
#include "dean/surrogate.hpp"

namespace dean::ensemble {

struct EnsembleConfig {
  std::size_t n_submodels = 100;
  std::size_t bag_size = 200;
  std::vector<std::size_t> hidden{255, 255, 255};
  unsigned power = 9;
  nn::TrainConfig train;
  std::uint64_t master_seed = 0;
  std::size_t threads = 0;  // 0 = all available; never affects results

  void validate() const;
};

struct Ensemble {
  std::vector<surrogate::Submodel> submodels;
  unsigned power = 9;
  std::vector<double> weights;  // nonnegative, positive sum
  data::ScalerParams scaler;
  EnsembleConfig config;        // echo of the training configuration

  std::size_t size() const { return submodels.size(); }
  std::size_t source_dim() const { return scaler.mean.size(); }
  void validate() const;
};

// Seed of submodel `index`: derive_seed(master_seed, index).
std::uint64_t submodel_seed(std::uint64_t master_seed, std::size_t index);

// Number of worker threads for a request (0 = omp_get_max_threads()).
std::size_t resolve_threads(std::size_t requested);

// Builds the extra training loss for every submodel from the (filtered,
// unstandardized) training set.
using PenaltyFactory = std::function<nn::OutputPenalty(const data::LabeledDataset& train)>;

// One-class training: when labels are present only label-0 rows are used.
// The result depends only on (train, config), never on config.threads.
Ensemble train_ensemble(const data::LabeledDataset& train, const EnsembleConfig& config,
                        const PenaltyFactory& penalty = {});

// Kernels. `standardized` has the full source width. The parallel versions
// split work across OpenMP threads; the serial versions are the reference the
// tests compare against and produce identical bits.
std::vector<surrogate::Submodel> train_submodels(const Matrix& standardized,
                                                 const EnsembleConfig& config,
                                                 const nn::OutputPenalty* penalty,
                                                 std::size_t threads);
std::vector<surrogate::Submodel> train_submodels_serial(const Matrix& standardized,
                                                        const EnsembleConfig& config,
                                                        const nn::OutputPenalty* penalty);

// rows x submodels matrix of |f_i(x) - q_i|.
Matrix base_scores(std::span<const surrogate::Submodel> submodels, const Matrix& standardized,
                   std::size_t threads);
Matrix base_scores_serial(std::span<const surrogate::Submodel> submodels,
                          const Matrix& standardized);

// x^power by repeated multiplication.
double ipow(double x, unsigned power);

// Per row: sum_i w_i * base_i^power / sum_i w_i over the columns with
// keep[i] (all columns when `keep` is empty).
std::vector<double> aggregate(const Matrix& base, unsigned power, std::span<const double> weights,
                              const std::vector<bool>& keep = {});

// Standardizes raw rows with the stored scaler and aggregates the powered
// submodel scores.
std::vector<double> ensemble_score(const Ensemble& e, const data::Dataset& raw,
                                   std::size_t threads = 0);
std::vector<double> ensemble_score_serial(const Ensemble& e, const data::Dataset& raw);

// Base scores of the raw rows under the ensemble's scaler.
Matrix ensemble_base_scores(const Ensemble& e, const data::Dataset& raw, std::size_t threads = 0);

// First k submodels (and weights) in training order.
Ensemble subset(const Ensemble& e, std::size_t k);

// Model file I/O. Reals use shortest round-trip formatting, so load(save(e))
// reproduces every parameter bit for bit.
std::string to_json(const Ensemble& e);
Ensemble from_json(std::string_view text);
void save(const Ensemble& e, const std::filesystem::path& path);
Ensemble load(const std::filesystem::path& path);

}  // namespace dean::ensemble
