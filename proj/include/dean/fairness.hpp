#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dean/data.hpp"
#include "dean/ensemble.hpp"
#include "dean/nn.hpp"

namespace dean::fairness {

struct GaConfig {
  std::size_t population = 64;
  std::size_t generations = 200;
  double mutation_sigma = 0.05;
  std::size_t elite = 4;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // fitness evaluation only; never affects results

  void validate() const;
};

struct FairnessConfig {
  double theta = 0.1;
  double prune_fraction = 0.1;
  GaConfig ga;
};

// Per-group detection quality. fairness_score = 0.5 + (auc_group1 -
// auc_group0) / 2, clamped to [0, 1]; 0.5 means both groups are served equally.
struct FairnessReport {
  double auc_group0 = 0.0;
  double auc_group1 = 0.0;
  double fairness_score = 0.5;
  double overall_auc = 0.0;

  double deviation() const;  // |fairness_score - 0.5|
};

// Throws DataError when a group lacks either class.
FairnessReport fairness_metric(std::span<const double> scores, std::span<const int> labels,
                               std::span<const int> groups);

struct FairLossTerms {
  double penalty = 0.0;  // theta * l_fair
  double l0 = 0.0;       // mean output, protected group
  double l1 = 0.0;       // mean output, unprotected group
  double l_fair = 0.0;   // |l1 - l0| / (|l1| + |l0|), 0 when both means are 0
};

// A batch missing either group contributes no penalty.
FairLossTerms fair_loss_terms(std::span<const double> outputs, std::span<const int> groups,
                              double theta);

// Training penalty theta * l_fair for scalar-output networks; `groups` is
// indexed by training row.
nn::OutputPenalty make_fair_penalty(std::vector<int> groups, double theta);

// train_ensemble with the fairness penalty added to every submodel's loss.
// Requires a group attribute on `train`.
ensemble::Ensemble train_fair_ensemble(const data::LabeledDataset& train,
                                       const ensemble::EnsembleConfig& config, double theta);

struct PruneResult {
  ensemble::Ensemble ensemble;
  std::vector<std::size_t> removed;   // indices into the input ensemble, in removal order
  std::vector<double> deviations;     // |fairness - 0.5| before pruning, then after each step
};

// Greedy pruning: up to floor(fraction * n) times, removes the submodel whose
// removal gives the smallest |fairness - 0.5| on `eval` (lowest index on ties).
// Stops early when every removal would increase the deviation.
PruneResult prune_for_fairness(const ensemble::Ensemble& e, const data::LabeledDataset& eval,
                               double fraction, std::size_t threads = 0);

struct EvolveResult {
  std::vector<double> weights;
  double deviation = 0.0;          // |fairness - 0.5| of the returned weights
  double overall_auc = 0.0;
  double initial_deviation = 0.0;  // with all-ones weights
  double initial_auc = 0.0;
};

// (mu + lambda) search over nonnegative weight vectors normalised to sum n.
// Generation 0 holds all-ones plus Gaussian perturbations. Each generation
// breeds population - elite children by binary tournament and Gaussian
// mutation; the best `population` of parents and children survive. Fitness is
// -|fairness - 0.5|, ties broken by higher overall AUC-ROC.
EvolveResult evolve_weights(const ensemble::Ensemble& e, const data::LabeledDataset& eval,
                            const GaConfig& ga);

}  // namespace dean::fairness
