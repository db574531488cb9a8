#include "dean/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dean/error.hpp"
#include "dean/metrics.hpp"
#include "dean/random.hpp"

namespace dean::fairness {

void GaConfig::validate() const {
  if (population < 2) throw UsageError("GA population must be >= 2");
  if (elite >= population) throw UsageError("GA elite count must be below the population size");
  if (!(mutation_sigma >= 0.0) || !std::isfinite(mutation_sigma)) {
    throw UsageError("GA mutation sigma must be finite and >= 0");
  }
}

double FairnessReport::deviation() const { return std::abs(fairness_score - 0.5); }

FairnessReport fairness_metric(std::span<const double> scores, std::span<const int> labels,
                               std::span<const int> groups) {
  if (scores.size() != labels.size() || scores.size() != groups.size()) {
    throw DataError("scores, labels and groups differ in length");
  }
  std::vector<double> s[2];
  std::vector<int> l[2];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int g = groups[i];
    if (g != 0 && g != 1) throw DataError("groups must be 0 or 1");
    s[g].push_back(scores[i]);
    l[g].push_back(labels[i]);
  }
  for (int g = 0; g < 2; ++g) {
    const auto pos = std::count(l[g].begin(), l[g].end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(l[g].size())) {
      throw DataError("group " + std::to_string(g) +
                      " lacks normal or anomalous rows; per-group AUC is undefined");
    }
  }
  FairnessReport r;
  r.auc_group0 = metrics::auc_roc(s[0], l[0]);
  r.auc_group1 = metrics::auc_roc(s[1], l[1]);
  r.fairness_score = std::clamp(0.5 + (r.auc_group1 - r.auc_group0) / 2.0, 0.0, 1.0);
  r.overall_auc = metrics::auc_roc(scores, labels);
  return r;
}

namespace {

struct GroupMeans {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
};

double sign(double x) { return x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0; }

FairLossTerms terms_from(const GroupMeans& m, double theta) {
  FairLossTerms t;
  if (m.count[0] == 0 || m.count[1] == 0) return t;
  t.l0 = m.sum[0] / static_cast<double>(m.count[0]);
  t.l1 = m.sum[1] / static_cast<double>(m.count[1]);
  const double denom = std::abs(t.l1) + std::abs(t.l0);
  t.l_fair = denom > 0.0 ? std::abs(t.l1 - t.l0) / denom : 0.0;
  t.penalty = theta * t.l_fair;
  return t;
}

}  // namespace

FairLossTerms fair_loss_terms(std::span<const double> outputs, std::span<const int> groups,
                              double theta) {
  if (outputs.size() != groups.size()) throw DataError("outputs and groups differ in length");
  if (!std::isfinite(theta) || theta < 0.0) throw UsageError("theta must be finite and >= 0");
  GroupMeans m;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const int g = groups[i];
    if (g != 0 && g != 1) throw DataError("groups must be 0 or 1");
    m.sum[g] += outputs[i];
    m.count[g] += 1;
  }
  return terms_from(m, theta);
}

nn::OutputPenalty make_fair_penalty(std::vector<int> groups, double theta) {
  if (!std::isfinite(theta) || theta < 0.0) throw UsageError("theta must be finite and >= 0");
  return [groups = std::move(groups), theta](std::span<const double> outputs,
                                             std::span<const std::size_t> rows,
                                             std::span<double> d_outputs) -> double {
    if (outputs.size() != rows.size()) {
      throw DataError("fairness penalty requires a scalar-output network");
    }
    GroupMeans m;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int g = groups.at(rows[i]);
      m.sum[g] += outputs[i];
      m.count[g] += 1;
    }
    const FairLossTerms t = terms_from(m, theta);
    if (m.count[0] == 0 || m.count[1] == 0 || theta == 0.0) return t.penalty;
    const double s = std::abs(t.l1) + std::abs(t.l0);
    if (!(s > 0.0)) return t.penalty;
    const double a = t.l1 - t.l0;
    const double d_l1 = sign(a) / s - std::abs(a) * sign(t.l1) / (s * s);
    const double d_l0 = -sign(a) / s - std::abs(a) * sign(t.l0) / (s * s);
    const double per_row[2] = {theta * d_l0 / static_cast<double>(m.count[0]),
                               theta * d_l1 / static_cast<double>(m.count[1])};
    for (std::size_t i = 0; i < rows.size(); ++i) d_outputs[i] += per_row[groups[rows[i]]];
    return t.penalty;
  };
}

ensemble::Ensemble train_fair_ensemble(const data::LabeledDataset& train,
                                       const ensemble::EnsembleConfig& config, double theta) {
  if (!train.groups) throw DataError("fairness-aware training needs a group attribute");
  return ensemble::train_ensemble(train, config, [theta](const data::LabeledDataset& effective) {
    return make_fair_penalty(*effective.groups, theta);
  });
}

namespace {

struct EvalContext {
  Matrix base;
  std::vector<int> labels;
  std::vector<int> groups;
  unsigned power;
};

EvalContext make_context(const ensemble::Ensemble& e, const data::LabeledDataset& eval,
                         std::size_t threads) {
  if (!eval.labels || !eval.groups) throw DataError("fairness evaluation needs labels and groups");
  EvalContext ctx{ensemble::ensemble_base_scores(e, eval.data, threads), *eval.labels,
                  *eval.groups, e.power};
  // Fail early on degenerate groups; the check only depends on labels/groups.
  const std::vector<double> dummy(ctx.labels.size(), 0.0);
  fairness_metric(dummy, ctx.labels, ctx.groups);
  return ctx;
}

FairnessReport evaluate(const EvalContext& ctx, std::span<const double> weights,
                        const std::vector<bool>& keep) {
  const auto scores = ensemble::aggregate(ctx.base, ctx.power, weights, keep);
  return fairness_metric(scores, ctx.labels, ctx.groups);
}

}  // namespace

PruneResult prune_for_fairness(const ensemble::Ensemble& e, const data::LabeledDataset& eval,
                               double fraction, std::size_t threads) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw UsageError("prune fraction must lie in [0, 1)");
  const std::size_t n = e.size();
  const auto steps =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (steps >= n) throw UsageError("pruning would remove every submodel");

  PruneResult result;
  const EvalContext ctx = make_context(e, eval, threads);
  std::vector<bool> keep(n, true);
  double current = evaluate(ctx, e.weights, keep).deviation();
  result.deviations.push_back(current);

  threads = ensemble::resolve_threads(threads);
  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<double> candidate(n, std::numeric_limits<double>::infinity());
    const auto n_signed = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(threads))
    for (std::int64_t j = 0; j < n_signed; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      if (!keep[idx]) continue;
      std::vector<bool> trial = keep;
      trial[idx] = false;
      double remaining = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        if (trial[t]) remaining += e.weights[t];
      }
      if (!(remaining > 0.0)) continue;
      candidate[idx] = evaluate(ctx, e.weights, trial).deviation();
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(candidate.begin(), candidate.end()) - candidate.begin());
    if (!std::isfinite(candidate[best]) || candidate[best] > current) break;
    keep[best] = false;
    current = candidate[best];
    result.removed.push_back(best);
    result.deviations.push_back(current);
  }

  result.ensemble = e;
  result.ensemble.submodels.clear();
  result.ensemble.weights.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (!keep[j]) continue;
    result.ensemble.submodels.push_back(e.submodels[j]);
    result.ensemble.weights.push_back(e.weights[j]);
  }
  result.ensemble.config.n_submodels = result.ensemble.submodels.size();
  return result;
}

namespace {

struct Individual {
  std::vector<double> weights;
  double deviation = 0.0;
  double auc = 0.0;
};

bool fitter(const Individual& a, const Individual& b) {
  if (a.deviation != b.deviation) return a.deviation < b.deviation;
  return a.auc > b.auc;
}

void normalise(std::vector<double>& w) {
  double sum = 0.0;
  for (auto& x : w) {
    x = std::max(0.0, x);
    sum += x;
  }
  const auto n = static_cast<double>(w.size());
  if (!(sum > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0);
    return;
  }
  for (auto& x : w) x *= n / sum;
}

void evaluate_all(const EvalContext& ctx, std::vector<Individual>& pop, std::size_t threads) {
  const auto n = static_cast<std::int64_t>(pop.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(threads))
  for (std::int64_t i = 0; i < n; ++i) {
    auto& ind = pop[static_cast<std::size_t>(i)];
    const auto r = evaluate(ctx, ind.weights, {});
    ind.deviation = r.deviation();
    ind.auc = r.overall_auc;
  }
}

}  // namespace

EvolveResult evolve_weights(const ensemble::Ensemble& e, const data::LabeledDataset& eval,
                            const GaConfig& ga) {
  ga.validate();
  const std::size_t threads = ensemble::resolve_threads(ga.threads);
  const EvalContext ctx = make_context(e, eval, threads);
  const std::size_t n = e.size();

  Rng rng(ga.seed);
  std::normal_distribution<double> noise(0.0, ga.mutation_sigma);
  std::vector<Individual> pop(ga.population);
  pop[0].weights.assign(n, 1.0);
  for (std::size_t i = 1; i < pop.size(); ++i) {
    pop[i].weights.assign(n, 1.0);
    for (auto& w : pop[i].weights) w += noise(rng);
    normalise(pop[i].weights);
  }
  evaluate_all(ctx, pop, threads);

  EvolveResult result;
  result.initial_deviation = pop[0].deviation;
  result.initial_auc = pop[0].auc;

  std::uniform_int_distribution<std::size_t> pick(0, ga.population - 1);
  const std::size_t n_children = ga.population - ga.elite;
  for (std::size_t gen = 0; gen < ga.generations; ++gen) {
    std::vector<Individual> children(n_children);
    for (auto& child : children) {
      const auto& a = pop[pick(rng)];
      const auto& b = pop[pick(rng)];
      child.weights = fitter(b, a) ? b.weights : a.weights;
      for (auto& w : child.weights) w += noise(rng);
      normalise(child.weights);
    }
    evaluate_all(ctx, children, threads);
    for (auto& c : children) pop.push_back(std::move(c));
    std::stable_sort(pop.begin(), pop.end(), fitter);
    pop.resize(ga.population);
  }

  std::stable_sort(pop.begin(), pop.end(), fitter);
  result.weights = pop[0].weights;
  result.deviation = pop[0].deviation;
  result.overall_auc = pop[0].auc;
  return result;
}

}  // namespace dean::fairness
