#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "dean/error.hpp"
#include "dean/metrics.hpp"
#include "fixtures.hpp"

namespace dean::ensemble {
namespace {

using fixtures::random_rows;
using fixtures::raw;
using fixtures::small_config;
using fixtures::small_ensemble;

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  return idx;
}

TEST(Aggregate, Examples) {
  const Matrix base(1, 2, {1.0, 3.0});
  const std::vector<double> w{1.0, 1.0};
  EXPECT_EQ(aggregate(base, 1, w)[0], 2.0);
  EXPECT_EQ(aggregate(base, 9, w)[0], 9842.0);
  EXPECT_EQ(ipow(3.0, 9), 19683.0);
}

TEST(Aggregate, PowerSensitivity) {
  const Matrix base(2, 2, {2.0, 0.0, 1.2, 1.2});
  const std::vector<double> w{1.0, 1.0};
  const auto p1 = aggregate(base, 1, w);
  EXPECT_LT(p1[0], p1[1]);
  const auto p9 = aggregate(base, 9, w);
  EXPECT_GT(p9[0], p9[1]);
}

TEST(Aggregate, Monotone) {
  Matrix base = random_rows(20, 5, 1);
  for (auto& v : base.values()) v = std::abs(v);
  const std::vector<double> w{1.0, 0.5, 2.0, 0.0, 1.0};
  const auto before = aggregate(base, 9, w);
  for (std::size_t j = 0; j < 5; ++j) {
    Matrix bumped = base;
    for (std::size_t r = 0; r < 20; ++r) bumped(r, j) += 0.1;
    const auto after = aggregate(bumped, 9, w);
    for (std::size_t r = 0; r < 20; ++r) EXPECT_GE(after[r], before[r]);
  }
}

TEST(Aggregate, Errors) {
  const Matrix base(1, 2, {1.0, 3.0});
  EXPECT_THROW(aggregate(base, 1, std::vector<double>{1.0}), DataError);
  EXPECT_THROW(aggregate(base, 1, std::vector<double>{0.0, 0.0}), DataError);
  EXPECT_THROW(aggregate(base, 1, std::vector<double>{1.0, 1.0}, {true}), DataError);
}

TEST(Ensemble, SingleSubmodelScoreIsPoweredBaseScore) {
  const auto e = small_ensemble(1, 3);
  const auto x = raw(random_rows(40, 4, 4));
  const auto scores = ensemble_score(e, x);
  const auto std_x = data::apply_standardizer(e.scaler, x).values;
  const auto base = surrogate::submodel_scores(e.submodels[0], std_x);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(scores[i], ipow(base[i], 9));
}

TEST(Ensemble, MatchesDirectLoopOracle) {
  const auto e = small_ensemble(6, 5);
  const auto x = raw(random_rows(60, 4, 6));
  const auto scores = ensemble_score(e, x);
  const auto std_x = data::apply_standardizer(e.scaler, x).values;
  for (std::size_t i = 0; i < x.values.rows(); ++i) {
    double sum = 0.0;
    for (const auto& s : e.submodels) {
      const double b = surrogate::submodel_score(s, std_x.row(i));
      sum += std::pow(b, 9);
    }
    EXPECT_NEAR(scores[i], sum / 6.0, 1e-12 * std::max(1.0, sum / 6.0));
    EXPECT_GE(scores[i], 0.0);
  }
}

TEST(Ensemble, ThreadCountDoesNotChangeTheModel) {
  const auto d = data::make_synthetic(data::SyntheticKind::gauss_blob, 300, 0, 5, 2);
  auto cfg = small_config(6, 9);
  cfg.threads = 1;
  const auto a = train_ensemble(d, cfg);
  cfg.threads = 4;
  const auto b = train_ensemble(d, cfg);
  EXPECT_EQ(to_json(a), to_json(b));
  const auto x = raw(random_rows(700, 5, 3));
  EXPECT_EQ(ensemble_score(a, x, 1), ensemble_score(a, x, 4));
  EXPECT_EQ(ensemble_score(a, x, 3), ensemble_score_serial(a, x));
}

TEST(Ensemble, ParallelKernelsMatchSerialReference) {
  const auto d = data::make_synthetic(data::SyntheticKind::gauss_blob, 200, 0, 4, 8);
  const Matrix x = data::apply_standardizer(data::fit_standardizer(d.data), d.data).values;
  const auto cfg = small_config(5, 10);
  const auto serial = train_submodels_serial(x, cfg, nullptr);
  EXPECT_EQ(train_submodels(x, cfg, nullptr, 3), serial);
  const Matrix rows = random_rows(1000, 4, 11);
  EXPECT_EQ(base_scores(serial, rows, 3), base_scores_serial(serial, rows));
}

TEST(Ensemble, SubmodelSeedsAreDerived) {
  const auto e = small_ensemble(4, 12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(e.submodels[i].seed, submodel_seed(12, i));
  EXPECT_EQ(e.weights, std::vector<double>(4, 1.0));
  EXPECT_EQ(e.power, 9u);
}

TEST(Ensemble, TrainsOnNormalRowsOnly) {
  auto d = data::make_synthetic(data::SyntheticKind::gauss_blob, 120, 30, 4, 13);
  const auto cfg = small_config(2, 1);
  const auto with_anomalies = train_ensemble(d, cfg);
  std::vector<std::size_t> normals(120);
  std::iota(normals.begin(), normals.end(), 0);
  const auto only_normals = train_ensemble(d.select_rows(normals), cfg);
  EXPECT_EQ(to_json(with_anomalies), to_json(only_normals));

  std::vector<std::size_t> anomalies(30);
  std::iota(anomalies.begin(), anomalies.end(), 120);
  EXPECT_THROW(train_ensemble(d.select_rows(anomalies), cfg), DataError);
}

TEST(Ensemble, GaussBlobSmoke) {
  const auto all = data::make_synthetic(data::SyntheticKind::gauss_blob, 1300, 60, 8, 14);
  const auto [train, test] = data::split(all, 1000.0 / 1300.0, 14, true);
  ensemble::EnsembleConfig cfg;
  cfg.n_submodels = 25;
  cfg.hidden = {32, 32, 32};
  cfg.train.epochs = 20;
  cfg.train.learning_rate = 1e-3;
  cfg.train.batch_size = 64;
  cfg.master_seed = 14;
  const auto e = train_ensemble(train, cfg);
  const auto s = ensemble_score(e, test.data);
  double normal = 0.0, anomaly = 0.0;
  std::size_t n_normal = 0, n_anomaly = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((*test.labels)[i] == 1) {
      anomaly += s[i];
      ++n_anomaly;
    } else {
      normal += s[i];
      ++n_normal;
    }
  }
  EXPECT_GT(anomaly / static_cast<double>(n_anomaly), normal / static_cast<double>(n_normal));
  EXPECT_GT(metrics::auc_roc(s, *test.labels), 0.9);
}

TEST(Ensemble, ConstantSubmodelIsInert) {
  auto e = small_ensemble(5, 15);
  const auto x = raw(random_rows(200, 4, 16));
  const auto before = ensemble_score(e, x);
  e.submodels.push_back(fixtures::constant_submodel(4, 0.8));
  e.weights.push_back(1.0);
  const auto after = ensemble_score(e, x);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(after[i], before[i] * 5.0 / 6.0, 1e-15 * std::max(1.0, before[i]));
  }
  EXPECT_EQ(argsort(after), argsort(before));
}

TEST(Subset, Semantics) {
  const auto e = small_ensemble(5, 17);
  const auto x = raw(random_rows(50, 4, 18));
  EXPECT_EQ(ensemble_score(subset(e, 5), x), ensemble_score(e, x));

  const auto first = ensemble_score(subset(e, 1), x);
  const auto base = ensemble_base_scores(e, x);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(first[i], ipow(base(i, 0), 9));

  for (std::size_t k = 1; k <= 5; ++k) {
    const auto s = ensemble_score(subset(e, k), x);
    for (std::size_t i = 0; i < 50; ++i) {
      double partial = 0.0;
      for (std::size_t j = 0; j < k; ++j) partial += std::pow(base(i, j), 9);
      partial /= static_cast<double>(k);
      EXPECT_NEAR(s[i], partial, 1e-12 * std::max(1.0, partial));
    }
  }
  EXPECT_THROW(subset(e, 0), UsageError);
  EXPECT_THROW(subset(e, 6), UsageError);
}

TEST(Ensemble, ScoreDimensionMismatch) {
  const auto e = small_ensemble(2, 19);
  EXPECT_THROW(ensemble_score(e, raw(random_rows(3, 5, 1))), DataError);
}

TEST(EnsembleConfig, Validation) {
  auto c = small_config(1, 0);
  c.n_submodels = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = small_config(1, 0);
  c.power = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = small_config(1, 0);
  c.hidden = {4, 0};
  EXPECT_THROW(c.validate(), UsageError);
}

}  // namespace
}  // namespace dean::ensemble
