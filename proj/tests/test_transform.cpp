#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rulerec/core.hpp"
#include "rulerec/eval.hpp"
#include "rulerec/random.hpp"
#include "rulerec/transform.hpp"

using namespace rulerec;

namespace {

RegretRow row_of(std::vector<double> q) {
  RegretRow r;
  r.q = std::move(q);
  while (r.q[r.best] != 0.0) ++r.best;
  return r;
}

void expect_near_vec(const std::vector<double>& got, const std::vector<double>& want,
                     double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

struct RandomData {
  FeatureMatrix features;
  ProbTable probs;
};

RandomData make_data(std::uint64_t seed, std::size_t n, std::size_t actions) {
  Stream rng(seed, "transform-data");
  std::vector<std::vector<double>> x(n, std::vector<double>(2)), p(n, std::vector<double>(actions));
  for (auto& r : x)
    for (double& v : r) v = rng.uniform();
  for (auto& r : p)
    for (double& v : r) v = rng.uniform();
  return {FeatureMatrix::from_rows(x), ProbTable::from_rows(p)};
}

}  // namespace

TEST(MinShift, TwoActionsNeedNoShift) {
  Stream rng(1, "ms2");
  std::vector<RegretRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(regret_row(std::vector<double>{rng.uniform(), rng.uniform()}));
  EXPECT_EQ(min_shift(rows, 10.0), 0.0);
}

TEST(MinShift, BindingRowExample) {
  const std::vector<RegretRow> rows{row_of({0, 0.2, 0.5})};
  EXPECT_NEAR(min_shift(rows, 10.0), 3.0, 1e-12);
  EXPECT_NEAR(min_shift(rows, 10.0), oracle::min_shift({{0, 0.2, 0.5}}, 10.0), 1e-9);
}

TEST(MinShift, ZeroRegretRowsNeedNoShift) {
  const std::vector<RegretRow> rows{row_of({0, 0, 0}), row_of({0, 0})};
  EXPECT_EQ(min_shift(rows, 7.0), 0.0);
}

TEST(MinShift, MatchesBisectionOracle) {
  Stream rng(2, "ms-oracle");
  for (int t = 0; t < 30; ++t) {
    std::vector<RegretRow> rows;
    std::vector<std::vector<double>> qs;
    const std::size_t actions = 2 + rng.below(6);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> p(actions);
      for (double& v : p) v = rng.uniform();
      rows.push_back(regret_row(p));
      qs.push_back(oracle::regret(p));
    }
    const double K = rng.uniform(0.5, 50.0);
    EXPECT_NEAR(min_shift(rows, K), oracle::min_shift(qs, K), 1e-9 * (1 + K));
  }
}

TEST(MinShift, RejectsNonPositiveScale) {
  const std::vector<RegretRow> rows{row_of({0, 0.5})};
  EXPECT_THROW(min_shift(rows, 0.0), InvalidInput);
  EXPECT_THROW(min_shift(rows, -1.0), InvalidInput);
}

TEST(WeightsForRow, Examples) {
  expect_near_vec(weights_for_row(row_of({0, 0.3}), 10, 1), {4, 1}, 1e-12);
  expect_near_vec(weights_for_row(row_of({0, 0.2, 0.5}), 10, 3), {5, 3, 0}, 1e-12);
  EXPECT_EQ(weights_for_row(row_of({0, 0, 0}), 4, 0), (std::vector<double>{0, 0, 0}));
}

TEST(WeightsForRow, MatchesLinearSolve) {
  Stream rng(3, "wfr");
  for (int t = 0; t < 300; ++t) {
    const std::size_t actions = 2 + rng.below(7);
    std::vector<double> p(actions);
    for (double& v : p) v = rng.uniform();
    const double K = rng.uniform(0.1, 100), L = K * actions + rng.uniform(0, 5);
    expect_near_vec(weights_for_row(regret_row(p), K, L),
                    oracle::solve_weights(oracle::regret(p), K, L), 1e-9 * (K + L));
  }
}

TEST(WeightsForRow, ThrowsWhenShiftTooSmall) {
  try {
    weights_for_row(row_of({0, 0.2, 0.5}), 10, 2.0);
    FAIL() << "expected NegativeWeight";
  } catch (const NegativeWeight& e) {
    EXPECT_EQ(e.action(), 2u);
  }
}

TEST(TransformProposed, SingleRowExample) {
  TransformConfig cfg;
  cfg.k_scale = 10;
  cfg.l_shift = 1;
  const auto out = transform_proposed(FeatureMatrix::from_rows({{0.25}}),
                                      ProbTable::from_rows({{0.8, 0.5}}), cfg);
  ASSERT_EQ(out.samples.size(), 2u);
  EXPECT_EQ(out.samples.action(0), 0u);
  EXPECT_EQ(out.samples.action(1), 1u);
  EXPECT_NEAR(out.samples.weight(0), 4.0, 1e-12);
  EXPECT_NEAR(out.samples.weight(1), 1.0, 1e-12);
  EXPECT_EQ(out.samples.features(1)[0], 0.25);
}

TEST(TransformProposed, ZeroRegretRowCarriesZeroWeight) {
  const auto out = transform_proposed(FeatureMatrix::from_rows({{0.0}}),
                                      ProbTable::from_rows({{0.4, 0.4}}), {});
  EXPECT_EQ(out.l_shift, 0.0);
  ASSERT_EQ(out.samples.size(), 2u);
  EXPECT_EQ(out.samples.weight(0), 0.0);
  EXPECT_EQ(out.samples.weight(1), 0.0);
}

TEST(TransformProposed, SharedGlobalShift) {
  TransformConfig cfg;
  cfg.k_scale = 10;
  const auto out = transform_proposed(FeatureMatrix::from_rows({{0.0}, {1.0}}),
                                      ProbTable::from_rows({{0.7, 0.5, 0.2}, {0.3, 0.3, 0.3}}),
                                      cfg);
  EXPECT_NEAR(out.l_shift, 3.0, 1e-12);
  std::vector<double> w(out.samples.weights().begin(), out.samples.weights().end());
  const auto row2 = oracle::solve_weights({0, 0, 0}, 10, 3);
  expect_near_vec(w, {5, 3, 0, row2[0], row2[1], row2[2]}, 1e-12);
  expect_near_vec(row2, {1.5, 1.5, 1.5}, 1e-12);
}

TEST(TransformProposed, RowIdentityAndNonnegativity) {
  const auto d = make_data(4, 500, 5);
  for (double K : {1.0, 10.0, 100.0}) {
    TransformConfig cfg;
    cfg.k_scale = K;
    const auto out = transform_proposed(d.features, d.probs, cfg);
    bool some_zero = false;
    for (std::size_t n = 0; n < d.probs.rows(); ++n) {
      const auto q = oracle::regret(std::vector<double>(d.probs.row(n).begin(), d.probs.row(n).end()));
      double total = 0.0;
      for (Action a = 0; a < 5; ++a) total += out.samples.weight(n * 5 + a);
      for (Action a = 0; a < 5; ++a) {
        const double w = out.samples.weight(n * 5 + a);
        EXPECT_GE(w, 0.0);
        some_zero = some_zero || w == 0.0;
        EXPECT_NEAR(total - w, K * q[a] + out.l_shift, 1e-9);
      }
    }
    EXPECT_TRUE(some_zero);
  }
}

TEST(TransformProposed, LossIdentityForRandomClassifiers) {
  const auto d = make_data(5, 400, 4);
  TransformConfig cfg;
  cfg.k_scale = 7.5;
  const auto out = transform_proposed(d.features, d.probs, cfg);
  Stream rng(5, "cls");
  const double n = 400;
  for (int i = 0; i < 50; ++i) {
    const auto h = random_classifier(d.features, 4, rng);
    EXPECT_NEAR(loss_t(h, out.samples), 7.5 * loss_s(h, d.probs, d.features) + n * out.l_shift,
                1e-9 * n);
  }
}

TEST(TransformProposed, ShiftCovariance) {
  const auto d = make_data(6, 200, 3);
  TransformConfig base;
  const auto ref = transform_proposed(d.features, d.probs, base);
  const double delta = 0.75;
  TransformConfig shifted;
  shifted.l_shift = ref.l_shift + delta;
  const auto moved = transform_proposed(d.features, d.probs, shifted);
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    EXPECT_NEAR(moved.samples.weight(i) - ref.samples.weight(i), delta / 2.0, 1e-12);
  }
  Stream rng(6, "cls");
  for (int i = 0; i < 20; ++i) {
    const auto h = random_classifier(d.features, 3, rng);
    EXPECT_NEAR(loss_t(h, moved.samples) - loss_t(h, ref.samples), 200 * delta, 1e-9 * 200);
  }
}

TEST(TransformProposed, ExplicitShiftBelowMinimumIsRejected) {
  TransformConfig cfg;
  cfg.k_scale = 10;
  cfg.l_shift = 1.0;
  EXPECT_THROW(transform_proposed(FeatureMatrix::from_rows({{0.0}}),
                                  ProbTable::from_rows({{0.7, 0.5, 0.2}}), cfg),
               NegativeWeight);
  cfg.l_shift = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(TransformProposed, ReplicationDefaultsAndDropsZeros) {
  TransformConfig cfg;
  cfg.replication = Replication::kRound;
  EXPECT_EQ(cfg.resolved_k(), 100.0);
  EXPECT_EQ(TransformConfig{}.resolved_k(), 1.0);
  const auto out = transform_proposed(FeatureMatrix::from_rows({{0.0}}),
                                      ProbTable::from_rows({{0.8, 0.5}}), cfg);
  // K=100, L=0: weights [30, 0] -> 30 unit copies of action 0.
  ASSERT_EQ(out.samples.size(), 30u);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    EXPECT_EQ(out.samples.action(i), 0u);
    EXPECT_EQ(out.samples.weight(i), 1.0);
  }
}

TEST(TransformBenchmark, Examples) {
  auto out = transform_benchmark(FeatureMatrix::from_rows({{1.0}}),
                                 ProbTable::from_rows({{0.2, 0.7, 0.4}}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.action(0), 1u);
  EXPECT_EQ(out.weight(0), 1.0);

  out = transform_benchmark(FeatureMatrix::from_rows({{1.0}}), ProbTable::from_rows({{0.5, 0.5}}));
  EXPECT_EQ(out.action(0), 0u);

  out = transform_benchmark(FeatureMatrix::from_rows({{1.0}, {1.0}}),
                            ProbTable::from_rows({{0.1, 0.6}, {0.1, 0.6}}));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.sample(0).features, out.sample(1).features);
  EXPECT_EQ(out.action(0), out.action(1));
}

TEST(TransformBenchmark, SizeEqualsInput) {
  const auto d = make_data(7, 321, 4);
  EXPECT_EQ(transform_benchmark(d.features, d.probs).size(), 321u);
}

TEST(TransformNaive, KeepsConvertedRecordsOnly) {
  std::vector<HistoryRecord> recs{{{0.1}, 2, 1}, {{0.2}, 2, 0}, {{0.3}, 1, 1}};
  const auto out = transform_naive(recs, 3);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.action(0), 2u);
  EXPECT_EQ(out.weight(0), 1.0);
  EXPECT_EQ(out.features(0)[0], 0.1);
  EXPECT_EQ(out.action(1), 1u);

  std::vector<HistoryRecord> none{{{0.1}, 0, 0}, {{0.2}, 1, 0}};
  EXPECT_TRUE(transform_naive(none, 2).empty());
}

TEST(Replicate, RoundAndZero) {
  WeightedSet s(1, 2);
  s.add(std::vector<double>{0.0}, 0, 2.4);
  s.add(std::vector<double>{1.0}, 1, 0.0);
  EXPECT_EQ(replicate(s, Replication::kRound, 0).size(), 2u);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = replicate(s, Replication::kFloorBernoulli, seed);
    EXPECT_TRUE(r.size() == 2u || r.size() == 3u);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r.action(i), 0u);
  }
}

TEST(Replicate, FloorBernoulliMeanMatchesWeight) {
  WeightedSet s(1, 2);
  s.add(std::vector<double>{0.0}, 0, 2.4);
  const int draws = 100000;
  double total = 0.0;
  for (int seed = 0; seed < draws; ++seed) {
    total += double(replicate(s, Replication::kFloorBernoulli, std::uint64_t(seed)).size());
  }
  EXPECT_NEAR(total / draws, 2.4, 0.01);
}

TEST(Replicate, DeterministicPerSeed) {
  const auto d = make_data(8, 100, 3);
  TransformConfig cfg;
  cfg.k_scale = 20;
  const auto w = transform_proposed(d.features, d.probs, cfg).samples;
  EXPECT_EQ(replicate(w, Replication::kFloorBernoulli, 9),
            replicate(w, Replication::kFloorBernoulli, 9));
}

TEST(Parse, ModesAndSchemes) {
  EXPECT_EQ(parse_transform_mode("benchmark"), TransformMode::kBenchmark);
  EXPECT_EQ(parse_replication("floor-bernoulli"), Replication::kFloorBernoulli);
  EXPECT_EQ(to_string(parse_replication("round")), "round");
  EXPECT_THROW(parse_transform_mode("best"), InvalidInput);
  EXPECT_THROW(parse_replication("ceil"), InvalidInput);
}
