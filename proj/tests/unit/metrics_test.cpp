#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedrlhf/error.hpp"
#include "fedrlhf/metrics.hpp"
#include "oracles.hpp"

using namespace fedrlhf;
using V = std::vector<double>;
using R = std::vector<std::size_t>;

TEST(Wasserstein, Examples) {
  EXPECT_DOUBLE_EQ(wasserstein(V{0.25, 0.25, 0.25, 0.25}, V{0.25, 0.25, 0.25, 0.25}).raw, 0.0);
  EXPECT_DOUBLE_EQ(wasserstein(V{1, 0, 0, 0}, V{0, 0, 0, 1}).raw, 1.0);
  EXPECT_NEAR(wasserstein(V{0.5, 0.5, 0, 0}, V{0, 0.5, 0.5, 0}).raw, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(wasserstein(V{0.5, 0.5, 0, 0}, V{0, 0.5, 0.5, 0}).oriented_reward, 2.0 / 3.0,
              1e-15);
}

TEST(Cosine, Examples) {
  V y{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(cosine(y, y).raw, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(cosine(V{1, 0, 0, 0}, V{0, 1, 0, 0}).raw, 0.0);
  EXPECT_NEAR(cosine(V{0.5, 0.5, 0, 0}, V{1, 0, 0, 0}).raw, 0.707106781186548, 1e-12);
  EXPECT_THROW(cosine(V{0, 0}, V{0.5, 0.5}), DomainError);
}

TEST(KL, Examples) {
  V y{0.2, 0.3, 0.5};
  MetricValue same = kl_divergence(y, y);
  EXPECT_NEAR(same.raw, 0.0, 1e-7);
  EXPECT_NEAR(same.oriented_reward, 1.0, 1e-7);
  EXPECT_NEAR(kl_divergence(V{0.25, 0.75}, V{0.5, 0.5}).raw, 0.143841036225890, 1e-7);
  EXPECT_NEAR(kl_divergence(V{0.5, 0.5}, V{1, 0}).raw, 0.693147180559945, 1e-7);
  MetricValue finite = kl_divergence(V{1, 0}, V{0, 1});
  EXPECT_TRUE(std::isfinite(finite.raw));
  EXPECT_GT(finite.raw, 18.0);
}

TEST(ToRanking, Examples) {
  EXPECT_EQ(to_ranking(V{0.1, 0.6, 0.3, 0.0}), (R{1, 2, 0, 3}));
  EXPECT_EQ(to_ranking(V{0.25, 0.25, 0.25, 0.25}), (R{0, 1, 2, 3}));
  EXPECT_EQ(to_ranking(V{0.3, 0.3, 0.4, 0.0}), (R{2, 0, 1, 3}));
}

TEST(KendallTau, Examples) {
  EXPECT_DOUBLE_EQ(kendall_tau(R{0, 1, 2, 3}, R{0, 1, 2, 3}).raw, 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(R{0, 1, 2, 3}, R{3, 2, 1, 0}).raw, -1.0);
  EXPECT_NEAR(kendall_tau(R{0, 1, 2, 3}, R{1, 0, 2, 3}).raw, 2.0 / 3.0, 1e-15);
  EXPECT_THROW(kendall_tau(R{0, 0, 1}, R{0, 1, 2}), DomainError);
  EXPECT_THROW(kendall_tau(R{0, 1}, R{0, 1, 2}), DomainError);
}

TEST(Borda, Examples) {
  EXPECT_DOUBLE_EQ(borda(R{0, 1, 2, 3}, R{0, 1, 2, 3}).raw, 1.0);
  EXPECT_DOUBLE_EQ(borda(R{1, 0, 3, 2}, R{0, 1, 2, 3}).raw, 0.0);
  EXPECT_DOUBLE_EQ(borda(R{0, 2, 3, 1}, R{0, 1, 2, 3}).raw, 0.4);
}

TEST(Binary, Examples) {
  EXPECT_DOUBLE_EQ(binary(R{0, 1, 2, 3}, R{0, 1, 2, 3}).raw, 1.0);
  EXPECT_DOUBLE_EQ(binary(R{1, 0, 2, 3}, R{0, 1, 2, 3}).raw, 0.0);
  EXPECT_DOUBLE_EQ(binary(R{2, 0, 1}, R{2, 0, 1}).raw, 1.0);
}

TEST(Evaluate, Dispatch) {
  V target{0.3, 0.7};
  EXPECT_DOUBLE_EQ(
      evaluate(MetricKind::kKendallTau, Prediction::from_probs({0.6, 0.4}), target).raw, -1.0);
  EXPECT_DOUBLE_EQ(
      evaluate(MetricKind::kWasserstein, Prediction::from_probs(target), target).oriented_reward,
      1.0);
  EXPECT_DOUBLE_EQ(evaluate(MetricKind::kBinary, Prediction::from_ranking({0, 1, 2, 3}),
                            V{0.25, 0.25, 0.25, 0.25})
                       .raw,
                   1.0);
  EXPECT_THROW(evaluate(MetricKind::kCosine, Prediction::from_ranking({0, 1}), target),
               DomainError);
  EXPECT_THROW(evaluate(MetricKind::kCosine, Prediction::from_probs({1.0}), target), DomainError);
}

TEST(Metrics, NamesRoundTrip) {
  for (MetricKind m : kAllMetrics) EXPECT_EQ(parse_metric(metric_name(m)), m);
  EXPECT_FALSE(parse_metric("euclid").has_value());
}

TEST(Metrics, OrientedRewardsStayInRange) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 500; ++t) {
    std::size_t k = 2 + rng() % 5;
    V y = oracle::random_simplex(k, rng), p = oracle::random_simplex(k, rng);
    for (MetricKind m : kAllMetrics) {
      MetricValue v = evaluate(m, Prediction::from_probs(p), y);
      RewardRange r = oriented_range(m);
      EXPECT_GE(v.oriented_reward, r.lo - 1e-12);
      EXPECT_LE(v.oriented_reward, r.hi + 1e-12);
    }
  }
}

TEST(Metrics, SymmetricMetricsAreSymmetric) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    V a = oracle::random_simplex(5, rng), b = oracle::random_simplex(5, rng);
    EXPECT_NEAR(wasserstein(a, b).raw, wasserstein(b, a).raw, 1e-15);
    EXPECT_NEAR(cosine(a, b).raw, cosine(b, a).raw, 1e-15);
    R ra = oracle::random_permutation(5, rng), rb = oracle::random_permutation(5, rng);
    EXPECT_DOUBLE_EQ(kendall_tau(ra, rb).raw, kendall_tau(rb, ra).raw);
  }
}
