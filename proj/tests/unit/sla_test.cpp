#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mmslice/harness.hpp"
#include "test_util.hpp"

using namespace mmslice;
using mmslice::testing::consecutive_plan;

namespace {

const std::vector<double> kGamma10{10.0};

DeficitState with_delivered(std::vector<double> delivered) {
  DeficitState s = DeficitState::initial(delivered.size());
  s.delivered = std::move(delivered);
  return s;
}

}  // namespace

TEST(RefreshDeficits, Examples) {
  EXPECT_DOUBLE_EQ(refresh_deficits(with_delivered({4.0}), kGamma10, 1).deficit[0], 6.0);
  EXPECT_DOUBLE_EQ(refresh_deficits(with_delivered({15.0}), kGamma10, 1).deficit[0], 0.0);
  EXPECT_DOUBLE_EQ(refresh_deficits(with_delivered({25.0}), kGamma10, 3).deficit[0], 5.0);
}

TEST(RefreshDeficits, FromHistory) {
  const std::vector<std::vector<double>> hist{{10.0, 0.0}, {5.0, 30.0}, {10.0, 0.0}};
  const std::vector<double> gamma{10.0, 9.0};
  const auto s = refresh_deficits(hist, gamma);
  EXPECT_EQ(s.tti, 3u);
  EXPECT_DOUBLE_EQ(s.deficit[0], 5.0);
  EXPECT_DOUBLE_EQ(s.deficit[1], 0.0);
  EXPECT_DOUBLE_EQ(s.delivered[1], 30.0);
}

TEST(RefreshDeficits, ZeroIffTargetReached) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t t = 1 + static_cast<std::size_t>(i % 7);
    const std::vector<double> gamma{u(rng)};
    const double delivered = u(rng) * static_cast<double>(t);
    const auto s = refresh_deficits(with_delivered({delivered}), gamma, t);
    ASSERT_GE(s.deficit[0], 0.0);
    ASSERT_EQ(s.deficit[0] == 0.0, delivered >= static_cast<double>(t) * gamma[0] - kDeficitTolerance);
  }
}

TEST(Consume, Examples) {
  DeficitState s = DeficitState::initial(1);
  s.deficit = {6.0};
  EXPECT_DOUBLE_EQ(consume(s, 0, 4.0).deficit[0], 2.0);
  s.deficit = {2.0};
  EXPECT_DOUBLE_EQ(consume(s, 0, 5.0).deficit[0], 0.0);
  EXPECT_DOUBLE_EQ(consume(s, 0, 5.0).delivered[0], 5.0);
  EXPECT_EQ(consume(s, 0, 0.0).deficit, s.deficit);
  EXPECT_THROW(consume(s, 1, 1.0), IndexError);
  EXPECT_THROW(consume(s, 0, -1.0), ConfigError);
}

TEST(Consume, OrderIndependent) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    // Dyadic amounts keep partial sums exact, so only the clamp can differ.
    std::vector<double> r(5);
    for (auto& x : r) x = std::round(u(rng) * 64.0) / 64.0;
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    for (double start : {total + 3.0, total - 1.0}) {
      DeficitState a = DeficitState::initial(1), b = DeficitState::initial(1);
      a.deficit = b.deficit = {start};
      for (double x : r) a.consume(0, x);
      std::vector<double> p = r;
      std::shuffle(p.begin(), p.end(), rng);
      for (double x : p) b.consume(0, x);
      ASSERT_EQ(a.deficit[0], b.deficit[0]);
      ASSERT_GE(a.deficit[0], 0.0);
      if (start < total) ASSERT_EQ(a.deficit[0], 0.0);
    }
  }
}

TEST(ClassifySlices, Examples) {
  DeficitState s = DeficitState::initial(3);
  s.deficit = {4.0, 2.0, 0.0};
  auto g = classify_slices(s);
  ASSERT_TRUE(g);
  EXPECT_DOUBLE_EQ(g->average, 3.0);
  EXPECT_EQ(g->large, (std::vector<int>{0}));
  EXPECT_EQ(g->small, (std::vector<int>{1}));

  s.deficit = {5.0, 5.0, 0.0};
  g = classify_slices(s);
  EXPECT_EQ(g->large, (std::vector<int>{0, 1}));
  EXPECT_TRUE(g->small.empty());

  s.deficit = {0.0, 0.1, 0.0};
  g = classify_slices(s);
  EXPECT_EQ(g->large, (std::vector<int>{1}));

  s.deficit = {0.0, 0.0, 0.0};
  EXPECT_FALSE(classify_slices(s));
}

TEST(ClassifySlices, PartitionAndScaleInvariance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::bernoulli_distribution zero(0.3);
  for (int i = 0; i < 500; ++i) {
    DeficitState s = DeficitState::initial(6);
    for (auto& d : s.deficit) d = zero(rng) ? 0.0 : u(rng);
    const auto g = classify_slices(s);
    if (!s.any_active()) {
      ASSERT_FALSE(g);
      continue;
    }
    ASSERT_TRUE(g);
    for (std::size_t k = 0; k < 6; ++k) {
      const bool active = s.deficit[k] > 0.0;
      ASSERT_EQ(active, g->is_large(static_cast<int>(k)) || g->is_small(static_cast<int>(k)));
      ASSERT_FALSE(g->is_large(static_cast<int>(k)) && g->is_small(static_cast<int>(k)));
    }
    DeficitState scaled = s;
    for (auto& d : scaled.deficit) d *= 4.0;
    const auto h = classify_slices(scaled);
    ASSERT_EQ(h->large, g->large);
    ASSERT_EQ(h->small, g->small);
  }
}

TEST(PFMetric, Examples) {
  const SlicingPlan plan = consecutive_plan({2, 1}, {1.0, 1.0});
  PFState pf(plan);
  pf.set_accumulated({4.0, 4.0, 0.0});
  pf.set_gains(1, [](std::size_t, std::size_t) { return 2.0; });
  EXPECT_DOUBLE_EQ(pf_metric(pf, 0, 0), pf_metric(pf, 1, 0));

  pf.set_accumulated({4.0, 2.0, 8.0});  // R_hat = (1, 0.5)
  EXPECT_DOUBLE_EQ(pf.normalized_rate(1), 0.5);
  EXPECT_DOUBLE_EQ(pf_metric(pf, 1, 0) / pf_metric(pf, 0, 0), 2.0);

  // Single-user slice: g_hat = 1 and R_hat = 1.
  pf.set_gains(1, [](std::size_t k, std::size_t) { return k == 2 ? 0.3 : 1.0; });
  EXPECT_DOUBLE_EQ(pf.normalized_gain(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(pf_metric(pf, 2, 0), 1.0 / pf.normalized_rate(2));
}

TEST(PFMetric, WarmStartKeepsMetricFinite) {
  const SlicingPlan plan = consecutive_plan({3}, {1.0});
  PFState pf(plan, 1e-6);
  pf.set_gains(2, [](std::size_t k, std::size_t b) { return 1.0 + static_cast<double>(k + b); });
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(std::isfinite(pf_metric(pf, k, 1)));
  pf.record(std::vector<double>{5.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(pf.normalized_rate(1), 1e-6);
  EXPECT_DOUBLE_EQ(pf.normalized_rate(2), 0.2);
}

TEST(PFMetric, SliceScaleLeavesRankingUnchanged) {
  const SlicingPlan plan = consecutive_plan({4, 3}, {1.0, 1.0});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g(7), acc(7);
    for (auto& x : g) x = u(rng);
    for (auto& x : acc) x = u(rng);
    PFState a(plan), b(plan);
    a.set_accumulated(acc);
    b.set_accumulated(acc);
    const double c = u(rng);
    a.set_gains(1, [&](std::size_t k, std::size_t) { return g[k]; });
    b.set_gains(1, [&](std::size_t k, std::size_t) { return k < 4 ? c * g[k] : g[k]; });
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y)
        ASSERT_EQ(pf_metric(a, x, 0) < pf_metric(a, y, 0), pf_metric(b, x, 0) < pf_metric(b, y, 0));
  }
}

TEST(JainsIndex, Examples) {
  EXPECT_DOUBLE_EQ(*jains_index(std::vector<double>{3, 3, 3}), 1.0);
  EXPECT_DOUBLE_EQ(*jains_index(std::vector<double>{1, 0}), 0.5);
  EXPECT_NEAR(*jains_index(std::vector<double>{1, 2, 3}), 36.0 / 42.0, 1e-15);
  EXPECT_FALSE(jains_index(std::vector<double>{0, 0}));
  EXPECT_FALSE(jains_index(std::vector<double>{}));
  EXPECT_THROW(jains_index(std::vector<double>{1, -1}), ConfigError);
}

TEST(SlicingPlan, Validation) {
  EXPECT_THROW(consecutive_plan({2}, {-1.0}), ConfigError);
  EXPECT_THROW(SlicingPlan({SliceConfig{0, {0, 1}, 1.0}, SliceConfig{1, {1}, 1.0}}, 2), ConfigError);
  EXPECT_THROW(SlicingPlan({SliceConfig{0, {3}, 1.0}}, 2), ConfigError);
  EXPECT_THROW(SlicingPlan({SliceConfig{0, {}, 1.0}}, 2), ConfigError);
  const SlicingPlan p({SliceConfig{0, {2}, 1.0}}, 3);
  EXPECT_EQ(p.slice_of(2), 0);
  EXPECT_EQ(p.slice_of(0), -1);
}

TEST(SlaPresets, MatchPublishedTable) {
  EXPECT_EQ(std::vector<double>(sla_presets::kSmallLoose.begin(), sla_presets::kSmallLoose.end()),
            (std::vector<double>{51.9, 46.2, 50, 53.8}));
  EXPECT_EQ(std::vector<double>(sla_presets::kSmallTight.begin(), sla_presets::kSmallTight.end()),
            (std::vector<double>{90.4, 84.6, 88.5, 92.3}));
  EXPECT_EQ(std::vector<double>(sla_presets::kLargeLoose.begin(), sla_presets::kLargeLoose.end()),
            (std::vector<double>{16.7, 46.4, 42.3, 51.7, 19.2, 50.5, 48.1, 53.6}));
  EXPECT_EQ(std::vector<double>(sla_presets::kLargeTight.begin(), sla_presets::kLargeTight.end()),
            (std::vector<double>{55.8, 84.2, 80.8, 91.2, 57.7, 88.3, 86.5, 92.4}));

  const auto cfg = preset_from_name("real-world-hc-tight");
  ASSERT_EQ(cfg.slices.size(), 8u);
  EXPECT_DOUBLE_EQ(cfg.slices[3].sla_mbps, 91.2);
  std::vector<std::size_t> sizes;
  for (const auto& s : cfg.slices) sizes.push_back(s.users.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 12, 18, 20, 25, 33, 45, 37}));
}

TEST(LinkBudget, MbpsConversionRoundTrips) {
  const LinkBudget b;
  EXPECT_DOUBLE_EQ(b.bits_per_tti_from_mbps(50.0), 50'000.0);
  EXPECT_DOUBLE_EQ(b.mbps_from_bits_per_tti(50'000.0), 50.0);
}
