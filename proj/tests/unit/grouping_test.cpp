#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mmslice/grouping.hpp"
#include "test_util.hpp"

using namespace mmslice;
using mmslice::testing::tensor_from;

namespace {

bool proper(const CorrelationGraph& g, const UserGrouping& c) {
  for (const auto& grp : c.groups)
    for (std::size_t i = 0; i < grp.size(); ++i)
      for (std::size_t j = i + 1; j < grp.size(); ++j)
        if (g.adjacent(static_cast<std::size_t>(grp[i]), static_cast<std::size_t>(grp[j]))) return false;
  return true;
}

bool partitions(const UserGrouping& c, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (std::size_t g = 0; g < c.groups.size(); ++g)
    for (int u : c.groups[g]) {
      if (u < 0 || static_cast<std::size_t>(u) >= n || seen[static_cast<std::size_t>(u)]++) return false;
      if (c.group_of[static_cast<std::size_t>(u)] != static_cast<int>(g)) return false;
    }
  return std::all_of(seen.begin(), seen.end(), [](int x) { return x == 1; });
}

CorrelationGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  CorrelationGraph g(n, 0.5);
  std::bernoulli_distribution edge(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) g.connect(i, j);
  return g;
}

// Smallest k admitting a proper coloring, by exhaustive search.
std::size_t chromatic_number(const CorrelationGraph& g) {
  const std::size_t n = g.num_users();
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<std::size_t> col(n, 0);
    while (true) {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i)
        for (std::size_t j = i + 1; j < n && ok; ++j) ok = !(g.adjacent(i, j) && col[i] == col[j]);
      if (ok) return k;
      std::size_t pos = 0;
      while (pos < n && ++col[pos] == k) col[pos++] = 0;
      if (pos == n) break;
    }
  }
  return n;
}

}  // namespace

TEST(CorrelationGraph, EdgesFollowStrictThreshold) {
  // users: a, a (identical), (0,1) orthogonal to a, and (1,1) at 1/sqrt(2)
  const auto h = tensor_from(2, 4, 1, [](std::size_t, std::size_t m, std::size_t k) {
    static const float v[4][2] = {{1, 0}, {1, 0}, {0, 1}, {1, 1}};
    return cfloat(v[k][m], 0.0f);
  });
  const auto g = build_correlation_graph(h, 0, 0, 0.5);
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_FALSE(g.adjacent(0, 2));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_FALSE(g.adjacent(i, i));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g.adjacent(i, j), g.adjacent(j, i));
  }
  // Exactly at the threshold: no edge.
  const double c = inter_user_correlation(h, 0, 0, 0, 3);
  EXPECT_FALSE(build_correlation_graph(h, 0, 0, c).adjacent(0, 3));
  EXPECT_TRUE(build_correlation_graph(h, 0, 0, std::nextafter(c, 0.0)).adjacent(0, 3));
}

TEST(CorrelationGraph, RejectsBadThreshold) {
  const auto h = tensor_from(2, 2, 1, [](auto, auto, auto) { return cfloat(1.0f, 0.0f); });
  EXPECT_THROW(build_correlation_graph(h, 0, 0, 0.0), ConfigError);
  EXPECT_THROW(build_correlation_graph(h, 0, 0, 1.0), ConfigError);
}

TEST(CorrelationGraph, ZeroNormUserIsUndefined) {
  const auto h = tensor_from(2, 2, 1, [](std::size_t, std::size_t, std::size_t k) {
    return k == 0 ? cfloat(1.0f, 0.0f) : cfloat(0.0f, 0.0f);
  });
  EXPECT_THROW(build_correlation_graph(h, 0, 0, 0.5), UndefinedCorrelationError);
}

TEST(ColorGraph, SmallGraphs) {
  CorrelationGraph empty(4, 0.5);
  EXPECT_EQ(color_graph(empty).num_groups(), 1u);

  CorrelationGraph complete(4, 0.5);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) complete.connect(i, j);
  EXPECT_EQ(color_graph(complete).num_groups(), 4u);

  CorrelationGraph path(3, 0.5);  // 0 - 1 - 2
  path.connect(0, 1);
  path.connect(1, 2);
  ASSERT_EQ(chromatic_number(path), 2u);
  const auto c = color_graph(path);
  ASSERT_EQ(c.num_groups(), 2u);
  EXPECT_EQ(c.groups[0], (std::vector<int>{0, 2}));
  EXPECT_EQ(c.groups[1], (std::vector<int>{1}));
}

TEST(ColorGraph, RandomGraphsProperBoundedDeterministic) {
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_graph(5 + static_cast<std::size_t>(i % 30), 0.1 + 0.05 * (i % 12), rng);
    const auto c = color_graph(g);
    ASSERT_TRUE(proper(g, c));
    ASSERT_TRUE(partitions(c, g.num_users()));
    ASSERT_LE(c.num_groups(), g.max_degree() + 1);
    ASSERT_EQ(color_graph(g), c);
  }
}

TEST(ColorGraph, NeverBelowChromaticNumber) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto g = random_graph(7, 0.4, rng);
    EXPECT_GE(color_graph(g).num_groups(), chromatic_number(g));
  }
}

TEST(ColorGraph, CsvDump) {
  CorrelationGraph path(3, 0.5);
  path.connect(0, 1);
  path.connect(1, 2);
  std::ostringstream os;
  write_grouping_csv(os, color_graph(path));
  EXPECT_EQ(os.str(), "user_id,group_id\n0,0\n1,1\n2,0\n");
}

TEST(GroupingProvider, PerRbPeriodOneRefreshesEveryRbEveryTti) {
  ClusterSpec spec;
  spec.num_clusters = 2;
  spec.users_per_cluster = {3, 3};
  spec.num_users = 6;
  SyntheticChannel src(spec, 8, 4, 5, MobilityMode::slow(0.3));
  auto p = grouping_schedule(1, GroupingScope::PerRb);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto frame = src.frame(t);
    EXPECT_TRUE(p.prepare(frame, t));
    const auto snap = p.snapshot();
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_EQ(snap->for_rb(b).rb, b);
      EXPECT_EQ(snap->for_rb(b).tti_begin, t);
      EXPECT_EQ(snap->for_rb(b), [&] {
        auto g = color_graph(build_correlation_graph(frame, b, 0.5));
        g.rb = b;
        g.tti_begin = t;
        g.tti_end = t + 1;
        return g;
      }());
    }
  }
  EXPECT_EQ(p.groupings_computed(), 20u);
}

TEST(GroupingProvider, WholeRunPeriodComputesOnce) {
  ClusterSpec spec;
  spec.num_clusters = 2;
  spec.users_per_cluster = {2, 2};
  spec.num_users = 4;
  SyntheticChannel src(spec, 8, 3, 6, MobilityMode::slow(0.2));
  auto p = grouping_schedule(6, GroupingScope::PerTti);
  for (std::size_t t = 0; t < 6; ++t) p.prepare(src.frame(t), t);
  EXPECT_EQ(p.groupings_computed(), 1u);

  auto once = grouping_schedule(1, GroupingScope::Once);
  for (std::size_t t = 0; t < 6; ++t) once.prepare(src.frame(t), t);
  EXPECT_EQ(once.groupings_computed(), 1u);
}

TEST(GroupingProvider, StaticChannelCacheMatchesRecomputation) {
  ClusterSpec spec;
  spec.num_clusters = 4;
  spec.users_per_cluster = {3, 3, 3, 3};
  spec.num_users = 12;
  spec.intra_cluster_corr = 0.85;
  SyntheticChannel src(spec, 16, 6, 12, MobilityMode{});
  for (std::size_t period : {1u, 3u, 5u}) {
    GroupingPolicy pol;
    pol.update_period = period;
    GroupingProvider p(pol);
    for (std::size_t t = 0; t < 12; ++t) {
      const auto frame = src.frame(t);
      p.prepare(frame, t);
      auto cached = p.snapshot()->for_rb(0);
      const auto fresh = color_graph(build_tti_correlation_graph(frame, 0.5));
      EXPECT_EQ(cached.groups, fresh.groups) << "period " << period << " t " << t;
    }
  }
}

TEST(GroupingProvider, BadPolicyRejected) {
  GroupingPolicy p;
  p.update_period = 0;
  EXPECT_THROW(GroupingProvider{p}, ConfigError);
  p.update_period = 1;
  p.threshold = 1.2;
  EXPECT_THROW(GroupingProvider{p}, ConfigError);
}
