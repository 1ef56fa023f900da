#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mmslice/harness.hpp"

using namespace mmslice;

namespace {

// Two clusters of three users on 8 antennas and 6 RBs; one slice per cluster.
ExperimentConfig tiny(SchedulerKind kind, double sla_mbps = 8.0, std::size_t ttis = 30) {
  ExperimentConfig c;
  c.antennas = 8;
  c.rbs = 6;
  c.ttis = ttis;
  c.warmup = 2;
  c.cluster.num_clusters = 2;
  c.cluster.users_per_cluster = {3, 3};
  c.cluster.num_users = 6;
  c.cluster.intra_cluster_corr = 0.8;
  c.cluster.inter_cluster_corr = 0.1;
  c.cluster.seed = 5;
  c.slices = {SliceSpec{{0, 1, 2}, sla_mbps}, SliceSpec{{3, 4, 5}, sla_mbps * 0.75}};
  c.scheduler = kind;
  c.sched.max_users_per_rb = 2;
  return c;
}

}  // namespace

TEST(RunExperiment, ZeroSlaAllocatesNothing) {
  auto c = tiny(SchedulerKind::Drs, 0.0, 1);
  const auto r = run_experiment(c);
  EXPECT_EQ(r.metrics.avg_rbs, 0.0);
  EXPECT_EQ(r.metrics.violations, 0u);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].allocation.num_rbs(), 0u);
}

TEST(RunExperiment, Deterministic) {
  for (auto kind : {SchedulerKind::Dro, SchedulerKind::Drs, SchedulerKind::GreedyPlus, SchedulerKind::DrsParallel}) {
    const auto c = tiny(kind);
    const auto a = run_experiment(c), b = run_experiment(c);
    EXPECT_EQ(a.metrics.avg_rbs, b.metrics.avg_rbs);
    EXPECT_EQ(a.metrics.slice_mbps, b.metrics.slice_mbps);
    EXPECT_EQ(a.metrics.channel_hash, b.metrics.channel_hash);
    std::ostringstream la, lb;
    write_tti_log_csv(la, a.log, 2);
    write_tti_log_csv(lb, b.log, 2);
    EXPECT_EQ(la.str(), lb.str());
    std::ostringstream ma, mb;
    write_metrics_csv(ma, {a.metrics});
    write_metrics_csv(mb, {b.metrics});
    EXPECT_EQ(ma.str(), mb.str());
  }
}

TEST(RunExperiment, BranchAndBoundNoWorseThanDro) {
  for (double sla : {3.0, 5.0, 8.0}) {
    const auto bnb = run_experiment(tiny(SchedulerKind::Bnb, sla, 20));
    const auto dro = run_experiment(tiny(SchedulerKind::Dro, sla, 20));
    EXPECT_EQ(bnb.metrics.bnb_fallbacks, 0u);
    EXPECT_LE(bnb.metrics.avg_rbs, dro.metrics.avg_rbs) << "sla " << sla;
  }
}

TEST(RunExperiment, ThroughputAccountingCloses) {
  const auto c = tiny(SchedulerKind::Drs);
  const auto r = run_experiment(c);
  std::vector<double> bits(2, 0.0);
  for (const auto& rec : r.log)
    for (std::size_t s = 0; s < 2; ++s) bits[s] += rec.allocation.delivered[s];
  for (std::size_t s = 0; s < 2; ++s) {
    const double from_metrics = r.metrics.slice_mbps[s] * 1e6 * static_cast<double>(c.ttis) * c.sched.budget.tti_s;
    EXPECT_NEAR(from_metrics, bits[s], 1e-6 * bits[s]);
  }
}

TEST(RunExperiment, FeasibleLoadMeetsSlaOverTime) {
  for (auto kind : {SchedulerKind::Greedy, SchedulerKind::GreedyPlus, SchedulerKind::Dro, SchedulerKind::Drs,
                    SchedulerKind::Bnb}) {
    const auto c = tiny(kind, 6.0, 40);
    const auto r = run_experiment(c);
    for (std::size_t s = 0; s < 2; ++s) {
      const double gamma = r.metrics.slice_sla_mbps[s];
      EXPECT_GE(r.metrics.slice_mbps[s], gamma - gamma / static_cast<double>(c.ttis)) << to_string(kind);
    }
  }
}

TEST(CompareSchedulers, SingleRowEqualsRun) {
  const auto c = tiny(SchedulerKind::Dro);
  const auto rows = compare_schedulers(c, {SchedulerKind::Dro});
  ASSERT_EQ(rows.size(), 1u);
  const auto run = run_experiment(c).metrics;
  EXPECT_EQ(rows[0].avg_rbs, run.avg_rbs);
  EXPECT_EQ(rows[0].std_rbs, run.std_rbs);
  EXPECT_EQ(rows[0].violations, run.violations);
  EXPECT_EQ(rows[0].slice_mbps, run.slice_mbps);
}

TEST(CompareSchedulers, SameChannelForEveryScheduler) {
  const auto rows = compare_schedulers(tiny(SchedulerKind::Dro),
                                       {SchedulerKind::Greedy, SchedulerKind::Dro, SchedulerKind::Drs});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].channel_hash, rows[1].channel_hash);
  EXPECT_EQ(rows[1].channel_hash, rows[2].channel_hash);
  EXPECT_NE(rows[0].channel_hash, 0u);
}

TEST(BenchLatency, SingleRepetition) {
  const auto st = bench_latency(tiny(SchedulerKind::Dro), SchedulerKind::Dro, 1, 1);
  ASSERT_EQ(st.samples_us.size(), 1u);
  EXPECT_EQ(st.median_us, st.samples_us[0]);
  EXPECT_THROW(bench_latency(tiny(SchedulerKind::Dro), SchedulerKind::Dro, 0), ConfigError);
}

TEST(Presets, NamesAndDimensions) {
  for (const auto& name : preset_names()) {
    const auto c = preset_from_name(name);
    EXPECT_EQ(c.name, name);
    EXPECT_EQ(c.antennas, 64u);
    EXPECT_EQ(c.rbs, 52u);
    EXPECT_NO_THROW(c.validate()) << name;
  }
  EXPECT_EQ(preset_from_name("small-lc-tight").cluster.num_users, 16);
  EXPECT_EQ(preset_from_name("medium-hc-loose").cluster.num_users, 80);
  EXPECT_EQ(preset_from_name("real-world-fm-loose").cluster.num_users, 200);
  EXPECT_THROW(preset_from_name("small-sm-loose"), ConfigError);
  EXPECT_THROW(preset_from_name("small-hc-loose-pf"), ConfigError);
  EXPECT_THROW(preset_from_name("huge-hc-loose"), ConfigError);
}

TEST(Presets, LowCorrelationSpreadsSlicesAcrossClusters) {
  const auto lc = preset_from_name("small-lc-loose"), hc = preset_from_name("small-hc-loose");
  for (const auto& s : hc.slices)
    for (int k : s.users) EXPECT_EQ(hc.cluster.cluster_of(k), hc.cluster.cluster_of(s.users.front()));
  for (const auto& s : lc.slices) {
    std::set<int> clusters;
    for (int k : s.users) clusters.insert(lc.cluster.cluster_of(k));
    EXPECT_EQ(clusters.size(), s.users.size());
  }
}

TEST(Csv, Headers) {
  const auto r = run_experiment(tiny(SchedulerKind::Dro, 8.0, 3));
  std::ostringstream m, t, l;
  write_metrics_csv(m, {r.metrics});
  write_timing_csv(t, {r.metrics});
  write_tti_log_csv(l, r.log, 2);
  EXPECT_EQ(m.str().substr(0, m.str().find('\n')),
            "scheduler,ttis,avg_rbs,std_rbs,violations,bnb_fallbacks,mbps_s0,mbps_s1,jfi_s0,jfi_s1");
  EXPECT_EQ(t.str().substr(0, t.str().find('\n')),
            "scheduler,decision_us_mean,decision_us_median,decision_us_p95,grouping_ms,groupings");
  EXPECT_EQ(l.str().rfind("tti,rb,slice_ids,user_ids,per_user_rate_bits", 0), 0u);
}
