#pragma once

// TTI-loop simulation driver, scenario presets, metrics and latency
// benchmarks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmslice/channel.hpp"
#include "mmslice/grouping.hpp"
#include "mmslice/schedulers.hpp"
#include "mmslice/sla.hpp"

namespace mmslice {

enum class NetworkSize { Small, Medium, RealWorld };
enum class Scenario { LC, HC, SM, FM };
enum class SlaLevel { Loose, Tight };

struct SliceSpec {
  std::vector<int> users;
  double sla_mbps = 0.0;
  Policy policy = Policy::MaxRate;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::size_t antennas = 64;
  std::size_t rbs = 52;
  std::size_t ttis = 1000;
  std::size_t warmup = 10;  // TTIs excluded from violation counting
  ClusterSpec cluster;
  MobilityMode mobility;
  std::vector<SliceSpec> slices;
  std::optional<std::string> trace_path;  // replaces the synthetic channel

  SchedulerKind scheduler = SchedulerKind::Dro;
  SchedulerConfig sched;
  GroupingPolicy grouping;
  double pf_warm_start = 1e-6;

  SlicingPlan plan() const {
    std::vector<SliceConfig> out;
    for (std::size_t s = 0; s < slices.size(); ++s) {
      const auto& sp = slices[s];
      if (!(sp.sla_mbps >= 0.0) || !std::isfinite(sp.sla_mbps))
        throw ConfigError("slice." + std::to_string(s) + ".sla_mbps", "SLA must be a finite non-negative throughput");
      out.push_back(SliceConfig{static_cast<int>(s), sp.users, sched.budget.bits_per_tti_from_mbps(sp.sla_mbps),
                                sp.policy, mode_of(scheduler)});
    }
    return SlicingPlan(std::move(out), static_cast<std::size_t>(cluster.num_users));
  }

  bool uses_pf() const {
    return std::any_of(slices.begin(), slices.end(), [](const SliceSpec& s) { return s.policy == Policy::ProportionalFair; });
  }

  void validate() const {
    if (antennas == 0) throw ConfigError("antennas", "must be positive");
    if (rbs == 0) throw ConfigError("rbs", "must be positive");
    if (ttis == 0) throw ConfigError("ttis", "must be positive");
    if (slices.empty()) throw ConfigError("slices", "at least one slice required");
    if (!trace_path) {
      cluster.validate();
      mobility.validate();
    }
    sched.validate(antennas);
    grouping.validate();
    (void)plan();
  }
};

namespace detail {

// Slices take consecutive chunks of `order`.
inline std::vector<std::vector<int>> chunk(const std::vector<int>& order, const std::vector<int>& sizes) {
  std::vector<std::vector<int>> out;
  std::size_t pos = 0;
  for (int n : sizes) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(n)));
    pos += static_cast<std::size_t>(n);
  }
  return out;
}

// Users in round-robin cluster order, so consecutive users sit in
// different clusters.
inline std::vector<int> interleaved_users(const ClusterSpec& spec) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(spec.num_clusters));
  for (int k = 0; k < spec.num_users; ++k) members[static_cast<std::size_t>(spec.cluster_of(k))].push_back(k);
  std::vector<int> order;
  for (std::size_t i = 0; order.size() < static_cast<std::size_t>(spec.num_users); ++i)
    for (const auto& m : members)
      if (i < m.size()) order.push_back(m[i]);
  return order;
}

}  // namespace detail

struct PresetName {
  NetworkSize size = NetworkSize::Small;
  Scenario scenario = Scenario::HC;
  SlaLevel level = SlaLevel::Loose;
  bool pf = false;

  std::string str() const {
    static const char* sizes[] = {"small", "medium", "real-world"};
    static const char* scens[] = {"lc", "hc", "sm", "fm"};
    return std::string(sizes[static_cast<int>(size)]) + "-" + scens[static_cast<int>(scenario)] + "-" +
           (level == SlaLevel::Loose ? "loose" : "tight") + (pf ? "-pf" : "");
  }
};

// Link budget used by the presets. Tuned so that tight SLAs remain feasible
// for the orthogonal baselines on the synthetic channels.
inline LinkBudget preset_link_budget() {
  LinkBudget b;
  b.tx_power_w = 1.0;
  b.noise_w = 0.05;
  return b;
}

inline ExperimentConfig make_preset(NetworkSize size, Scenario scenario, SlaLevel level,
                                    std::optional<std::size_t> k = std::nullopt, bool pf = false) {
  ExperimentConfig cfg;
  cfg.antennas = 64;
  cfg.rbs = 52;
  cfg.sched.budget = preset_link_budget();
  cfg.grouping.update_period = 10;

  std::vector<int> slice_sizes;
  std::vector<double> sla;
  auto& c = cfg.cluster;
  c.intra_cluster_corr = 0.85;
  c.inter_cluster_corr = 0.1;
  switch (size) {
    case NetworkSize::Small:
      c.num_clusters = 4;
      c.users_per_cluster = {4, 4, 4, 4};
      c.los_flags = {true, true, true, true};
      slice_sizes = {4, 4, 4, 4};
      sla.assign(level == SlaLevel::Loose ? sla_presets::kSmallLoose.begin() : sla_presets::kSmallTight.begin(),
                 level == SlaLevel::Loose ? sla_presets::kSmallLoose.end() : sla_presets::kSmallTight.end());
      cfg.sched.max_users_per_rb = k.value_or(8);
      break;
    case NetworkSize::Medium:
      c.num_clusters = 4;
      c.users_per_cluster = {20, 20, 20, 20};
      c.los_flags = pf ? std::vector<bool>{true, true, false, false} : std::vector<bool>{true, true, true, true};
      slice_sizes.assign(8, 10);
      cfg.sched.max_users_per_rb = k.value_or(16);
      break;
    case NetworkSize::RealWorld:
      c.num_clusters = 8;
      c.users_per_cluster.assign(8, 25);
      c.los_flags = {true, true, true, true, false, false, false, false};
      slice_sizes = {10, 12, 18, 20, 25, 33, 45, 37};
      cfg.sched.max_users_per_rb = k.value_or(16);
      break;
  }
  if (size != NetworkSize::Small)
    sla.assign(level == SlaLevel::Loose ? sla_presets::kLargeLoose.begin() : sla_presets::kLargeTight.begin(),
               level == SlaLevel::Loose ? sla_presets::kLargeLoose.end() : sla_presets::kLargeTight.end());
  c.num_users = std::accumulate(c.users_per_cluster.begin(), c.users_per_cluster.end(), 0);

  std::vector<int> order;
  if (scenario == Scenario::LC) {
    order = detail::interleaved_users(c);
  } else {
    order.resize(static_cast<std::size_t>(c.num_users));
    std::iota(order.begin(), order.end(), 0);
  }
  const auto members = detail::chunk(order, slice_sizes);
  for (std::size_t s = 0; s < members.size(); ++s)
    cfg.slices.push_back(SliceSpec{members[s], sla[s], pf ? Policy::ProportionalFair : Policy::MaxRate});

  if (scenario == Scenario::SM) cfg.mobility = MobilityMode::slow(0.05);
  if (scenario == Scenario::FM) cfg.mobility = MobilityMode::fast(0.05, 0.2);
  if (scenario != Scenario::LC && scenario != Scenario::HC) cfg.grouping.update_period = 1;

  cfg.sched.bnb = BnbLimits{cfg.rbs, cfg.slices.size(), 200'000};

  cfg.name = PresetName{size, scenario, level, pf}.str();
  return cfg;
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "lc") return Scenario::LC;
  if (s == "hc") return Scenario::HC;
  if (s == "sm") return Scenario::SM;
  if (s == "fm") return Scenario::FM;
  throw ConfigError("scenario", "unknown scenario '" + s + "' (expected lc|hc|sm|fm)");
}

inline SlaLevel parse_sla_level(const std::string& s) {
  if (s == "loose") return SlaLevel::Loose;
  if (s == "tight") return SlaLevel::Tight;
  throw ConfigError("sla", "unknown SLA level '" + s + "' (expected loose|tight)");
}

// "<small|medium|real-world>-<lc|hc|sm|fm>-<loose|tight>[-pf]".
inline PresetName parse_preset_name(const std::string& name) {
  std::string rest = name;
  auto take = [&](const std::vector<std::string>& options) -> int {
    for (std::size_t i = 0; i < options.size(); ++i)
      if (rest.rfind(options[i], 0) == 0) {
        rest = rest.substr(options[i].size());
        if (!rest.empty() && rest.front() == '-') rest.erase(0, 1);
        return static_cast<int>(i);
      }
    return -1;
  };
  const int size = take({"small", "medium", "real-world"});
  const int scen = take({"lc", "hc", "sm", "fm"});
  const int sla = take({"loose", "tight"});
  const bool pf = rest == "pf";
  if (size < 0 || scen < 0 || sla < 0 || !(rest.empty() || pf))
    throw ConfigError("preset", "unknown preset '" + name +
                                    "' (expected <small|medium|real-world>-<lc|hc|sm|fm>-<loose|tight>[-pf])");
  PresetName out{static_cast<NetworkSize>(size), static_cast<Scenario>(scen), static_cast<SlaLevel>(sla), pf};
  if (pf && out.size != NetworkSize::Medium)
    throw ConfigError("preset", "the proportional-fair preset exists for the medium network only");
  if ((out.scenario == Scenario::SM || out.scenario == Scenario::FM) && out.size != NetworkSize::RealWorld)
    throw ConfigError("preset", "mobility scenarios exist for the real-world network only");
  return out;
}

inline ExperimentConfig preset_from_name(const std::string& name) {
  const PresetName p = parse_preset_name(name);
  return make_preset(p.size, p.scenario, p.level, std::nullopt, p.pf);
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* size : {"small", "medium", "real-world"})
    for (const char* scen : {"lc", "hc", "sm", "fm"})
      for (const char* sla : {"loose", "tight"}) {
        const std::string sz = size, sc = scen;
        if ((sc == "sm" || sc == "fm") && sz != "real-world") continue;
        out.push_back(sz + "-" + sc + "-" + sla);
      }
  out.push_back("medium-hc-loose-pf");
  out.push_back("medium-hc-tight-pf");
  return out;
}

struct TtiRecord {
  Allocation allocation;
  std::vector<double> residual;  // max(0, (t+1) gamma_s - cumulative delivered) after the TTI
  double decision_us = 0.0;
  bool bnb_fallback = false;
};

struct Metrics {
  std::string scheduler;
  std::size_t ttis = 0;
  std::size_t warmup = 0;
  double avg_rbs = 0.0;
  double std_rbs = 0.0;
  std::vector<double> slice_mbps;
  std::vector<double> slice_sla_mbps;
  std::size_t violations = 0;  // TTIs after warm-up with any slice short of its running target
  std::vector<std::size_t> slice_violations;
  std::vector<std::optional<double>> slice_jfi;
  double decision_us_mean = 0.0;
  double decision_us_median = 0.0;
  double decision_us_p95 = 0.0;
  double grouping_ms = 0.0;
  std::size_t groupings = 0;
  std::size_t bnb_fallbacks = 0;
  std::uint64_t channel_hash = 0;
};

struct RunResult {
  Metrics metrics;
  std::vector<TtiRecord> log;  // empty when not kept
};

struct RunOptions {
  bool keep_log = true;
};

namespace detail {

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline bool needs_grouping(SchedulerKind k) {
  return k == SchedulerKind::Dro || k == SchedulerKind::Drs || k == SchedulerKind::DroParallel ||
         k == SchedulerKind::DrsParallel;
}

inline std::unique_ptr<ChannelSource> open_source(const ExperimentConfig& cfg) {
  if (cfg.trace_path) {
    auto tensor = std::make_shared<const ChannelTensor>(load_trace(*cfg.trace_path));
    if (tensor->num_antennas() != cfg.antennas || tensor->num_rbs() != cfg.rbs ||
        tensor->num_users() != static_cast<std::size_t>(cfg.cluster.num_users))
      throw ConfigError("trace", "trace dimensions do not match the configured network");
    if (tensor->num_ttis() < cfg.ttis)
      throw ConfigError("trace", "trace holds " + std::to_string(tensor->num_ttis()) + " TTIs, " +
                                     std::to_string(cfg.ttis) + " requested");
    return std::make_unique<TensorSource>(std::move(tensor));
  }
  return std::make_unique<SyntheticChannel>(cfg.cluster, cfg.antennas, cfg.rbs, cfg.ttis, cfg.mobility);
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  const SlicingPlan plan = cfg.plan();
  const auto sla = plan.sla_bits();
  const std::size_t slices = plan.num_slices(), users = plan.num_users();
  auto source = detail::open_source(cfg);

  std::optional<GroupingProvider> grouping;
  if (detail::needs_grouping(cfg.scheduler)) grouping.emplace(cfg.grouping);
  std::optional<PFState> pf;
  if (cfg.uses_pf()) pf.emplace(plan, cfg.pf_warm_start);

  RunResult out;
  Metrics& m = out.metrics;
  m.scheduler = to_string(cfg.scheduler);
  m.ttis = cfg.ttis;
  m.warmup = cfg.warmup;
  m.slice_violations.assign(slices, 0);
  for (double g : sla) m.slice_sla_mbps.push_back(cfg.sched.budget.mbps_from_bits_per_tti(g));

  DeficitState state = DeficitState::initial(slices);
  std::vector<double> rb_counts, times, user_bits(users, 0.0);
  double prev_mean = 0.0;
  std::uint64_t hash = 1469598103934665603ULL;

  for (std::size_t t = 0; t < cfg.ttis; ++t) {
    const FrameView frame = source->frame(t);
    hash = (hash ^ frame.hash()) * 1099511628211ULL;
    state = refresh_deficits(std::move(state), sla, t + 1);

    std::shared_ptr<const GroupingSnapshot> snap;
    if (grouping) {
      const auto g0 = clock::now();
      grouping->prepare(frame, t);
      m.grouping_ms += std::chrono::duration<double, std::milli>(clock::now() - g0).count();
      snap = grouping->snapshot();
    }

    const TtiInput in{frame, t, &plan, state, snap, pf ? &*pf : nullptr, prev_mean};
    ScheduleStats stats;
    const auto t0 = clock::now();
    Allocation alloc = schedule(cfg.scheduler, in, cfg.sched, &stats);
    const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();

    double tti_bits = 0.0;
    for (std::size_t s = 0; s < slices; ++s) {
      state.delivered[s] += alloc.delivered[s];
      tti_bits += alloc.delivered[s];
    }
    if (alloc.num_rbs() > 0) prev_mean = tti_bits / static_cast<double>(alloc.num_rbs());

    const auto bits = alloc.per_user_bits(users);
    for (std::size_t k = 0; k < users; ++k) user_bits[k] += bits[k];
    if (pf) pf->record(bits);

    std::vector<double> residual(slices, 0.0);
    bool violated = false;
    for (std::size_t s = 0; s < slices; ++s) {
      const double target = static_cast<double>(t + 1) * sla[s];
      const double r = target - state.delivered[s];
      if (r > kDeficitTolerance + 1e-9 * target) {
        residual[s] = r;
        if (t >= cfg.warmup) {
          ++m.slice_violations[s];
          violated = true;
        }
      }
    }
    if (violated) ++m.violations;
    if (stats.bnb_fallback) ++m.bnb_fallbacks;

    rb_counts.push_back(static_cast<double>(alloc.num_rbs()));
    times.push_back(us);
    if (opt.keep_log) out.log.push_back(TtiRecord{std::move(alloc), std::move(residual), us, stats.bnb_fallback});
  }

  const double n = static_cast<double>(cfg.ttis);
  m.avg_rbs = std::accumulate(rb_counts.begin(), rb_counts.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rb_counts) var += (r - m.avg_rbs) * (r - m.avg_rbs);
  m.std_rbs = std::sqrt(var / n);
  for (std::size_t s = 0; s < slices; ++s)
    m.slice_mbps.push_back(cfg.sched.budget.mbps_from_bits_per_tti(state.delivered[s] / n));
  for (const auto& sc : plan.slices()) {
    std::vector<double> x;
    for (int k : sc.users) x.push_back(user_bits[static_cast<std::size_t>(k)]);
    m.slice_jfi.push_back(jains_index(x));
  }
  m.decision_us_mean = std::accumulate(times.begin(), times.end(), 0.0) / n;
  m.decision_us_median = detail::percentile(times, 0.5);
  m.decision_us_p95 = detail::percentile(times, 0.95);
  m.groupings = grouping ? grouping->groupings_computed() : 0;
  m.channel_hash = hash;
  return out;
}

// Runs each scheduler on the same channel realization; throws if the
// realizations differ.
inline std::vector<Metrics> compare_schedulers(const ExperimentConfig& cfg, const std::vector<SchedulerKind>& kinds) {
  std::vector<Metrics> rows;
  for (SchedulerKind k : kinds) {
    ExperimentConfig c = cfg;
    c.scheduler = k;
    rows.push_back(run_experiment(c, RunOptions{false}).metrics);
    if (rows.back().channel_hash != rows.front().channel_hash)
      throw Error("channel realization differs between scheduler runs");
  }
  return rows;
}

struct LatencyStats {
  std::vector<double> samples_us;
  double median_us = 0.0;
  double p95_us = 0.0;
  double mean_us = 0.0;
};

// Per-TTI scheduling time over `repetitions` TTIs after `warmup` untimed
// TTIs. Channel generation, grouping refresh and logging are excluded.
inline LatencyStats bench_latency(const ExperimentConfig& cfg, SchedulerKind kind, std::size_t repetitions,
                                  std::size_t warmup = 5) {
  if (repetitions == 0) throw ConfigError("repetitions", "must be positive");
  ExperimentConfig c = cfg;
  c.scheduler = kind;
  c.ttis = warmup + repetitions;
  const auto res = run_experiment(c, RunOptions{true});
  LatencyStats out;
  for (std::size_t t = warmup; t < res.log.size(); ++t) out.samples_us.push_back(res.log[t].decision_us);
  out.median_us = detail::percentile(out.samples_us, 0.5);
  out.p95_us = detail::percentile(out.samples_us, 0.95);
  out.mean_us = std::accumulate(out.samples_us.begin(), out.samples_us.end(), 0.0) /
                static_cast<double>(out.samples_us.size());
  return out;
}

// CSV output ---------------------------------------------------------------

namespace detail {

template <class T>
std::string join(const std::vector<T>& v, char sep = ';') {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? std::string(1, sep) : "") << v[i];
  return os.str();
}

}  // namespace detail

// One row per granted RB (or one row with an empty rb for a TTI without
// grants), with the slice residuals after the TTI.
inline void write_tti_log_csv(std::ostream& os, const std::vector<TtiRecord>& log, std::size_t slices) {
  os << "tti,rb,slice_ids,user_ids,per_user_rate_bits";
  for (std::size_t s = 0; s < slices; ++s) os << ",deficit_s" << s;
  os << '\n';
  os << std::setprecision(17);
  for (const auto& rec : log) {
    auto tail = [&] {
      for (double d : rec.residual) os << ',' << d;
      os << '\n';
    };
    if (rec.allocation.grants.empty()) {
      os << rec.allocation.tti << ",,,,";
      tail();
    }
    for (const auto& g : rec.allocation.grants) {
      os << rec.allocation.tti << ',' << g.rb << ',' << detail::join(g.slices) << ',' << detail::join(g.users) << ','
         << detail::join(g.rates);
      tail();
    }
  }
}

// Deterministic for a fixed config and seed; timings go to
// write_timing_csv.
inline void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& rows) {
  const std::size_t slices = rows.empty() ? 0 : rows.front().slice_mbps.size();
  os << "scheduler,ttis,avg_rbs,std_rbs,violations,bnb_fallbacks";
  for (std::size_t s = 0; s < slices; ++s) os << ",mbps_s" << s;
  for (std::size_t s = 0; s < slices; ++s) os << ",jfi_s" << s;
  os << '\n';
  os << std::setprecision(10);
  for (const auto& m : rows) {
    os << m.scheduler << ',' << m.ttis << ',' << m.avg_rbs << ',' << m.std_rbs << ',' << m.violations << ','
       << m.bnb_fallbacks;
    for (double x : m.slice_mbps) os << ',' << x;
    for (const auto& j : m.slice_jfi) {
      os << ',';
      if (j) os << *j;
    }
    os << '\n';
  }
}

inline void write_timing_csv(std::ostream& os, const std::vector<Metrics>& rows) {
  os << "scheduler,decision_us_mean,decision_us_median,decision_us_p95,grouping_ms,groupings\n";
  os << std::setprecision(6);
  for (const auto& m : rows)
    os << m.scheduler << ',' << m.decision_us_mean << ',' << m.decision_us_median << ',' << m.decision_us_p95 << ','
       << m.grouping_ms << ',' << m.groupings << '\n';
}

}  // namespace mmslice
