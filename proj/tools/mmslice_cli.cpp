// mmslice: run, compare and benchmark slice schedulers from the shell.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 scheduler
// infeasible at the requested scale.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mmslice/config.hpp"
#include "mmslice/harness.hpp"

namespace fs = std::filesystem;
using namespace mmslice;

namespace {

struct Common {
  std::string config;
  Overrides o;
  std::string preset, scenario, sla, scheduler, out, trace;
  std::uint64_t seed = 0;
  std::size_t k = 0, ttis = 0, workers = 0, degree = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_scheduler) {
  cmd->add_option("-c,--config", c.config, "experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "named preset, e.g. small-hc-loose");
  cmd->add_option("--scenario", c.scenario, "lc | hc | sm | fm");
  cmd->add_option("--sla", c.sla, "loose | tight");
  if (with_scheduler) cmd->add_option("--scheduler", c.scheduler, "greedy | gp | dro | drs | rs_es | bnb | dro_para | drs_para");
  cmd->add_option("--seed", c.seed, "channel seed");
  cmd->add_option("--k", c.k, "max users per RB");
  cmd->add_option("--ttis", c.ttis, "number of TTIs");
  cmd->add_option("--workers", c.workers, "worker threads for parallel schedulers");
  cmd->add_option("--parallel-degree", c.degree, "RBs per parallel round (0 = adaptive)");
  cmd->add_option("--trace", c.trace, "replay a channel trace instead of the synthetic channel");
  cmd->add_option("-o,--out", c.out, "output directory (else $MMSLICE_OUT_DIR, the file, or ./out)");
}

LoadedConfig resolve(const Common& c, CLI::App* cmd) {
  Overrides o;
  auto set = [&](const char* flag, auto& dst, const auto& v) {
    if (cmd->count(flag)) dst = v;
  };
  set("--preset", o.preset, c.preset);
  set("--scenario", o.scenario, c.scenario);
  set("--sla", o.sla, c.sla);
  if (cmd->get_option_no_throw("--scheduler")) set("--scheduler", o.scheduler, c.scheduler);
  set("--seed", o.seed, c.seed);
  set("--k", o.k, c.k);
  set("--ttis", o.ttis, c.ttis);
  set("--workers", o.workers, c.workers);
  set("--parallel-degree", o.parallel_degree, c.degree);
  set("--trace", o.trace, c.trace);
  set("--out", o.output_dir, c.out);
  return resolve_config(c.config.empty() ? std::nullopt : std::optional<std::string>(c.config), o);
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("output_dir", "cannot create '" + dir + "': " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("output_dir", "cannot write '" + p.string() + "'");
  return os;
}

std::vector<SchedulerKind> parse_list(const std::string& list) {
  std::vector<SchedulerKind> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse_scheduler(item));
  if (out.empty()) throw ConfigError("schedulers", "empty scheduler list");
  return out;
}

void print_summary(const std::vector<Metrics>& rows) {
  for (const auto& m : rows) {
    std::cout << m.scheduler << ": avg_rbs " << m.avg_rbs << " std " << m.std_rbs << " violations " << m.violations
              << " median_us " << m.decision_us_median;
    if (m.bnb_fallbacks) std::cout << " bnb_fallbacks " << m.bnb_fallbacks;
    std::cout << '\n';
  }
}

int cmd_run(const Common& c, CLI::App* cmd) {
  const LoadedConfig lc = resolve(c, cmd);
  const fs::path dir = prepare_dir(*lc.output_dir);
  const RunResult res = run_experiment(lc.experiment);
  {
    auto os = open_out(dir / "metrics.csv");
    write_metrics_csv(os, {res.metrics});
  }
  {
    auto os = open_out(dir / "tti_log.csv");
    write_tti_log_csv(os, res.log, lc.experiment.slices.size());
  }
  {
    auto os = open_out(dir / "timing.csv");
    write_timing_csv(os, {res.metrics});
  }
  print_summary({res.metrics});
  std::cout << "wrote " << (dir / "metrics.csv").string() << ", " << (dir / "tti_log.csv").string() << '\n';
  return 0;
}

int cmd_compare(const Common& c, CLI::App* cmd, const std::string& list) {
  const LoadedConfig lc = resolve(c, cmd);
  const fs::path dir = prepare_dir(*lc.output_dir);
  const auto rows = compare_schedulers(lc.experiment, parse_list(list));
  {
    auto os = open_out(dir / "comparison.csv");
    write_metrics_csv(os, rows);
  }
  {
    auto os = open_out(dir / "timing.csv");
    write_timing_csv(os, rows);
  }
  print_summary(rows);
  std::cout << "wrote " << (dir / "comparison.csv").string() << '\n';
  return 0;
}

int cmd_bench(const Common& c, CLI::App* cmd, const std::string& list, std::size_t reps) {
  const LoadedConfig lc = resolve(c, cmd);
  const fs::path dir = prepare_dir(*lc.output_dir);
  auto os = open_out(dir / "bench.csv");
  os << "scheduler,workers,repetitions,median_us,p95_us,mean_us\n";
  for (SchedulerKind k : parse_list(list)) {
    const auto st = bench_latency(lc.experiment, k, reps);
    os << to_string(k) << ',' << lc.experiment.sched.workers << ',' << reps << ',' << st.median_us << ','
       << st.p95_us << ',' << st.mean_us << '\n';
    std::cout << to_string(k) << ": median " << st.median_us << " us, p95 " << st.p95_us << " us\n";
  }
  return 0;
}

struct TraceArgs {
  std::size_t antennas = 64, rbs = 52, ttis = 10;
  std::vector<int> users_per_cluster{4, 4, 4, 4};
  std::vector<int> los;
  double intra = 0.85, inter = 0.1, innovation = 0.0, hop = 0.0;
  std::uint64_t seed = 1;
  std::string mobility = "static", out;
};

int cmd_gen_trace(const TraceArgs& a) {
  ClusterSpec spec;
  spec.users_per_cluster = a.users_per_cluster;
  spec.num_clusters = static_cast<int>(a.users_per_cluster.size());
  spec.num_users = std::accumulate(a.users_per_cluster.begin(), a.users_per_cluster.end(), 0);
  for (int f : a.los) spec.los_flags.push_back(f != 0);
  spec.intra_cluster_corr = a.intra;
  spec.inter_cluster_corr = a.inter;
  spec.seed = a.seed;
  spec.validate();
  MobilityMode mob;
  if (a.mobility == "static") mob = MobilityMode::stationary(a.innovation);
  else if (a.mobility == "slow") mob = MobilityMode::slow(a.innovation);
  else if (a.mobility == "fast") mob = MobilityMode::fast(a.hop, a.innovation);
  else throw ConfigError("mobility", "expected static, slow or fast, got '" + a.mobility + "'");
  mob.validate();
  if (a.antennas == 0 || a.rbs == 0 || a.ttis == 0) throw ConfigError("dimensions", "must be positive");
  const ChannelTensor h = generate_synthetic(spec, a.antennas, a.rbs, a.ttis, mob);
  save_trace(h, a.out);
  std::cout << "wrote " << a.out << " (" << fs::file_size(a.out) << " bytes)\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  const LoadedConfig lc = load_config(path);
  lc.experiment.validate();
  const auto& e = lc.experiment;
  std::cout << path << ": ok (" << e.cluster.num_users << " users, " << e.slices.size() << " slices, scheduler "
            << to_string(e.scheduler) << ", K " << e.sched.max_users_per_rb << ", " << e.ttis << " TTIs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAN slicing scheduler simulator for massive MIMO"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mmslice 0.1.0");

  Common run_c, cmp_c, bench_c;
  auto* run = app.add_subcommand("run", "run one scheduler and write metrics.csv and tti_log.csv");
  add_common(run, run_c, true);

  auto* cmp = app.add_subcommand("compare", "run several schedulers on one channel realization");
  add_common(cmp, cmp_c, false);
  std::string cmp_list = "greedy,gp,dro,drs";
  cmp->add_option("--schedulers", cmp_list, "comma-separated scheduler list");

  auto* bench = app.add_subcommand("bench", "per-TTI decision latency");
  add_common(bench, bench_c, false);
  std::string bench_list = "dro,drs";
  std::size_t reps = 100;
  bench->add_option("--schedulers", bench_list, "comma-separated scheduler list");
  bench->add_option("--reps", reps, "timed TTIs per scheduler")->check(CLI::PositiveNumber);

  TraceArgs ta;
  auto* gen = app.add_subcommand("gen-trace", "write a synthetic channel trace");
  gen->add_option("--antennas", ta.antennas, "base-station antennas M");
  gen->add_option("--rbs", ta.rbs, "resource blocks B");
  gen->add_option("--ttis", ta.ttis, "TTIs T");
  gen->add_option("--users-per-cluster", ta.users_per_cluster, "users in each cluster")->delimiter(',');
  gen->add_option("--los", ta.los, "1/0 line-of-sight flag per cluster")->delimiter(',');
  gen->add_option("--intra-corr", ta.intra, "intra-cluster correlation");
  gen->add_option("--inter-corr", ta.inter, "inter-cluster correlation");
  gen->add_option("--mobility", ta.mobility, "static | slow | fast");
  gen->add_option("--innovation", ta.innovation, "per-TTI Gauss-Markov innovation");
  gen->add_option("--hop", ta.hop, "per-TTI cluster hop probability (fast)");
  gen->add_option("--seed", ta.seed, "generator seed");
  gen->add_option("-o,--out", ta.out, "trace file")->required();

  std::string cfg_path;
  auto* val = app.add_subcommand("validate-config", "check an experiment file");
  val->add_option("config", cfg_path, "experiment file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_c, run);
    if (*cmp) return cmd_compare(cmp_c, cmp, cmp_list);
    if (*bench) return cmd_bench(bench_c, bench, bench_list, reps);
    if (*gen) return cmd_gen_trace(ta);
    if (*val) return cmd_validate(cfg_path);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
