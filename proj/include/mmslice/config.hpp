#pragma once

// INI-style experiment files:
//
//   [experiment]  preset, scheduler, k, ttis, warmup, seed, workers,
//                 parallel_degree, subset_cap, bnb_node_budget,
//                 pf_warm_start, trace, output_dir
//   [grouping]    period, scope (tti|rb|once), threshold, rb_samples
//   [network]     antennas, rbs, users_per_cluster, los, intra_corr,
//                 inter_corr, nlos_loss_db, shadowing_db, freq_coherence,
//                 correlation_target (per_rb|rb_average),
//                 mobility (static|slow|fast), innovation, hop_probability
//   [link]        tx_power_w, noise_w, rb_bandwidth_hz, tti_ms, reg_eps
//   [slice.N]     users (list or a-b ranges) or count, sla_mbps,
//                 policy (maxrate|pf), sharing (any|orthogonal|sharing)
//
// Slice sections, when present, replace the preset's slices. Unknown
// sections and keys are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmslice/harness.hpp"

namespace mmslice {

struct LoadedConfig {
  ExperimentConfig experiment;
  std::optional<std::string> output_dir;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline double parse_double(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() || !std::isfinite(v))
    throw ConfigError(field, "expected a number, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "1" || t == "true" || t == "yes" || t == "los") return true;
  if (t == "0" || t == "false" || t == "no" || t == "nlos") return false;
  throw ConfigError(field, "expected a boolean, got '" + text + "'");
}

inline std::vector<std::string> split(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

// "0-3, 7, 9" -> {0, 1, 2, 3, 7, 9}
inline std::vector<int> parse_user_list(const std::string& field, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text)) {
    if (item.empty()) throw ConfigError(field, "empty entry in user list");
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(static_cast<int>(parse_uint(field, item)));
      continue;
    }
    const auto lo = parse_uint(field, item.substr(0, dash)), hi = parse_uint(field, item.substr(dash + 1));
    if (hi < lo) throw ConfigError(field, "descending range '" + item + "'");
    for (auto k = lo; k <= hi; ++k) out.push_back(static_cast<int>(k));
  }
  return out;
}

inline Policy parse_policy(const std::string& field, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "maxrate" || t == "max_rate" || t == "mr") return Policy::MaxRate;
  if (t == "pf" || t == "proportional_fair") return Policy::ProportionalFair;
  throw ConfigError(field, "expected maxrate or pf, got '" + text + "'");
}

inline SharingMode parse_sharing(const std::string& field, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "any") return SharingMode::Any;
  if (t == "orthogonal") return SharingMode::Orthogonal;
  if (t == "sharing") return SharingMode::Sharing;
  throw ConfigError(field, "expected any, orthogonal or sharing, got '" + text + "'");
}

inline GroupingScope parse_scope(const std::string& field, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "tti") return GroupingScope::PerTti;
  if (t == "rb") return GroupingScope::PerRb;
  if (t == "once") return GroupingScope::Once;
  throw ConfigError(field, "expected tti, rb or once, got '" + text + "'");
}

class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree& tree, std::set<std::string> allowed)
      : name_(std::move(name)), tree_(tree) {
    for (const auto& [key, _] : tree_)
      if (!allowed.count(key)) throw ConfigError(name_ + "." + key, "unknown key");
  }

  std::optional<std::string> get(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  template <class Fn>
  void with(const std::string& key, Fn&& fn) const {
    if (auto v = get(key)) fn(field(key), *v);
  }

 private:
  std::string name_;
  const boost::property_tree::ptree& tree_;
};

}  // namespace detail

// `preset_override`, when set, replaces the file's preset key.
inline LoadedConfig parse_config(std::istream& in, const std::string& source = "<config>",
                                 const std::optional<std::string>& preset_override = std::nullopt) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source, "line " + std::to_string(e.line()) + ": " + e.message());
  }

  LoadedConfig out;
  ExperimentConfig& cfg = out.experiment;
  const pt::ptree empty;
  auto section = [&](const std::string& name) -> const pt::ptree& {
    auto it = tree.find(name);
    return it == tree.not_found() ? empty : it->second;
  };
  std::map<std::size_t, const pt::ptree*> slice_sections;
  for (const auto& [name, sub] : tree) {
    if (name == "experiment" || name == "grouping" || name == "network" || name == "link") continue;
    if (name.rfind("slice.", 0) == 0) {
      const auto idx = detail::parse_uint(name, name.substr(6));
      slice_sections[idx] = &sub;
      continue;
    }
    if (sub.empty() && !sub.data().empty())
      throw ConfigError(name, "keys must sit inside a section");
    throw ConfigError(name, "unknown section");
  }

  const detail::Section exp("experiment", section("experiment"),
                            {"preset", "scheduler", "k", "ttis", "warmup", "seed", "workers", "parallel_degree",
                             "subset_cap", "bnb_node_budget", "pf_warm_start", "trace", "output_dir"});
  if (auto p = preset_override ? preset_override : exp.get("preset")) {
    try {
      cfg = preset_from_name(*p);
    } catch (const ConfigError& e) {
      throw ConfigError(exp.field("preset"), e.what());
    }
  }
  exp.with("scheduler", [&](const std::string& f, const std::string& v) {
    try {
      cfg.scheduler = parse_scheduler(v);
    } catch (const ConfigError& e) {
      throw ConfigError(f, e.what());
    }
  });
  exp.with("k", [&](const auto& f, const auto& v) { cfg.sched.max_users_per_rb = detail::parse_uint(f, v); });
  exp.with("ttis", [&](const auto& f, const auto& v) { cfg.ttis = detail::parse_uint(f, v); });
  exp.with("warmup", [&](const auto& f, const auto& v) { cfg.warmup = detail::parse_uint(f, v); });
  exp.with("seed", [&](const auto& f, const auto& v) { cfg.cluster.seed = detail::parse_uint(f, v); });
  exp.with("workers", [&](const auto& f, const auto& v) { cfg.sched.workers = detail::parse_uint(f, v); });
  exp.with("parallel_degree", [&](const auto& f, const auto& v) { cfg.sched.degree.fixed = detail::parse_uint(f, v); });
  exp.with("subset_cap", [&](const auto& f, const auto& v) { cfg.sched.subset_cap = detail::parse_uint(f, v); });
  exp.with("bnb_node_budget", [&](const auto& f, const auto& v) { cfg.sched.bnb.node_budget = detail::parse_uint(f, v); });
  exp.with("pf_warm_start", [&](const auto& f, const auto& v) {
    cfg.pf_warm_start = detail::parse_double(f, v);
    if (!(cfg.pf_warm_start > 0.0 && cfg.pf_warm_start <= 1.0)) throw ConfigError(f, "must lie in (0, 1]");
  });
  exp.with("trace", [&](const auto&, const auto& v) { cfg.trace_path = v; });
  exp.with("output_dir", [&](const auto&, const auto& v) { out.output_dir = v; });

  const detail::Section grp("grouping", section("grouping"), {"period", "scope", "threshold", "rb_samples"});
  grp.with("period", [&](const auto& f, const auto& v) { cfg.grouping.update_period = detail::parse_uint(f, v); });
  grp.with("scope", [&](const auto& f, const auto& v) { cfg.grouping.scope = detail::parse_scope(f, v); });
  grp.with("threshold", [&](const auto& f, const auto& v) { cfg.grouping.threshold = detail::parse_double(f, v); });
  grp.with("rb_samples", [&](const auto& f, const auto& v) { cfg.grouping.rb_samples = detail::parse_uint(f, v); });

  const detail::Section net("network", section("network"),
                            {"antennas", "rbs", "users_per_cluster", "los", "intra_corr", "inter_corr",
                             "nlos_loss_db", "shadowing_db", "freq_coherence", "correlation_target", "mobility",
                             "innovation", "hop_probability"});
  auto& cl = cfg.cluster;
  net.with("antennas", [&](const auto& f, const auto& v) { cfg.antennas = detail::parse_uint(f, v); });
  net.with("rbs", [&](const auto& f, const auto& v) { cfg.rbs = detail::parse_uint(f, v); });
  net.with("users_per_cluster", [&](const auto& f, const auto& v) {
    cl.users_per_cluster.clear();
    for (const auto& item : detail::split(v)) cl.users_per_cluster.push_back(static_cast<int>(detail::parse_uint(f, item)));
    cl.num_clusters = static_cast<int>(cl.users_per_cluster.size());
    cl.num_users = std::accumulate(cl.users_per_cluster.begin(), cl.users_per_cluster.end(), 0);
    cl.los_flags.clear();
  });
  net.with("los", [&](const auto& f, const auto& v) {
    cl.los_flags.clear();
    for (const auto& item : detail::split(v)) cl.los_flags.push_back(detail::parse_bool(f, item));
  });
  net.with("intra_corr", [&](const auto& f, const auto& v) { cl.intra_cluster_corr = detail::parse_double(f, v); });
  net.with("inter_corr", [&](const auto& f, const auto& v) { cl.inter_cluster_corr = detail::parse_double(f, v); });
  net.with("nlos_loss_db", [&](const auto& f, const auto& v) { cl.nlos_loss_db = detail::parse_double(f, v); });
  net.with("shadowing_db", [&](const auto& f, const auto& v) { cl.shadowing_db = detail::parse_double(f, v); });
  net.with("freq_coherence", [&](const auto& f, const auto& v) { cl.freq_coherence = detail::parse_double(f, v); });
  net.with("correlation_target", [&](const auto& f, const auto& v) {
    const auto t = detail::lower(v);
    if (t == "per_rb") cl.target = CorrelationTarget::PerRb;
    else if (t == "rb_average") cl.target = CorrelationTarget::RbAverage;
    else throw ConfigError(f, "expected per_rb or rb_average, got '" + v + "'");
  });
  net.with("mobility", [&](const auto& f, const auto& v) {
    const auto t = detail::lower(v);
    if (t == "static") cfg.mobility.kind = MobilityMode::Kind::Static;
    else if (t == "slow") cfg.mobility.kind = MobilityMode::Kind::SlowMobility;
    else if (t == "fast") cfg.mobility.kind = MobilityMode::Kind::FastMobility;
    else throw ConfigError(f, "expected static, slow or fast, got '" + v + "'");
  });
  net.with("innovation", [&](const auto& f, const auto& v) { cfg.mobility.innovation = detail::parse_double(f, v); });
  net.with("hop_probability", [&](const auto& f, const auto& v) { cfg.mobility.hop_probability = detail::parse_double(f, v); });

  const detail::Section link("link", section("link"), {"tx_power_w", "noise_w", "rb_bandwidth_hz", "tti_ms", "reg_eps"});
  auto& bud = cfg.sched.budget;
  link.with("tx_power_w", [&](const auto& f, const auto& v) { bud.tx_power_w = detail::parse_double(f, v); });
  link.with("noise_w", [&](const auto& f, const auto& v) { bud.noise_w = detail::parse_double(f, v); });
  link.with("rb_bandwidth_hz", [&](const auto& f, const auto& v) { bud.rb_bandwidth_hz = detail::parse_double(f, v); });
  link.with("tti_ms", [&](const auto& f, const auto& v) { bud.tti_s = detail::parse_double(f, v) / 1000.0; });
  link.with("reg_eps", [&](const auto& f, const auto& v) { cfg.sched.reg_eps = detail::parse_double(f, v); });

  if (!slice_sections.empty()) {
    cfg.slices.clear();
    std::size_t expected = 0;
    int next_user = 0;
    for (const auto& [idx, sub] : slice_sections) {
      const std::string name = "slice." + std::to_string(idx);
      if (idx != expected++) throw ConfigError(name, "slice sections must be numbered 0, 1, 2, ... without gaps");
      const detail::Section sec(name, *sub, {"users", "count", "sla_mbps", "policy", "sharing"});
      SliceSpec sp;
      const auto users = sec.get("users"), count = sec.get("count");
      if (users && count) throw ConfigError(sec.field("users"), "give either users or count, not both");
      if (users) {
        sp.users = detail::parse_user_list(sec.field("users"), *users);
      } else if (count) {
        const auto n = detail::parse_uint(sec.field("count"), *count);
        for (std::uint64_t i = 0; i < n; ++i) sp.users.push_back(next_user + static_cast<int>(i));
      } else {
        throw ConfigError(sec.field("users"), "missing users or count");
      }
      if (!sp.users.empty()) next_user = *std::max_element(sp.users.begin(), sp.users.end()) + 1;
      const auto sla = sec.get("sla_mbps");
      if (!sla) throw ConfigError(sec.field("sla_mbps"), "missing");
      sp.sla_mbps = detail::parse_double(sec.field("sla_mbps"), *sla);
      if (sp.sla_mbps < 0.0) throw ConfigError(sec.field("sla_mbps"), "SLA must be non-negative, got " + *sla);
      sec.with("policy", [&](const auto& f, const auto& v) { sp.policy = detail::parse_policy(f, v); });
      sec.with("sharing", [&](const auto& f, const auto& v) {
        if (detail::parse_sharing(f, v) == SharingMode::Orthogonal && mode_of(cfg.scheduler) == SharingMode::Sharing)
          throw ConfigError(f, "slice requires orthogonal RBs but scheduler " + to_string(cfg.scheduler) +
                                   " shares RBs across slices");
      });
      cfg.slices.push_back(std::move(sp));
    }
  }

  if (cfg.sched.bnb.max_rbs < cfg.rbs || cfg.sched.bnb.max_slices < cfg.slices.size()) {
    // Files describe whole experiments; let branch and bound attempt them
    // and fall back per TTI when the node budget runs out.
    cfg.sched.bnb.max_rbs = std::max(cfg.sched.bnb.max_rbs, cfg.rbs);
    cfg.sched.bnb.max_slices = std::max(cfg.sched.bnb.max_slices, cfg.slices.size());
  }
  cfg.name = source;
  return out;
}

inline LoadedConfig load_config(const std::string& path,
                                const std::optional<std::string>& preset_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  return parse_config(in, path, preset_override);
}

// Command-line level settings. Precedence: these > environment > file >
// defaults.
struct Overrides {
  std::optional<std::string> preset, scenario, sla, scheduler, output_dir, trace;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, ttis, workers, parallel_degree;
};

inline constexpr const char* kOutDirEnv = "MMSLICE_OUT_DIR";
inline constexpr const char* kDefaultPreset = "small-hc-loose";
inline constexpr const char* kDefaultOutDir = "out";

inline std::optional<std::string> preset_in_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  if (auto v = tree.get_optional<std::string>("experiment.preset")) return detail::trim(*v);
  return std::nullopt;
}

// Builds the final configuration. The preset is taken from the overrides,
// else the file, else the default, and then re-targeted by the scenario and
// SLA overrides before the file's remaining keys are applied.
inline LoadedConfig resolve_config(const std::optional<std::string>& path, const Overrides& o,
                                   const char* env_out_dir = std::getenv(kOutDirEnv)) {
  std::string preset = kDefaultPreset;
  if (o.preset) {
    preset = *o.preset;
  } else if (path) {
    if (auto p = preset_in_file(*path)) preset = *p;
  }
  if (o.scenario || o.sla) {
    PresetName name = parse_preset_name(preset);
    if (o.scenario) name.scenario = parse_scenario(detail::lower(*o.scenario));
    if (o.sla) name.level = parse_sla_level(detail::lower(*o.sla));
    preset = name.str();
    (void)parse_preset_name(preset);
  }

  LoadedConfig out;
  if (path) {
    out = load_config(*path, preset);
  } else {
    out.experiment = preset_from_name(preset);
  }
  ExperimentConfig& cfg = out.experiment;
  if (o.scheduler) cfg.scheduler = parse_scheduler(*o.scheduler);
  if (o.seed) cfg.cluster.seed = *o.seed;
  if (o.k) cfg.sched.max_users_per_rb = *o.k;
  if (o.ttis) cfg.ttis = *o.ttis;
  if (o.workers) cfg.sched.workers = *o.workers;
  if (o.parallel_degree) cfg.sched.degree.fixed = *o.parallel_degree;
  if (o.trace) cfg.trace_path = *o.trace;

  if (o.output_dir) {
    out.output_dir = o.output_dir;
  } else if (env_out_dir && *env_out_dir) {
    out.output_dir = std::string(env_out_dir);
  } else if (!out.output_dir) {
    out.output_dir = std::string(kDefaultOutDir);
  }
  cfg.validate();
  return out;
}

}  // namespace mmslice
