#pragma once

// Types shared by every scheduler: the per-TTI allocation, scheduler
// configuration, the per-TTI input bundle and the user score table.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmslice/channel.hpp"
#include "mmslice/errors.hpp"
#include "mmslice/grouping.hpp"
#include "mmslice/rate.hpp"
#include "mmslice/sla.hpp"

namespace mmslice {

struct RbGrant {
  std::size_t rb = 0;
  UserSet users;
  std::vector<double> rates;  // bits per TTI, aligned with users
  std::vector<int> slices;    // distinct slices served, ascending

  double total_rate() const { return sum_rate(rates); }
};

struct Allocation {
  std::size_t tti = 0;
  std::vector<RbGrant> grants;    // in grant order
  std::vector<double> delivered;  // bits per slice, sum of slice_rate over grants

  std::size_t num_rbs() const noexcept { return grants.size(); }

  const RbGrant* grant_for(std::size_t b) const {
    for (const auto& g : grants)
      if (g.rb == b) return &g;
    return nullptr;
  }

  // x_k^{b,t}
  bool user_scheduled(int k, std::size_t b) const {
    const RbGrant* g = grant_for(b);
    return g && std::find(g->users.begin(), g->users.end(), k) != g->users.end();
  }

  // x_s^{b,t}
  bool slice_scheduled(int s, std::size_t b) const {
    const RbGrant* g = grant_for(b);
    return g && std::find(g->slices.begin(), g->slices.end(), s) != g->slices.end();
  }

  // Bits delivered to each user in this TTI.
  std::vector<double> per_user_bits(std::size_t num_users) const {
    std::vector<double> out(num_users, 0.0);
    for (const auto& g : grants)
      for (std::size_t i = 0; i < g.users.size(); ++i) out[static_cast<std::size_t>(g.users[i])] += g.rates[i];
    return out;
  }

  bool operator==(const Allocation& o) const {
    if (tti != o.tti || delivered != o.delivered || grants.size() != o.grants.size()) return false;
    for (std::size_t i = 0; i < grants.size(); ++i) {
      const auto &a = grants[i], &b = o.grants[i];
      if (a.rb != b.rb || a.users != b.users || a.rates != b.rates || a.slices != b.slices) return false;
    }
    return true;
  }
};

// Adds a grant to the allocation and charges each served slice's deficit
// with exactly the bits recorded in `delivered`.
inline void commit_grant(Allocation& alloc, DeficitState& deficits, const SlicingPlan& plan, RbGrant grant) {
  grant.slices.clear();
  for (int k : grant.users) grant.slices.push_back(plan.slice_of(k));
  std::sort(grant.slices.begin(), grant.slices.end());
  grant.slices.erase(std::unique(grant.slices.begin(), grant.slices.end()), grant.slices.end());
  for (int s : grant.slices) {
    const double bits = slice_rate(grant.users, grant.rates, plan.slice_of(), s);
    alloc.delivered[static_cast<std::size_t>(s)] += bits;
    deficits.consume(static_cast<std::size_t>(s), bits);
  }
  alloc.grants.push_back(std::move(grant));
}

enum class SchedulerKind { Greedy, GreedyPlus, Dro, Drs, RsEs, Bnb, DroParallel, DrsParallel };

inline const std::vector<std::pair<std::string, SchedulerKind>>& scheduler_names() {
  static const std::vector<std::pair<std::string, SchedulerKind>> names{
      {"greedy", SchedulerKind::Greedy}, {"gp", SchedulerKind::GreedyPlus},    {"dro", SchedulerKind::Dro},
      {"drs", SchedulerKind::Drs},       {"rs_es", SchedulerKind::RsEs},       {"bnb", SchedulerKind::Bnb},
      {"dro_para", SchedulerKind::DroParallel}, {"drs_para", SchedulerKind::DrsParallel}};
  return names;
}

inline SchedulerKind parse_scheduler(const std::string& name) {
  for (const auto& [n, k] : scheduler_names())
    if (n == name) return k;
  throw ConfigError("scheduler", "unknown scheduler '" + name +
                                     "' (expected greedy|gp|dro|drs|rs_es|bnb|dro_para|drs_para)");
}

inline std::string to_string(SchedulerKind kind) {
  for (const auto& [n, k] : scheduler_names())
    if (k == kind) return n;
  return "?";
}

// Orthogonal schedulers never put two slices on one RB.
inline SharingMode mode_of(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Drs:
    case SchedulerKind::RsEs:
    case SchedulerKind::DrsParallel:
      return SharingMode::Sharing;
    default:
      return SharingMode::Orthogonal;
  }
}

// Degree of RB parallelism: fixed, or ceil(total deficit / previous TTI's
// mean bits per RB).
struct ParallelDegree {
  std::size_t fixed = 0;  // 0 selects the adaptive rule

  static ParallelDegree adaptive() { return {}; }
  static ParallelDegree of(std::size_t p) { return {p}; }

  std::size_t evaluate(double total_deficit, double prev_mean_rb_bits, std::size_t remaining_rbs) const {
    if (remaining_rbs == 0) return 0;
    std::size_t p = fixed;
    if (p == 0) {
      p = prev_mean_rb_bits > 0.0 ? static_cast<std::size_t>(std::ceil(total_deficit / prev_mean_rb_bits)) : 1;
    }
    return std::clamp<std::size_t>(p, 1, remaining_rbs);
  }
};

struct BnbLimits {
  std::size_t max_rbs = 12;
  std::size_t max_slices = 4;
  std::size_t node_budget = 20'000'000;
};

struct SchedulerConfig {
  std::size_t max_users_per_rb = 3;  // K
  LinkBudget budget;
  double reg_eps = kDefaultRegEps;
  // Upper bound on candidate subsets for exhaustive user searches.
  std::size_t subset_cap = 200'000;
  BnbLimits bnb;
  ParallelDegree degree;
  std::size_t workers = 1;

  void validate(std::size_t antennas) const {
    if (max_users_per_rb < 1 || max_users_per_rb > antennas)
      throw ConfigError("k", "K must lie in [1, M] (M = " + std::to_string(antennas) + ")");
    budget.validate();
    if (reg_eps < 0.0) throw ConfigError("reg_eps", "must be non-negative");
    if (workers < 1) throw ConfigError("workers", "must be at least 1");
  }
};

// Everything a scheduler reads for one TTI.
struct TtiInput {
  FrameView frame;
  std::size_t tti = 0;
  const SlicingPlan* plan = nullptr;
  DeficitState deficits;  // refreshed at TTI start
  std::shared_ptr<const GroupingSnapshot> grouping;
  const PFState* pf = nullptr;  // required when any slice uses PF
  double prev_mean_rb_bits = 0.0;
};

// Per-TTI user score on every RB: channel gain for max-rate slices, the
// proportional-fair metric for PF slices. Users outside every slice score
// -infinity.
class ScoreTable {
 public:
  ScoreTable(const FrameView& frame, const SlicingPlan& plan, const PFState* pf)
      : users_(frame.num_users()),
        rbs_(frame.num_rbs()),
        gain_(users_ * rbs_, 0.0), score_(users_ * rbs_, -std::numeric_limits<double>::infinity()) {
    std::vector<double> acc(users_);
    for (std::size_t b = 0; b < rbs_; ++b) {
      const auto h = frame.rb_matrix(b);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (Eigen::Index m = 0; m < h.rows(); ++m) {
        const cfloat* row = h.data() + m * h.cols();
        for (std::size_t k = 0; k < users_; ++k) {
          const double re = row[k].real(), im = row[k].imag();
          acc[k] += re * re + im * im;
        }
      }
      for (std::size_t k = 0; k < users_; ++k)
        if (plan.slice_of(static_cast<int>(k)) >= 0) gain_[k * rbs_ + b] = acc[k];
    }
    for (const auto& slice : plan.slices()) {
      if (slice.policy == Policy::MaxRate) {
        for (int k : slice.users)
          for (std::size_t b = 0; b < rbs_; ++b) at(score_, k, b) = at(gain_, k, b);
        continue;
      }
      if (!pf) throw ConfigError("policy", "proportional-fair slice without PF state");
      for (std::size_t b = 0; b < rbs_; ++b) {
        double mx = 0.0;
        for (int k : slice.users) mx = std::max(mx, at(gain_, k, b));
        for (int k : slice.users) {
          const double g_hat = mx > 0.0 ? at(gain_, k, b) / mx : 0.0;
          at(score_, k, b) = g_hat / pf->normalized_rate(k);
        }
      }
    }
  }

  double gain(int k, std::size_t b) const { return gain_[static_cast<std::size_t>(k) * rbs_ + b]; }
  double score(int k, std::size_t b) const { return score_[static_cast<std::size_t>(k) * rbs_ + b]; }
  std::span<const double> scores_of(int k) const {
    return std::span<const double>(score_).subspan(static_cast<std::size_t>(k) * rbs_, rbs_);
  }
  std::size_t num_rbs() const noexcept { return rbs_; }

 private:
  double& at(std::vector<double>& v, int k, std::size_t b) const { return v[static_cast<std::size_t>(k) * rbs_ + b]; }

  std::size_t users_, rbs_;
  std::vector<double> gain_, score_;
};

}  // namespace mmslice
