#pragma once

// Exhaustive intra-slice user selection and the per-(RB, slice) rate
// estimate table built from it. Greedy, GP and branch and bound all read
// this table; its cost grows with C(|K_s|, K) which is why those methods
// stay desk-scale.

#include <span>
#include <vector>

#include "mmslice/allocation.hpp"

namespace mmslice {

// Number of non-empty subsets of size <= k drawn from n items, saturating
// at `limit + 1`.
inline std::size_t count_subsets(std::size_t n, std::size_t k, std::size_t limit) {
  std::size_t total = 0, c = 1;  // c = C(n, j)
  for (std::size_t j = 1; j <= k && j <= n; ++j) {
    c = c * (n - j + 1) / j;
    total += c;
    if (total > limit || c > limit) return limit + 1;
  }
  return total;
}

// Calls fn(indices) for every subset of {0..n-1} with 1..k elements, by
// size then lexicographically.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t size = 1; size <= k && size <= n; ++size) {
    idx.resize(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      fn(std::span<const std::size_t>(idx));
      std::size_t i = size;
      while (i > 0 && idx[i - 1] == n - size + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
}

struct SliceChoice {
  UserSet users;
  std::vector<double> rates;
  double rate = 0.0;  // slice sum rate r_s^{b}
};

// Best subset (1..K users) of `slice` on RB b: maximum sum rate, or maximum
// sum of rate_k / R_hat_k under proportional fairness. Ties keep the first
// subset in size-then-lexicographic order.
inline SliceChoice intra_slice_best(const FrameView& frame, std::size_t b, const SliceConfig& slice,
                                    std::size_t k_max, const SchedulerConfig& cfg, const PFState* pf = nullptr) {
  const std::size_t n = slice.users.size();
  if (n == 0) throw ConfigError("slice", "empty slice");
  const std::size_t k = std::min({k_max, n, frame.num_antennas()});
  if (count_subsets(n, k, cfg.subset_cap) > cfg.subset_cap)
    throw InfeasibleError("intra-slice search over " + std::to_string(n) + " users with K=" + std::to_string(k) +
                          " exceeds the subset cap of " + std::to_string(cfg.subset_cap));
  if (slice.policy == Policy::ProportionalFair && !pf)
    throw ConfigError("policy", "proportional-fair slice without PF state");

  const Eigen::MatrixXcd h_all = frame.submatrix(b, slice.users);
  SliceChoice best;
  double best_obj = -1.0;
  Eigen::MatrixXcd h_sub;
  for_each_subset(n, k, [&](std::span<const std::size_t> idx) {
    h_sub.resize(h_all.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
      h_sub.col(static_cast<Eigen::Index>(j)) = h_all.col(static_cast<Eigen::Index>(idx[j]));
    const auto rates = rates_for_channel(h_sub, cfg.budget, cfg.reg_eps);
    double obj = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j)
      obj += slice.policy == Policy::ProportionalFair ? rates[j] / pf->normalized_rate(slice.users[idx[j]]) : rates[j];
    if (obj > best_obj) {
      best_obj = obj;
      best.users.clear();
      for (std::size_t i : idx) best.users.push_back(slice.users[i]);
      best.rates = rates;
      best.rate = sum_rate(rates);
    }
  });
  return best;
}

// r_est[b][s] with the realizing user sets. Slices without a deficit are
// left empty (rate 0).
struct RateEstimateTable {
  std::size_t num_rbs = 0, num_slices = 0;
  std::vector<SliceChoice> entries;  // b * num_slices + s

  RateEstimateTable() = default;
  RateEstimateTable(std::size_t rbs, std::size_t slices) : num_rbs(rbs), num_slices(slices), entries(rbs * slices) {}

  const SliceChoice& at(std::size_t b, std::size_t s) const { return entries[b * num_slices + s]; }
  SliceChoice& at(std::size_t b, std::size_t s) { return entries[b * num_slices + s]; }
  double rate(std::size_t b, std::size_t s) const { return at(b, s).rate; }

  // Table with bare rates (no user sets), e.g. hand-built instances.
  static RateEstimateTable from_rates(const std::vector<std::vector<double>>& rates_by_rb) {
    RateEstimateTable t(rates_by_rb.size(), rates_by_rb.empty() ? 0 : rates_by_rb.front().size());
    for (std::size_t b = 0; b < t.num_rbs; ++b)
      for (std::size_t s = 0; s < t.num_slices; ++s) t.at(b, s).rate = rates_by_rb[b].at(s);
    return t;
  }
};

inline RateEstimateTable build_rate_table(const TtiInput& in, const SchedulerConfig& cfg) {
  const auto& plan = *in.plan;
  RateEstimateTable table(in.frame.num_rbs(), plan.num_slices());
  for (std::size_t s = 0; s < plan.num_slices(); ++s) {
    if (!in.deficits.active(s)) continue;
    for (std::size_t b = 0; b < table.num_rbs; ++b)
      table.at(b, s) = intra_slice_best(in.frame, b, plan.slice(s), cfg.max_users_per_rb, cfg, in.pf);
  }
  return table;
}

// Grant of RB b to slice s using the table's realizing set. Tables built
// from bare rates yield a grant without users; the slice is credited the
// table rate directly.
inline void commit_table_grant(Allocation& alloc, DeficitState& deficits, const SlicingPlan* plan,
                               const RateEstimateTable& table, std::size_t b, std::size_t s) {
  const SliceChoice& c = table.at(b, s);
  if (plan && !c.users.empty()) {
    commit_grant(alloc, deficits, *plan, RbGrant{b, c.users, c.rates, {}});
    return;
  }
  alloc.delivered[s] += c.rate;
  deficits.consume(s, c.rate);
  alloc.grants.push_back(RbGrant{b, {}, {}, {static_cast<int>(s)}});
}

}  // namespace mmslice
