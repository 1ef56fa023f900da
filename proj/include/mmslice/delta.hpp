#pragma once

// Deficit-driven schedulers. Each round classifies active slices around the
// mean deficit, picks the best (user, RB) pair among large-deficit slices
// and fills the RB from that user's low-correlation group:
//   DRO   seats only the first user's own slice (RB-orthogonal),
//   DRS   also seats other slices' users (RB-sharing),
//   RS_ES searches every active user for the remaining seats.

#include <algorithm>
#include <optional>
#include <vector>

#include "mmslice/allocation.hpp"
#include "mmslice/intra_slice.hpp"

namespace mmslice {

struct FirstPick {
  int user = -1;
  std::size_t rb = 0;
  double score = 0.0;
};

// (k', b') = argmax of the user score over users of G_l slices and RBs not
// yet granted. Ties go to the lower user, then the lower RB.
inline std::optional<FirstPick> first_pick(const ScoreTable& scores, const SlicingPlan& plan, const DeltaGroups& groups,
                                           std::span<const char> used) {
  std::optional<FirstPick> best;
  std::vector<int> users;
  for (int s : groups.large)
    for (int k : plan.slice(static_cast<std::size_t>(s)).users) users.push_back(k);
  std::sort(users.begin(), users.end());
  for (int k : users) {
    const auto row = scores.scores_of(k);
    for (std::size_t b = 0; b < row.size(); ++b)
      if (!used[b] && (!best || row[b] > best->score)) best = FirstPick{k, b, row[b]};
  }
  return best;
}

namespace detail {

inline void sort_by_score(std::vector<int>& users, const ScoreTable& scores, std::size_t b) {
  std::sort(users.begin(), users.end(), [&](int x, int y) {
    const double sx = scores.score(x, b), sy = scores.score(y, b);
    return sx != sy ? sx > sy : x < y;
  });
}

// Seats k' and then, group by group, the primary-pool members of the
// current group followed by its secondary-pool members, each by descending
// score on b. When a group runs dry the fill jumps to the best primary-pool
// user whose group has not been visited.
inline UserSet group_fill(const ScoreTable& scores, const UserGrouping& grouping, int k0, std::size_t b,
                          std::size_t k_max, std::span<const char> primary, std::span<const char> secondary) {
  UserSet chosen{k0};
  std::vector<char> taken(primary.size(), 0), visited(grouping.num_groups(), 0);
  taken[static_cast<std::size_t>(k0)] = 1;
  int g = grouping.group_of.at(static_cast<std::size_t>(k0));
  std::vector<int> cand;
  while (chosen.size() < k_max) {
    visited[static_cast<std::size_t>(g)] = 1;
    for (auto pool : {primary, secondary}) {
      cand.clear();
      for (int k : grouping.groups[static_cast<std::size_t>(g)])
        if (pool[static_cast<std::size_t>(k)] && !taken[static_cast<std::size_t>(k)]) cand.push_back(k);
      sort_by_score(cand, scores, b);
      for (int k : cand) {
        if (chosen.size() >= k_max) break;
        chosen.push_back(k);
        taken[static_cast<std::size_t>(k)] = 1;
      }
    }
    if (chosen.size() >= k_max) break;
    int next = -1;
    for (std::size_t k = 0; k < primary.size(); ++k) {
      if (!primary[k] || taken[k] || visited[static_cast<std::size_t>(grouping.group_of[k])]) continue;
      if (next < 0 || scores.score(static_cast<int>(k), b) > scores.score(next, b)) next = static_cast<int>(k);
    }
    if (next < 0) break;
    chosen.push_back(next);
    taken[static_cast<std::size_t>(next)] = 1;
    g = grouping.group_of[static_cast<std::size_t>(next)];
  }
  return chosen;
}

inline std::vector<char> slice_mask(const SlicingPlan& plan, std::span<const int> slices) {
  std::vector<char> mask(plan.num_users(), 0);
  for (int s : slices)
    for (int k : plan.slice(static_cast<std::size_t>(s)).users) mask[static_cast<std::size_t>(k)] = 1;
  return mask;
}

inline std::size_t seat_limit(const FrameView& frame, const SchedulerConfig& cfg) {
  return std::min(cfg.max_users_per_rb, frame.num_antennas());
}

}  // namespace detail

// Grant of RB b to `users`, listed in ascending order, with their ZF rates.
inline RbGrant make_grant(const FrameView& frame, std::size_t b, UserSet users, const SchedulerConfig& cfg) {
  std::sort(users.begin(), users.end());
  RbGrant g;
  g.rb = b;
  g.rates = rates_for_channel(frame.submatrix(b, users), cfg.budget, cfg.reg_eps);
  g.users = std::move(users);
  return g;
}

inline UserSet dro_fill(const ScoreTable& scores, const UserGrouping& grouping, const SlicingPlan& plan,
                        const FirstPick& pick, std::size_t k_max) {
  const int s = plan.slice_of(pick.user);
  const auto primary = detail::slice_mask(plan, std::span<const int>(&s, 1));
  const std::vector<char> none(plan.num_users(), 0);
  return detail::group_fill(scores, grouping, pick.user, pick.rb, k_max, primary, none);
}

inline UserSet drs_fill(const ScoreTable& scores, const UserGrouping& grouping, const SlicingPlan& plan,
                        const DeltaGroups& groups, const FirstPick& pick, std::size_t k_max) {
  const auto primary = detail::slice_mask(plan, groups.large);
  const auto secondary = detail::slice_mask(plan, groups.small);
  return detail::group_fill(scores, grouping, pick.user, pick.rb, k_max, primary, secondary);
}

// k' plus the subset of at most K-1 other active-slice users that maximizes
// the RB's total rate.
inline UserSet rs_es_fill(const FrameView& frame, const SlicingPlan& plan, const DeltaGroups& groups,
                          const FirstPick& pick, const SchedulerConfig& cfg) {
  const std::size_t k_max = detail::seat_limit(frame, cfg);
  std::vector<int> active = groups.large;
  active.insert(active.end(), groups.small.begin(), groups.small.end());
  const auto mask = detail::slice_mask(plan, active);
  std::vector<int> others;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k] && static_cast<int>(k) != pick.user) others.push_back(static_cast<int>(k));
  const std::size_t seats = std::min(k_max - 1, others.size());
  if (count_subsets(others.size(), seats, cfg.subset_cap) > cfg.subset_cap)
    throw InfeasibleError("rs_es search over " + std::to_string(others.size()) + " users with " +
                          std::to_string(seats) + " free seats exceeds the subset cap of " +
                          std::to_string(cfg.subset_cap));

  UserSet all = others;
  all.push_back(pick.user);
  std::sort(all.begin(), all.end());
  const Eigen::MatrixXcd h_all = frame.submatrix(pick.rb, all);
  auto col_of = [&](int k) {
    return static_cast<Eigen::Index>(std::lower_bound(all.begin(), all.end(), k) - all.begin());
  };

  UserSet best{pick.user};
  double best_rate = sum_rate(rates_for_channel(h_all.col(col_of(pick.user)), cfg.budget, cfg.reg_eps));
  UserSet cur;
  Eigen::MatrixXcd h_sub;
  for_each_subset(others.size(), seats, [&](std::span<const std::size_t> idx) {
    cur.clear();
    for (std::size_t i : idx) cur.push_back(others[i]);
    cur.insert(std::upper_bound(cur.begin(), cur.end(), pick.user), pick.user);
    h_sub.resize(h_all.rows(), static_cast<Eigen::Index>(cur.size()));
    for (std::size_t j = 0; j < cur.size(); ++j) h_sub.col(static_cast<Eigen::Index>(j)) = h_all.col(col_of(cur[j]));
    const double r = sum_rate(rates_for_channel(h_sub, cfg.budget, cfg.reg_eps));
    if (r > best_rate) {
      best_rate = r;
      best = cur;
    }
  });
  return best;
}

enum class DeltaVariant { Dro, Drs, RsEs };

// One fill for a frozen classification. Pure: safe to run concurrently.
inline UserSet delta_fill(DeltaVariant v, const TtiInput& in, const ScoreTable& scores, const DeltaGroups& groups,
                          const FirstPick& pick, const SchedulerConfig& cfg) {
  const std::size_t k_max = detail::seat_limit(in.frame, cfg);
  if (v == DeltaVariant::RsEs) return rs_es_fill(in.frame, *in.plan, groups, pick, cfg);
  if (!in.grouping || in.grouping->empty()) throw ConfigError("grouping", "deficit schedulers need a user grouping");
  const UserGrouping& grouping = in.grouping->for_rb(pick.rb);
  return v == DeltaVariant::Dro ? dro_fill(scores, grouping, *in.plan, pick, k_max)
                                : drs_fill(scores, grouping, *in.plan, groups, pick, k_max);
}

inline Allocation delta_schedule(DeltaVariant v, const TtiInput& in, const SchedulerConfig& cfg) {
  const SlicingPlan& plan = *in.plan;
  const ScoreTable scores(in.frame, plan, in.pf);
  DeficitState deficits = in.deficits;
  Allocation alloc{in.tti, {}, std::vector<double>(plan.num_slices(), 0.0)};
  std::vector<char> used(in.frame.num_rbs(), 0);
  for (std::size_t round = 0; round < used.size(); ++round) {
    const auto groups = classify_slices(deficits);
    if (!groups) break;
    const auto pick = first_pick(scores, plan, *groups, used);
    if (!pick) break;
    commit_grant(alloc, deficits, plan, make_grant(in.frame, pick->rb, delta_fill(v, in, scores, *groups, *pick, cfg), cfg));
    used[pick->rb] = 1;
  }
  return alloc;
}

inline Allocation dro_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return delta_schedule(DeltaVariant::Dro, in, cfg);
}
inline Allocation drs_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return delta_schedule(DeltaVariant::Drs, in, cfg);
}
inline Allocation rs_es_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return delta_schedule(DeltaVariant::RsEs, in, cfg);
}

}  // namespace mmslice
