#pragma once

// RB-parallel wrapper around DRO/DRS: each round grants P RBs at once from a
// frozen classification, filling them concurrently and committing in pair
// order so the result does not depend on the worker count.

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <vector>

#include "mmslice/delta.hpp"

namespace mmslice {

// The P best (user, RB) pairs on distinct RBs: each remaining RB's best
// G_l user, ranked by descending score, then user, then RB.
inline std::vector<FirstPick> select_pairs(const ScoreTable& scores, const SlicingPlan& plan,
                                           const DeltaGroups& groups, std::span<const char> used, std::size_t p) {
  std::vector<int> users;
  for (int s : groups.large)
    for (int k : plan.slice(static_cast<std::size_t>(s)).users) users.push_back(k);
  std::sort(users.begin(), users.end());
  std::vector<FirstPick> per_rb;
  for (std::size_t b = 0; b < used.size(); ++b) {
    if (used[b]) continue;
    FirstPick best{-1, b, 0.0};
    for (int k : users)
      if (best.user < 0 || scores.score(k, b) > best.score) best = FirstPick{k, b, scores.score(k, b)};
    if (best.user >= 0) per_rb.push_back(best);
  }
  std::sort(per_rb.begin(), per_rb.end(), [](const FirstPick& x, const FirstPick& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.user != y.user) return x.user < y.user;
    return x.rb < y.rb;
  });
  if (per_rb.size() > p) per_rb.resize(p);
  return per_rb;
}

struct ParallelStats {
  std::size_t rounds = 0;
  std::vector<std::size_t> degrees;  // P chosen in each round
};

inline Allocation rb_parallel(DeltaVariant v, const TtiInput& in, const SchedulerConfig& cfg,
                              ParallelStats* stats = nullptr) {
  if (v == DeltaVariant::RsEs) throw ConfigError("scheduler", "rb_parallel wraps dro or drs only");
  const SlicingPlan& plan = *in.plan;
  const ScoreTable scores(in.frame, plan, in.pf);
  DeficitState deficits = in.deficits;
  Allocation alloc{in.tti, {}, std::vector<double>(plan.num_slices(), 0.0)};
  std::vector<char> used(in.frame.num_rbs(), 0);
  std::size_t remaining = used.size();

  tbb::task_arena arena(static_cast<int>(std::max<std::size_t>(cfg.workers, 1)));
  std::vector<RbGrant> grants;
  while (remaining > 0) {
    const auto groups = classify_slices(deficits);
    if (!groups) break;
    const std::size_t p = cfg.degree.evaluate(deficits.total_deficit(), in.prev_mean_rb_bits, remaining);
    const auto pairs = select_pairs(scores, plan, *groups, used, p);
    if (pairs.empty()) break;

    grants.assign(pairs.size(), RbGrant{});
    auto fill = [&](std::size_t i) {
      grants[i] = make_grant(in.frame, pairs[i].rb, delta_fill(v, in, scores, *groups, pairs[i], cfg), cfg);
    };
    if (cfg.workers <= 1 || pairs.size() == 1) {
      for (std::size_t i = 0; i < pairs.size(); ++i) fill(i);
    } else {
      arena.execute([&] { tbb::parallel_for(std::size_t{0}, pairs.size(), fill); });
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      used[pairs[i].rb] = 1;
      commit_grant(alloc, deficits, plan, std::move(grants[i]));
    }
    remaining -= pairs.size();
    if (stats) {
      ++stats->rounds;
      stats->degrees.push_back(pairs.size());
    }
  }
  return alloc;
}

inline Allocation dro_parallel_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return rb_parallel(DeltaVariant::Dro, in, cfg);
}
inline Allocation drs_parallel_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return rb_parallel(DeltaVariant::Drs, in, cfg);
}

}  // namespace mmslice
