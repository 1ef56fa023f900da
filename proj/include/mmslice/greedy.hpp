#pragma once

// Orthogonal baselines over the rate estimate table: Greedy and Greedy Plus.

#include <vector>

#include "mmslice/intra_slice.hpp"

namespace mmslice {

// Repeatedly grants the highest remaining (RB, slice) entry among slices
// that still have a deficit. Ties go to the lower RB, then the lower slice.
inline Allocation greedy_allocate(const RateEstimateTable& table, DeficitState& deficits,
                                  const SlicingPlan* plan = nullptr, std::size_t tti = 0) {
  Allocation alloc{tti, {}, std::vector<double>(table.num_slices, 0.0)};
  std::vector<char> used(table.num_rbs, 0);
  while (deficits.any_active()) {
    std::size_t best_b = table.num_rbs, best_s = 0;
    double best = 0.0;
    for (std::size_t b = 0; b < table.num_rbs; ++b) {
      if (used[b]) continue;
      for (std::size_t s = 0; s < table.num_slices; ++s)
        if (deficits.active(s) && table.rate(b, s) > best) {
          best = table.rate(b, s);
          best_b = b;
          best_s = s;
        }
    }
    if (best_b == table.num_rbs) break;
    used[best_b] = 1;
    commit_table_grant(alloc, deficits, plan, table, best_b, best_s);
  }
  return alloc;
}

// Serves the slice with the largest current deficit its best remaining RB.
// Ties go to the lower slice id, then the lower RB.
inline Allocation gp_allocate(const RateEstimateTable& table, DeficitState& deficits,
                              const SlicingPlan* plan = nullptr, std::size_t tti = 0) {
  Allocation alloc{tti, {}, std::vector<double>(table.num_slices, 0.0)};
  std::vector<char> used(table.num_rbs, 0);
  // Slices with no positive-rate RB left drop out of the rotation.
  std::vector<char> stuck(table.num_slices, 0);
  while (true) {
    std::size_t s_pick = table.num_slices;
    for (std::size_t s = 0; s < table.num_slices; ++s)
      if (deficits.active(s) && !stuck[s] && (s_pick == table.num_slices || deficits.deficit[s] > deficits.deficit[s_pick]))
        s_pick = s;
    if (s_pick == table.num_slices) break;
    std::size_t b_pick = table.num_rbs;
    double best = 0.0;
    for (std::size_t b = 0; b < table.num_rbs; ++b)
      if (!used[b] && table.rate(b, s_pick) > best) {
        best = table.rate(b, s_pick);
        b_pick = b;
      }
    if (b_pick == table.num_rbs) {
      stuck[s_pick] = 1;
      continue;
    }
    used[b_pick] = 1;
    commit_table_grant(alloc, deficits, plan, table, b_pick, s_pick);
  }
  return alloc;
}

inline Allocation greedy_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  DeficitState d = in.deficits;
  return greedy_allocate(build_rate_table(in, cfg), d, in.plan, in.tti);
}

inline Allocation gp_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  DeficitState d = in.deficits;
  return gp_allocate(build_rate_table(in, cfg), d, in.plan, in.tti);
}

}  // namespace mmslice
