#pragma once

#include "mmslice/allocation.hpp"
#include "mmslice/bnb.hpp"
#include "mmslice/delta.hpp"
#include "mmslice/greedy.hpp"
#include "mmslice/intra_slice.hpp"
#include "mmslice/parallel.hpp"

namespace mmslice {

struct ScheduleStats {
  // Set when branch and bound could not certify an optimum (node budget or
  // unmeetable deficits) and the Greedy Plus allocation was used instead.
  bool bnb_fallback = false;
  std::size_t bnb_nodes = 0;
};

inline Allocation schedule(SchedulerKind kind, const TtiInput& in, const SchedulerConfig& cfg,
                           ScheduleStats* stats = nullptr) {
  if (!in.plan) throw ConfigError("plan", "no slicing plan");
  switch (kind) {
    case SchedulerKind::Greedy:
      return greedy_schedule(in, cfg);
    case SchedulerKind::GreedyPlus:
      return gp_schedule(in, cfg);
    case SchedulerKind::Dro:
      return dro_schedule(in, cfg);
    case SchedulerKind::Drs:
      return drs_schedule(in, cfg);
    case SchedulerKind::RsEs:
      return rs_es_schedule(in, cfg);
    case SchedulerKind::DroParallel:
      return dro_parallel_schedule(in, cfg);
    case SchedulerKind::DrsParallel:
      return drs_parallel_schedule(in, cfg);
    case SchedulerKind::Bnb: {
      const auto table = build_rate_table(in, cfg);
      auto res = bnb_optimal(table, in.deficits, cfg.bnb, in.plan, in.tti);
      if (stats) stats->bnb_nodes = res.nodes;
      if (res.optimal()) return std::move(res.allocation);
      if (stats) stats->bnb_fallback = true;
      DeficitState d = in.deficits;
      return gp_allocate(table, d, in.plan, in.tti);
    }
  }
  throw ConfigError("scheduler", "unhandled scheduler kind");
}

}  // namespace mmslice
