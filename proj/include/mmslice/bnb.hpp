#pragma once

// Exact minimum-RB orthogonal assignment for one TTI by depth-first branch
// and bound over the rate estimate table.

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "mmslice/greedy.hpp"

namespace mmslice {

struct BnbResult {
  enum class Status { Optimal, Infeasible, BudgetExceeded };

  Status status = Status::Optimal;
  Allocation allocation;   // empty unless Optimal
  std::size_t rb_count = 0;
  std::size_t nodes = 0;

  bool optimal() const noexcept { return status == Status::Optimal; }
};

namespace detail {

class BnbSearch {
 public:
  BnbSearch(const RateEstimateTable& table, const DeficitState& deficits, std::size_t node_budget)
      : t_(table), budget_(node_budget), rem_(deficits.deficit) {
    for (std::size_t s = 0; s < t_.num_slices; ++s)
      if (rem_[s] > kDeficitTolerance) active_.push_back(s);

    order_.resize(t_.num_rbs);
    std::iota(order_.begin(), order_.end(), 0);
    auto top = [&](std::size_t b) {
      double m = 0.0;
      for (std::size_t s : active_) m = std::max(m, t_.rate(b, s));
      return m;
    };
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return top(a) > top(b); });

    by_rate_.resize(t_.num_slices);
    for (std::size_t s : active_) {
      auto& v = by_rate_[s];
      v.resize(t_.num_rbs);
      std::iota(v.begin(), v.end(), 0);  // positions in order_
      std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
        return t_.rate(order_[a], s) > t_.rate(order_[b], s);
      });
    }
    assign_.assign(t_.num_rbs, -1);
  }

  void seed_incumbent(const std::vector<int>& assign_by_rb, std::size_t count) {
    best_count_ = count;
    best_assign_ = assign_by_rb;
  }

  void run() { dfs(0, 0); }

  bool exhausted() const noexcept { return out_of_budget_; }
  std::size_t nodes() const noexcept { return nodes_; }
  bool found() const noexcept { return best_count_ != kNone; }
  std::size_t best_count() const noexcept { return best_count_; }
  const std::vector<int>& best_assignment() const noexcept { return best_assign_; }  // by RB index

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  bool satisfied() const {
    return std::all_of(active_.begin(), active_.end(), [&](std::size_t s) { return rem_[s] <= kDeficitTolerance; });
  }

  // Sum over slices of the fewest RBs at positions >= pos that could cover
  // the slice's residual deficit on their own; kNone if some slice cannot.
  std::size_t lower_bound(std::size_t pos) const {
    std::size_t total = 0;
    for (std::size_t s : active_) {
      double need = rem_[s];
      if (need <= kDeficitTolerance) continue;
      std::size_t n = 0;
      for (std::size_t p : by_rate_[s]) {
        if (p < pos) continue;
        const double r = t_.rate(order_[p], s);
        if (r <= 0.0) break;
        need -= r;
        ++n;
        if (need <= kDeficitTolerance) break;
      }
      if (need > kDeficitTolerance) return kNone;
      total += n;
    }
    return total;
  }

  void dfs(std::size_t pos, std::size_t count) {
    if (out_of_budget_) return;
    if (++nodes_ > budget_) {
      out_of_budget_ = true;
      return;
    }
    if (satisfied()) {
      if (count < best_count_) {
        best_count_ = count;
        best_assign_.assign(t_.num_rbs, -1);
        for (std::size_t p = 0; p < pos; ++p) best_assign_[order_[p]] = assign_[p];
      }
      return;
    }
    if (pos == t_.num_rbs) return;
    const std::size_t lb = lower_bound(pos);
    if (lb == kNone || (best_count_ != kNone && count + lb >= best_count_)) return;

    const std::size_t b = order_[pos];
    std::vector<std::size_t> cand;
    for (std::size_t s : active_)
      if (rem_[s] > kDeficitTolerance && t_.rate(b, s) > 0.0) cand.push_back(s);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t x, std::size_t y) { return t_.rate(b, x) > t_.rate(b, y); });
    for (std::size_t s : cand) {
      const double saved = rem_[s];
      rem_[s] = saved - t_.rate(b, s);
      assign_[pos] = static_cast<int>(s);
      dfs(pos + 1, count + 1);
      rem_[s] = saved;
      assign_[pos] = -1;
    }
    dfs(pos + 1, count);
  }

  const RateEstimateTable& t_;
  std::size_t budget_;
  std::vector<double> rem_;
  std::vector<std::size_t> active_, order_;
  std::vector<std::vector<std::size_t>> by_rate_;
  std::vector<int> assign_;  // by position
  std::vector<int> best_assign_;
  std::size_t best_count_ = kNone;
  std::size_t nodes_ = 0;
  bool out_of_budget_ = false;
};

}  // namespace detail

// Minimizes the number of granted RBs subject to one slice per RB and every
// active slice's deficit being covered by its table rates.
inline BnbResult bnb_optimal(const RateEstimateTable& table, const DeficitState& deficits,
                             const BnbLimits& limits = {}, const SlicingPlan* plan = nullptr, std::size_t tti = 0) {
  if (table.num_rbs > limits.max_rbs || table.num_slices > limits.max_slices)
    throw InfeasibleError("branch and bound limited to " + std::to_string(limits.max_rbs) + " RBs and " +
                          std::to_string(limits.max_slices) + " slices (got " + std::to_string(table.num_rbs) +
                          " x " + std::to_string(table.num_slices) + ")");
  if (deficits.num_slices() != table.num_slices) throw ConfigError("deficits", "one deficit per slice required");

  detail::BnbSearch search(table, deficits, limits.node_budget);
  {
    DeficitState d = deficits;
    const Allocation gp = gp_allocate(table, d, nullptr, tti);
    if (!d.any_active()) {
      std::vector<int> assign(table.num_rbs, -1);
      for (const auto& g : gp.grants) assign[g.rb] = g.slices.front();
      search.seed_incumbent(assign, gp.num_rbs());
    }
  }
  search.run();

  BnbResult out;
  out.nodes = search.nodes();
  if (search.exhausted()) {
    out.status = BnbResult::Status::BudgetExceeded;
    return out;
  }
  if (!search.found()) {
    out.status = BnbResult::Status::Infeasible;
    return out;
  }
  out.rb_count = search.best_count();
  out.allocation = Allocation{tti, {}, std::vector<double>(table.num_slices, 0.0)};
  DeficitState d = deficits;
  for (std::size_t b = 0; b < table.num_rbs; ++b)
    if (const int s = search.best_assignment()[b]; s >= 0)
      commit_table_grant(out.allocation, d, plan, table, b, static_cast<std::size_t>(s));
  return out;
}

inline BnbResult bnb_schedule(const TtiInput& in, const SchedulerConfig& cfg) {
  return bnb_optimal(build_rate_table(in, cfg), in.deficits, cfg.bnb, in.plan, in.tti);
}

}  // namespace mmslice
