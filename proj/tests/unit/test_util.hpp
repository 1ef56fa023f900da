#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "mmslice/schedulers.hpp"

namespace mmslice::testing {

// T = 1 tensor with coefficients from f(b, m, k).
inline ChannelTensor tensor_from(std::size_t m, std::size_t n, std::size_t b,
                                 const std::function<cfloat(std::size_t, std::size_t, std::size_t)>& f) {
  std::vector<cfloat> data(m * n * b);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = 0; k < n; ++k) data[(r * m + a) * n + k] = f(r, a, k);
  return ChannelTensor(m, n, b, 1, std::move(data));
}

inline ChannelTensor random_tensor(std::size_t m, std::size_t n, std::size_t b, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 0.70710678f);
  std::vector<cfloat> data(m * n * b * t);
  for (auto& x : data) {
    const float re = d(rng);
    x = cfloat(re, d(rng));
  }
  return ChannelTensor(m, n, b, t, std::move(data));
}

inline Eigen::MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd h(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = d(rng);
      h(i, j) = {re, d(rng)};
    }
  return h;
}

// Slices of consecutive users with the given sizes and SLAs (bits/TTI).
inline SlicingPlan consecutive_plan(const std::vector<int>& sizes, const std::vector<double>& sla,
                                    SharingMode mode = SharingMode::Any,
                                    Policy policy = Policy::MaxRate) {
  std::vector<SliceConfig> out;
  int next = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    SliceConfig c;
    c.id = static_cast<int>(s);
    for (int i = 0; i < sizes[s]; ++i) c.users.push_back(next++);
    c.sla_bits_per_tti = sla[s];
    c.policy = policy;
    c.sharing = mode;
    out.push_back(std::move(c));
  }
  return SlicingPlan(std::move(out), static_cast<std::size_t>(next));
}

inline std::shared_ptr<const GroupingSnapshot> group_once(const FrameView& frame, double c_th = 0.5) {
  GroupingPolicy p;
  p.threshold = c_th;
  GroupingProvider provider(p);
  provider.prepare(frame, 0);
  return provider.snapshot();
}

inline std::shared_ptr<const GroupingSnapshot> fixed_grouping(std::vector<std::vector<int>> groups, std::size_t users) {
  UserGrouping g;
  g.group_of.assign(users, -1);
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (int k : groups[i]) g.group_of[static_cast<std::size_t>(k)] = static_cast<int>(i);
  g.groups = std::move(groups);
  return std::make_shared<const GroupingSnapshot>(std::vector<UserGrouping>{g});
}

// Everything one scheduler call needs, owning the storage TtiInput points at.
struct Instance {
  ChannelTensor h;
  SlicingPlan plan;
  DeficitState deficits;
  std::shared_ptr<const GroupingSnapshot> grouping;

  TtiInput input(const PFState* pf = nullptr) const {
    return TtiInput{h.frame(0), 0, &plan, deficits, grouping, pf, 0.0};
  }
};

inline DeficitState deficits_of(std::vector<double> d) {
  DeficitState s = DeficitState::initial(d.size());
  s.deficit = std::move(d);
  s.tti = 1;
  return s;
}

// Invariants every allocation must satisfy.
inline std::string allocation_problem(const Allocation& a, const SlicingPlan& plan, std::size_t k_max,
                                      SharingMode mode, std::size_t rbs) {
  std::vector<char> seen(rbs, 0);
  for (const auto& g : a.grants) {
    if (g.rb >= rbs) return "rb out of range";
    if (seen[g.rb]++) return "rb granted twice";
    if (g.users.size() > k_max) return "more than K users";
    if (g.users.size() != g.rates.size()) return "rates misaligned";
    for (double r : g.rates)
      if (!(r >= 0.0)) return "negative rate";
    std::vector<int> sorted = g.users;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return "duplicate user";
    if (mode == SharingMode::Orthogonal && g.slices.size() > 1) return "two slices on one RB";
    for (int k : g.users)
      if (plan.slice_of(k) < 0) return "user outside every slice";
  }
  return {};
}

}  // namespace mmslice::testing
