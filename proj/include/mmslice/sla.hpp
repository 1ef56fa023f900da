#pragma once

// Slices, SLA deficit bookkeeping, deficit-based slice classification,
// proportional-fair state and fairness metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmslice/channel.hpp"
#include "mmslice/errors.hpp"

namespace mmslice {

enum class Policy { MaxRate, ProportionalFair };

// Whether a slice's RBs may carry other slices' users.
enum class SharingMode { Any, Orthogonal, Sharing };

struct SliceConfig {
  int id = 0;
  std::vector<int> users;
  double sla_bits_per_tti = 0.0;  // gamma_s
  Policy policy = Policy::MaxRate;
  SharingMode sharing = SharingMode::Any;
};

class SlicingPlan {
 public:
  SlicingPlan() = default;

  SlicingPlan(std::vector<SliceConfig> slices, std::size_t num_users)
      : slices_(std::move(slices)), slice_of_(num_users, -1) {
    for (std::size_t s = 0; s < slices_.size(); ++s) {
      const auto& cfg = slices_[s];
      const std::string field = "slice." + std::to_string(cfg.id);
      if (!(cfg.sla_bits_per_tti >= 0.0) || !std::isfinite(cfg.sla_bits_per_tti))
        throw ConfigError(field + ".sla", "SLA must be a finite non-negative throughput");
      if (cfg.users.empty()) throw ConfigError(field + ".users", "slice has no users");
      for (int k : cfg.users) {
        if (k < 0 || static_cast<std::size_t>(k) >= num_users)
          throw ConfigError(field + ".users", "user " + std::to_string(k) + " out of range");
        if (slice_of_[static_cast<std::size_t>(k)] != -1)
          throw ConfigError(field + ".users", "user " + std::to_string(k) + " already belongs to another slice");
        slice_of_[static_cast<std::size_t>(k)] = static_cast<int>(s);
      }
    }
  }

  std::size_t num_slices() const noexcept { return slices_.size(); }
  std::size_t num_users() const noexcept { return slice_of_.size(); }
  const SliceConfig& slice(std::size_t s) const { return slices_.at(s); }
  const std::vector<SliceConfig>& slices() const noexcept { return slices_; }

  // -1 for users that belong to no slice.
  int slice_of(int user) const { return slice_of_.at(static_cast<std::size_t>(user)); }
  std::span<const int> slice_of() const noexcept { return slice_of_; }

  std::vector<double> sla_bits() const {
    std::vector<double> out;
    for (const auto& s : slices_) out.push_back(s.sla_bits_per_tti);
    return out;
  }

 private:
  std::vector<SliceConfig> slices_;
  std::vector<int> slice_of_;
};

// Deficits at or below this many bits count as met; absorbs rounding in
// t' * gamma - delivered.
inline constexpr double kDeficitTolerance = 1e-6;

struct DeficitState {
  std::vector<double> deficit;    // Delta_s
  std::vector<double> delivered;  // cumulative bits per slice
  std::size_t tti = 0;            // t' of the last refresh

  static DeficitState initial(std::size_t slices) {
    return {std::vector<double>(slices, 0.0), std::vector<double>(slices, 0.0), 0};
  }

  std::size_t num_slices() const noexcept { return deficit.size(); }

  bool active(std::size_t s) const { return deficit[s] > 0.0; }

  bool any_active() const {
    return std::any_of(deficit.begin(), deficit.end(), [](double d) { return d > 0.0; });
  }

  double total_deficit() const {
    double t = 0.0;
    for (double d : deficit) t += d;
    return t;
  }

  // Within-TTI decrement: Delta_s <- max(0, Delta_s - r).
  void consume(std::size_t s, double bits) {
    if (s >= deficit.size()) throw IndexError("unknown slice " + std::to_string(s));
    if (!(bits >= 0.0)) throw ConfigError("bits", "delivered bits must be non-negative");
    double d = deficit[s] - bits;
    deficit[s] = d > kDeficitTolerance ? d : 0.0;
    delivered[s] += bits;
  }
};

// Delta_s = max(0, t' * gamma_s - delivered_s).
inline DeficitState refresh_deficits(DeficitState state, std::span<const double> sla_bits, std::size_t t_prime) {
  if (sla_bits.size() != state.num_slices()) throw ConfigError("sla", "one SLA per slice required");
  state.tti = t_prime;
  for (std::size_t s = 0; s < sla_bits.size(); ++s) {
    const double d = static_cast<double>(t_prime) * sla_bits[s] - state.delivered[s];
    state.deficit[s] = d > kDeficitTolerance ? d : 0.0;
  }
  return state;
}

// Same refresh from a per-TTI history: history[t][s] = bits delivered to
// slice s during TTI t, for t = 0 .. t'-1.
inline DeficitState refresh_deficits(std::span<const std::vector<double>> history, std::span<const double> sla_bits) {
  DeficitState state = DeficitState::initial(sla_bits.size());
  for (const auto& row : history)
    for (std::size_t s = 0; s < sla_bits.size(); ++s) state.delivered[s] += row.at(s);
  return refresh_deficits(std::move(state), sla_bits, history.size());
}

inline DeficitState consume(DeficitState state, std::size_t s, double bits) {
  state.consume(s, bits);
  return state;
}

struct DeltaGroups {
  std::vector<int> large;  // Delta_s >= average of active deficits
  std::vector<int> small;  // 0 < Delta_s < average
  double average = 0.0;

  bool is_large(int s) const { return std::find(large.begin(), large.end(), s) != large.end(); }
  bool is_small(int s) const { return std::find(small.begin(), small.end(), s) != small.end(); }
};

// Empty when no slice has a deficit (the scheduling loop is finished).
inline std::optional<DeltaGroups> classify_slices(const DeficitState& state) {
  double sum = 0.0;
  std::size_t active = 0;
  for (double d : state.deficit)
    if (d > 0.0) {
      sum += d;
      ++active;
    }
  if (active == 0) return std::nullopt;
  DeltaGroups g;
  g.average = sum / static_cast<double>(active);
  for (std::size_t s = 0; s < state.deficit.size(); ++s) {
    const double d = state.deficit[s];
    if (d <= 0.0) continue;
    (d >= g.average * (1.0 - 1e-12) ? g.large : g.small).push_back(static_cast<int>(s));
  }
  // A lone active slice equals the mean; rounding in the sum must not
  // demote the maximum.
  if (g.large.empty()) {
    auto it = std::max_element(g.small.begin(), g.small.end(),
                               [&](int a, int b) { return state.deficit[a] < state.deficit[b]; });
    g.large.push_back(*it);
    g.small.erase(it);
  }
  return g;
}

// Proportional-fair bookkeeping. Both the gain and the accumulated rate
// are normalized by their maximum within the user's slice.
class PFState {
 public:
  PFState() = default;
  PFState(const SlicingPlan& plan, double warm_start = 1e-6)
      : warm_(warm_start), accumulated_(plan.num_users(), 0.0), normalized_rate_(plan.num_users(), 1.0) {
    for (const auto& s : plan.slices()) members_.push_back(s.users);
    renormalize();
  }

  // Adds the bits each user received in the TTI just finished.
  void record(std::span<const double> per_user_bits) {
    for (std::size_t k = 0; k < accumulated_.size(); ++k) accumulated_[k] += per_user_bits[k];
    renormalize();
  }

  // Normalized gains for the current TTI; gain(k, b) must be ||h_k^b||^2.
  template <class GainFn>
  void set_gains(std::size_t rbs, GainFn&& gain) {
    const std::size_t n = accumulated_.size();
    rbs_ = rbs;
    norm_gain_.assign(n * rbs, 0.0);
    for (std::size_t b = 0; b < rbs; ++b) {
      for (const auto& users : members_) {
        double mx = 0.0;
        for (int k : users) mx = std::max(mx, gain(static_cast<std::size_t>(k), b));
        for (int k : users)
          norm_gain_[static_cast<std::size_t>(k) * rbs + b] = mx > 0.0 ? gain(static_cast<std::size_t>(k), b) / mx : 0.0;
      }
    }
  }

  double normalized_rate(int k) const { return normalized_rate_.at(static_cast<std::size_t>(k)); }
  double normalized_gain(int k, std::size_t b) const { return norm_gain_.at(static_cast<std::size_t>(k) * rbs_ + b); }
  const std::vector<double>& accumulated() const noexcept { return accumulated_; }
  double warm_start() const noexcept { return warm_; }

  // Direct setter for tests and trace replays.
  void set_accumulated(std::vector<double> acc) {
    accumulated_ = std::move(acc);
    renormalize();
  }

 private:
  void renormalize() {
    for (const auto& users : members_) {
      double mx = 0.0;
      for (int k : users) mx = std::max(mx, accumulated_[static_cast<std::size_t>(k)]);
      for (int k : users) {
        const auto u = static_cast<std::size_t>(k);
        normalized_rate_[u] = mx > 0.0 ? std::max(accumulated_[u], warm_ * mx) / mx : warm_;
      }
    }
  }

  std::vector<std::vector<int>> members_;
  double warm_ = 1e-6;
  std::size_t rbs_ = 0;
  std::vector<double> accumulated_;
  std::vector<double> normalized_rate_;
  std::vector<double> norm_gain_;
};

inline double pf_metric(const PFState& pf, int k, std::size_t b) {
  return pf.normalized_gain(k, b) / pf.normalized_rate(k);
}

// (sum x)^2 / (n sum x^2); empty when undefined (no users or all zero).
inline std::optional<double> jains_index(std::span<const double> rates) {
  double sum = 0.0, sq = 0.0;
  for (double x : rates) {
    if (x < 0.0) throw ConfigError("rates", "rates must be non-negative");
    sum += x;
    sq += x * x;
  }
  if (rates.empty() || sq == 0.0) return std::nullopt;
  return sum * sum / (static_cast<double>(rates.size()) * sq);
}

// Throughput SLAs in Mbps for the reference network sizes.
namespace sla_presets {
inline constexpr std::array<double, 4> kSmallLoose{51.9, 46.2, 50.0, 53.8};
inline constexpr std::array<double, 4> kSmallTight{90.4, 84.6, 88.5, 92.3};
inline constexpr std::array<double, 8> kLargeLoose{16.7, 46.4, 42.3, 51.7, 19.2, 50.5, 48.1, 53.6};
inline constexpr std::array<double, 8> kLargeTight{55.8, 84.2, 80.8, 91.2, 57.7, 88.3, 86.5, 92.4};
}  // namespace sla_presets

}  // namespace mmslice
