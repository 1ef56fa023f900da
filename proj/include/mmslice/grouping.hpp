#pragma once

// User grouping: threshold the inter-user correlation into a binary graph
// and color it so that each color class is a low-correlation group.

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <shared_mutex>
#include <vector>

#include "mmslice/channel.hpp"
#include "mmslice/errors.hpp"

namespace mmslice {

class CorrelationGraph {
 public:
  CorrelationGraph(std::size_t users, double threshold) : n_(users), threshold_(threshold), adj_(users * users, 0) {}

  std::size_t num_users() const noexcept { return n_; }
  double threshold() const noexcept { return threshold_; }

  bool adjacent(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }

  void connect(std::size_t i, std::size_t j) {
    if (i == j) return;  // diagonal stays zero
    adj_[i * n_ + j] = adj_[j * n_ + i] = 1;
  }

  std::size_t degree(std::size_t i) const {
    return static_cast<std::size_t>(std::count(adj_.begin() + static_cast<std::ptrdiff_t>(i * n_),
                                               adj_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_), 1));
  }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (std::size_t i = 0; i < n_; ++i) d = std::max(d, degree(i));
    return d;
  }

 private:
  std::size_t n_;
  double threshold_;
  std::vector<unsigned char> adj_;
};

struct UserGrouping {
  static constexpr std::size_t kAllRbs = std::numeric_limits<std::size_t>::max();

  std::vector<std::vector<int>> groups;  // ordered by smallest member
  std::vector<int> group_of;             // user -> index into groups

  // Validity stamp: TTIs [tti_begin, tti_end) and the RB it was built on.
  std::size_t tti_begin = 0;
  std::size_t tti_end = std::numeric_limits<std::size_t>::max();
  std::size_t rb = kAllRbs;

  std::size_t num_groups() const noexcept { return groups.size(); }
  bool operator==(const UserGrouping&) const = default;
};

namespace detail {

inline void check_threshold(double c_th) {
  if (!(c_th > 0.0 && c_th < 1.0)) throw ConfigError("c_th", "correlation threshold must lie in (0, 1)");
}

// Pairwise |h_i^H h_j| / (||h_i|| ||h_j||) for all users on RB b.
inline Eigen::MatrixXd correlation_matrix(const FrameView& frame, std::size_t b) {
  const Eigen::MatrixXcd h = frame.rb_matrix(b).cast<std::complex<double>>();
  const Eigen::MatrixXcd gram = h.adjoint() * h;
  const auto n = gram.rows();
  Eigen::VectorXd norm(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double g = gram(k, k).real();
    if (g == 0.0) throw UndefinedCorrelationError("zero-norm channel for user " + std::to_string(k));
    norm[k] = std::sqrt(g);
  }
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      c(i, j) = c(j, i) = std::min(1.0, std::abs(gram(i, j)) / (norm[i] * norm[j]));
  return c;
}

inline CorrelationGraph threshold_graph(const Eigen::MatrixXd& corr, double c_th) {
  CorrelationGraph g(static_cast<std::size_t>(corr.rows()), c_th);
  for (Eigen::Index i = 0; i < corr.rows(); ++i)
    for (Eigen::Index j = i + 1; j < corr.cols(); ++j)
      if (corr(i, j) > c_th) g.connect(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return g;
}

}  // namespace detail

inline CorrelationGraph build_correlation_graph(const FrameView& frame, std::size_t b, double c_th) {
  detail::check_threshold(c_th);
  if (b >= frame.num_rbs()) throw IndexError("rb out of range");
  return detail::threshold_graph(detail::correlation_matrix(frame, b), c_th);
}

inline CorrelationGraph build_correlation_graph(const ChannelTensor& h, std::size_t b, std::size_t t,
                                                double c_th) {
  return build_correlation_graph(h.frame(t), b, c_th);
}

// One graph for the whole TTI from the correlation averaged over up to
// `rb_samples` evenly spaced RBs.
inline CorrelationGraph build_tti_correlation_graph(const FrameView& frame, double c_th,
                                                    std::size_t rb_samples = 8) {
  detail::check_threshold(c_th);
  const std::size_t rbs = frame.num_rbs();
  const std::size_t samples = std::clamp<std::size_t>(rb_samples, 1, rbs);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frame.num_users()),
                                              static_cast<Eigen::Index>(frame.num_users()));
  for (std::size_t s = 0; s < samples; ++s) acc += detail::correlation_matrix(frame, s * rbs / samples);
  acc /= static_cast<double>(samples);
  return detail::threshold_graph(acc, c_th);
}

// Greedy coloring in largest-degree-first order, ties by ascending user.
// Each vertex takes the smallest color unused by its colored neighbors.
inline UserGrouping color_graph(const CorrelationGraph& graph) {
  const std::size_t n = graph.num_users();
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = graph.degree(i);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return degree[a] > degree[b]; });

  std::vector<int> color(n, -1);
  std::vector<char> taken;
  int num_colors = 0;
  for (int v : order) {
    taken.assign(static_cast<std::size_t>(num_colors) + 1, 0);
    for (std::size_t u = 0; u < n; ++u)
      if (color[u] >= 0 && graph.adjacent(static_cast<std::size_t>(v), u)) taken[static_cast<std::size_t>(color[u])] = 1;
    int c = 0;
    while (taken[static_cast<std::size_t>(c)]) ++c;
    color[static_cast<std::size_t>(v)] = c;
    num_colors = std::max(num_colors, c + 1);
  }

  UserGrouping out;
  out.groups.assign(static_cast<std::size_t>(num_colors), {});
  for (std::size_t u = 0; u < n; ++u) out.groups[static_cast<std::size_t>(color[u])].push_back(static_cast<int>(u));
  std::sort(out.groups.begin(), out.groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  out.group_of.assign(n, -1);
  for (std::size_t g = 0; g < out.groups.size(); ++g)
    for (int u : out.groups[g]) out.group_of[static_cast<std::size_t>(u)] = static_cast<int>(g);
  return out;
}

inline void write_grouping_csv(std::ostream& os, const UserGrouping& grouping) {
  os << "user_id,group_id\n";
  for (std::size_t u = 0; u < grouping.group_of.size(); ++u) os << u << ',' << grouping.group_of[u] << '\n';
}

enum class GroupingScope { PerRb, PerTti, Once };

struct GroupingPolicy {
  std::size_t update_period = 1;  // TTIs between refreshes
  GroupingScope scope = GroupingScope::PerTti;
  double threshold = 0.5;
  std::size_t rb_samples = 8;  // PerTti/Once averaging

  void validate() const {
    if (update_period < 1) throw ConfigError("grouping_period", "must be at least 1");
    detail::check_threshold(threshold);
    if (rb_samples < 1) throw ConfigError("grouping_rb_samples", "must be at least 1");
  }
};

// Immutable set of groupings for one refresh: one per RB, or a single one
// shared by every RB.
class GroupingSnapshot {
 public:
  GroupingSnapshot() = default;
  explicit GroupingSnapshot(std::vector<UserGrouping> per_rb) : groupings_(std::move(per_rb)) {}

  const UserGrouping& for_rb(std::size_t b) const {
    return groupings_.size() == 1 ? groupings_.front() : groupings_.at(b);
  }
  bool empty() const noexcept { return groupings_.empty(); }
  bool operator==(const GroupingSnapshot&) const = default;

 private:
  std::vector<UserGrouping> groupings_;
};

// Caches groupings between refreshes. `prepare` is the only writer; readers
// hold a shared_ptr to an immutable snapshot, so a refresh never invalidates
// a grouping another thread is using.
class GroupingProvider {
 public:
  explicit GroupingProvider(GroupingPolicy policy = {}) : policy_(policy) { policy_.validate(); }

  // Returns true when a refresh happened.
  bool prepare(const FrameView& frame, std::size_t t) {
    std::unique_lock lock(mutex_);
    if (current_ && !due(t)) return false;
    std::vector<UserGrouping> fresh;
    const std::size_t until =
        policy_.scope == GroupingScope::Once ? UserGrouping{}.tti_end : t + policy_.update_period;
    if (policy_.scope == GroupingScope::PerRb) {
      for (std::size_t b = 0; b < frame.num_rbs(); ++b) {
        fresh.push_back(color_graph(build_correlation_graph(frame, b, policy_.threshold)));
        fresh.back().rb = b;
      }
    } else {
      fresh.push_back(color_graph(build_tti_correlation_graph(frame, policy_.threshold, policy_.rb_samples)));
    }
    for (auto& g : fresh) {
      g.tti_begin = t;
      g.tti_end = until;
    }
    computed_ += fresh.size();
    last_refresh_ = t;
    current_ = std::make_shared<const GroupingSnapshot>(std::move(fresh));
    return true;
  }

  std::shared_ptr<const GroupingSnapshot> snapshot() const {
    std::shared_lock lock(mutex_);
    return current_;
  }

  // Number of individual groupings computed so far.
  std::size_t groupings_computed() const {
    std::shared_lock lock(mutex_);
    return computed_;
  }

  const GroupingPolicy& policy() const noexcept { return policy_; }

 private:
  bool due(std::size_t t) const {
    if (policy_.scope == GroupingScope::Once) return false;
    return t < last_refresh_ || t - last_refresh_ >= policy_.update_period;
  }

  GroupingPolicy policy_;
  mutable std::shared_mutex mutex_;
  std::shared_ptr<const GroupingSnapshot> current_;
  std::size_t last_refresh_ = 0;
  std::size_t computed_ = 0;
};

// Convenience for the cached-provider factory.
inline GroupingProvider grouping_schedule(std::size_t update_period, GroupingScope scope, double threshold = 0.5) {
  GroupingPolicy p;
  p.update_period = update_period;
  p.scope = scope;
  p.threshold = threshold;
  return GroupingProvider(p);
}

}  // namespace mmslice
