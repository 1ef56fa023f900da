#pragma once

// Zero-forcing precoding and Shannon-rate estimation for a set of users
// co-scheduled on one RB.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mmslice/channel.hpp"
#include "mmslice/errors.hpp"

namespace mmslice {

// Distinct user indices in scheduling order.
using UserSet = std::vector<int>;

inline constexpr double kDefaultRegEps = 1e-6;
inline constexpr double kConditionCap = 1e12;

struct LinkBudget {
  double tx_power_w = 1.0;
  double noise_w = 0.1;
  double rb_bandwidth_hz = 20e6 / 52.0;
  double tti_s = 1e-3;

  // Channel uses per RB per TTI; multiplies spectral efficiency into bits.
  double symbols_per_rb() const noexcept { return rb_bandwidth_hz * tti_s; }

  double bits_per_tti_from_mbps(double mbps) const noexcept { return mbps * 1e6 * tti_s; }
  double mbps_from_bits_per_tti(double bits) const noexcept { return bits / tti_s / 1e6; }

  void validate() const {
    if (!(tx_power_w > 0)) throw ConfigError("tx_power_w", "must be positive");
    if (!(noise_w > 0)) throw ConfigError("noise_w", "must be positive");
    if (!(rb_bandwidth_hz > 0)) throw ConfigError("rb_bandwidth_hz", "must be positive");
    if (!(tti_s > 0)) throw ConfigError("tti_s", "must be positive");
  }
};

struct PrecodingMatrix {
  Eigen::MatrixXcd w;     // M x |U|, columns not normalized
  Eigen::VectorXd gains;  // 1 / ||w_k||^2
};

namespace detail {

// (G + eps I)^{-1}, refusing ill-conditioned Gram matrices on the exact path.
inline Eigen::MatrixXcd regularized_inverse(const Eigen::MatrixXcd& gram, double reg_eps) {
  const auto n = gram.rows();
  if (reg_eps < 0.0) throw ConfigError("reg_eps", "must be non-negative");
  if (reg_eps == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kConditionCap)
      throw SingularChannelError("Gram matrix condition number exceeds cap (rank-deficient user set)");
  }
  Eigen::MatrixXcd a = gram;
  a.diagonal().array() += reg_eps;
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) throw SingularChannelError("Gram matrix is not positive definite");
  return llt.solve(Eigen::MatrixXcd::Identity(n, n));
}

}  // namespace detail

// W = H (H^H H + eps I)^{-1}.
inline PrecodingMatrix zf_precoder(const Eigen::MatrixXcd& h_sub, double reg_eps = kDefaultRegEps) {
  if (h_sub.cols() > h_sub.rows())
    throw OversubscriptionError(std::to_string(h_sub.cols()) + " streams on " + std::to_string(h_sub.rows()) +
                                " antennas");
  PrecodingMatrix out;
  if (h_sub.cols() == 0) return out;
  const Eigen::MatrixXcd gram = h_sub.adjoint() * h_sub;
  out.w = h_sub * detail::regularized_inverse(gram, reg_eps);
  out.gains = out.w.colwise().squaredNorm().cwiseInverse().transpose();
  return out;
}

inline void validate_user_set(std::span<const int> users, std::size_t num_users) {
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i] < 0 || static_cast<std::size_t>(users[i]) >= num_users)
      throw IndexError("user " + std::to_string(users[i]) + " out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (users[i] == users[j]) throw ConfigError("users", "duplicate user " + std::to_string(users[i]));
  }
}

// Per-user rates in bits per TTI with an equal power split and unit-norm
// precoder columns. Under exact ZF every user sees SNR (P/|U|)/(N0 ||w_k||^2);
// with regularization the residual leakage h_k^H w_j enters as interference.
inline std::vector<double> rates_for_channel(const Eigen::MatrixXcd& h_sub, const LinkBudget& budget,
                                             double reg_eps = kDefaultRegEps) {
  const auto n = h_sub.cols();
  if (n > h_sub.rows())
    throw OversubscriptionError(std::to_string(n) + " streams on " + std::to_string(h_sub.rows()) + " antennas");
  std::vector<double> rates(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return rates;

  const Eigen::MatrixXcd gram = h_sub.adjoint() * h_sub;
  const Eigen::MatrixXcd inv = detail::regularized_inverse(gram, reg_eps);
  const Eigen::MatrixXcd hw = gram * inv;                 // H^H W
  const Eigen::VectorXd wnorm2 = (inv * hw).diagonal().real();  // ||w_j||^2 = (A^-1 G A^-1)_jj
  const double p = budget.tx_power_w / static_cast<double>(n);
  const double scale = budget.symbols_per_rb();

  for (Eigen::Index k = 0; k < n; ++k) {
    double signal = 0.0, leak = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = std::norm(hw(k, j)) / wnorm2[j];
      (j == k ? signal : leak) += g;
    }
    const double sinr = p * signal / (budget.noise_w + p * leak);
    rates[static_cast<std::size_t>(k)] = scale * std::log2(1.0 + std::max(0.0, sinr));
  }
  return rates;
}

inline std::vector<double> achieved_rates(const FrameView& frame, std::size_t b, std::span<const int> users,
                                          const LinkBudget& budget, double reg_eps = kDefaultRegEps) {
  if (b >= frame.num_rbs()) throw IndexError("rb out of range");
  validate_user_set(users, frame.num_users());
  return rates_for_channel(frame.submatrix(b, users), budget, reg_eps);
}

inline std::vector<double> achieved_rates(const ChannelTensor& h, std::size_t b, std::size_t t,
                                          std::span<const int> users, const LinkBudget& budget,
                                          double reg_eps = kDefaultRegEps) {
  return achieved_rates(h.frame(t), b, users, budget, reg_eps);
}

// r_s^{b,t}: bits delivered to slice s on one RB.
inline double slice_rate(std::span<const int> users, std::span<const double> rates, std::span<const int> slice_of,
                         int s) {
  double total = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i)
    if (slice_of[static_cast<std::size_t>(users[i])] == s) total += rates[i];
  return total;
}

inline double sum_rate(std::span<const double> rates) {
  double total = 0.0;
  for (double r : rates) total += r;
  return total;
}

}  // namespace mmslice
