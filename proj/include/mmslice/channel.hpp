#pragma once

// Channel coefficients per (RB, TTI), trace file I/O, and the clustered
// synthetic generator.
//
// Storage order is (b, t, m, k) row-major, the same order the trace file
// uses, so a trace payload maps one-to-one onto ChannelTensor::data().

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmslice/errors.hpp"

namespace mmslice {

using cfloat = std::complex<float>;

// Read-only view of one TTI: B matrices of size M x N. Rows of one RB's
// matrix are antennas, columns are users.
class FrameView {
 public:
  using RbMatrix = Eigen::Map<const Eigen::Matrix<cfloat, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  FrameView() = default;
  FrameView(const cfloat* base, std::size_t antennas, std::size_t users, std::size_t rbs,
            std::size_t rb_stride)
      : base_(base), antennas_(antennas), users_(users), rbs_(rbs), rb_stride_(rb_stride) {}

  std::size_t num_antennas() const noexcept { return antennas_; }
  std::size_t num_users() const noexcept { return users_; }
  std::size_t num_rbs() const noexcept { return rbs_; }

  cfloat at(std::size_t b, std::size_t m, std::size_t k) const {
    return base_[b * rb_stride_ + m * users_ + k];
  }

  RbMatrix rb_matrix(std::size_t b) const {
    return RbMatrix(base_ + b * rb_stride_, static_cast<Eigen::Index>(antennas_),
                    static_cast<Eigen::Index>(users_));
  }

  Eigen::VectorXcd column(std::size_t b, std::size_t k) const {
    check(b, k);
    Eigen::VectorXcd h(static_cast<Eigen::Index>(antennas_));
    for (std::size_t m = 0; m < antennas_; ++m) h[static_cast<Eigen::Index>(m)] = at(b, m, k);
    return h;
  }

  // M x |users| channel matrix of the given users on RB b.
  Eigen::MatrixXcd submatrix(std::size_t b, std::span<const int> users) const {
    Eigen::MatrixXcd h(static_cast<Eigen::Index>(antennas_), static_cast<Eigen::Index>(users.size()));
    for (std::size_t j = 0; j < users.size(); ++j) {
      check(b, static_cast<std::size_t>(users[j]));
      for (std::size_t m = 0; m < antennas_; ++m)
        h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
            at(b, m, static_cast<std::size_t>(users[j]));
    }
    return h;
  }

  void check(std::size_t b, std::size_t k) const {
    if (b >= rbs_ || k >= users_)
      throw IndexError("channel index out of range (rb " + std::to_string(b) + ", user " +
                       std::to_string(k) + ")");
  }

  // FNV-1a over the raw coefficients, one (re, im) pair per step; used to
  // prove that paired runs saw bit-identical channels.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t b = 0; b < rbs_; ++b) {
      const cfloat* p = base_ + b * rb_stride_;
      for (std::size_t i = 0; i < antennas_ * users_; ++i) {
        std::uint64_t w;
        std::memcpy(&w, p + i, sizeof w);
        h ^= w;
        h *= 1099511628211ULL;
      }
    }
    return h;
  }

 private:
  const cfloat* base_ = nullptr;
  std::size_t antennas_ = 0, users_ = 0, rbs_ = 0, rb_stride_ = 0;
};

class ChannelTensor {
 public:
  ChannelTensor(std::size_t antennas, std::size_t users, std::size_t rbs, std::size_t ttis,
                std::vector<cfloat> data)
      : antennas_(antennas), users_(users), rbs_(rbs), ttis_(ttis), data_(std::move(data)) {
    if (antennas == 0 || users == 0 || rbs == 0 || ttis == 0)
      throw ConfigError("dimensions", "channel tensor dimensions must be positive");
    if (data_.size() != antennas * users * rbs * ttis)
      throw ConfigError("data", "coefficient count does not match dimensions");
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw ConfigError("data", "non-finite channel coefficient");
  }

  std::size_t num_antennas() const noexcept { return antennas_; }
  std::size_t num_users() const noexcept { return users_; }
  std::size_t num_rbs() const noexcept { return rbs_; }
  std::size_t num_ttis() const noexcept { return ttis_; }
  std::span<const cfloat> data() const noexcept { return data_; }

  cfloat at(std::size_t b, std::size_t t, std::size_t m, std::size_t k) const {
    if (b >= rbs_ || t >= ttis_ || m >= antennas_ || k >= users_)
      throw IndexError("channel tensor index out of range");
    return data_[((b * ttis_ + t) * antennas_ + m) * users_ + k];
  }

  FrameView frame(std::size_t t) const {
    if (t >= ttis_) throw IndexError("tti " + std::to_string(t) + " out of range");
    return FrameView(data_.data() + t * antennas_ * users_, antennas_, users_, rbs_,
                     ttis_ * antennas_ * users_);
  }

  bool operator==(const ChannelTensor&) const = default;

 private:
  std::size_t antennas_, users_, rbs_, ttis_;
  std::vector<cfloat> data_;
};

// ||h_k^{b}||^2 accumulated in double.
inline double channel_gain(const FrameView& frame, std::size_t b, std::size_t k) {
  frame.check(b, k);
  double g = 0.0;
  for (std::size_t m = 0; m < frame.num_antennas(); ++m) g += std::norm(std::complex<double>(frame.at(b, m, k)));
  return g;
}

inline double channel_gain(const ChannelTensor& h, std::size_t b, std::size_t t, std::size_t k) {
  if (t >= h.num_ttis()) throw IndexError("tti out of range");
  return channel_gain(h.frame(t), b, k);
}

// |h_i^H h_j| / (||h_i|| ||h_j||), clamped to [0, 1].
inline double inter_user_correlation(const FrameView& frame, std::size_t b, std::size_t i,
                                     std::size_t j) {
  frame.check(b, i);
  frame.check(b, j);
  std::complex<double> dot = 0.0;
  double ni = 0.0, nj = 0.0;
  for (std::size_t m = 0; m < frame.num_antennas(); ++m) {
    const std::complex<double> hi(frame.at(b, m, i)), hj(frame.at(b, m, j));
    dot += std::conj(hi) * hj;
    ni += std::norm(hi);
    nj += std::norm(hj);
  }
  if (ni == 0.0 || nj == 0.0)
    throw UndefinedCorrelationError("zero-norm channel for user " + std::to_string(ni == 0.0 ? i : j));
  return std::min(1.0, std::abs(dot) / (std::sqrt(ni) * std::sqrt(nj)));
}

inline double inter_user_correlation(const ChannelTensor& h, std::size_t b, std::size_t t,
                                     std::size_t i, std::size_t j) {
  return inter_user_correlation(h.frame(t), b, i, j);
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

inline constexpr char kTraceMagic[4] = {'M', 'M', 'C', 'H'};
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 32;

namespace detail {

inline void put_u32(unsigned char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline std::uint32_t get_u32(const unsigned char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

inline void put_f32(unsigned char* out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(const unsigned char* in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace detail

inline void save_trace(const ChannelTensor& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadError::Kind::Io, "cannot open '" + path + "' for writing");

  unsigned char header[kTraceHeaderBytes] = {};
  std::memcpy(header, kTraceMagic, 4);
  detail::put_u32(header + 4, kTraceVersion);
  detail::put_u32(header + 8, static_cast<std::uint32_t>(h.num_antennas()));
  detail::put_u32(header + 12, static_cast<std::uint32_t>(h.num_users()));
  detail::put_u32(header + 16, static_cast<std::uint32_t>(h.num_rbs()));
  detail::put_u32(header + 20, static_cast<std::uint32_t>(h.num_ttis()));
  out.write(reinterpret_cast<const char*>(header), kTraceHeaderBytes);

  std::vector<unsigned char> payload(h.data().size() * 8);
  for (std::size_t i = 0; i < h.data().size(); ++i) {
    detail::put_f32(&payload[8 * i], h.data()[i].real());
    detail::put_f32(&payload[8 * i + 4], h.data()[i].imag());
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw LoadError(LoadError::Kind::Io, "write to '" + path + "' failed");
}

inline ChannelTensor load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Kind::Io, "cannot open '" + path + "'");

  unsigned char header[kTraceHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kTraceHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kTraceHeaderBytes))
    throw LoadError(LoadError::Kind::MalformedHeader, "file shorter than the 32-byte header");
  if (std::memcmp(header, kTraceMagic, 4) != 0)
    throw LoadError(LoadError::Kind::BadMagic, "missing MMCH magic");
  if (detail::get_u32(header + 4) != kTraceVersion)
    throw LoadError(LoadError::Kind::BadVersion,
                    "unsupported trace version " + std::to_string(detail::get_u32(header + 4)));

  const std::size_t m = detail::get_u32(header + 8), n = detail::get_u32(header + 12),
                    b = detail::get_u32(header + 16), t = detail::get_u32(header + 20);
  if (m == 0 || n == 0 || b == 0 || t == 0)
    throw LoadError(LoadError::Kind::MalformedHeader, "header declares a zero dimension");

  const std::size_t count = m * n * b * t;
  std::vector<unsigned char> payload(count * 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw LoadError(LoadError::Kind::Truncated,
                    "payload holds " + std::to_string(in.gcount()) + " bytes, header requires " +
                        std::to_string(payload.size()));
  if (in.peek() != std::char_traits<char>::eof())
    throw LoadError(LoadError::Kind::MalformedHeader, "trailing bytes after payload");

  std::vector<cfloat> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float re = detail::get_f32(&payload[8 * i]), im = detail::get_f32(&payload[8 * i + 4]);
    if (!std::isfinite(re) || !std::isfinite(im))
      throw LoadError(LoadError::Kind::NonFinite, "non-finite coefficient at index " + std::to_string(i));
    data[i] = cfloat(re, im);
  }
  return ChannelTensor(m, n, b, t, std::move(data));
}

// ---------------------------------------------------------------------------
// Synthetic clustered channels
// ---------------------------------------------------------------------------

// How the correlation knobs are interpreted across RBs.
enum class CorrelationTarget {
  PerRb,      // every (b, t) hits the target in expectation
  RbAverage,  // per-RB mixing jitters around the target; only the RB average hits it
};

struct ClusterSpec {
  int num_clusters = 1;
  int num_users = 1;
  std::vector<int> users_per_cluster{1};
  double intra_cluster_corr = 0.9;
  double inter_cluster_corr = 0.1;
  std::vector<bool> los_flags;  // empty: all clusters line-of-sight
  std::uint64_t seed = 1;

  double nlos_loss_db = 6.0;
  double shadowing_db = 2.0;
  // Share of each random component that is flat across RBs.
  double freq_coherence = 0.5;
  CorrelationTarget target = CorrelationTarget::PerRb;

  // Users are numbered cluster by cluster.
  int cluster_of(int user) const {
    int acc = 0;
    for (int c = 0; c < num_clusters; ++c) {
      acc += users_per_cluster[static_cast<std::size_t>(c)];
      if (user < acc) return c;
    }
    throw IndexError("user " + std::to_string(user) + " outside cluster spec");
  }

  bool is_los(int cluster) const {
    return los_flags.empty() || los_flags[static_cast<std::size_t>(cluster)];
  }

  void validate() const {
    if (num_clusters < 1) throw ConfigError("num_clusters", "must be positive");
    if (num_users < 1) throw ConfigError("num_users", "must be positive");
    if (users_per_cluster.size() != static_cast<std::size_t>(num_clusters))
      throw ConfigError("users_per_cluster", "needs one count per cluster");
    for (int c : users_per_cluster)
      if (c < 0) throw ConfigError("users_per_cluster", "counts must be non-negative");
    if (std::accumulate(users_per_cluster.begin(), users_per_cluster.end(), 0) != num_users)
      throw ConfigError("users_per_cluster", "counts sum to " +
                                                 std::to_string(std::accumulate(users_per_cluster.begin(),
                                                                                users_per_cluster.end(), 0)) +
                                                 ", expected " + std::to_string(num_users));
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(intra_cluster_corr)) throw ConfigError("intra_cluster_corr", "must lie in [0, 1]");
    if (!unit(inter_cluster_corr)) throw ConfigError("inter_cluster_corr", "must lie in [0, 1]");
    if (num_clusters > 1 && !(inter_cluster_corr < intra_cluster_corr))
      throw ConfigError("inter_cluster_corr", "must be below intra_cluster_corr");
    if (num_clusters == 1 && inter_cluster_corr > intra_cluster_corr)
      throw ConfigError("inter_cluster_corr", "must not exceed intra_cluster_corr");
    if (!los_flags.empty() && los_flags.size() != static_cast<std::size_t>(num_clusters))
      throw ConfigError("los_flags", "needs one flag per cluster");
    if (!unit(freq_coherence)) throw ConfigError("freq_coherence", "must lie in [0, 1]");
    if (shadowing_db < 0.0) throw ConfigError("shadowing_db", "must be non-negative");
  }
};

struct MobilityMode {
  enum class Kind { Static, SlowMobility, FastMobility };

  Kind kind = Kind::Static;
  double innovation = 0.0;       // Gauss-Markov weight of the fresh draw per TTI
  double hop_probability = 0.0;  // per-user cluster reassignment per TTI (Fast)

  static MobilityMode stationary(double innovation = 0.0) { return {Kind::Static, innovation, 0.0}; }
  static MobilityMode slow(double innovation) { return {Kind::SlowMobility, innovation, 0.0}; }
  static MobilityMode fast(double hop_probability, double innovation = 0.0) {
    return {Kind::FastMobility, innovation, hop_probability};
  }

  void validate() const {
    if (innovation < 0.0 || innovation > 1.0) throw ConfigError("innovation", "must lie in [0, 1]");
    if (hop_probability < 0.0 || hop_probability > 1.0)
      throw ConfigError("hop_probability", "must lie in [0, 1]");
  }
};

// Anything that can hand out frames in TTI order.
class ChannelSource {
 public:
  virtual ~ChannelSource() = default;
  virtual std::size_t num_antennas() const = 0;
  virtual std::size_t num_users() const = 0;
  virtual std::size_t num_rbs() const = 0;
  virtual std::size_t num_ttis() const = 0;
  // The view stays valid until the next call.
  virtual FrameView frame(std::size_t t) = 0;
};

class TensorSource final : public ChannelSource {
 public:
  explicit TensorSource(std::shared_ptr<const ChannelTensor> tensor) : tensor_(std::move(tensor)) {}

  std::size_t num_antennas() const override { return tensor_->num_antennas(); }
  std::size_t num_users() const override { return tensor_->num_users(); }
  std::size_t num_rbs() const override { return tensor_->num_rbs(); }
  std::size_t num_ttis() const override { return tensor_->num_ttis(); }
  FrameView frame(std::size_t t) override { return tensor_->frame(t); }

 private:
  std::shared_ptr<const ChannelTensor> tensor_;
};

// Streams frames of the clustered model one TTI at a time. Each user's
// vector mixes a component common to all users, one shared by its
// cluster, and its own i.i.d. part; the mixing weights set the expected
// intra- and inter-cluster correlation. Going back in time replays from
// the seed.
class SyntheticChannel final : public ChannelSource {
 public:
  SyntheticChannel(ClusterSpec spec, std::size_t antennas, std::size_t rbs, std::size_t ttis,
                   MobilityMode mobility)
      : spec_(std::move(spec)), antennas_(antennas), rbs_(rbs), ttis_(ttis), mobility_(mobility) {
    spec_.validate();
    mobility_.validate();
    if (antennas == 0 || rbs == 0 || ttis == 0)
      throw ConfigError("dimensions", "antennas, rbs and ttis must be positive");
    reset();
  }

  std::size_t num_antennas() const override { return antennas_; }
  std::size_t num_users() const override { return static_cast<std::size_t>(spec_.num_users); }
  std::size_t num_rbs() const override { return rbs_; }
  std::size_t num_ttis() const override { return ttis_; }
  const ClusterSpec& spec() const noexcept { return spec_; }

  // Current cluster of each user (changes only under FastMobility).
  const std::vector<int>& user_clusters() const noexcept { return cluster_; }

  FrameView frame(std::size_t t) override {
    if (t >= ttis_) throw IndexError("tti " + std::to_string(t) + " out of range");
    if (t < current_) reset();
    while (current_ < t) {
      step();
      ++current_;
    }
    if (dirty_) render();
    return FrameView(frame_.data(), antennas_, num_users(), rbs_, antennas_ * num_users());
  }

 private:
  using Vec = std::vector<std::complex<double>>;

  // One random component: a part flat across RBs plus a per-RB part.
  struct Component {
    Vec flat;
    std::vector<Vec> per_rb;
  };

  void reset() {
    rng_.seed(spec_.seed);
    const auto users = num_users();
    common_ = draw_component();
    cluster_comp_.clear();
    for (int c = 0; c < spec_.num_clusters; ++c) cluster_comp_.push_back(draw_component());
    cluster_.resize(users);
    shadow_db_.resize(users);
    user_comp_.clear();
    std::normal_distribution<double> shadow(0.0, 1.0);
    for (std::size_t k = 0; k < users; ++k) {
      cluster_[k] = spec_.cluster_of(static_cast<int>(k));
      shadow_db_[k] = spec_.shadowing_db * shadow(rng_);
      user_comp_.push_back(draw_component());
    }
    rb_intra_.assign(rbs_, spec_.intra_cluster_corr);
    if (spec_.target == CorrelationTarget::RbAverage) {
      std::uniform_real_distribution<double> jitter(-0.1, 0.1);
      for (auto& rho : rb_intra_)
        rho = std::clamp(spec_.intra_cluster_corr + jitter(rng_), spec_.inter_cluster_corr, 1.0);
    }
    frame_.assign(rbs_ * antennas_ * users, cfloat{});
    current_ = 0;
    dirty_ = true;
  }

  std::complex<double> cn() {
    std::normal_distribution<double> d(0.0, std::sqrt(0.5));
    const double re = d(rng_);
    return {re, d(rng_)};
  }

  Vec draw_vec() {
    Vec v(antennas_);
    for (auto& x : v) x = cn();
    return v;
  }

  Component draw_component() {
    Component c{draw_vec(), {}};
    c.per_rb.reserve(rbs_);
    for (std::size_t b = 0; b < rbs_; ++b) c.per_rb.push_back(draw_vec());
    return c;
  }

  void innovate(Vec& v, double w) {
    const double keep = std::sqrt(1.0 - w), fresh = std::sqrt(w);
    for (auto& x : v) x = keep * x + fresh * cn();
  }

  void step() {
    const double w = mobility_.innovation;
    if (mobility_.kind == MobilityMode::Kind::FastMobility && mobility_.hop_probability > 0.0) {
      std::bernoulli_distribution hop(mobility_.hop_probability);
      std::uniform_int_distribution<int> pick(0, spec_.num_clusters - 1);
      for (std::size_t k = 0; k < num_users(); ++k) {
        if (!hop(rng_)) continue;
        cluster_[k] = pick(rng_);
        user_comp_[k] = draw_component();
        dirty_ = true;
      }
    }
    if (w > 0.0) {
      for (auto& comp : user_comp_) {
        innovate(comp.flat, w);
        for (auto& v : comp.per_rb) innovate(v, w);
      }
      dirty_ = true;
    }
  }

  void render() {
    const double f = spec_.freq_coherence;
    const double wf = std::sqrt(f), wr = std::sqrt(1.0 - f);
    const double rho_e = spec_.inter_cluster_corr;
    const auto users = num_users();
    std::vector<double> amp(users);
    for (std::size_t k = 0; k < users; ++k) {
      const double db = shadow_db_[k] - (spec_.is_los(cluster_[k]) ? 0.0 : spec_.nlos_loss_db);
      amp[k] = std::pow(10.0, db / 20.0);
    }
    for (std::size_t b = 0; b < rbs_; ++b) {
      const double rho_i = rb_intra_[b];
      const double we = std::sqrt(rho_e), wa = std::sqrt(std::max(0.0, rho_i - rho_e)),
                   wn = std::sqrt(std::max(0.0, 1.0 - rho_i));
      for (std::size_t m = 0; m < antennas_; ++m) {
        const auto mix = [&](const Component& c) { return wf * c.flat[m] + wr * c.per_rb[b][m]; };
        const std::complex<double> e = mix(common_);
        for (std::size_t k = 0; k < users; ++k) {
          const auto& cl = cluster_comp_[static_cast<std::size_t>(cluster_[k])];
          const std::complex<double> h = amp[k] * (we * e + wa * mix(cl) + wn * mix(user_comp_[k]));
          frame_[(b * antennas_ + m) * users + k] =
              cfloat(static_cast<float>(h.real()), static_cast<float>(h.imag()));
        }
      }
    }
    dirty_ = false;
  }

  ClusterSpec spec_;
  std::size_t antennas_, rbs_, ttis_;
  MobilityMode mobility_;

  std::mt19937_64 rng_;
  Component common_;
  std::vector<Component> cluster_comp_;
  std::vector<Component> user_comp_;
  std::vector<int> cluster_;
  std::vector<double> shadow_db_;
  std::vector<double> rb_intra_;
  std::vector<cfloat> frame_;
  std::size_t current_ = 0;
  bool dirty_ = true;
};

inline ChannelTensor generate_synthetic(const ClusterSpec& spec, std::size_t antennas, std::size_t rbs,
                                        std::size_t ttis, MobilityMode mobility) {
  SyntheticChannel source(spec, antennas, rbs, ttis, mobility);
  const std::size_t users = source.num_users();
  std::vector<cfloat> data(antennas * users * rbs * ttis);
  for (std::size_t t = 0; t < ttis; ++t) {
    const FrameView f = source.frame(t);
    for (std::size_t b = 0; b < rbs; ++b)
      for (std::size_t m = 0; m < antennas; ++m)
        for (std::size_t k = 0; k < users; ++k)
          data[((b * ttis + t) * antennas + m) * users + k] = f.at(b, m, k);
  }
  return ChannelTensor(antennas, users, rbs, ttis, std::move(data));
}

}  // namespace mmslice
