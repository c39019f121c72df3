#pragma once

// Shared domain types for the Robbins-Monro laboratory: points and block
// structure, step-size schedules, oracle noise models, counter-based random
// streams, and recorded trajectories.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// =============================================================================
// Errors
// =============================================================================

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad configuration, bad constructor arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Query outside the recorded range of a path.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operation requires something the problem does not provide (e.g. a Hessian).
class UnsupportedProblem : public Error {
 public:
  using Error::Error;
};

/// An inner solver (PPM fixed point, Newton) ran out of iterations.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

// =============================================================================
// Points
// =============================================================================

/// Sizes of the minimizing (x) and maximizing (y) blocks of z = (x, y).
struct Blocks {
  int min_dim = 1;
  int max_dim = 1;

  [[nodiscard]] int dim() const noexcept { return min_dim + max_dim; }
  [[nodiscard]] bool in_min_block(int coord) const noexcept { return coord < min_dim; }
  friend bool operator==(const Blocks&, const Blocks&) = default;
};

/// A state z = (x, y) together with its block split.
class Point {
 public:
  Point(Vec coords, Blocks blocks) : coords_(std::move(coords)), blocks_(blocks) {
    if (blocks_.min_dim < 1 || blocks_.max_dim < 1) {
      throw ConfigError("Point: both blocks need at least one coordinate");
    }
    if (coords_.size() != blocks_.dim()) {
      throw ConfigError("Point: coordinate count " + std::to_string(coords_.size()) +
                        " does not match block sizes " + std::to_string(blocks_.dim()));
    }
    if (!coords_.allFinite()) throw ConfigError("Point: non-finite coordinate");
  }

  [[nodiscard]] const Vec& coords() const noexcept { return coords_; }
  [[nodiscard]] Blocks blocks() const noexcept { return blocks_; }
  [[nodiscard]] int dim() const noexcept { return blocks_.dim(); }
  [[nodiscard]] auto x() const { return coords_.head(blocks_.min_dim); }
  [[nodiscard]] auto y() const { return coords_.tail(blocks_.max_dim); }

 private:
  Vec coords_;
  Blocks blocks_;
};

// =============================================================================
// Random streams
// =============================================================================

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: the k-th output is a pure function of (key, k),
/// so streams derived from (seed, stream id) are independent of execution
/// order. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed),
        stream_id_(stream_id),
        key_(detail::mix64(seed ^ detail::mix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  /// An independent stream keyed on this stream's seed and a child id.
  [[nodiscard]] RngStream derive(std::uint64_t child) const {
    return RngStream(seed_, detail::mix64(stream_id_ + 1) ^ child);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }
  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// =============================================================================
// Noise models
// =============================================================================

/// Zero-mean oracle noise U(z; w). The total second moment E|U|^2 is at most
/// scale^2 for both random kinds.
struct NoiseModel {
  enum class Kind { none, gaussian, bounded_uniform };

  Kind kind = Kind::none;
  double scale = 0.0;  // sigma for gaussian, K for bounded_uniform

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("gaussian noise: sigma must be >= 0");
    return {Kind::gaussian, sigma};
  }
  static NoiseModel bounded_uniform(double bound) {
    if (!(bound >= 0.0) || !std::isfinite(bound)) throw ConfigError("bounded-uniform noise: K must be >= 0");
    return {Kind::bounded_uniform, bound};
  }

  [[nodiscard]] bool is_none() const noexcept { return kind == Kind::none || scale == 0.0; }
};

[[nodiscard]] inline std::string to_string(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::none: return "none";
    case NoiseModel::Kind::gaussian: return "gaussian";
    case NoiseModel::Kind::bounded_uniform: return "bounded-uniform";
  }
  return "unknown";
}

/// One noise vector. Gaussian splits sigma^2 equally over coordinates;
/// bounded-uniform is uniform on the ball of radius K.
inline Vec draw_noise(const NoiseModel& model, int dim, RngStream& stream) {
  Vec u = Vec::Zero(dim);
  if (model.is_none()) return u;
  switch (model.kind) {
    case NoiseModel::Kind::gaussian: {
      const double per_coord = model.scale / std::sqrt(static_cast<double>(dim));
      for (int i = 0; i < dim; ++i) u[i] = per_coord * stream.normal();
      break;
    }
    case NoiseModel::Kind::bounded_uniform: {
      double norm = 0.0;
      do {
        for (int i = 0; i < dim; ++i) u[i] = stream.normal();
        norm = u.norm();
      } while (norm == 0.0);
      const double radius = model.scale * std::pow(stream.uniform(), 1.0 / dim);
      u *= radius / norm;
      break;
    }
    case NoiseModel::Kind::none: break;
  }
  return u;
}

// =============================================================================
// Step schedules
// =============================================================================

/// c / n^q, with q = 0 meaning the constant c.
struct PowerLaw {
  double scale = 1.0;
  double exponent = 1.0;

  [[nodiscard]] double at(std::size_t n) const {
    return exponent == 0.0 ? scale : scale / std::pow(static_cast<double>(n), exponent);
  }
};

struct ScheduleValue {
  double step;
  std::optional<double> sampling_radius;
};

class StepSchedule {
 public:
  enum class Kind { power, constant, sequence };

  /// gamma_n = A / n^p.
  static StepSchedule power(double scale, double exponent) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("power schedule: A must be > 0");
    if (!(exponent > 0.0) || !std::isfinite(exponent)) throw ConfigError("power schedule: p must be > 0");
    StepSchedule s;
    s.kind_ = Kind::power;
    s.law_ = {scale, exponent};
    return s;
  }

  static StepSchedule constant(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("constant schedule: gamma must be > 0");
    StepSchedule s;
    s.kind_ = Kind::constant;
    s.law_ = {gamma, 0.0};
    return s;
  }

  /// Explicit gamma_1, gamma_2, ...; queries past the end are range errors.
  static StepSchedule sequence(std::vector<double> values) {
    if (values.empty()) throw ConfigError("sequence schedule: no values");
    for (double v : values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sequence schedule: every step must be > 0");
    }
    StepSchedule s;
    s.kind_ = Kind::sequence;
    s.values_ = std::move(values);
    return s;
  }

  /// Attach the companion sampling radius delta_n used by zeroth-order schemes.
  [[nodiscard]] StepSchedule with_sampling_radius(PowerLaw radius) const {
    if (!(radius.scale > 0.0) || !(radius.exponent >= 0.0)) {
      throw ConfigError("sampling radius: scale must be > 0 and exponent >= 0");
    }
    StepSchedule s = *this;
    s.radius_ = radius;
    return s;
  }

  [[nodiscard]] double step(std::size_t n) const {
    if (n == 0) throw RangeError("step schedule is indexed from n = 1");
    if (kind_ == Kind::sequence) {
      if (n > values_.size()) {
        throw RangeError("sequence schedule has " + std::to_string(values_.size()) +
                         " entries; n = " + std::to_string(n) + " requested");
      }
      return values_[n - 1];
    }
    return law_.at(n);
  }

  [[nodiscard]] std::optional<double> sampling_radius(std::size_t n) const {
    if (!radius_) return std::nullopt;
    if (n == 0) throw RangeError("step schedule is indexed from n = 1");
    return radius_->at(n);
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const PowerLaw& law() const noexcept { return law_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] const std::optional<PowerLaw>& radius_law() const noexcept { return radius_; }

  [[nodiscard]] std::string describe() const {
    std::string out;
    switch (kind_) {
      case Kind::power:
        out = "power(A=" + std::to_string(law_.scale) + ",p=" + std::to_string(law_.exponent) + ")";
        break;
      case Kind::constant: out = "constant(" + std::to_string(law_.scale) + ")"; break;
      case Kind::sequence: out = "sequence(" + std::to_string(values_.size()) + ")"; break;
    }
    if (radius_) {
      out += ";delta=" + std::to_string(radius_->scale) + "/n^" + std::to_string(radius_->exponent);
    }
    return out;
  }

 private:
  StepSchedule() = default;

  Kind kind_ = Kind::constant;
  PowerLaw law_{};
  std::vector<double> values_;
  std::optional<PowerLaw> radius_;
};

inline ScheduleValue schedule_value(const StepSchedule& schedule, std::size_t n) {
  return {schedule.step(n), schedule.sampling_radius(n)};
}

/// Constants of the two-sided window A/n <= gamma_n <= B / sqrt(n (log n)^(1+eps)).
struct WindowConstants {
  double lower = 1.0;  // A
  double upper = 2.0;  // B
  double eps = 0.5;
};

struct ScheduleReport {
  bool satisfies_prop1_window = false;
  WindowConstants witness_constants;
  std::size_t first_violation = 0;  // 0 when none
  /// Only for schedules with a sampling radius: whether the partial sums of
  /// gamma_n^2 / delta_n^2 flatten (successive doubling increments shrink).
  std::optional<bool> zeroth_order_summable;
};

namespace detail {

inline double window_upper_factor(std::size_t n, double eps) {
  const double nd = static_cast<double>(n);
  return std::sqrt(nd * std::pow(std::log(nd), 1.0 + eps));
}

}  // namespace detail

/// Scan n = 2..horizon for the two-sided step window. With declared constants
/// they are checked as given. Without them, A is the best lower witness
/// min n*gamma_n and B is fitted on the prefix n <= sqrt(horizon); the window
/// holds only if that B keeps bounding the whole range, which fails for steps
/// that decay too slowly.
inline ScheduleReport validate_schedule(const StepSchedule& schedule, std::size_t horizon,
                                        std::optional<WindowConstants> declared = std::nullopt) {
  if (horizon < 2) throw ConfigError("validate_schedule: horizon must be >= 2");
  ScheduleReport report;
  WindowConstants c;
  if (declared) {
    c = *declared;
  } else {
    c.eps = 0.5;
    c.lower = std::numeric_limits<double>::infinity();
    for (std::size_t n = 2; n <= horizon; ++n) c.lower = std::min(c.lower, static_cast<double>(n) * schedule.step(n));
    const auto prefix = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(horizon))));
    c.upper = 0.0;
    for (std::size_t n = 2; n <= prefix; ++n) {
      c.upper = std::max(c.upper, schedule.step(n) * detail::window_upper_factor(n, c.eps));
    }
  }
  report.witness_constants = c;
  report.satisfies_prop1_window = c.lower > 0.0;
  for (std::size_t n = 2; n <= horizon && report.satisfies_prop1_window; ++n) {
    const double g = schedule.step(n);
    const double lo = c.lower / static_cast<double>(n);
    const double hi = c.upper / detail::window_upper_factor(n, c.eps);
    // relative slack absorbs rounding in the fitted constants
    if (g < lo * (1.0 - 1e-12) || g > hi * (1.0 + 1e-12)) {
      report.satisfies_prop1_window = false;
      report.first_violation = n;
    }
  }

  if (schedule.radius_law()) {
    // increments of the partial sum over successive doublings [2^k, 2^(k+1))
    std::vector<double> increments;
    double acc = 0.0;
    std::size_t next_edge = 2;
    for (std::size_t n = 1; n <= horizon; ++n) {
      const double g = schedule.step(n);
      const double d = *schedule.sampling_radius(n);
      acc += g * g / (d * d);
      if (n + 1 == next_edge) {
        increments.push_back(acc);
        acc = 0.0;
        next_edge *= 2;
      }
    }
    bool flattening = increments.size() >= 4;
    for (std::size_t k = increments.size() >= 4 ? increments.size() - 3 : 0; k + 1 < increments.size(); ++k) {
      if (!(increments[k + 1] < 0.95 * increments[k])) flattening = false;
    }
    report.zeroth_order_summable = flattening;
  }
  return report;
}

// =============================================================================
// Trajectories
// =============================================================================

struct DivergenceReport {
  std::size_t iteration = 0;
  double max_abs_coordinate = 0.0;
};

/// Recorded iterates z_n with effective times tau_n = sum_{k<=n} gamma_k.
/// The initial point is recorded as n = 0 at tau = 0. Storage is flat
/// row-major so long runs stay cache friendly.
class Trajectory {
 public:
  explicit Trajectory(Blocks blocks) : blocks_(blocks) {}

  void append(std::size_t n, double tau, double step, const Eigen::Ref<const Vec>& z) {
    if (z.size() != blocks_.dim()) throw ConfigError("Trajectory: dimension mismatch");
    if (!times_.empty() && !(tau > times_.back())) {
      throw ConfigError("Trajectory: effective times must be strictly increasing");
    }
    indices_.push_back(n);
    times_.push_back(tau);
    steps_.push_back(step);
    data_.insert(data_.end(), z.data(), z.data() + z.size());
  }

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
  [[nodiscard]] int dim() const noexcept { return blocks_.dim(); }
  [[nodiscard]] Blocks blocks() const noexcept { return blocks_; }

  [[nodiscard]] Eigen::Map<const Vec> state(std::size_t i) const {
    return Eigen::Map<const Vec>(data_.data() + i * static_cast<std::size_t>(dim()), dim());
  }
  [[nodiscard]] Point point(std::size_t i) const { return Point(state(i), blocks_); }
  [[nodiscard]] double time(std::size_t i) const { return times_[i]; }
  [[nodiscard]] double step(std::size_t i) const { return steps_[i]; }
  [[nodiscard]] std::size_t index(std::size_t i) const { return indices_[i]; }

  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] const std::vector<double>& steps() const noexcept { return steps_; }
  [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  [[nodiscard]] const std::vector<double>& raw() const noexcept { return data_; }

  // Run metadata.
  double max_norm = 0.0;
  std::size_t queries_total = 0;
  std::optional<DivergenceReport> divergence;

 private:
  Blocks blocks_;
  std::vector<std::size_t> indices_;
  std::vector<double> times_;
  std::vector<double> steps_;
  std::vector<double> data_;
};

}  // namespace rmlab
