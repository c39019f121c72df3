#pragma once

// Mean dynamics dz/dt = V(z): fixed-step RK4 integration, continuous-time
// interpolation of discrete trajectories, and the pseudotrajectory deviation
// sup_{0<=h<=T} |X(t+h) - Phi_h(X(t))|.

#include "rmlab/problems.hpp"

#include <concepts>

namespace rmlab {

/// Any recorded path: sample times and states.
template <class P>
concept SampledPath = requires(const P& p, std::size_t i) {
  { p.size() } -> std::convertible_to<std::size_t>;
  { p.time(i) } -> std::convertible_to<double>;
  { p.state(i) } -> std::convertible_to<Vec>;
  { p.dim() } -> std::convertible_to<int>;
};

/// Integrated orbit of the mean dynamics, flat row-major storage.
class FlowPath {
 public:
  FlowPath(int dim, double h_int) : dim_(dim), h_int_(h_int) {}

  void append(double t, const Eigen::Ref<const Vec>& z) {
    times_.push_back(t);
    data_.insert(data_.end(), z.data(), z.data() + z.size());
  }

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] double time(std::size_t i) const { return times_[i]; }
  [[nodiscard]] Eigen::Map<const Vec> state(std::size_t i) const {
    return Eigen::Map<const Vec>(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
  }
  [[nodiscard]] Eigen::Map<const Vec> back() const { return state(size() - 1); }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] double step_size() const noexcept { return h_int_; }
  [[nodiscard]] std::string_view method() const noexcept { return "rk4"; }

  std::optional<DivergenceReport> divergence;

 private:
  int dim_;
  double h_int_;
  std::vector<double> times_;
  std::vector<double> data_;
};

/// Classical fourth-order Runge-Kutta step of dz/dt = field(z).
template <class Field>
Vec rk4_step(const Field& field, const Vec& z, double h) {
  const Vec k1 = field(z);
  const Vec k2 = field(z + 0.5 * h * k1);
  const Vec k3 = field(z + 0.5 * h * k2);
  const Vec k4 = field(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

// Split [0, T] into n full steps of size h and one shortened final step.
struct StepPlan {
  std::size_t full = 0;
  double last = 0.0;  // 0 when T is a whole number of steps
};

inline StepPlan plan_steps(double duration, double h) {
  const double ratio = duration / h;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < 1e-9 * std::max(1.0, ratio)) {
    return {static_cast<std::size_t>(nearest), 0.0};
  }
  const auto full = static_cast<std::size_t>(std::floor(ratio));
  return {full, duration - static_cast<double>(full) * h};
}

}  // namespace detail

/// Fixed-step RK4 over [0, T], recording every `record_stride`-th step and
/// the endpoint. Overflow (a coordinate beyond 1e15 or non-finite) stops the
/// integration and fills FlowPath::divergence.
inline FlowPath integrate_flow(const Problem& problem, const Vec& z0, double duration, double h,
                               std::size_t record_stride = 1) {
  if (!(duration > 0.0)) throw ConfigError("integrate_flow: T must be > 0");
  if (!(h > 0.0)) throw ConfigError("integrate_flow: h must be > 0");
  if (record_stride < 1) throw ConfigError("integrate_flow: record stride must be >= 1");
  Point(z0, problem.blocks());
  auto field = [&problem](const Vec& z) { return problem.field(z); };

  FlowPath path(problem.dim(), h);
  path.append(0.0, z0);
  const auto plan = detail::plan_steps(duration, h);
  const std::size_t total = plan.full + (plan.last > 0.0 ? 1 : 0);
  Vec z = z0;
  for (std::size_t k = 1; k <= total; ++k) {
    const bool partial = k > plan.full;
    z = rk4_step(field, z, partial ? plan.last : h);
    const double t = (k == total) ? duration : static_cast<double>(k) * h;
    const double max_abs = z.cwiseAbs().maxCoeff();
    if (!(max_abs <= 1e15)) {
      path.divergence = DivergenceReport{k, max_abs};
      return path;
    }
    if (k % record_stride == 0 || k == total) path.append(t, z);
  }
  return path;
}

/// Phi_t(z). t = 0 returns z unchanged.
inline Vec flow_from(const Problem& problem, const Vec& z, double t, double h = 1e-3) {
  if (t < 0.0) throw RangeError("flow_from: t must be >= 0");
  if (t == 0.0) return z;
  auto field = [&problem](const Vec& w) { return problem.field(w); };
  const auto plan = detail::plan_steps(t, h);
  Vec out = z;
  for (std::size_t k = 0; k < plan.full; ++k) out = rk4_step(field, out, h);
  if (plan.last > 0.0) out = rk4_step(field, out, plan.last);
  return out;
}

/// Phi_t(z0) continued from the latest cached sample of an integrated path.
inline Vec flow_from(const Problem& problem, const FlowPath& path, double t) {
  if (t < 0.0) throw RangeError("flow_from: t must be >= 0");
  if (path.size() == 0) throw RangeError("flow_from: empty path");
  const auto& ts = path.times();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
  if (path.divergence && t > ts.back()) throw RangeError("flow_from: path diverged before t");
  return flow_from(problem, Vec(path.state(i)), t - ts[i], path.step_size());
}

/// Piecewise-affine X(t) through the recorded iterates; exact at knots.
template <SampledPath Path>
Vec interpolate(const Path& traj, double t) {
  const std::size_t n = traj.size();
  if (n == 0) throw RangeError("interpolate: empty trajectory");
  const double lo = traj.time(0);
  const double hi = traj.time(n - 1);
  if (!(t >= lo && t <= hi)) {
    throw RangeError("interpolate: t = " + std::to_string(t) + " outside recorded range [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  std::size_t a = 0;
  std::size_t b = n - 1;
  while (b - a > 1) {
    const std::size_t mid = a + (b - a) / 2;
    if (traj.time(mid) <= t) {
      a = mid;
    } else {
      b = mid;
    }
  }
  if (t == traj.time(a)) return traj.state(a);
  if (t == traj.time(b)) return traj.state(b);
  const double frac = (t - traj.time(a)) / (traj.time(b) - traj.time(a));
  return traj.state(a) + frac * (traj.state(b) - traj.state(a));
}

struct AptOptions {
  double h_int = 1e-3;
  std::size_t max_grid_points = 1'000'000;
};

/// sup over a grid of h in [0, T] of |X(t+h) - Phi_h(X(t))|. The grid step
/// is the smallest knot spacing inside the window (the smallest recorded
/// step when every iterate is recorded).
template <SampledPath Path>
double apt_deviation(const Path& traj, const Problem& problem, double t, double window, AptOptions opts = {}) {
  if (!(window > 0.0)) throw ConfigError("apt_deviation: window must be > 0");
  const std::size_t n = traj.size();
  if (n < 2) throw RangeError("apt_deviation: trajectory too short");
  if (!(t >= traj.time(0)) || !(t + window <= traj.time(n - 1))) {
    throw RangeError("apt_deviation: window [" + std::to_string(t) + ", " + std::to_string(t + window) +
                     "] outside recorded range [" + std::to_string(traj.time(0)) + ", " +
                     std::to_string(traj.time(n - 1)) + "]");
  }
  double spacing = window;
  for (std::size_t i = 1; i < n; ++i) {
    if (traj.time(i) < t) continue;
    if (traj.time(i - 1) > t + window) break;
    spacing = std::min(spacing, traj.time(i) - traj.time(i - 1));
  }
  auto steps = static_cast<std::size_t>(std::ceil(window / spacing - 1e-9));
  steps = std::clamp<std::size_t>(steps, 1, opts.max_grid_points);
  const double grid = window / static_cast<double>(steps);
  const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(grid / opts.h_int - 1e-9)));
  const double h = grid / static_cast<double>(substeps);
  auto field = [&problem](const Vec& w) { return problem.field(w); };

  Vec flow = interpolate(traj, t);
  double worst = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    for (std::size_t s = 0; s < substeps; ++s) flow = rk4_step(field, flow, h);
    const double at = (k == steps) ? t + window : t + static_cast<double>(k) * grid;
    worst = std::max(worst, (interpolate(traj, at) - flow).norm());
  }
  return worst;
}

}  // namespace rmlab
