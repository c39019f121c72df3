#pragma once

// Limiting structures of the mean dynamics and of RM trajectories: Abelian
// integral predictions, Poincare-section cycle detection, critical points,
// the forsaken-annulus check, and Monte Carlo attraction statistics.

#include "rmlab/algorithms.hpp"
#include "rmlab/dynamics.hpp"

#include <atomic>
#include <complex>
#include <cstdio>
#include <exception>
#include <thread>

namespace rmlab {

// =============================================================================
// Abelian integral
// =============================================================================

/// I(h) = -contour integral of phi' dx over the circle |z| = h, in closed form:
/// 4 pi sum_m a_{2m} m h^{2m} prod_{i<=m} (2i-1)/(2i). Odd degrees contribute 0.
inline double abelian_integral(const PolynomialPerturbation& pert, double h) {
  if (!(h > 0.0)) throw ConfigError("abelian_integral: h must be > 0");
  double total = 0.0;
  for (const auto& [k, a] : pert.coefficients) {
    if (k % 2 != 0 || a == 0.0) continue;
    const int m = k / 2;
    double prod = 1.0;
    for (int i = 1; i <= m; ++i) prod *= (2.0 * i - 1.0) / (2.0 * i);
    total += a * m * std::pow(h, k) * prod;
  }
  return 4.0 * std::numbers::pi * total;
}

struct CycleRadiusPrediction {
  std::optional<double> radius;  // smallest positive transversal root
  std::vector<double> roots;     // all roots found, ascending
  /// Per root: whether eps * I'(h) < 0, i.e. the averaged radial drift points
  /// back toward the oval.
  std::vector<bool> attracting;
  bool identically_zero = false;
};

/// Positive roots of I(h) on (1e-6, 1e3) by sign-change scan and bisection.
inline CycleRadiusPrediction predict_cycle_radius(const PolynomialPerturbation& pert) {
  CycleRadiusPrediction out;
  const bool any_even = std::any_of(pert.coefficients.begin(), pert.coefficients.end(),
                                    [](const auto& kv) { return kv.first % 2 == 0 && kv.second != 0.0; });
  if (!any_even) {
    out.identically_zero = true;
    return out;
  }
  constexpr int kGrid = 4000;
  const double lo_exp = std::log(1e-6);
  const double hi_exp = std::log(1e3);
  auto h_at = [&](int i) { return std::exp(lo_exp + (hi_exp - lo_exp) * i / kGrid); };
  double prev_h = h_at(0);
  double prev_v = abelian_integral(pert, prev_h);
  for (int i = 1; i <= kGrid; ++i) {
    const double h = h_at(i);
    const double v = abelian_integral(pert, h);
    if (prev_v == 0.0 || (prev_v < 0.0) != (v < 0.0)) {
      double a = prev_h;
      double b = h;
      double fa = prev_v;
      if (fa == 0.0) {
        b = a;
      } else {
        while (b - a > 1e-13 * b) {
          const double mid = 0.5 * (a + b);
          const double fm = abelian_integral(pert, mid);
          if (fm == 0.0) {
            a = b = mid;
            break;
          }
          if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
          } else {
            b = mid;
          }
        }
      }
      const double root = 0.5 * (a + b);
      if (out.roots.empty() || root - out.roots.back() > 1e-9) {
        out.roots.push_back(root);
        const double dh = 1e-6 * root;
        const double slope = abelian_integral(pert, root + dh) - abelian_integral(pert, root - dh);
        out.attracting.push_back(pert.magnitude * slope < 0.0);
      }
    }
    prev_h = h;
    prev_v = v;
  }
  if (!out.roots.empty()) out.radius = out.roots.front();
  return out;
}

// =============================================================================
// Cycle detection
// =============================================================================

enum class CycleStability { attracting, repelling, undetermined };

[[nodiscard]] inline std::string_view to_string(CycleStability s) {
  switch (s) {
    case CycleStability::attracting: return "attracting";
    case CycleStability::repelling: return "repelling";
    case CycleStability::undetermined: return "undetermined";
  }
  return "undetermined";
}

struct CycleDescriptor {
  double period = 0.0;
  double radius_min = 0.0;
  double radius_mean = 0.0;
  double radius_max = 0.0;
  Vec section_point;
  Vec center;
  CycleStability stability = CycleStability::undetermined;
  double return_ratio = 0.0;  // median |gap_{k+1} / gap_k|, 0 when undetermined
};

struct CycleOptions {
  double burn_in_fraction = 0.5;
  double rel_tol = 1e-3;
  std::optional<Vec> center;
  bool recenter = true;

  /// Tolerances for noisy trajectories.
  static CycleOptions stochastic() {
    CycleOptions o;
    o.rel_tol = 5e-2;
    return o;
  }
};

struct CycleDetection {
  enum class Flag { cycle, no_recurrence, not_periodic };
  std::optional<CycleDescriptor> cycle;
  Flag flag = Flag::no_recurrence;
  std::size_t crossings = 0;
};

[[nodiscard]] inline std::string_view to_string(CycleDetection::Flag f) {
  switch (f) {
    case CycleDetection::Flag::cycle: return "cycle";
    case CycleDetection::Flag::no_recurrence: return "no-recurrence";
    case CycleDetection::Flag::not_periodic: return "not-periodic";
  }
  return "unknown";
}

namespace detail {

struct SectionCrossing {
  double time;
  Vec point;
  double radius;
};

// First passages of the unwrapped polar angle about `center` through
// successive multiples of 2 pi, i.e. crossings of the half-line
// {y = c_y, x > c_x} in the direction of rotation. Jitter back and forth
// across the half-line never counts twice.
template <SampledPath Path>
std::vector<SectionCrossing> section_crossings(const Path& path, std::size_t from, const Vec& center) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<SectionCrossing> up;
  std::vector<SectionCrossing> down;
  if (path.size() < from + 2) return up;
  auto angle_of = [&](const Vec& z) { return std::atan2(z[1] - center[1], z[0] - center[0]); };

  Vec prev = path.state(from);
  double prev_theta = angle_of(prev);
  double next_up = kTwoPi * (std::floor(prev_theta / kTwoPi) + 1.0);
  double next_down = kTwoPi * (std::ceil(prev_theta / kTwoPi) - 1.0);
  if (prev_theta == 0.0) next_down = -kTwoPi;
  double prev_time = path.time(from);
  if (std::abs(prev_theta) <= 1e-12) {
    SectionCrossing c{prev_time, prev, (prev - center).norm()};
    up.push_back(c);
    down.push_back(std::move(c));
  }
  for (std::size_t i = from + 1; i < path.size(); ++i) {
    const Vec cur = path.state(i);
    double delta = angle_of(cur) - angle_of(prev);
    if (delta > std::numbers::pi) delta -= kTwoPi;
    if (delta < -std::numbers::pi) delta += kTwoPi;
    const double theta = prev_theta + delta;
    const double time = path.time(i);
    auto record = [&](double level, std::vector<SectionCrossing>& into) {
      const double frac = (level - prev_theta) / (theta - prev_theta);
      // radius interpolated linearly in angle, which tracks near-circular
      // orbits far better than a Cartesian chord
      const double r0 = (prev - center).norm();
      const double r1 = (cur - center).norm();
      SectionCrossing c;
      c.time = prev_time + frac * (time - prev_time);
      c.radius = r0 + frac * (r1 - r0);
      c.point = center;
      c.point[0] += c.radius;
      into.push_back(std::move(c));
    };
    while (theta >= next_up) {
      record(next_up, up);
      next_up += kTwoPi;
    }
    while (theta <= next_down) {
      record(next_down, down);
      next_down -= kTwoPi;
    }
    prev = cur;
    prev_theta = theta;
    prev_time = time;
  }
  return up.size() >= down.size() ? up : down;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Detect a closed orbit in a planar path from its Poincare-section returns.
/// A cycle needs three section crossings after the burn-in whose radii agree
/// within rel_tol and whose two return times agree within rel_tol. Stability
/// comes from the empirical return-map contraction over the whole path.
template <SampledPath Path>
CycleDetection detect_cycle(const Path& path, const CycleOptions& opts = {}) {
  if (path.dim() != 2) throw UnsupportedProblem("detect_cycle: the section is defined for planar paths only");
  if (!(opts.burn_in_fraction >= 0.0 && opts.burn_in_fraction < 1.0)) {
    throw ConfigError("detect_cycle: burn-in fraction must lie in [0, 1)");
  }
  CycleDetection result;
  const auto start = static_cast<std::size_t>(opts.burn_in_fraction * static_cast<double>(path.size()));
  if (path.size() < start + 3) return result;

  Vec center = opts.center.value_or(Vec::Zero(2));
  auto crossings = detail::section_crossings(path, start, center);
  if (crossings.empty() && opts.recenter && !opts.center) {
    center = Vec::Zero(2);
    for (std::size_t i = start; i < path.size(); ++i) center += path.state(i);
    center /= static_cast<double>(path.size() - start);
    crossings = detail::section_crossings(path, start, center);
  }
  result.crossings = crossings.size();
  if (crossings.size() < 3) {
    result.flag = CycleDetection::Flag::no_recurrence;
    return result;
  }

  const auto& c0 = crossings[crossings.size() - 3];
  const auto& c1 = crossings[crossings.size() - 2];
  const auto& c2 = crossings[crossings.size() - 1];
  const double r_lo = std::min({c0.radius, c1.radius, c2.radius});
  const double r_hi = std::max({c0.radius, c1.radius, c2.radius});
  const double p1 = c1.time - c0.time;
  const double p2 = c2.time - c1.time;
  const bool radii_agree = (r_hi - r_lo) <= opts.rel_tol * r_hi;
  const bool periods_agree = std::abs(p2 - p1) <= opts.rel_tol * std::max(p1, p2);
  if (!radii_agree || !periods_agree) {
    result.flag = CycleDetection::Flag::not_periodic;
    return result;
  }

  CycleDescriptor cyc;
  cyc.center = center;
  cyc.period = p2;
  cyc.section_point = c2.point;
  // radius statistics over the last revolution, time weighted
  double rmin = std::min(c1.radius, c2.radius);
  double rmax = std::max(c1.radius, c2.radius);
  double weighted = 0.0;
  double prev_t = c1.time;
  double prev_r = c1.radius;
  for (std::size_t i = start; i < path.size(); ++i) {
    const double t = path.time(i);
    if (t <= c1.time) continue;
    if (t >= c2.time) break;
    const double r = (Vec(path.state(i)) - center).norm();
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    weighted += 0.5 * (r + prev_r) * (t - prev_t);
    prev_t = t;
    prev_r = r;
  }
  weighted += 0.5 * (c2.radius + prev_r) * (c2.time - prev_t);
  cyc.radius_min = rmin;
  cyc.radius_max = rmax;
  cyc.radius_mean = std::clamp(weighted / cyc.period, rmin, rmax);

  // Return-map contraction over the leading run of gaps that stand above
  // the noise floor (10x the median gap of the late crossings).
  const auto all = detail::section_crossings(path, 0, center);
  std::vector<double> gaps;
  for (std::size_t k = 0; k + 1 < all.size(); ++k) gaps.push_back(std::abs(all[k + 1].radius - all[k].radius));
  std::vector<double> late(gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const double floor = std::max(1e-9 * cyc.radius_mean, 10.0 * detail::median(late));
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
    if (gaps[k] <= floor) break;
    ratios.push_back(gaps[k + 1] / gaps[k]);
    if (gaps[k + 1] <= floor) break;
  }
  if (!ratios.empty()) {
    cyc.return_ratio = detail::median(ratios);
    if (cyc.return_ratio < 1.0 - 1e-6) {
      cyc.stability = CycleStability::attracting;
    } else if (cyc.return_ratio > 1.0 + 1e-6) {
      cyc.stability = CycleStability::repelling;
    }
  }
  result.cycle = std::move(cyc);
  result.flag = CycleDetection::Flag::cycle;
  return result;
}

/// (time, |z|) at every recorded sample.
template <SampledPath Path>
std::vector<std::pair<double, double>> radius_series(const Path& path) {
  std::vector<std::pair<double, double>> out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out.emplace_back(path.time(i), Vec(path.state(i)).norm());
  return out;
}

// =============================================================================
// Critical points
// =============================================================================

enum class PointClass { stable, unstable, center };

[[nodiscard]] inline std::string_view to_string(PointClass c) {
  switch (c) {
    case PointClass::stable: return "stable";
    case PointClass::unstable: return "unstable";
    case PointClass::center: return "center";
  }
  return "center";
}

struct CriticalPoint {
  Vec location;
  std::vector<std::complex<double>> eigenvalues;
  PointClass classification = PointClass::center;
  [[nodiscard]] double max_real_part() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& l : eigenvalues) m = std::max(m, l.real());
    return m;
  }
};

/// Eigenvalues of J; closed form for 2x2.
inline std::vector<std::complex<double>> jacobian_eigenvalues(const Mat& j) {
  if (j.rows() == 2 && j.cols() == 2) {
    const double half_tr = 0.5 * (j(0, 0) + j(1, 1));
    const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    const double disc = half_tr * half_tr - det;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      return {{half_tr + s, 0.0}, {half_tr - s, 0.0}};
    }
    const double s = std::sqrt(-disc);
    return {{half_tr, s}, {half_tr, -s}};
  }
  Eigen::EigenSolver<Mat> solver(j, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()[i]);
  return out;
}

/// Re(lambda) is compared to 0 with tolerance 1e-9 scaled by the eigenvalue
/// magnitude, so exact centers are not called unstable.
inline PointClass classify_eigenvalues(const std::vector<std::complex<double>>& eig) {
  double scale = 1.0;
  for (const auto& l : eig) scale = std::max(scale, std::abs(l));
  const double tol = 1e-9 * scale;
  bool all_negative = true;
  for (const auto& l : eig) {
    if (l.real() > tol) return PointClass::unstable;
    if (!(l.real() < -tol)) all_negative = false;
  }
  return all_negative ? PointClass::stable : PointClass::center;
}

struct SearchBox {
  Vec lower;
  Vec upper;

  [[nodiscard]] bool contains(const Vec& z, double slack = 1e-9) const {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z[i] < lower[i] - slack || z[i] > upper[i] + slack) return false;
    }
    return true;
  }
};

struct CriticalScan {
  std::vector<CriticalPoint> points;
  std::size_t seeds = 0;
  std::size_t singular_seeds = 0;
  std::size_t unconverged_seeds = 0;
};

/// Newton iterations seeded on a grid_n^d lattice over the box. Roots outside
/// the box (or rejected by `keep`) are dropped; duplicates within 1e-6 merge.
inline CriticalScan find_critical_points(const Problem& problem, const SearchBox& box, int grid_n,
                                         const std::function<bool(const Vec&)>& keep = {}) {
  if (grid_n < 2) throw ConfigError("find_critical_points: grid_n must be >= 2");
  const int d = problem.dim();
  if (box.lower.size() != d || box.upper.size() != d) throw ConfigError("find_critical_points: box dimension mismatch");
  CriticalScan scan;

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Vec z(d);
    for (int i = 0; i < d; ++i) {
      z[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * idx[static_cast<std::size_t>(i)] / (grid_n - 1.0);
    }
    ++scan.seeds;

    bool converged = false;
    bool singular = false;
    for (int it = 0; it < 100; ++it) {
      const Vec v = problem.field(z);
      if (v.norm() <= 1e-13) {
        converged = true;
        break;
      }
      const Mat j = problem.jacobian(z);
      Eigen::FullPivLU<Mat> lu(j);
      lu.setThreshold(1e-12);
      if (!lu.isInvertible()) {
        singular = true;
        break;
      }
      z -= lu.solve(v);
      if (!z.allFinite() || z.norm() > 1e6) break;
    }
    if (!converged && !singular && z.allFinite() && problem.field(z).norm() <= 1e-10) converged = true;

    if (singular) {
      ++scan.singular_seeds;
    } else if (!converged) {
      ++scan.unconverged_seeds;
    } else if (box.contains(z) && (!keep || keep(z))) {
      const bool duplicate = std::any_of(scan.points.begin(), scan.points.end(),
                                         [&](const CriticalPoint& p) { return (p.location - z).norm() <= 1e-6; });
      if (!duplicate) {
        CriticalPoint cp;
        cp.location = z;
        cp.eigenvalues = jacobian_eigenvalues(problem.jacobian(z));
        cp.classification = classify_eigenvalues(cp.eigenvalues);
        scan.points.push_back(std::move(cp));
      }
    }

    int k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == grid_n) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == d) break;
  }
  std::sort(scan.points.begin(), scan.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    return std::lexicographical_compare(a.location.data(), a.location.data() + a.location.size(),
                                        b.location.data(), b.location.data() + b.location.size());
  });
  return scan;
}

// =============================================================================
// Forsaken annulus
// =============================================================================

struct CircleExtremes {
  double radius_squared = 0.0;
  double min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
  Vec argmin;
  Vec argmax;
};

struct AnnulusReport {
  CircleExtremes inner;  // r^2 = 4/3
  CircleExtremes outer;  // r^2 = 2
  bool inner_outward = false;  // min of (1/2) d(r^2)/dt > 0 on the inner circle
  bool outer_inward = false;   // max < 0 on the outer circle
  std::vector<CriticalPoint> critical_points_inside;
};

/// Radial derivative (1/2) d(r^2)/dt = <V(z), z> of the forsaken field on the
/// circles r^2 = 4/3 and r^2 = 2, plus a critical-point scan of the annulus.
inline AnnulusReport forsaken_annulus_check(std::size_t samples = 10000, double offset = 0.5) {
  const Problem problem = make_forsaken(offset);
  auto scan_circle = [&](double r2) {
    CircleExtremes c;
    c.radius_squared = r2;
    const double r = std::sqrt(r2);
    for (std::size_t k = 0; k < samples; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
      Vec z(2);
      z << r * std::cos(theta), r * std::sin(theta);
      const double value = problem.field(z).dot(z);
      if (value < c.min_value) {
        c.min_value = value;
        c.argmin = z;
      }
      if (value > c.max_value) {
        c.max_value = value;
        c.argmax = z;
      }
    }
    return c;
  };
  AnnulusReport report;
  report.inner = scan_circle(4.0 / 3.0);
  report.outer = scan_circle(2.0);
  report.inner_outward = report.inner.min_value > 0.0;
  report.outer_inward = report.outer.max_value < 0.0;
  const double r = std::sqrt(2.0);
  SearchBox box{Vec::Constant(2, -r), Vec::Constant(2, r)};
  auto in_annulus = [](const Vec& z) {
    const double r2 = z.squaredNorm();
    return r2 >= 4.0 / 3.0 && r2 <= 2.0;
  };
  report.critical_points_inside = find_critical_points(problem, box, 41, in_annulus).points;
  return report;
}

// =============================================================================
// Monte Carlo
// =============================================================================

/// Set a run should converge to: a ball (radius 0 is a point) or an annulus.
struct TargetSet {
  enum class Kind { ball, annulus };
  Kind kind = Kind::ball;
  Vec center;
  double inner = 0.0;  // annulus inner radius
  double outer = 0.0;  // ball radius or annulus outer radius

  static TargetSet point(Vec c) { return {Kind::ball, std::move(c), 0.0, 0.0}; }
  static TargetSet ball(Vec c, double radius) { return {Kind::ball, std::move(c), 0.0, radius}; }
  static TargetSet annulus(Vec c, double r_in, double r_out) { return {Kind::annulus, std::move(c), r_in, r_out}; }

  [[nodiscard]] double distance(const Vec& z) const {
    const double r = (z - center).norm();
    if (kind == Kind::ball) return std::max(0.0, r - outer);
    return std::max({0.0, inner - r, r - outer});
  }

  [[nodiscard]] std::string describe() const;
};

/// Initial points for independent runs.
struct InitSampler {
  enum class Kind { fixed, ball, sphere };
  Kind kind = Kind::fixed;
  Vec center;
  double radius = 0.0;

  static InitSampler fixed(Vec z) { return {Kind::fixed, std::move(z), 0.0}; }
  /// Uniform in the ball of the given radius.
  static InitSampler ball(Vec c, double r) { return {Kind::ball, std::move(c), r}; }
  /// Uniform on the sphere of the given radius.
  static InitSampler sphere(Vec c, double r) { return {Kind::sphere, std::move(c), r}; }

  [[nodiscard]] Vec sample(RngStream& stream) const {
    if (kind == Kind::fixed) return center;
    const auto d = center.size();
    Vec dir(d);
    do {
      for (Eigen::Index i = 0; i < d; ++i) dir[i] = stream.normal();
    } while (dir.norm() == 0.0);
    dir.normalize();
    double r = radius;
    if (kind == Kind::ball) r *= std::pow(stream.uniform(), 1.0 / static_cast<double>(d));
    return center + r * dir;
  }

  [[nodiscard]] std::string describe() const;
};

namespace detail {

inline std::string vec_to_string(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string noise_to_string(const NoiseModel& n) { return to_string(n.kind) + "(" + std::to_string(n.scale) + ")"; }

}  // namespace detail

inline std::string TargetSet::describe() const {
  if (kind == Kind::ball) {
    return outer == 0.0 ? "point" + detail::vec_to_string(center)
                        : "ball" + detail::vec_to_string(center) + "r=" + std::to_string(outer);
  }
  return "annulus" + detail::vec_to_string(center) + "[" + std::to_string(inner) + "," + std::to_string(outer) + "]";
}

inline std::string InitSampler::describe() const {
  switch (kind) {
    case Kind::fixed: return "fixed" + detail::vec_to_string(center);
    case Kind::ball: return "ball" + detail::vec_to_string(center) + "r=" + std::to_string(radius);
    case Kind::sphere: return "sphere" + detail::vec_to_string(center) + "r=" + std::to_string(radius);
  }
  return "fixed";
}

struct MonteCarloConfig {
  RMScheme scheme{SchemeKind::sgda};
  StepSchedule schedule = StepSchedule::power(0.5, 1.0);
  NoiseModel noise{};
  InitSampler init{};
  std::size_t runs = 1;
  std::size_t horizon = 1;
  TargetSet target{};
  double threshold = 0.0;
  std::uint64_t seed = 0;
  double tail_fraction = 0.01;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct MonteCarloReport {
  std::size_t runs = 0;
  std::size_t converged = 0;
  std::size_t diverged = 0;
  double fraction_converged = 0.0;
  std::vector<double> terminal_distances;  // NaN for diverged runs
  std::string target;
  std::string fingerprint;
};

/// Independent runs with streams derived from (seed, run index). A run's
/// terminal distance is the minimum distance to the target over the final
/// tail_fraction of its iterates; diverged runs never count as converged.
/// Results do not depend on the number of worker threads.
inline MonteCarloReport monte_carlo(const MonteCarloConfig& cfg, const Problem& problem) {
  if (cfg.runs < 1) throw ConfigError("monte_carlo: need at least one run");
  if (cfg.horizon < 1) throw ConfigError("monte_carlo: horizon must be >= 1");
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0)) throw ConfigError("monte_carlo: tail fraction in (0, 1]");
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.tail_fraction * static_cast<double>(cfg.horizon))));

  MonteCarloReport report;
  report.runs = cfg.runs;
  report.target = cfg.target.describe();
  report.terminal_distances.assign(cfg.runs, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> diverged(cfg.runs, 0);

  auto one_run = [&](std::size_t i) {
    RngStream init_stream(cfg.seed, 2 * i + 1);
    RngStream noise_stream(cfg.seed, 2 * i);
    RMScheme scheme = cfg.scheme;
    scheme.reset();
    const Vec z0 = cfg.init.sample(init_stream);
    RunOptions opts;
    opts.horizon = cfg.horizon;
    opts.record_every = cfg.horizon;
    opts.dense_tail = tail;
    const Trajectory traj = run(scheme, problem, z0, cfg.schedule, cfg.noise, noise_stream, opts);
    if (traj.divergence) {
      diverged[i] = 1;
      return;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (traj.index(k) + tail <= cfg.horizon) continue;
      best = std::min(best, cfg.target.distance(traj.state(k)));
    }
    report.terminal_distances[i] = best;
  };

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.runs));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.runs; ++i) one_run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < cfg.runs; i = next++) one_run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t i = 0; i < cfg.runs; ++i) {
    if (diverged[i]) {
      ++report.diverged;
    } else if (report.terminal_distances[i] <= cfg.threshold) {
      ++report.converged;
    }
  }
  report.fraction_converged = static_cast<double>(report.converged) / static_cast<double>(cfg.runs);

  const std::string canonical = problem.label() + "|" + cfg.scheme.describe() + "|" + cfg.schedule.describe() + "|" +
                                detail::noise_to_string(cfg.noise) + "|" + cfg.init.describe() + "|" +
                                std::to_string(cfg.runs) + "|" + std::to_string(cfg.horizon) + "|" +
                                report.target + "|" + std::to_string(cfg.threshold) + "|" + std::to_string(cfg.seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(canonical)));
  report.fingerprint = buf;
  return report;
}

}  // namespace rmlab
