#pragma once

// The problem zoo: min-max objectives f(x, y), their fields
// V = (-grad_x f, grad_y f), Jacobians, and stochastic oracles.

#include "rmlab/core.hpp"

#include <functional>
#include <map>
#include <numbers>

namespace rmlab {

/// phi(y) = sum_k a_k y^k scaled by a magnitude eps.
struct PolynomialPerturbation {
  std::map<int, double> coefficients;  // degree -> a_k, degree >= 1
  double magnitude = 0.0;              // eps

  /// phi(y) = y^2/2 - y^4/4
  static PolynomialPerturbation standard(double eps) { return {{{2, 0.5}, {4, -0.25}}, eps}; }

  [[nodiscard]] double value(double y) const {
    double s = 0.0;
    for (const auto& [k, a] : coefficients) s += a * std::pow(y, k);
    return s;
  }
  [[nodiscard]] double derivative(double y) const {
    double s = 0.0;
    for (const auto& [k, a] : coefficients) s += a * k * std::pow(y, k - 1);
    return s;
  }
  [[nodiscard]] double second_derivative(double y) const {
    double s = 0.0;
    for (const auto& [k, a] : coefficients) {
      if (k >= 2) s += a * k * (k - 1) * std::pow(y, k - 2);
    }
    return s;
  }

  void validate() const {
    for (const auto& [k, a] : coefficients) {
      if (k < 1) throw ConfigError("perturbation degree must be >= 1, got " + std::to_string(k));
      if (!std::isfinite(a)) throw ConfigError("perturbation coefficient a_" + std::to_string(k) + " is not finite");
    }
    if (!std::isfinite(magnitude)) throw ConfigError("perturbation magnitude is not finite");
  }
};

/// Immutable description of a problem. Each coordinate carries the sign that
/// turns the objective gradient into the driving field: V_i = sign_i * df/dz_i,
/// -1 on the min block and +1 on the max block for a min-max game. The
/// gradient-well negative control uses -1 everywhere (descent on both blocks).
class Problem {
 public:
  using ScalarFn = std::function<double(const Vec&)>;
  using VectorFn = std::function<Vec(const Vec&)>;
  using MatrixFn = std::function<Mat(const Vec&)>;

  struct Definition {
    std::string label;
    Blocks blocks;
    ScalarFn objective;
    VectorFn field;
    MatrixFn jacobian;
    std::optional<MatrixFn> hessian_objective;
    Vec signs;            // empty means (-1..., +1...)
    bool affine = false;  // constant Jacobian
  };

  explicit Problem(Definition def) : def_(std::move(def)) {
    if (def_.blocks.min_dim < 1 || def_.blocks.max_dim < 1) throw ConfigError("Problem: empty block");
    if (!def_.objective || !def_.field || !def_.jacobian) {
      throw ConfigError("Problem '" + def_.label + "': objective, field and jacobian are required");
    }
    if (def_.signs.size() == 0) {
      def_.signs = Vec::Ones(dim());
      def_.signs.head(def_.blocks.min_dim).setConstant(-1.0);
    }
    if (def_.signs.size() != dim()) throw ConfigError("Problem: sign vector has wrong size");
  }

  [[nodiscard]] const std::string& label() const noexcept { return def_.label; }
  [[nodiscard]] Blocks blocks() const noexcept { return def_.blocks; }
  [[nodiscard]] int dim() const noexcept { return def_.blocks.dim(); }
  [[nodiscard]] bool affine() const noexcept { return def_.affine; }
  [[nodiscard]] const Vec& signs() const noexcept { return def_.signs; }
  [[nodiscard]] bool has_hessian() const noexcept { return def_.hessian_objective.has_value(); }

  [[nodiscard]] double objective(const Vec& z) const { return def_.objective(z); }
  [[nodiscard]] Vec field(const Vec& z) const { return def_.field(z); }
  [[nodiscard]] Mat jacobian(const Vec& z) const { return def_.jacobian(z); }

  [[nodiscard]] Mat hessian_objective(const Vec& z) const {
    if (!def_.hessian_objective) {
      throw UnsupportedProblem("problem '" + def_.label + "' provides no objective Hessian");
    }
    return (*def_.hessian_objective)(z);
  }

  /// grad f, recovered from the field through the block signs.
  [[nodiscard]] Vec objective_gradient(const Vec& z) const { return def_.signs.cwiseProduct(field(z)); }

  /// The same problem with the field negated (flow run backwards in time).
  [[nodiscard]] Problem time_reversed() const {
    Definition def = def_;
    def.label = def_.label + "-reversed";
    auto field = def_.field;
    auto jac = def_.jacobian;
    auto obj = def_.objective;
    def.field = [field](const Vec& z) -> Vec { return -field(z); };
    def.jacobian = [jac](const Vec& z) -> Mat { return -jac(z); };
    def.objective = [obj](const Vec& z) { return -obj(z); };
    if (def_.hessian_objective) {
      auto hess = *def_.hessian_objective;
      def.hessian_objective = [hess](const Vec& z) -> Mat { return -hess(z); };
    }
    return Problem(std::move(def));
  }

 private:
  Definition def_;
};

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

/// f(x, y) = x y; V = (-y, x).
inline Problem make_bilinear() {
  Problem::Definition def;
  def.label = "bilinear";
  def.blocks = {1, 1};
  def.affine = true;
  def.objective = [](const Vec& z) { return z[0] * z[1]; };
  def.field = [](const Vec& z) { return vec2(-z[1], z[0]); };
  def.jacobian = [](const Vec&) { return mat2(0.0, -1.0, 1.0, 0.0); };
  def.hessian_objective = [](const Vec&) { return mat2(0.0, 1.0, 1.0, 0.0); };
  return Problem(std::move(def));
}

/// f(x, y) = x y + eps phi(y); V = (-y, x + eps phi'(y)).
inline Problem make_almost_bilinear(const PolynomialPerturbation& pert) {
  pert.validate();
  Problem::Definition def;
  def.label = "almost-bilinear";
  def.blocks = {1, 1};
  def.objective = [pert](const Vec& z) { return z[0] * z[1] + pert.magnitude * pert.value(z[1]); };
  def.field = [pert](const Vec& z) {
    return vec2(-z[1], z[0] + pert.magnitude * pert.derivative(z[1]));
  };
  def.jacobian = [pert](const Vec& z) {
    return mat2(0.0, -1.0, 1.0, pert.magnitude * pert.second_derivative(z[1]));
  };
  def.hessian_objective = [pert](const Vec& z) {
    return mat2(0.0, 1.0, 1.0, pert.magnitude * pert.second_derivative(z[1]));
  };
  return Problem(std::move(def));
}

namespace detail {

// psi(t) = t^2/4 - t^4/2 + t^6/6
inline double forsaken_psi(double t) {
  const double t2 = t * t;
  return t2 / 4.0 - t2 * t2 / 2.0 + t2 * t2 * t2 / 6.0;
}
inline double forsaken_dpsi(double t) {
  const double t2 = t * t;
  return t / 2.0 - 2.0 * t2 * t + t2 * t2 * t;
}
inline double forsaken_ddpsi(double t) {
  const double t2 = t * t;
  return 0.5 - 6.0 * t2 + 5.0 * t2 * t2;
}

}  // namespace detail

/// f(x, y) = x (y - c) + psi(x) - psi(y), giving
/// V = (-(y - c) - x/2 + 2x^3 - x^5,  x - y/2 + 2y^3 - y^5). Default c = 0.5.
inline Problem make_forsaken(double offset = 0.5) {
  using namespace detail;
  Problem::Definition def;
  def.label = "forsaken";
  def.blocks = {1, 1};
  def.objective = [offset](const Vec& z) {
    return z[0] * (z[1] - offset) + forsaken_psi(z[0]) - forsaken_psi(z[1]);
  };
  def.field = [offset](const Vec& z) {
    return vec2(-(z[1] - offset) - forsaken_dpsi(z[0]), z[0] - forsaken_dpsi(z[1]));
  };
  def.jacobian = [](const Vec& z) { return mat2(-forsaken_ddpsi(z[0]), -1.0, 1.0, -forsaken_ddpsi(z[1])); };
  def.hessian_objective = [](const Vec& z) { return mat2(forsaken_ddpsi(z[0]), 1.0, 1.0, -forsaken_ddpsi(z[1])); };
  return Problem(std::move(def));
}

/// Potential g(z) = (a/4)|z|^4 - (b/2)|z|^2.
struct GradientWellParams {
  double quartic = 1.0;    // a
  double quadratic = 1.0;  // b
};

/// Pure descent V = -grad g on both blocks. Critical set: the origin and the
/// sphere |z| = sqrt(b/a).
inline Problem make_gradient_well(GradientWellParams p = {}) {
  if (!(p.quartic > 0.0) || !(p.quadratic > 0.0)) throw ConfigError("gradient-well: a and b must be > 0");
  Problem::Definition def;
  def.label = "gradient-well";
  def.blocks = {1, 1};
  def.signs = -Vec::Ones(2);
  def.objective = [p](const Vec& z) {
    const double r2 = z.squaredNorm();
    return p.quartic * r2 * r2 / 4.0 - p.quadratic * r2 / 2.0;
  };
  def.field = [p](const Vec& z) -> Vec { return (p.quadratic - p.quartic * z.squaredNorm()) * z; };
  def.jacobian = [p](const Vec& z) -> Mat {
    return (p.quadratic - p.quartic * z.squaredNorm()) * Mat::Identity(2, 2) - 2.0 * p.quartic * z * z.transpose();
  };
  def.hessian_objective = [p](const Vec& z) -> Mat {
    return (p.quartic * z.squaredNorm() - p.quadratic) * Mat::Identity(2, 2) + 2.0 * p.quartic * z * z.transpose();
  };
  return Problem(std::move(def));
}

// =============================================================================
// Oracles
// =============================================================================

struct OracleSample {
  Vec value;  // v = V(z) + U (+ systematic part for zeroth-order estimates)
  Vec noise;  // realized zero-mean part U (zero for zeroth-order samples)
  int queries_used = 1;
};

/// Stochastic first-order oracle: V(z) plus one noise draw.
inline OracleSample sfo_query(const Problem& problem, const Vec& z, const NoiseModel& noise, RngStream& stream) {
  OracleSample s;
  s.noise = draw_noise(noise, problem.dim(), stream);
  s.value = problem.field(z) + s.noise;
  return s;
}

/// One-shot SPSA estimate for a fixed seed w from the signed basis {+-e_i}.
/// seed_index in [0, 2d): coordinate seed_index / 2, sign + for even, - for odd.
inline Vec spsa_estimate(const Problem& problem, const Vec& z, double delta, int seed_index) {
  const int d = problem.dim();
  if (seed_index < 0 || seed_index >= 2 * d) throw RangeError("spsa seed index out of range");
  const int coord = seed_index / 2;
  const double dir = (seed_index % 2 == 0) ? 1.0 : -1.0;
  Vec probe = z;
  probe[coord] += delta * dir;
  Vec v = Vec::Zero(d);
  v[coord] = problem.signs()[coord] * (static_cast<double>(d) / delta) * problem.objective(probe) * dir;
  return v;
}

/// Zeroth-order oracle: one objective evaluation along a uniformly drawn
/// signed basis vector.
inline OracleSample spsa_query(const Problem& problem, const Vec& z, double delta, RngStream& stream) {
  if (!(delta > 0.0)) throw ConfigError("spsa_query: delta must be > 0");
  std::uniform_int_distribution<int> pick(0, 2 * problem.dim() - 1);
  OracleSample s;
  s.value = spsa_estimate(problem, z, delta, pick(stream));
  s.noise = Vec::Zero(problem.dim());
  return s;
}

// =============================================================================
// Weak asymptotic coercivity
// =============================================================================

struct WacReport {
  double max_inner = -std::numeric_limits<double>::infinity();
  std::vector<Vec> violating_points;  // <V(z), z> > 0
  [[nodiscard]] bool passes() const noexcept { return max_inner <= 0.0; }
};

/// Sample the shell |z| = R and report max <V(z), z>. Planar problems use
/// equispaced angles; higher dimensions use a fixed-seed uniform sphere sample.
inline WacReport check_wac(const Problem& problem, double radius, std::size_t samples) {
  if (!(radius > 0.0)) throw ConfigError("check_wac: R must be > 0");
  if (samples < 1) throw ConfigError("check_wac: need at least one sample");
  WacReport report;
  const int d = problem.dim();
  RngStream stream(0x5eed, 0);
  for (std::size_t k = 0; k < samples; ++k) {
    Vec z(d);
    if (d == 2) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
      z << radius * std::cos(theta), radius * std::sin(theta);
    } else {
      do {
        for (int i = 0; i < d; ++i) z[i] = stream.normal();
      } while (z.norm() == 0.0);
      z *= radius / z.norm();
    }
    const double inner = problem.field(z).dot(z);
    report.max_inner = std::max(report.max_inner, inner);
    if (inner > 0.0) report.violating_points.push_back(z);
  }
  return report;
}

}  // namespace rmlab
