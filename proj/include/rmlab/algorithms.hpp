#pragma once

// Generalized Robbins-Monro schemes z+ = z + gamma (V(z) + U + b) with an
// explicit error decomposition per step, plus averaging / alternating
// wrappers and the second-order and adaptive variants.

#include "rmlab/problems.hpp"

#include <array>
#include <string_view>

namespace rmlab {

enum class SchemeKind { sgda, ppm, seg, peg, spsa, hd, sga, cono, adam, extra_adam };

inline constexpr std::array<std::pair<SchemeKind, std::string_view>, 10> kSchemeNames{{
    {SchemeKind::sgda, "sgda"},
    {SchemeKind::ppm, "ppm"},
    {SchemeKind::seg, "seg"},
    {SchemeKind::peg, "peg"},
    {SchemeKind::spsa, "spsa"},
    {SchemeKind::hd, "hd"},
    {SchemeKind::sga, "sga"},
    {SchemeKind::cono, "cono"},
    {SchemeKind::adam, "adam"},
    {SchemeKind::extra_adam, "extra-adam"},
}};

[[nodiscard]] inline std::string_view to_string(SchemeKind kind) {
  for (const auto& [k, name] : kSchemeNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

/// Accepts the canonical names plus "og" as an alias for "peg".
[[nodiscard]] inline std::optional<SchemeKind> parse_scheme(std::string_view name) {
  if (name == "og") return SchemeKind::peg;
  for (const auto& [k, n] : kSchemeNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

/// Coordinates a step is allowed to move; alternating wrappers restrict the
/// base rule to one block at a time.
enum class BlockSelect { all, min_block, max_block };

namespace detail {

inline void restrict_to(Vec& v, Blocks blocks, BlockSelect sel) {
  switch (sel) {
    case BlockSelect::all: break;
    case BlockSelect::min_block: v.tail(blocks.max_dim).setZero(); break;
    case BlockSelect::max_block: v.head(blocks.min_dim).setZero(); break;
  }
}

inline int selected_count(Blocks blocks, BlockSelect sel) {
  switch (sel) {
    case BlockSelect::min_block: return blocks.min_dim;
    case BlockSelect::max_block: return blocks.max_dim;
    case BlockSelect::all: break;
  }
  return blocks.dim();
}

inline int selected_offset(Blocks blocks, BlockSelect sel) {
  return sel == BlockSelect::max_block ? blocks.min_dim : 0;
}

}  // namespace detail

/// One realized step. For unwrapped first-order schemes next_point equals
/// z + gamma * signal exactly, with signal = V(z) + noise + bias.
struct StepOutcome {
  Vec next_point;
  Vec signal;
  Vec noise;
  std::optional<Vec> bias_estimate;
  /// Alternating wrappers only: (0, V_y(x+, y) - V_y(x, y)).
  std::optional<Vec> alternation_correction;
  int queries_used = 0;
};

// -----------------------------------------------------------------------------
// First-order steps
// -----------------------------------------------------------------------------

inline StepOutcome sgda_step(const Problem& problem, const Vec& z, double gamma, const NoiseModel& noise,
                             RngStream& stream, BlockSelect sel = BlockSelect::all) {
  auto sample = sfo_query(problem, z, noise, stream);
  detail::restrict_to(sample.value, problem.blocks(), sel);
  detail::restrict_to(sample.noise, problem.blocks(), sel);
  StepOutcome out;
  out.next_point = z + gamma * sample.value;
  out.signal = std::move(sample.value);
  out.noise = std::move(sample.noise);
  out.bias_estimate = Vec::Zero(z.size());
  out.queries_used = 1;
  return out;
}

struct PpmSolver {
  double tolerance = 1e-12;
  int max_iterations = 1000;
};

/// Implicit step z+ = z + gamma V(z+). Affine fields with an unrestricted
/// block selection are solved directly; everything else uses a damped
/// fixed-point iteration whose damping halves whenever the residual grows.
inline StepOutcome ppm_step(const Problem& problem, const Vec& z, double gamma, PpmSolver solver = {},
                            BlockSelect sel = BlockSelect::all) {
  const Blocks blocks = problem.blocks();
  const int d = problem.dim();
  StepOutcome out;
  out.noise = Vec::Zero(d);
  auto masked_field = [&](const Vec& w) {
    Vec v = problem.field(w);
    detail::restrict_to(v, blocks, sel);
    return v;
  };

  Vec next;
  int evaluations = 0;
  if (problem.affine() && sel == BlockSelect::all) {
    // V(w) = J w + c  =>  (I - gamma J) z+ = z + gamma c
    const Mat jac = problem.jacobian(z);
    const Vec offset = problem.field(Vec::Zero(d));
    next = (Mat::Identity(d, d) - gamma * jac).partialPivLu().solve(z + gamma * offset);
    evaluations = 2;
  } else {
    next = z + gamma * masked_field(z);
    ++evaluations;
    double damping = 1.0;
    double residual = (next - z - gamma * masked_field(next)).norm();
    ++evaluations;
    int iter = 0;
    while (residual > solver.tolerance) {
      if (++iter > solver.max_iterations) {
        throw SolverFailure("ppm_step: fixed-point iteration did not reach tolerance " +
                            std::to_string(solver.tolerance) + " within the budget of " +
                            std::to_string(solver.max_iterations) + " inner iterations (residual " +
                            std::to_string(residual) + ")");
      }
      const Vec target = z + gamma * masked_field(next);
      Vec candidate = (1.0 - damping) * next + damping * target;
      const double cand_residual = (candidate - z - gamma * masked_field(candidate)).norm();
      evaluations += 2;
      if (cand_residual > residual && damping > 1e-6) {
        damping *= 0.5;
        continue;
      }
      next = std::move(candidate);
      residual = cand_residual;
    }
  }
  // final sweep from the converged iterate w: z+ = z + gamma V(w)
  Vec signal = masked_field(next);
  ++evaluations;
  out.queries_used = evaluations;
  Vec base = problem.field(z);
  detail::restrict_to(base, blocks, sel);
  out.bias_estimate = signal - base;
  out.next_point = z + gamma * signal;
  out.signal = std::move(signal);
  return out;
}

/// Extra-gradient: lead = z + gamma sfo(z); z+ = z + gamma sfo(lead).
inline StepOutcome seg_step(const Problem& problem, const Vec& z, double gamma, const NoiseModel& noise,
                            RngStream& stream, BlockSelect sel = BlockSelect::all) {
  const Blocks blocks = problem.blocks();
  auto first = sfo_query(problem, z, noise, stream);
  detail::restrict_to(first.value, blocks, sel);
  const Vec lead = z + gamma * first.value;
  auto second = sfo_query(problem, lead, noise, stream);
  detail::restrict_to(second.value, blocks, sel);
  detail::restrict_to(second.noise, blocks, sel);
  Vec bias = problem.field(lead) - problem.field(z);
  detail::restrict_to(bias, blocks, sel);

  StepOutcome out;
  out.next_point = z + gamma * second.value;
  out.signal = std::move(second.value);
  out.noise = std::move(second.noise);
  out.bias_estimate = std::move(bias);
  out.queries_used = 2;
  return out;
}

/// Optimistic / past extra-gradient: the leading step reuses the previous
/// oracle value. An empty carried signal is bootstrapped with one query at z.
inline StepOutcome peg_step(const Problem& problem, const Vec& z, double gamma, const NoiseModel& noise,
                            RngStream& stream, std::optional<Vec>& carried, BlockSelect sel = BlockSelect::all) {
  const Blocks blocks = problem.blocks();
  int queries = 0;
  if (!carried) {
    carried = sfo_query(problem, z, noise, stream).value;
    ++queries;
  }
  Vec lead_dir = *carried;
  detail::restrict_to(lead_dir, blocks, sel);
  const Vec lead = z + gamma * lead_dir;
  auto fresh = sfo_query(problem, lead, noise, stream);
  ++queries;
  detail::restrict_to(fresh.value, blocks, sel);
  detail::restrict_to(fresh.noise, blocks, sel);
  const int off = detail::selected_offset(blocks, sel);
  const int cnt = detail::selected_count(blocks, sel);
  carried->segment(off, cnt) = fresh.value.segment(off, cnt);

  Vec bias = problem.field(lead) - problem.field(z);
  detail::restrict_to(bias, blocks, sel);
  StepOutcome out;
  out.next_point = z + gamma * fresh.value;
  out.signal = std::move(fresh.value);
  out.noise = std::move(fresh.noise);
  out.bias_estimate = std::move(bias);
  out.queries_used = queries;
  return out;
}

/// Zeroth-order step with one objective evaluation. When restricted to a
/// block the seed is drawn from that block's signed basis and scaled by the
/// block size, so the estimator stays a symmetric difference on the block.
inline StepOutcome spsa_step(const Problem& problem, const Vec& z, double gamma, double delta, RngStream& stream,
                             BlockSelect sel = BlockSelect::all) {
  if (!(delta > 0.0)) throw ConfigError("spsa_step: delta must be > 0");
  const Blocks blocks = problem.blocks();
  const int cnt = detail::selected_count(blocks, sel);
  const int off = detail::selected_offset(blocks, sel);
  std::uniform_int_distribution<int> pick(0, 2 * cnt - 1);
  const int local = pick(stream);
  Vec v = spsa_estimate(problem, z, delta, 2 * off + local);
  v *= static_cast<double>(cnt) / static_cast<double>(problem.dim());

  StepOutcome out;
  out.next_point = z + gamma * v;
  Vec base = problem.field(z);
  detail::restrict_to(base, blocks, sel);
  out.noise = Vec::Zero(z.size());
  // zero-mean and systematic parts are not separable from one draw; report
  // the total error as bias
  out.bias_estimate = v - base;
  out.signal = std::move(v);
  out.queries_used = 1;
  return out;
}

// -----------------------------------------------------------------------------
// Second-order fields
// -----------------------------------------------------------------------------

enum class SecondOrderKind { hd, sga, cono };

/// HD: -(grad^2 f) grad f.  ConO: (I - lambda J) V.  SGA: (I - lambda (J - J^T)/2) V.
inline Vec second_order_field(const Problem& problem, const Vec& z, SecondOrderKind kind, double lambda = 0.0) {
  switch (kind) {
    case SecondOrderKind::hd: {
      const Mat hess = problem.hessian_objective(z);
      return -(hess * problem.objective_gradient(z));
    }
    case SecondOrderKind::cono: {
      const Vec v = problem.field(z);
      return v - lambda * (problem.jacobian(z) * v);
    }
    case SecondOrderKind::sga: {
      const Vec v = problem.field(z);
      const Mat j = problem.jacobian(z);
      const Mat skew = 0.5 * (j - j.transpose());
      return v - lambda * (skew * v);
    }
  }
  return Vec::Zero(z.size());
}

/// RM step on a second-order field. HD is driven by the Hessian-gradient
/// product plus second-order noise; SGA and ConO combine an SFO sample of V
/// with a noisy Jacobian-vector product.
inline StepOutcome second_order_step(const Problem& problem, const Vec& z, double gamma, SecondOrderKind kind,
                                     double lambda, const NoiseModel& noise, const NoiseModel& product_noise,
                                     RngStream& stream, BlockSelect sel = BlockSelect::all) {
  const Blocks blocks = problem.blocks();
  StepOutcome out;
  Vec signal;
  Vec realized;
  int queries = 0;
  if (kind == SecondOrderKind::hd) {
    realized = draw_noise(product_noise, problem.dim(), stream);
    signal = second_order_field(problem, z, kind) + realized;
    queries = 1;
  } else {
    auto sample = sfo_query(problem, z, noise, stream);
    const Vec v = problem.field(z);
    Mat op = problem.jacobian(z);
    if (kind == SecondOrderKind::sga) op = 0.5 * (op - op.transpose()).eval();
    const Vec jv_noise = draw_noise(product_noise, problem.dim(), stream);
    signal = sample.value - lambda * (op * v + jv_noise);
    realized = sample.noise - lambda * jv_noise;
    queries = 2;
  }
  detail::restrict_to(signal, blocks, sel);
  detail::restrict_to(realized, blocks, sel);
  Vec bias = second_order_field(problem, z, kind, lambda) - problem.field(z);
  detail::restrict_to(bias, blocks, sel);
  out.next_point = z + gamma * signal;
  out.signal = std::move(signal);
  out.noise = std::move(realized);
  out.bias_estimate = std::move(bias);
  out.queries_used = queries;
  return out;
}

// -----------------------------------------------------------------------------
// Adaptive steps
// -----------------------------------------------------------------------------

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double stabilizer = 1e-8;
};

/// Per-coordinate moment accumulators and step counts.
struct AdamState {
  Vec first;
  Vec second;
  Eigen::ArrayXd count;

  void ensure(int dim) {
    if (first.size() != dim) {
      first = Vec::Zero(dim);
      second = Vec::Zero(dim);
      count = Eigen::ArrayXd::Zero(dim);
    }
  }
};

namespace detail {

/// Adam direction for the selected coordinates; updates the moments there.
inline Vec adam_direction(const Vec& signal, AdamState& state, const AdamParams& p, Blocks blocks,
                          BlockSelect sel) {
  const int off = selected_offset(blocks, sel);
  const int cnt = selected_count(blocks, sel);
  Vec dir = Vec::Zero(signal.size());
  for (int i = off; i < off + cnt; ++i) {
    state.count[i] += 1.0;
    state.first[i] = p.beta1 * state.first[i] + (1.0 - p.beta1) * signal[i];
    state.second[i] = p.beta2 * state.second[i] + (1.0 - p.beta2) * signal[i] * signal[i];
    const double m_hat = state.first[i] / (1.0 - std::pow(p.beta1, state.count[i]));
    const double v_hat = state.second[i] / (1.0 - std::pow(p.beta2, state.count[i]));
    dir[i] = m_hat / (std::sqrt(v_hat) + p.stabilizer);
  }
  return dir;
}

}  // namespace detail

/// Adam driven by the SFO signal (ascent on V). With extra = true the
/// ExtraAdam variant first extrapolates with an Adam step and then updates
/// from z with the signal at the extrapolated point; both queries update the
/// moments.
inline StepOutcome adam_step(const Problem& problem, const Vec& z, double lr, const AdamParams& params,
                             const NoiseModel& noise, RngStream& stream, AdamState& state, bool extra,
                             BlockSelect sel = BlockSelect::all) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be > 0");
  if (!(params.beta1 >= 0.0 && params.beta1 < 1.0 && params.beta2 >= 0.0 && params.beta2 < 1.0)) {
    throw ConfigError("adam_step: betas must lie in [0, 1)");
  }
  const Blocks blocks = problem.blocks();
  state.ensure(problem.dim());
  StepOutcome out;
  Vec eval_point = z;
  int queries = 0;
  if (extra) {
    auto s = sfo_query(problem, z, noise, stream);
    ++queries;
    eval_point = z + lr * detail::adam_direction(s.value, state, params, blocks, sel);
  }
  auto s = sfo_query(problem, eval_point, noise, stream);
  ++queries;
  Vec dir = detail::adam_direction(s.value, state, params, blocks, sel);
  out.next_point = z + lr * dir;
  out.signal = std::move(dir);
  detail::restrict_to(s.noise, blocks, sel);
  out.noise = std::move(s.noise);
  Vec base = problem.field(z);
  detail::restrict_to(base, blocks, sel);
  out.bias_estimate = out.signal - base - out.noise;
  out.queries_used = queries;
  return out;
}

// =============================================================================
// Scheme objects and wrappers
// =============================================================================

struct SchemeParams {
  double lambda = 0.0;  // SGA / ConO regularization
  AdamParams adam{};
  PpmSolver ppm{};
  NoiseModel product_noise{};  // second-order oracle noise on J V
};

struct Wrapper {
  enum class Kind { none, averaged, alternating };
  Kind kind = Kind::none;
  double alpha = 1.0;
  int k1 = 1;
  int k2 = 1;

  static Wrapper none() { return {}; }
  static Wrapper averaged(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("averaged wrapper: alpha must lie in (0, 1)");
    return {Kind::averaged, alpha, 1, 1};
  }
  static Wrapper alternating(int k1, int k2) {
    if (k1 < 1 || k2 < 1) throw ConfigError("alternating wrapper: k1 and k2 must be >= 1");
    return {Kind::alternating, 1.0, k1, k2};
  }
};

/// A generalized RM scheme: kind, hyperparameters, optional wrapper, and the
/// carried state (previous oracle value for PEG, moments for Adam). One
/// instance drives one trajectory.
class RMScheme {
 public:
  explicit RMScheme(SchemeKind kind, SchemeParams params = {}, Wrapper wrapper = {})
      : kind_(kind), params_(params), wrapper_(wrapper) {
    if (params_.lambda < 0.0) throw ConfigError("scheme: lambda must be >= 0");
  }

  [[nodiscard]] SchemeKind kind() const noexcept { return kind_; }
  [[nodiscard]] const SchemeParams& params() const noexcept { return params_; }
  [[nodiscard]] const Wrapper& wrapper() const noexcept { return wrapper_; }
  [[nodiscard]] bool needs_sampling_radius() const noexcept { return kind_ == SchemeKind::spsa; }

  /// Factor between gamma_n and the RM step actually taken (alpha when averaged).
  [[nodiscard]] double effective_step_scale() const noexcept {
    return wrapper_.kind == Wrapper::Kind::averaged ? wrapper_.alpha : 1.0;
  }

  void reset() {
    carried_.reset();
    adam_ = AdamState{};
  }

  [[nodiscard]] std::string describe() const {
    std::string out(to_string(kind_));
    if (kind_ == SchemeKind::sga || kind_ == SchemeKind::cono) out += "(lambda=" + std::to_string(params_.lambda) + ")";
    if (wrapper_.kind == Wrapper::Kind::averaged) out += "+averaged(" + std::to_string(wrapper_.alpha) + ")";
    if (wrapper_.kind == Wrapper::Kind::alternating) {
      out += "+alternating(" + std::to_string(wrapper_.k1) + "," + std::to_string(wrapper_.k2) + ")";
    }
    return out;
  }

  StepOutcome step(const Problem& problem, const Vec& z, double gamma, std::optional<double> delta,
                   const NoiseModel& noise, RngStream& stream) {
    switch (wrapper_.kind) {
      case Wrapper::Kind::none: return base_step(problem, z, gamma, delta, noise, stream, BlockSelect::all);
      case Wrapper::Kind::averaged: {
        StepOutcome base = base_step(problem, z, gamma, delta, noise, stream, BlockSelect::all);
        const double a = wrapper_.alpha;
        base.next_point = a * base.next_point + (1.0 - a) * z;
        return base;
      }
      case Wrapper::Kind::alternating: return alternating_step(problem, z, gamma, delta, noise, stream);
    }
    return {};
  }

 private:
  StepOutcome base_step(const Problem& problem, const Vec& z, double gamma, std::optional<double> delta,
                        const NoiseModel& noise, RngStream& stream, BlockSelect sel) {
    switch (kind_) {
      case SchemeKind::sgda: return sgda_step(problem, z, gamma, noise, stream, sel);
      case SchemeKind::ppm: return ppm_step(problem, z, gamma, params_.ppm, sel);
      case SchemeKind::seg: return seg_step(problem, z, gamma, noise, stream, sel);
      case SchemeKind::peg: return peg_step(problem, z, gamma, noise, stream, carried_, sel);
      case SchemeKind::spsa:
        if (!delta) throw ConfigError("spsa needs a sampling radius schedule (delta_n)");
        return spsa_step(problem, z, gamma, *delta, stream, sel);
      case SchemeKind::hd:
        return second_order_step(problem, z, gamma, SecondOrderKind::hd, 0.0, noise, params_.product_noise, stream,
                                 sel);
      case SchemeKind::sga:
        return second_order_step(problem, z, gamma, SecondOrderKind::sga, params_.lambda, noise,
                                 params_.product_noise, stream, sel);
      case SchemeKind::cono:
        return second_order_step(problem, z, gamma, SecondOrderKind::cono, params_.lambda, noise,
                                 params_.product_noise, stream, sel);
      case SchemeKind::adam: return adam_step(problem, z, gamma, params_.adam, noise, stream, adam_, false, sel);
      case SchemeKind::extra_adam:
        return adam_step(problem, z, gamma, params_.adam, noise, stream, adam_, true, sel);
    }
    throw ConfigError("unknown scheme kind");
  }

  // k1 base updates of x with y held fixed, then k2 updates of y at the new x.
  StepOutcome alternating_step(const Problem& problem, const Vec& z, double gamma, std::optional<double> delta,
                               const NoiseModel& noise, RngStream& stream) {
    const Blocks blocks = problem.blocks();
    StepOutcome out;
    out.signal = Vec::Zero(z.size());
    out.noise = Vec::Zero(z.size());
    Vec block_bias = Vec::Zero(z.size());
    Vec current = z;
    for (int i = 0; i < wrapper_.k1; ++i) {
      StepOutcome s = base_step(problem, current, gamma, delta, noise, stream, BlockSelect::min_block);
      out.signal += s.signal;
      out.noise += s.noise;
      if (s.bias_estimate) block_bias += *s.bias_estimate;
      out.queries_used += s.queries_used;
      current = std::move(s.next_point);
    }
    const Vec after_min = current;
    for (int i = 0; i < wrapper_.k2; ++i) {
      StepOutcome s = base_step(problem, current, gamma, delta, noise, stream, BlockSelect::max_block);
      out.signal += s.signal;
      out.noise += s.noise;
      if (s.bias_estimate) block_bias += *s.bias_estimate;
      out.queries_used += s.queries_used;
      current = std::move(s.next_point);
    }
    Vec correction = problem.field(after_min) - problem.field(z);
    correction.head(blocks.min_dim).setZero();
    out.bias_estimate = block_bias + correction;
    out.alternation_correction = std::move(correction);
    out.next_point = std::move(current);
    return out;
  }

  SchemeKind kind_;
  SchemeParams params_;
  Wrapper wrapper_;
  std::optional<Vec> carried_;
  AdamState adam_;
};

[[nodiscard]] inline RMScheme wrap_averaged(const RMScheme& scheme, double alpha) {
  return RMScheme(scheme.kind(), scheme.params(), Wrapper::averaged(alpha));
}

[[nodiscard]] inline RMScheme wrap_alternating(const RMScheme& scheme, int k1, int k2) {
  return RMScheme(scheme.kind(), scheme.params(), Wrapper::alternating(k1, k2));
}

// =============================================================================
// Driver
// =============================================================================

struct RunOptions {
  std::size_t horizon = 1;
  std::size_t record_every = 1;
  /// Record every one of the final `dense_tail` iterates regardless of record_every.
  std::size_t dense_tail = 0;
  double divergence_threshold = 1e15;
};

/// Iterate the scheme for `horizon` steps from z0. Records z_0 at tau = 0,
/// every record_every-th iterate, the dense tail, and always the last iterate.
/// A coordinate beyond the divergence threshold stops the run and fills
/// Trajectory::divergence.
inline Trajectory run(RMScheme& scheme, const Problem& problem, const Vec& z0, const StepSchedule& schedule,
                      const NoiseModel& noise, RngStream& stream, const RunOptions& options) {
  if (options.horizon < 1) throw ConfigError("run: horizon must be >= 1");
  if (options.record_every < 1) throw ConfigError("run: record_every must be >= 1");
  Point(z0, problem.blocks());  // validates dimension and finiteness
  if (scheme.needs_sampling_radius() && !schedule.radius_law()) {
    throw ConfigError("scheme 'spsa' needs a sampling radius (delta) in the schedule");
  }

  Trajectory traj(problem.blocks());
  traj.append(0, 0.0, 0.0, z0);
  traj.max_norm = z0.norm();
  const double scale = scheme.effective_step_scale();
  const std::size_t dense_from =
      options.dense_tail >= options.horizon ? 1 : options.horizon - options.dense_tail + 1;

  Vec z = z0;
  double tau = 0.0;
  for (std::size_t n = 1; n <= options.horizon; ++n) {
    const ScheduleValue sv = schedule_value(schedule, n);
    StepOutcome out = scheme.step(problem, z, sv.step, sv.sampling_radius, noise, stream);
    z = std::move(out.next_point);
    traj.queries_total += static_cast<std::size_t>(out.queries_used);
    const double applied = scale * sv.step;
    tau += applied;

    const double max_abs = z.cwiseAbs().maxCoeff();
    if (!(max_abs <= options.divergence_threshold)) {
      traj.divergence = DivergenceReport{n, max_abs};
      return traj;
    }
    traj.max_norm = std::max(traj.max_norm, z.norm());
    if (n % options.record_every == 0 || n >= dense_from || n == options.horizon) {
      traj.append(n, tau, applied, z);
    }
  }
  return traj;
}

}  // namespace rmlab
