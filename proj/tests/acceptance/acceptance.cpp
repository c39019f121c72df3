// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance --only N   run criterion N
//
// Exit status is 0 only when every selected criterion passes.

#include "rmlab/analysis.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>

using namespace rmlab;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok: " : "FAILED: ") + what);
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Trajectory simulate(const RMScheme& proto, const Problem& p, const Vec& z0, const StepSchedule& sched,
                    const NoiseModel& noise, std::uint64_t seed, std::size_t horizon, std::size_t record_every = 1,
                    std::size_t dense_tail = 0) {
  RMScheme scheme = proto;
  RngStream s(seed);
  RunOptions opts;
  opts.horizon = horizon;
  opts.record_every = record_every;
  opts.dense_tail = dense_tail;
  return run(scheme, p, z0, sched, noise, s, opts);
}

// mean radius over the final 10% of recorded samples
double final_window_radius(const Trajectory& t) {
  const std::size_t from = t.size() - std::max<std::size_t>(1, t.size() / 10);
  double sum = 0.0;
  for (std::size_t i = from; i < t.size(); ++i) sum += Vec(t.state(i)).norm();
  return sum / static_cast<double>(t.size() - from);
}

// -closed integral of phi'(y) dx over the circle of radius h, trapezoid rule on 10^4 nodes
double contour_oracle(const PolynomialPerturbation& pert, double h) {
  constexpr int nodes = 10'000;
  double sum = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double th = 2 * std::numbers::pi * k / nodes;
    const double y = h * std::sin(th);
    double dphi = 0.0;
    for (const auto& [deg, a] : pert.coefficients) dphi += a * deg * std::pow(y, deg - 1);
    sum += dphi * h * std::sin(th);
  }
  return sum * 2 * std::numbers::pi / nodes;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pred = predict_cycle_radius(PolynomialPerturbation{{{2, 0.5}, {4, -0.25}}, 1.0});
  const double target = std::sqrt(4.0 / 3.0);
  v.require(pred.radius && std::abs(*pred.radius - target) <= 1e-9,
            "h* = " + (pred.radius ? fmt(*pred.radius, 12) : std::string("none")) + " vs sqrt(4/3) within 1e-9");
  RngStream s(1);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PolynomialPerturbation pert{{}, 1.0};
    for (int k = 2; k <= 8; k += 2) pert.coefficients[k] = 2 * s.uniform() - 1;
    const double h = 0.2 + 1.8 * s.uniform();
    const double oracle = contour_oracle(pert, h);
    worst = std::max(worst, std::abs(abelian_integral(pert, h) - oracle) / std::abs(oracle));
  }
  v.require(worst <= 1e-6, "closed form vs contour oracle on 20 even polynomials, worst relative error " + fmt(worst));
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 1.0, "runtime " + fmt(elapsed, 3) + " s < 1 s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_bilinear();
  const double g = 0.01;
  const auto sched = StepSchedule::constant(g);
  const struct {
    SchemeKind kind;
    double factor;
  } cases[] = {{SchemeKind::sgda, 1 + g * g}, {SchemeKind::seg, 1 - g * g + g * g * g * g}, {SchemeKind::ppm, 1 / (1 + g * g)}};
  for (const auto& c : cases) {
    const auto t = simulate(RMScheme(c.kind), p, vec2(1, 0), sched, NoiseModel::none(), 1, 1000);
    double worst = 0.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
      const double want = std::pow(c.factor, static_cast<double>(t.index(n)));
      worst = std::max(worst, std::abs(Vec(t.state(n)).squaredNorm() - want) / want);
    }
    v.require(worst <= 1e-9, std::string(to_string(c.kind)) + " squared radius vs closed form, worst relative error " +
                                 fmt(worst));
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 1.0, "runtime " + fmt(elapsed, 3) + " s < 1 s");
  return v;
}

Verdict criterion3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_bilinear();
  const auto sched = StepSchedule::constant(0.05);
  auto monotone = [&](SchemeKind kind, int sign) {
    const auto t = simulate(RMScheme(kind), p, vec2(1, 0), sched, NoiseModel::none(), 1, 2000);
    for (std::size_t n = 1; n < t.size(); ++n) {
      const double d = Vec(t.state(n)).norm() - Vec(t.state(n - 1)).norm();
      if (!(sign * d > 0)) return false;
    }
    return true;
  };
  v.require(monotone(SchemeKind::sgda, +1), "SGDA radius strictly increasing over 2000 steps");
  v.require(monotone(SchemeKind::seg, -1), "SEG radius strictly decreasing over 2000 steps");
  const auto flow = integrate_flow(p, vec2(1, 0), 100.0, 1e-3);
  double drift = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) drift = std::max(drift, std::abs(Vec(flow.state(i)).norm() - 1.0));
  v.require(drift <= 1e-8, "RK4 flow radius drift " + fmt(drift) + " <= 1e-8 over T = 100");
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 10.0, "runtime " + fmt(elapsed, 3) + " s < 10 s");
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_almost_bilinear(PolynomialPerturbation::standard(0.01));
  const double hstar = *predict_cycle_radius(PolynomialPerturbation::standard(1.0)).radius;
  const auto flow = integrate_flow(p, vec2(1.5, 0), 3000.0, 1e-2, 10);
  const auto det = detect_cycle(flow);
  v.require(det.cycle && det.cycle->stability == CycleStability::attracting &&
                std::abs(det.cycle->radius_mean - hstar) <= 0.05,
            det.cycle ? "flow cycle " + std::string(to_string(det.cycle->stability)) + ", mean radius " +
                            fmt(det.cycle->radius_mean) + " vs h* " + fmt(hstar)
                      : "flow cycle not detected (" + std::string(to_string(det.flag)) + ")");
  for (auto kind : {SchemeKind::seg, SchemeKind::peg, SchemeKind::sgda}) {
    const auto t = simulate(RMScheme(kind), p, vec2(1.5, 0), StepSchedule::power(0.5, 1.0), NoiseModel::none(), 1,
                            1'000'000, 100);
    const double r = final_window_radius(t);
    v.require(std::abs(r - hstar) <= 0.1, std::string(to_string(kind)) + " final-window radius " + fmt(r) +
                                              " at effective time " + fmt(t.time(t.size() - 1), 4));
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 120.0, "runtime " + fmt(elapsed, 3) + " s < 120 s");
  return v;
}

Verdict criterion5() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_forsaken();
  const auto flow = integrate_flow(p, vec2(1.3, 0), 500.0, 1e-3, 10);
  const auto det = detect_cycle(flow);
  const bool in_band = det.cycle && det.cycle->radius_min >= 1.154 && det.cycle->radius_max <= 1.415;
  v.require(in_band, det.cycle ? "cycle radius min/mean/max " + fmt(det.cycle->radius_min) + "/" +
                                     fmt(det.cycle->radius_mean) + "/" + fmt(det.cycle->radius_max) +
                                     " inside [1.154, 1.415]"
                               : "no cycle detected");
  const auto scan = find_critical_points(p, SearchBox{vec2(-2, -2), vec2(2, 2)}, 41);
  std::optional<CriticalPoint> stable;
  std::optional<CriticalPoint> nearest;
  for (const auto& c : scan.points) {
    const double d = (c.location - vec2(0, 0.49)).norm();
    if (!nearest || d < (nearest->location - vec2(0, 0.49)).norm()) nearest = c;
    if (c.classification == PointClass::stable && d <= 0.02) stable = c;
  }
  std::string found = "critical points found: " + std::to_string(scan.points.size());
  if (nearest) {
    found += ", nearest (" + fmt(nearest->location[0]) + ", " + fmt(nearest->location[1]) + ") " +
             std::string(to_string(nearest->classification)) + " with max Re " + fmt(nearest->max_real_part());
  }
  v.require(stable.has_value(), "stable point within 0.02 of (0, 0.49); " + found);
  // shielding, measured against the critical point that is actually there
  const Vec basin = stable ? stable->location : nearest ? nearest->location : vec2(0, 0.49);
  for (auto kind : {SchemeKind::sgda, SchemeKind::seg, SchemeKind::peg}) {
    const auto t =
        simulate(RMScheme(kind), p, vec2(1.3, 0), StepSchedule::constant(0.01), NoiseModel::gaussian(0.01), 7, 100'000);
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) closest = std::min(closest, (Vec(t.state(i)) - basin).norm());
    v.require(closest > 0.1, std::string(to_string(kind)) + " closest approach " + fmt(closest) + " > 0.1");
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 120.0, "runtime " + fmt(elapsed, 3) + " s < 120 s");
  return v;
}

Verdict criterion6() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  MonteCarloConfig cfg;
  cfg.scheme = RMScheme(SchemeKind::sgda);
  cfg.schedule = StepSchedule::power(0.5, 1.0);
  cfg.noise = NoiseModel::gaussian(0.1);
  cfg.init = InitSampler::ball(vec2(0, 0), 0.05);
  cfg.runs = 200;
  cfg.horizon = 100'000;
  cfg.target = TargetSet::point(vec2(0, 0));
  cfg.threshold = 0.1;
  cfg.seed = 2024;
  const auto rep = monte_carlo(cfg, make_almost_bilinear(PolynomialPerturbation::standard(0.01)));
  double tau = 0.0;
  for (std::size_t n = 1; n <= cfg.horizon; ++n) tau += 0.5 / static_cast<double>(n);
  v.require(rep.fraction_converged <= 0.02, "fraction within 0.1 of the origin " + fmt(rep.fraction_converged) +
                                                " over 200 runs (effective time " + fmt(tau, 4) + ")");
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 180.0, "runtime " + fmt(elapsed, 3) + " s < 180 s");
  return v;
}

Verdict criterion7() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_forsaken();
  const auto scan = find_critical_points(p, SearchBox{vec2(-1, -0.5), vec2(1, 1.5)}, 21);
  std::optional<CriticalPoint> point;
  for (const auto& c : scan.points) {
    if (!point || (c.location - vec2(0, 0.49)).norm() < (point->location - vec2(0, 0.49)).norm()) point = c;
  }
  if (!point) {
    v.require(false, "no critical point near (0, 0.49)");
    return v;
  }
  v.notes.push_back("note: target (" + fmt(point->location[0]) + ", " + fmt(point->location[1]) + ") is " +
                    std::string(to_string(point->classification)));
  MonteCarloConfig cfg;
  cfg.scheme = RMScheme(SchemeKind::sgda);
  cfg.schedule = StepSchedule::power(0.5, 1.0);
  cfg.noise = NoiseModel::gaussian(0.01);
  cfg.init = InitSampler::ball(point->location, 0.02);
  cfg.runs = 200;
  cfg.horizon = 100'000;
  cfg.target = TargetSet::point(point->location);
  cfg.threshold = 0.05;
  cfg.seed = 2025;
  const auto rep = monte_carlo(cfg, p);
  v.require(rep.fraction_converged >= 0.9,
            "fraction with terminal distance <= 0.05: " + fmt(rep.fraction_converged) + " over 200 runs");
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 180.0, "runtime " + fmt(elapsed, 3) + " s < 180 s");
  return v;
}

Verdict criterion8() {
  Verdict v;
  const auto p = make_forsaken();
  RngStream pick(8);
  double avg_worst = 0.0;
  double alt_worst = 0.0;
  const SchemeKind kinds[] = {SchemeKind::sgda, SchemeKind::ppm, SchemeKind::seg, SchemeKind::peg, SchemeKind::spsa};
  for (auto kind : kinds) {
    RMScheme avg = wrap_averaged(RMScheme(kind), 0.5);
    RMScheme alt = wrap_alternating(RMScheme(kind), 1, 1);
    for (int i = 0; i < 1000; ++i) {
      const Vec z = vec2(2.4 * pick.uniform() - 1.2, 2.4 * pick.uniform() - 1.2);
      const double g = 0.005 + 0.05 * pick.uniform();
      RngStream sa(static_cast<std::uint64_t>(i), 1);
      const auto a = avg.step(p, z, g, 0.05, NoiseModel::gaussian(0.05), sa);
      avg_worst = std::max(avg_worst, (a.next_point - (z + 0.5 * g * a.signal)).norm());
      RngStream sb(static_cast<std::uint64_t>(i), 2);
      const auto b = alt.step(p, z, g, 0.05, NoiseModel::gaussian(0.05), sb);
      const Vec rebuilt = z + g * (p.field(z) + b.noise + *b.bias_estimate);
      alt_worst = std::max(alt_worst, (b.next_point - rebuilt).norm());
    }
  }
  v.require(avg_worst <= 1e-12, "averaged identity z + alpha gamma v, worst deviation " + fmt(avg_worst));
  v.require(alt_worst <= 1e-12,
            "alternating decomposition with the (0, V_y(x+, y) - V_y(x, y)) term, worst deviation " + fmt(alt_worst));
  // simultaneous output plus gamma times the correction, noiseless SGDA
  RMScheme alt = wrap_alternating(RMScheme(SchemeKind::sgda), 1, 1);
  double sim_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec z = vec2(2.4 * pick.uniform() - 1.2, 2.4 * pick.uniform() - 1.2);
    const double g = 0.005 + 0.05 * pick.uniform();
    RngStream s(1);
    const auto out = alt.step(p, z, g, std::nullopt, NoiseModel::none(), s);
    const Vec sim = z + g * p.field(z);
    sim_worst = std::max(sim_worst, (out.next_point - (sim + g * *out.alternation_correction)).norm());
  }
  v.require(sim_worst <= 1e-12, "alternating SGDA = simultaneous + gamma correction, worst deviation " + fmt(sim_worst));
  return v;
}

Verdict criterion9() {
  Verdict v;
  const auto bil = make_bilinear();
  Vec mean = Vec::Zero(2);
  for (int k = 0; k < 4; ++k) mean += spsa_estimate(bil, vec2(1, 1), 0.01, k);
  mean /= 4;
  v.require(mean == vec2(-1, 1), "bilinear enumeration at (1,1) gives (" + fmt(mean[0], 17) + ", " + fmt(mean[1], 17) + ")");

  // quartic test objective f = xy + y^4 at z = (1, 1); expectations by full seed enumeration
  const auto quartic = make_almost_bilinear(PolynomialPerturbation{{{4, 1.0}}, 1.0});
  const Vec z = vec2(1, 1);
  const double deltas[] = {0.1, 0.05, 0.025};
  double bias[3];
  double moment[3];
  for (int i = 0; i < 3; ++i) {
    Vec m = Vec::Zero(2);
    double sq = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Vec e = spsa_estimate(quartic, z, deltas[i], k);
      m += e;
      sq += e.squaredNorm();
    }
    bias[i] = (m / 4 - quartic.field(z)).norm();
    moment[i] = sq / 4;
  }
  const double b1 = bias[1] / bias[0];
  const double b2 = bias[2] / bias[1];
  v.require(std::abs(b1 - 0.5) <= 0.1 && std::abs(b2 - 0.5) <= 0.1,
            "bias ratios on halving delta " + fmt(b1, 4) + ", " + fmt(b2, 4) + " vs 0.5 +/- 20%");
  const double m1 = moment[1] / moment[0];
  const double m2 = moment[2] / moment[1];
  v.require(std::abs(m1 - 4) <= 0.8 && std::abs(m2 - 4) <= 0.8,
            "second-moment ratios " + fmt(m1, 4) + ", " + fmt(m2, 4) + " vs 4 +/- 20%");
  return v;
}

Verdict criterion10() {
  Verdict v;
  const auto p = make_gradient_well();
  RngStream pick(10);
  int flow_cycles = 0;
  int sgd_cycles = 0;
  int diverged = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec z0 = vec2(3 * pick.uniform() - 1.5, 3 * pick.uniform() - 1.5);
    const auto flow = integrate_flow(p, z0, 100.0, 1e-3, 10);
    if (detect_cycle(flow).cycle) ++flow_cycles;
    const auto t = simulate(RMScheme(SchemeKind::sgda), p, z0, StepSchedule::power(0.1, 0.5),
                            NoiseModel::gaussian(0.01), static_cast<std::uint64_t>(100 + i), 20'000, 10);
    if (t.divergence) ++diverged;
    if (detect_cycle(t, CycleOptions::stochastic()).cycle) ++sgd_cycles;
  }
  v.require(flow_cycles == 0, std::to_string(flow_cycles) + " cycles on 20 gradient-well flows");
  v.require(sgd_cycles == 0, std::to_string(sgd_cycles) + " cycles on 20 noisy SGD trajectories");
  v.require(diverged == 0, std::to_string(diverged) + " SGD trajectories diverged");
  return v;
}

Verdict criterion11() {
  Verdict v;
  const auto p = make_forsaken();
  const std::size_t horizon = 1'000'000;
  const double needed = 40.0 + 5.0;
  const double reach_exponent = 2.0 * needed;  // tau_N ~ 0.5 ln N
  double t_max = 0.0;
  std::vector<double> med[3];
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = simulate(RMScheme(SchemeKind::seg), p, vec2(1.3, 0), StepSchedule::power(0.5, 1.0),
                            NoiseModel::gaussian(0.01), seed, horizon, 1000, 20'000);
    t_max = t.time(t.size() - 1);
    const double at[] = {10.0, 20.0, 40.0};
    for (int k = 0; k < 3; ++k) {
      if (at[k] + 5.0 <= t_max) med[k].push_back(apt_deviation(t, p, at[k], 5.0));
    }
  }
  const bool reachable = t_max >= needed;
  v.require(reachable, "effective time after " + std::to_string(horizon) + " steps of 0.5/n is " + fmt(t_max, 4) +
                           "; windows up to t = 45 need about e^" + fmt(reach_exponent, 3) + " steps");
  if (reachable) {
    double m[3];
    for (int k = 0; k < 3; ++k) m[k] = detail::median(med[k]);
    v.require(m[0] >= m[1] && m[1] >= m[2], "median deviations " + fmt(m[0]) + ", " + fmt(m[1]) + ", " + fmt(m[2]));
  }
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> list{
      {"Abelian root and contour oracle", criterion1},
      {"bilinear closed forms", criterion2},
      {"bilinear phenomenology: SGDA out, SEG in, flow circle", criterion3},
      {"spurious cycle shared by SEG, PEG, SGDA (eps = 0.01)", criterion4},
      {"forsaken solutions: cycle band, stable point, shielding", criterion5},
      {"avoidance of the unstable origin", criterion6},
      {"attraction to the forsaken critical point", criterion7},
      {"wrapper identities", criterion8},
      {"SPSA oracle bias and second moment", criterion9},
      {"gradient-system negative control", criterion10},
      {"APT trend for SEG on forsaken", criterion11},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  bool verbose = true;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--brief") == 0) {
      verbose = false;
    } else {
      std::cerr << "usage: acceptance [--only N] [--brief]\n";
      return 2;
    }
  }
  const auto& list = criteria();
  if (only < 0 || only > static_cast<int>(list.size())) {
    std::cerr << "acceptance: criterion must be in 1.." << list.size() << '\n';
    return 2;
  }
  bool all = true;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Verdict v;
    try {
      v = list[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::string summary;
    for (const auto& n : v.notes) summary += (summary.empty() ? "" : "; ") + n;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << list[i].first;
    if (verbose) std::cout << " [" << summary << "]";
    std::cout << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
