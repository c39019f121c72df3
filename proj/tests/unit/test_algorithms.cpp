#include "rmlab/algorithms.hpp"

#include <gtest/gtest.h>

using namespace rmlab;

namespace {

constexpr double kTight = 1e-12;

void expect_vec_near(const Vec& a, const Vec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LE((a - b).norm(), tol) << "got (" << a.transpose() << "), want (" << b.transpose() << ")";
}

const std::array<SchemeKind, 5> kFirstOrder{SchemeKind::sgda, SchemeKind::ppm, SchemeKind::seg, SchemeKind::peg,
                                            SchemeKind::spsa};

}  // namespace

TEST(SchemeNames, RoundTrip) {
  for (const auto& [kind, name] : kSchemeNames) {
    ASSERT_TRUE(parse_scheme(name));
    EXPECT_EQ(*parse_scheme(name), kind);
    EXPECT_EQ(to_string(kind), name);
  }
  EXPECT_EQ(parse_scheme("og"), SchemeKind::peg);
  EXPECT_FALSE(parse_scheme("sgdaa"));
}

TEST(Sgda, BilinearExamples) {
  RngStream s(1);
  const auto p = make_bilinear();
  const auto a = sgda_step(p, vec2(1, 0), 0.1, NoiseModel::none(), s);
  expect_vec_near(a.next_point, vec2(1, 0.1), kTight);
  EXPECT_NEAR(a.next_point.squaredNorm(), 1.01, kTight);
  EXPECT_EQ(a.queries_used, 1);
  expect_vec_near(sgda_step(p, vec2(1, 1), 0.1, NoiseModel::none(), s).next_point, vec2(0.9, 1.1), kTight);
}

TEST(Ppm, BilinearExample) {
  const auto out = ppm_step(make_bilinear(), vec2(1, 0), 0.1);
  expect_vec_near(out.next_point, vec2(1 / 1.01, 0.1 / 1.01), kTight);
  EXPECT_LT(out.next_point.squaredNorm(), 1.0);
}

TEST(Ppm, IterativeSolverSatisfiesImplicitRelation) {
  const auto p = make_forsaken();
  const Vec z = vec2(0.8, -0.3);
  const auto out = ppm_step(p, z, 0.05);
  EXPECT_LE((out.next_point - z - 0.05 * p.field(out.next_point)).norm(), 1e-12);
}

TEST(Ppm, BudgetExhaustionNamesTheBudget) {
  try {
    (void)ppm_step(make_forsaken(), vec2(1.3, 0.2), 0.05, PpmSolver{1e-12, 2});
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_NE(std::string(e.what()).find("budget of 2"), std::string::npos) << e.what();
  }
}

TEST(Seg, BilinearExample) {
  RngStream s(1);
  const auto out = seg_step(make_bilinear(), vec2(1, 0), 0.1, NoiseModel::none(), s);
  expect_vec_near(out.next_point, vec2(0.99, 0.1), kTight);
  EXPECT_NEAR(out.next_point.squaredNorm(), 0.9901, kTight);
  EXPECT_EQ(out.queries_used, 2);
}

TEST(Peg, BilinearExampleAndQueryCount) {
  RngStream s(1);
  const auto p = make_bilinear();
  std::optional<Vec> carried = vec2(0, 1);
  const auto out = peg_step(p, vec2(1, 0), 0.1, NoiseModel::none(), s, carried);
  expect_vec_near(out.next_point, vec2(0.99, 0.1), kTight);
  EXPECT_EQ(out.queries_used, 1);
  std::optional<Vec> empty;
  EXPECT_EQ(peg_step(p, vec2(1, 0), 0.1, NoiseModel::none(), s, empty).queries_used, 2);
  EXPECT_TRUE(empty.has_value());
}

TEST(Spsa, SeedAverageMovesAlongField) {
  const auto p = make_bilinear();
  Vec avg = Vec::Zero(2);
  for (int k = 0; k < 4; ++k) avg += spsa_estimate(p, vec2(1, 1), 0.01, k);
  expect_vec_near(avg / 4, vec2(-1, 1), kTight);
  RngStream s(2);
  const auto out = spsa_step(p, vec2(1, 1), 0.1, 0.01, s);
  EXPECT_EQ(out.queries_used, 1);
  expect_vec_near(out.next_point, vec2(1, 1) + 0.1 * out.signal, 0.0);
}

TEST(SecondOrder, BilinearFields) {
  const auto p = make_bilinear();
  expect_vec_near(second_order_field(p, vec2(1, 0), SecondOrderKind::hd), vec2(-1, 0), kTight);
  expect_vec_near(second_order_field(p, vec2(1, 0), SecondOrderKind::cono, 0.2), vec2(0.2, 1), kTight);
  // J is skew on the bilinear game, so SGA and ConO coincide there
  expect_vec_near(second_order_field(p, vec2(1, 0), SecondOrderKind::sga, 0.2), vec2(0.2, 1), kTight);
}

TEST(SecondOrder, ZeroAtCriticalPoints) {
  for (const auto& p : {make_bilinear(), make_almost_bilinear(PolynomialPerturbation::standard(0.1))}) {
    for (auto kind : {SecondOrderKind::hd, SecondOrderKind::sga, SecondOrderKind::cono}) {
      EXPECT_EQ(second_order_field(p, vec2(0, 0), kind, 0.3).norm(), 0.0);
    }
  }
}

TEST(Adam, FirstStepHasPositiveYComponent) {
  RngStream s(1);
  AdamState state;
  const auto out =
      adam_step(make_bilinear(), vec2(1, 0), 0.01, AdamParams{}, NoiseModel::none(), s, state, false);
  EXPECT_GT(out.next_point[1] - 0.0, 0.0);
  EXPECT_NEAR(out.next_point[0], 1.0, kTight);
  // bias-corrected first step has unit magnitude per active coordinate
  EXPECT_NEAR(out.next_point[1], 0.01, 1e-9);
}

TEST(Adam, RejectsBadBetas) {
  RngStream s(1);
  AdamState state;
  EXPECT_THROW(adam_step(make_bilinear(), vec2(1, 0), 0.01, AdamParams{1.0, 0.9, 1e-8}, NoiseModel::none(), s,
                         state, false),
               ConfigError);
}

TEST(AllSchemes, CriticalPointIsFixed) {
  std::vector<SchemeKind> kinds;
  for (const auto& [kind, name] : kSchemeNames) kinds.push_back(kind);
  const auto p = make_almost_bilinear(PolynomialPerturbation::standard(0.1));
  for (auto kind : kinds) {
    RMScheme scheme(kind, SchemeParams{0.2, {}, {}, NoiseModel::none()});
    RngStream s(3);
    const auto out = scheme.step(p, vec2(0, 0), 0.1, 0.01, NoiseModel::none(), s);
    // spsa differences of an odd-free objective at the origin cancel to rounding
    EXPECT_LE(out.next_point.norm(), 1e-12) << to_string(kind);
  }
}

TEST(Wrappers, AveragedExample) {
  RMScheme s = wrap_averaged(RMScheme(SchemeKind::sgda), 0.5);
  RngStream r(1);
  expect_vec_near(s.step(make_bilinear(), vec2(1, 0), 0.1, std::nullopt, NoiseModel::none(), r).next_point,
                  vec2(1, 0.05), kTight);
  EXPECT_DOUBLE_EQ(s.effective_step_scale(), 0.5);
}

TEST(Wrappers, AlternatingExample) {
  RMScheme s = wrap_alternating(RMScheme(SchemeKind::sgda), 1, 1);
  RngStream r(1);
  const auto out = s.step(make_bilinear(), vec2(1, 1), 0.1, std::nullopt, NoiseModel::none(), r);
  expect_vec_near(out.next_point, vec2(0.9, 1.09), kTight);
  ASSERT_TRUE(out.alternation_correction);
  expect_vec_near(*out.alternation_correction, vec2(0, -0.1), kTight);
  // simultaneous output plus gamma times the correction
  expect_vec_near(out.next_point, vec2(0.9, 1.1) + 0.1 * *out.alternation_correction, kTight);
}

TEST(Wrappers, RejectInvalidParameters) {
  EXPECT_THROW(Wrapper::averaged(0.0), ConfigError);
  EXPECT_THROW(Wrapper::averaged(1.0), ConfigError);
  EXPECT_THROW(Wrapper::alternating(0, 1), ConfigError);
  EXPECT_THROW(RMScheme(SchemeKind::cono, SchemeParams{-0.1, {}, {}, NoiseModel::none()}), ConfigError);
}

TEST(Wrappers, AveragedIdentityEveryFirstOrderScheme) {
  const auto p = make_forsaken();
  RngStream pick(77);
  for (auto kind : kFirstOrder) {
    RMScheme base(kind);
    RMScheme avg = wrap_averaged(base, 0.3);
    for (int i = 0; i < 200; ++i) {
      const Vec z = vec2(2 * pick.uniform() - 1, 2 * pick.uniform() - 1);
      const double g = 0.01 + 0.05 * pick.uniform();
      RngStream sa(static_cast<std::uint64_t>(i));
      const auto out = avg.step(p, z, g, 0.05, NoiseModel::gaussian(0.1), sa);
      EXPECT_LE((out.next_point - (z + 0.3 * g * out.signal)).norm(), kTight) << to_string(kind);
    }
  }
}

TEST(Wrappers, AlternatingDecompositionEveryFirstOrderScheme) {
  const auto p = make_forsaken();
  RngStream pick(78);
  for (auto kind : kFirstOrder) {
    RMScheme alt = wrap_alternating(RMScheme(kind), 1, 1);
    for (int i = 0; i < 200; ++i) {
      const Vec z = vec2(2 * pick.uniform() - 1, 2 * pick.uniform() - 1);
      const double g = 0.01 + 0.05 * pick.uniform();
      RngStream sa(static_cast<std::uint64_t>(i));
      const auto out = alt.step(p, z, g, 0.05, NoiseModel::gaussian(0.1), sa);
      ASSERT_TRUE(out.bias_estimate);
      const Vec rebuilt = z + g * (p.field(z) + out.noise + *out.bias_estimate);
      EXPECT_LE((out.next_point - rebuilt).norm(), kTight) << to_string(kind);
    }
  }
}

TEST(Invariants, UnwrappedStepIsPointPlusGammaSignal) {
  const auto p = make_almost_bilinear(PolynomialPerturbation::standard(0.1));
  for (auto kind : kFirstOrder) {
    RMScheme scheme(kind);
    RngStream s(5);
    Vec z = vec2(1.2, -0.4);
    for (int i = 0; i < 50; ++i) {
      const auto out = scheme.step(p, z, 0.05, 0.05, NoiseModel::gaussian(0.1), s);
      EXPECT_LE((out.next_point - (z + 0.05 * out.signal)).norm(), kTight) << to_string(kind);
      z = out.next_point;
    }
  }
}

TEST(Invariants, BilinearPerStepRadiusFactors) {
  const auto p = make_bilinear();
  RngStream s(1);
  RngStream pick(9);
  for (int i = 0; i < 100; ++i) {
    const Vec z = vec2(4 * pick.uniform() - 2, 4 * pick.uniform() - 2);
    const double g = 0.3 * pick.uniform() + 1e-3;
    const double r2 = z.squaredNorm();
    EXPECT_NEAR(sgda_step(p, z, g, NoiseModel::none(), s).next_point.squaredNorm() / r2, 1 + g * g, kTight);
    EXPECT_NEAR(seg_step(p, z, g, NoiseModel::none(), s).next_point.squaredNorm() / r2, 1 - g * g + g * g * g * g,
                kTight);
    EXPECT_NEAR(ppm_step(p, z, g).next_point.squaredNorm() / r2, 1 / (1 + g * g), kTight);
  }
}

TEST(Invariants, QueryAccounting) {
  const auto p = make_bilinear();
  RngStream s(1);
  const Vec z = vec2(0.3, 0.7);
  EXPECT_EQ(sgda_step(p, z, 0.1, NoiseModel::gaussian(0.1), s).queries_used, 1);
  EXPECT_EQ(seg_step(p, z, 0.1, NoiseModel::gaussian(0.1), s).queries_used, 2);
  EXPECT_EQ(spsa_step(p, z, 0.1, 0.01, s).queries_used, 1);
  RMScheme peg(SchemeKind::peg);
  EXPECT_EQ(peg.step(p, z, 0.1, std::nullopt, NoiseModel::none(), s).queries_used, 2);
  EXPECT_EQ(peg.step(p, z, 0.1, std::nullopt, NoiseModel::none(), s).queries_used, 1);
  peg.reset();
  EXPECT_EQ(peg.step(p, z, 0.1, std::nullopt, NoiseModel::none(), s).queries_used, 2);
}

TEST(Invariants, ExtragradientBiasBound) {
  const auto p = make_forsaken();
  // sampled Lipschitz bound over the box [-1.5, 1.5]^2
  double lip = 0.0;
  RngStream pick(10);
  for (int i = 0; i < 4000; ++i) {
    const Vec z = vec2(3 * pick.uniform() - 1.5, 3 * pick.uniform() - 1.5);
    Eigen::JacobiSVD<Mat> svd(p.jacobian(z));
    lip = std::max(lip, svd.singularValues()[0]);
  }
  RngStream s(1);
  for (int i = 0; i < 200; ++i) {
    const Vec z = vec2(2 * pick.uniform() - 1, 2 * pick.uniform() - 1);
    const double g = 0.02;
    const double bound = g * lip * p.field(z).norm() * (1 + 1e-9);
    EXPECT_LE(seg_step(p, z, g, NoiseModel::none(), s).bias_estimate->norm(), bound);
    std::optional<Vec> carried = p.field(z);
    EXPECT_LE(peg_step(p, z, g, NoiseModel::none(), s, carried).bias_estimate->norm(), bound);
  }
}

TEST(Run, BilinearProductFormulas) {
  const auto p = make_bilinear();
  const auto sched = StepSchedule::constant(0.01);
  RunOptions opts;
  opts.horizon = 1000;
  RngStream s(1);
  RMScheme sgda(SchemeKind::sgda);
  const auto a = run(sgda, p, vec2(1, 0), sched, NoiseModel::none(), s, opts);
  EXPECT_NEAR(Vec(a.state(a.size() - 1)).squaredNorm() / std::pow(1.0001, 1000), 1.0, 1e-9);
  RMScheme seg(SchemeKind::seg);
  const auto b = run(seg, p, vec2(1, 0), sched, NoiseModel::none(), s, opts);
  EXPECT_NEAR(Vec(b.state(b.size() - 1)).squaredNorm() / std::pow(1 - 1e-4 + 1e-8, 1000), 1.0, 1e-9);
  EXPECT_EQ(b.queries_total, 2000u);
  EXPECT_NEAR(b.time(b.size() - 1), 10.0, 1e-9);
}

TEST(Run, ConstantFromCriticalPoint) {
  RngStream s(1);
  RunOptions opts;
  opts.horizon = 100;
  for (const auto& [kind, name] : kSchemeNames) {
    if (kind == SchemeKind::spsa) continue;
    RMScheme scheme(kind);
    const auto c = run(scheme, make_bilinear(), vec2(0, 0), StepSchedule::constant(0.1), NoiseModel::none(), s, opts);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(Vec(c.state(i)).norm(), 0.0) << name;
  }
}

TEST(Run, DivergenceIsReported) {
  RMScheme sgda(SchemeKind::sgda);
  RngStream s(1);
  RunOptions opts;
  opts.horizon = 100'000;
  opts.divergence_threshold = 1e6;
  const auto t = run(sgda, make_bilinear(), vec2(1, 0), StepSchedule::constant(1.0), NoiseModel::none(), s, opts);
  ASSERT_TRUE(t.divergence);
  EXPECT_GT(t.divergence->max_abs_coordinate, 1e6);
  EXPECT_LT(t.divergence->iteration, 100u);
}

TEST(Run, SpsaNeedsSamplingRadius) {
  RMScheme spsa(SchemeKind::spsa);
  RngStream s(1);
  RunOptions opts;
  opts.horizon = 10;
  EXPECT_THROW(run(spsa, make_bilinear(), vec2(1, 0), StepSchedule::constant(0.1), NoiseModel::none(), s, opts),
               ConfigError);
}

TEST(Run, RecordingPolicy) {
  RMScheme sgda(SchemeKind::sgda);
  RngStream s(1);
  RunOptions opts;
  opts.horizon = 1000;
  opts.record_every = 100;
  opts.dense_tail = 5;
  const auto t = run(sgda, make_bilinear(), vec2(1, 0), StepSchedule::power(0.5, 1.0), NoiseModel::none(), s, opts);
  // z0, nine multiples of 100 below 996, then 996..1000
  EXPECT_EQ(t.size(), 1u + 9u + 5u);
  EXPECT_EQ(t.index(t.size() - 1), 1000u);
  double tau = 0.0;
  for (int n = 1; n <= 1000; ++n) tau += 0.5 / n;
  EXPECT_NEAR(t.time(t.size() - 1), tau, 1e-12);
}
