// rmlab: command-line runner for stochastic min-max experiments.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical
// divergence, 3 a reproduce check failed.

#include "rmlab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace rmlab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitAcceptance = 3;

struct GlobalOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

std::filesystem::path output_dir(const GlobalOptions& g) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("RMLAB_OUT_DIR"); env && *env) return env;
  return "rmlab-out";
}

// Relative output paths from the config resolve against the output directory.
std::filesystem::path resolve(const GlobalOptions& g, const std::string& configured, const std::string& fallback) {
  std::filesystem::path p = configured.empty() ? fallback : configured;
  return p.is_absolute() ? p : output_dir(g) / p;
}

ExperimentConfig load(const GlobalOptions& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  auto cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void say(const GlobalOptions& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

Trajectory run_from_config(const ExperimentConfig& cfg) {
  const Problem problem = cfg.problem.build();
  RMScheme scheme = cfg.build_scheme();
  RngStream stream(cfg.seed, 0);
  RunOptions opts;
  opts.horizon = cfg.horizon;
  opts.record_every = cfg.record_every;
  opts.divergence_threshold = cfg.divergence_threshold;
  return run(scheme, problem, cfg.z0, cfg.schedule.build(), cfg.noise, stream, opts);
}

int cmd_simulate(const GlobalOptions& g) {
  const auto cfg = load(g);
  const auto traj = run_from_config(cfg);
  const auto csv = resolve(g, cfg.outputs.csv, "trajectory.csv");
  const auto json = resolve(g, cfg.outputs.json, "summary.json");
  write_csv_file(csv, traj);
  Json summary = simulate_summary(traj);
  summary["scheme"] = cfg.build_scheme().describe();
  summary["problem"] = cfg.problem.label;
  summary["seed"] = cfg.seed;
  write_json_file(json, summary);
  say(g, summary.dump(2));
  if (traj.divergence) {
    std::cerr << "rmlab: divergence at iteration " << traj.divergence->iteration << " (|coordinate| = "
              << traj.divergence->max_abs_coordinate << ")\n";
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_flow(const GlobalOptions& g) {
  const auto cfg = load(g);
  const Problem problem = cfg.problem.build();
  const auto path = integrate_flow(problem, cfg.z0, cfg.flow_duration, cfg.flow_step, cfg.flow_record_stride);
  write_csv_file(resolve(g, cfg.outputs.csv, "flow.csv"), path, problem.blocks());
  Json j;
  j["final_point"] = to_json_array(path.back());
  j["final_radius"] = Vec(path.back()).norm();
  j["final_time"] = path.time(path.size() - 1);
  j["method"] = std::string(path.method());
  j["diverged"] = path.divergence.has_value();
  write_json_file(resolve(g, cfg.outputs.json, "flow.json"), j);
  say(g, j.dump(2));
  return path.divergence ? kExitDivergence : kExitOk;
}

int cmd_abelian(const GlobalOptions& g, const std::map<int, double>& coeffs, std::optional<double> h) {
  PolynomialPerturbation pert{coeffs, 1.0};
  pert.validate();
  if (h) {
    std::cout << "I(" << format_double(*h) << ") = " << format_double(abelian_integral(pert, *h)) << '\n';
  }
  if (!g.quiet && !(pert.coefficients.empty())) {
    std::cout << "          h                 I(h)\n";
    for (int i = 0; i < 20; ++i) {
      const double hv = std::pow(10.0, -1.0 + 1.5 * i / 19.0);
      char line[96];
      std::snprintf(line, sizeof line, "%12.6g  %22.12g\n", hv, abelian_integral(pert, hv));
      std::cout << line;
    }
  }
  const auto pred = predict_cycle_radius(pert);
  if (pred.identically_zero) {
    std::cout << "I identically zero\n";
  } else if (!pred.radius) {
    std::cout << "no positive root\n";
  } else {
    char line[64];
    std::snprintf(line, sizeof line, "h* = %.9f\n", *pred.radius);
    std::cout << line;
    for (std::size_t k = 1; k < pred.roots.size(); ++k) {
      std::snprintf(line, sizeof line, "additional root %.9f\n", pred.roots[k]);
      std::cout << line;
    }
  }
  return kExitOk;
}

int cmd_cycle(const GlobalOptions& g, bool from_trajectory) {
  const auto cfg = load(g);
  const Problem problem = cfg.problem.build();
  CycleDetection det;
  Json j;
  if (from_trajectory) {
    const auto traj = run_from_config(cfg);
    if (traj.divergence) {
      std::cerr << "rmlab: divergence at iteration " << traj.divergence->iteration << '\n';
      return kExitDivergence;
    }
    CycleOptions opts = cfg.cycle;
    det = detect_cycle(traj, opts);
    j["source"] = "trajectory";
  } else {
    const auto path = integrate_flow(problem, cfg.z0, cfg.flow_duration, cfg.flow_step, cfg.flow_record_stride);
    if (path.divergence) {
      std::cerr << "rmlab: flow diverged\n";
      return kExitDivergence;
    }
    det = detect_cycle(path, cfg.cycle);
    j["source"] = "flow";
  }
  j["detection"] = to_json(det);
  if (cfg.problem.label == "almost-bilinear") {
    const auto pred = predict_cycle_radius(cfg.problem.perturbation());
    j["predicted_radius"] = pred.radius ? Json(*pred.radius) : Json(nullptr);
  }
  write_json_file(resolve(g, cfg.outputs.json, "cycle.json"), j);
  say(g, j.dump(2));
  return kExitOk;
}

int cmd_critical(const GlobalOptions& g) {
  const auto cfg = load(g);
  const Problem problem = cfg.problem.build();
  const auto scan = find_critical_points(problem, cfg.search, cfg.grid_n);
  Json pts = Json::array();
  for (const auto& p : scan.points) pts.push_back(to_json(p));
  Json j{{"points", pts},
         {"seeds", scan.seeds},
         {"singular_seeds", scan.singular_seeds},
         {"unconverged_seeds", scan.unconverged_seeds}};
  write_json_file(resolve(g, cfg.outputs.json, "critical.json"), j);
  say(g, j.dump(2));
  return kExitOk;
}

int cmd_montecarlo(const GlobalOptions& g, unsigned threads) {
  const auto cfg = load(g);
  auto mc = cfg.monte_carlo_config();
  mc.threads = threads;
  const auto report = monte_carlo(mc, cfg.problem.build());
  const Json j = to_json(report);
  write_json_file(resolve(g, cfg.outputs.json, "montecarlo.json"), j);
  if (!g.quiet) {
    std::cout << "runs " << report.runs << ", converged " << report.converged << ", diverged " << report.diverged
              << ", fraction_converged " << format_double(report.fraction_converged) << ", fingerprint "
              << report.fingerprint << '\n';
  }
  return kExitOk;
}

int cmd_apt_check(const GlobalOptions& g) {
  const auto cfg = load(g);
  const Problem problem = cfg.problem.build();
  const auto traj = run_from_config(cfg);
  if (traj.divergence) {
    std::cerr << "rmlab: divergence at iteration " << traj.divergence->iteration << '\n';
    return kExitDivergence;
  }
  Json rows = Json::array();
  const double t_max = traj.time(traj.size() - 1);
  for (double t : cfg.apt_times) {
    Json row{{"t", t}, {"window", cfg.apt_window}};
    if (t + cfg.apt_window <= t_max) {
      row["deviation"] = apt_deviation(traj, problem, t, cfg.apt_window);
    } else {
      row["deviation"] = nullptr;
      row["note"] = "window beyond the recorded effective time " + format_double(t_max);
    }
    rows.push_back(row);
  }
  Json j{{"max_effective_time", t_max}, {"windows", rows}};
  write_json_file(resolve(g, cfg.outputs.json, "apt.json"), j);
  say(g, j.dump(2));
  return kExitOk;
}

int cmd_portrait(const GlobalOptions& g) {
  const auto cfg = load(g);
  const Problem problem = cfg.problem.build();
  if (problem.dim() != 2) throw ConfigError("portrait: only planar problems can be drawn");
  PortraitSpec spec;
  spec.box = {cfg.search.lower[0], cfg.search.upper[0], cfg.search.lower[1], cfg.search.upper[1]};
  spec.streamline_grid = cfg.streamline_grid;
  const auto critical = find_critical_points(problem, cfg.search, cfg.grid_n).points;
  std::optional<double> predicted;
  if (cfg.problem.label == "almost-bilinear") predicted = predict_cycle_radius(cfg.problem.perturbation()).radius;
  auto blank = [&](std::string title) {
    return PortraitPanel{std::move(title), problem, {}, critical, predicted, {}};
  };
  // one panel per curve; "scheme" is the configured scheme, other names swap the base scheme
  for (const auto& curve : cfg.portrait_curves) {
    if (curve == "flow") {
      const auto path = integrate_flow(problem, cfg.z0, cfg.flow_duration, cfg.flow_step, cfg.flow_record_stride);
      auto panel = blank("flow");
      panel.curves.push_back({"flow", "#54a24b", experiments::points_of(path)});
      if (auto det = detect_cycle(path, cfg.cycle); det.cycle) {
        panel.detected_cycle = experiments::cycle_loop(path, *det.cycle);
      }
      spec.panels.push_back(std::move(panel));
      continue;
    }
    ExperimentConfig variant = cfg;
    if (curve != "scheme") variant.scheme = *parse_scheme(curve);
    const auto traj = run_from_config(variant);
    const std::string label = variant.build_scheme().describe();
    auto panel = blank(label);
    panel.curves.push_back({label, "#e45756", experiments::points_of(traj)});
    spec.panels.push_back(std::move(panel));
  }
  if (spec.panels.empty()) spec.panels.push_back(blank(cfg.problem.label));
  const auto file = resolve(g, cfg.outputs.svg, "portrait.svg");
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  render_portrait(out, spec);
  say(g, "wrote " + file.string());
  return kExitOk;
}

int cmd_reproduce(const GlobalOptions& g, const std::string& name) {
  std::vector<const ExperimentEntry*> selected;
  if (name == "all") {
    for (const auto& e : experiment_registry()) selected.push_back(&e);
  } else if (const auto* e = find_experiment(name)) {
    selected.push_back(e);
  } else {
    std::cerr << "rmlab: unknown experiment '" << name << "'; valid names:";
    for (const auto& e : experiment_registry()) std::cerr << ' ' << e.name;
    std::cerr << " all\n";
    return kExitConfig;
  }
  bool all_pass = true;
  for (const auto* e : selected) {
    const ExperimentContext ctx{output_dir(g) / std::string(e->name), g.seed.value_or(0)};
    const auto res = e->run(ctx);
    for (const auto& c : res.checks) {
      std::cout << (c.passed ? "PASS" : "FAIL") << "  " << e->name << ": " << c.name << " (" << c.detail << ")\n";
    }
    if (!g.quiet) {
      for (const auto& a : res.artifacts) std::cout << "      wrote " << a.string() << '\n';
    }
    all_pass = all_pass && res.passed();
  }
  return all_pass ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rmlab: stochastic min-max optimization laboratory"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");
  app.add_option("--config", g.config, "Experiment configuration (TOML)");
  app.add_option("--out-dir", g.out_dir, "Output directory (default $RMLAB_OUT_DIR or ./rmlab-out)");
  app.add_flag("--quiet", g.quiet, "Only print essential results");
  app.fallthrough();

  auto* simulate = app.add_subcommand("simulate", "Run one RM scheme; write trajectory CSV and JSON summary");
  auto* flow = app.add_subcommand("flow", "Integrate the mean dynamics with RK4");

  auto* abelian = app.add_subcommand("abelian", "Abelian integral table and cycle-radius root");
  std::map<int, double> coeffs;
  std::array<double, 8> a{};
  std::array<CLI::Option*, 8> a_opts{};
  for (int k = 1; k <= 8; ++k) {
    a_opts[static_cast<std::size_t>(k - 1)] =
        abelian->add_option("--a" + std::to_string(k), a[static_cast<std::size_t>(k - 1)],
                            "Coefficient of y^" + std::to_string(k));
  }
  std::optional<double> h_value;
  abelian->add_option("--radius", h_value, "Evaluate I at this radius h");

  auto* cycle = app.add_subcommand("cycle", "Detect a limit cycle on the flow (or a trajectory)");
  bool cycle_traj = false;
  cycle->add_flag("--trajectory", cycle_traj, "Use the scheme trajectory instead of the flow");
  auto* critical = app.add_subcommand("critical", "Locate and classify critical points");
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo attraction statistics");
  unsigned threads = 0;
  mc->add_option("--threads", threads, "Worker threads (0: all cores); results do not depend on it");
  auto* apt = app.add_subcommand("apt-check", "Pseudotrajectory deviation of a scheme trajectory");
  auto* portrait = app.add_subcommand("portrait", "Render an SVG phase portrait");
  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled experiment");
  std::string experiment;
  reproduce->add_option("name", experiment, "Experiment name or 'all'")->required();
  auto* tmpl = app.add_subcommand("config-template", "Print the reference configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (simulate->parsed()) return cmd_simulate(g);
    if (flow->parsed()) return cmd_flow(g);
    if (abelian->parsed()) {
      for (int k = 1; k <= 8; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        if (a_opts[i]->count() > 0) coeffs[k] = a[i];
      }
      if (coeffs.empty()) throw ConfigError("abelian: give at least one coefficient, e.g. --a2 0.5 --a4 -0.25");
      return cmd_abelian(g, coeffs, h_value);
    }
    if (cycle->parsed()) return cmd_cycle(g, cycle_traj);
    if (critical->parsed()) return cmd_critical(g);
    if (mc->parsed()) return cmd_montecarlo(g, threads);
    if (apt->parsed()) return cmd_apt_check(g);
    if (portrait->parsed()) return cmd_portrait(g);
    if (reproduce->parsed()) return cmd_reproduce(g, experiment);
    if (tmpl->parsed()) {
      std::cout << reference_config();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "rmlab: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "rmlab: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
