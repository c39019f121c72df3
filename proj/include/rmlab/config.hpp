#pragma once

// Experiment configuration files (TOML). Every field is validated before
// any computation; errors name the file, line and dotted field path.

#include "rmlab/analysis.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace rmlab {

struct ProblemConfig {
  std::string label = "bilinear";
  double epsilon = 0.01;
  std::map<int, double> coefficients{{2, 0.5}, {4, -0.25}};
  double offset = 0.5;
  GradientWellParams well{};

  [[nodiscard]] Problem build() const {
    if (label == "bilinear") return make_bilinear();
    if (label == "almost-bilinear") return make_almost_bilinear(perturbation());
    if (label == "forsaken") return make_forsaken(offset);
    if (label == "gradient-well") return make_gradient_well(well);
    throw ConfigError("unknown problem '" + label + "'");
  }

  [[nodiscard]] PolynomialPerturbation perturbation() const { return {coefficients, epsilon}; }
};

struct ScheduleConfig {
  std::string kind = "power";
  double scale = 0.5;
  double exponent = 1.0;
  std::vector<double> values;
  std::optional<PowerLaw> sampling_radius;

  [[nodiscard]] StepSchedule build() const {
    StepSchedule s = kind == "power"      ? StepSchedule::power(scale, exponent)
                     : kind == "constant" ? StepSchedule::constant(scale)
                                          : StepSchedule::sequence(values);
    if (sampling_radius) s = s.with_sampling_radius(*sampling_radius);
    return s;
  }
};

struct OutputConfig {
  std::string csv;
  std::string json;
  std::string svg;
};

struct ExperimentConfig {
  std::string source = "<config>";
  std::uint64_t seed = 0;
  ProblemConfig problem;
  SchemeKind scheme = SchemeKind::sgda;
  SchemeParams params;
  Wrapper wrapper;
  ScheduleConfig schedule;
  NoiseModel noise;
  Vec z0 = vec2(1.0, 0.0);
  std::size_t horizon = 1000;
  std::size_t record_every = 1;
  double divergence_threshold = 1e15;
  // flow / cycle
  double flow_duration = 100.0;
  double flow_step = 1e-3;
  std::size_t flow_record_stride = 1;
  CycleOptions cycle;
  // monte carlo
  InitSampler init = InitSampler::fixed(vec2(1.0, 0.0));
  std::size_t runs = 1;
  TargetSet target = TargetSet::point(vec2(0.0, 0.0));
  double threshold = 0.1;
  // apt
  std::vector<double> apt_times{10.0, 20.0, 40.0};
  double apt_window = 5.0;
  // critical points
  SearchBox search{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
  int grid_n = 21;
  // portrait
  std::vector<std::string> portrait_curves{"scheme", "flow"};
  int streamline_grid = 20;
  OutputConfig outputs;

  [[nodiscard]] RMScheme build_scheme() const { return RMScheme(scheme, params, wrapper); }

  [[nodiscard]] MonteCarloConfig monte_carlo_config() const {
    MonteCarloConfig mc;
    mc.scheme = build_scheme();
    mc.schedule = schedule.build();
    mc.noise = noise;
    mc.init = init;
    mc.runs = runs;
    mc.horizon = horizon;
    mc.target = target;
    mc.threshold = threshold;
    mc.seed = seed;
    return mc;
  }
};

namespace detail {

// Typed access into a TOML table with path/line diagnostics and rejection
// of unknown keys.
class TomlReader {
 public:
  TomlReader(const toml::table& table, std::string path, std::string source)
      : table_(table), path_(std::move(path)), source_(std::move(source)) {}

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const { fail_at(table_.get(key), key, msg); }

  [[noreturn]] void fail_at(const toml::node* node, std::string_view key, const std::string& msg) const {
    std::string where = source_;
    const auto* src = node ? &node->source() : &table_.source();
    if (src->begin.line > 0) where += ":" + std::to_string(src->begin.line);
    throw ConfigError(where + ": " + field(key) + ": " + msg);
  }

  [[nodiscard]] std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  [[nodiscard]] bool has(std::string_view key) const { return table_.contains(key); }

  void allow(std::initializer_list<std::string_view> keys) const {
    std::set<std::string_view> ok(keys);
    for (const auto& [k, node] : table_) {
      if (!ok.contains(k.str())) {
        std::string list;
        for (auto key : keys) list += (list.empty() ? "" : ", ") + std::string(key);
        fail_at(&node, k.str(), "unknown key (expected one of: " + list + ")");
      }
    }
  }

  [[nodiscard]] double number(std::string_view key, double fallback) const {
    const auto* node = table_.get(key);
    if (!node) return fallback;
    if (auto v = node->value<double>()) return *v;
    fail(key, "expected a number");
  }

  [[nodiscard]] std::int64_t integer(std::string_view key, std::int64_t fallback, std::int64_t min_value) const {
    const auto* node = table_.get(key);
    if (!node) return fallback;
    std::optional<std::int64_t> v = node->value_exact<std::int64_t>();
    if (!v) {
      if (auto d = node->value_exact<double>(); d && std::floor(*d) == *d && std::abs(*d) < 9e15) {
        v = static_cast<std::int64_t>(*d);
      }
    }
    if (!v) fail(key, "expected an integer");
    if (*v < min_value) fail(key, "must be >= " + std::to_string(min_value) + ", got " + std::to_string(*v));
    return *v;
  }

  [[nodiscard]] std::string text(std::string_view key, std::string fallback) const {
    const auto* node = table_.get(key);
    if (!node) return fallback;
    if (auto v = node->value<std::string>()) return *v;
    fail(key, "expected a string");
  }

  [[nodiscard]] bool boolean(std::string_view key, bool fallback) const {
    const auto* node = table_.get(key);
    if (!node) return fallback;
    if (auto v = node->value<bool>()) return *v;
    fail(key, "expected true or false");
  }

  [[nodiscard]] std::vector<double> numbers(std::string_view key) const {
    const auto* node = table_.get(key);
    const auto* arr = node ? node->as_array() : nullptr;
    if (!arr) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& el : *arr) {
      auto v = el.value<double>();
      if (!v) fail(key, "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  [[nodiscard]] Vec vector(std::string_view key, const Vec& fallback) const {
    if (!has(key)) return fallback;
    const auto v = numbers(key);
    if (v.empty()) fail(key, "must not be empty");
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  [[nodiscard]] std::optional<TomlReader> sub(std::string_view key) const {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    const auto* t = node->as_table();
    if (!t) fail(key, "expected a table");
    return TomlReader(*t, field(key), source_);
  }

  [[nodiscard]] const toml::table& table() const noexcept { return table_; }
  [[nodiscard]] const toml::node* node(std::string_view key) const { return table_.get(key); }

 private:
  const toml::table& table_;
  std::string path_;
  std::string source_;
};

inline NoiseModel read_noise(const TomlReader& r) {
  r.allow({"kind", "scale"});
  const auto kind = r.text("kind", "none");
  NoiseModel n;
  if (kind == "none") {
    n.kind = NoiseModel::Kind::none;
  } else if (kind == "gaussian") {
    n.kind = NoiseModel::Kind::gaussian;
  } else if (kind == "bounded-uniform") {
    n.kind = NoiseModel::Kind::bounded_uniform;
  } else {
    r.fail("kind", "unknown noise kind '" + kind + "' (expected none, gaussian, bounded-uniform)");
  }
  n.scale = r.number("scale", 0.0);
  if (n.kind != NoiseModel::Kind::none && !(n.scale >= 0.0)) r.fail("scale", "must be >= 0");
  return n;
}

inline TargetSet read_target(const TomlReader& r, int dim) {
  r.allow({"kind", "center", "radius", "inner", "outer"});
  const auto kind = r.text("kind", "point");
  const Vec center = r.vector("center", Vec::Zero(dim));
  if (center.size() != dim) r.fail("center", "expected " + std::to_string(dim) + " coordinates");
  if (kind == "point") return TargetSet::point(center);
  if (kind == "ball") {
    const double radius = r.number("radius", 0.0);
    if (!(radius >= 0.0)) r.fail("radius", "must be >= 0");
    return TargetSet::ball(center, radius);
  }
  if (kind == "annulus") {
    const double inner = r.number("inner", 0.0);
    const double outer = r.number("outer", 0.0);
    if (!(inner >= 0.0 && outer >= inner)) r.fail("outer", "annulus needs 0 <= inner <= outer");
    return TargetSet::annulus(center, inner, outer);
  }
  r.fail("kind", "unknown target kind '" + kind + "' (expected point, ball, annulus)");
}

inline InitSampler read_init(const TomlReader& r, int dim) {
  r.allow({"kind", "center", "radius"});
  const auto kind = r.text("kind", "point");
  const Vec center = r.vector("center", Vec::Zero(dim));
  if (center.size() != dim) r.fail("center", "expected " + std::to_string(dim) + " coordinates");
  const double radius = r.number("radius", 0.0);
  if (!(radius >= 0.0)) r.fail("radius", "must be >= 0");
  if (kind == "point") return InitSampler::fixed(center);
  if (kind == "ball") return InitSampler::ball(center, radius);
  if (kind == "circle" || kind == "sphere") return InitSampler::sphere(center, radius);
  r.fail("kind", "unknown init kind '" + kind + "' (expected point, ball, circle)");
}

}  // namespace detail

/// Parse and validate a configuration document.
inline ExperimentConfig parse_config(std::string_view text, std::string source = "<config>") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
  }
  ExperimentConfig cfg;
  cfg.source = source;
  const detail::TomlReader top(root, "", source);
  top.allow({"seed", "problem", "scheme", "schedule", "noise", "run", "flow", "cycle", "montecarlo", "apt",
             "critical", "portrait", "outputs"});
  cfg.seed = static_cast<std::uint64_t>(top.integer("seed", 0, 0));

  if (auto r = top.sub("problem")) {
    r->allow({"label", "epsilon", "coefficients", "offset", "quartic", "quadratic"});
    cfg.problem.label = r->text("label", cfg.problem.label);
    static const std::set<std::string> labels{"bilinear", "almost-bilinear", "forsaken", "gradient-well"};
    if (!labels.contains(cfg.problem.label)) {
      r->fail("label", "unknown problem '" + cfg.problem.label +
                           "' (expected bilinear, almost-bilinear, forsaken, gradient-well)");
    }
    cfg.problem.epsilon = r->number("epsilon", cfg.problem.epsilon);
    if (auto c = r->sub("coefficients")) {
      cfg.problem.coefficients.clear();
      for (const auto& [k, node] : c->table()) {
        int degree = 0;
        const auto key = k.str();
        const auto res = std::from_chars(key.data(), key.data() + key.size(), degree);
        if (res.ec != std::errc{} || res.ptr != key.data() + key.size() || degree < 1) {
          c->fail_at(&node, key, "degree keys must be positive integers");
        }
        auto v = node.value<double>();
        if (!v) c->fail_at(&node, key, "expected a number");
        cfg.problem.coefficients[degree] = *v;
      }
    }
    cfg.problem.offset = r->number("offset", cfg.problem.offset);
    cfg.problem.well.quartic = r->number("quartic", cfg.problem.well.quartic);
    cfg.problem.well.quadratic = r->number("quadratic", cfg.problem.well.quadratic);
    try {
      (void)cfg.problem.build();
    } catch (const ConfigError& e) {
      r->fail("label", e.what());
    }
  }
  const Problem problem = cfg.problem.build();
  const int dim = problem.dim();
  cfg.z0 = Vec::Zero(dim);
  cfg.z0[0] = 1.0;
  cfg.init = InitSampler::fixed(cfg.z0);
  cfg.target = TargetSet::point(Vec::Zero(dim));
  cfg.search = SearchBox{Vec::Constant(dim, -2.0), Vec::Constant(dim, 2.0)};

  if (auto r = top.sub("scheme")) {
    r->allow({"name", "lambda", "beta1", "beta2", "stabilizer", "ppm_tolerance", "ppm_max_iterations",
              "product_noise", "wrapper"});
    const auto name = r->text("name", "sgda");
    const auto kind = parse_scheme(name);
    if (!kind) {
      std::string list;
      for (const auto& [k, n] : kSchemeNames) list += (list.empty() ? "" : ", ") + std::string(n);
      r->fail("name", "unknown scheme '" + name + "' (expected one of: " + list + ")");
    }
    cfg.scheme = *kind;
    cfg.params.lambda = r->number("lambda", cfg.params.lambda);
    if (!(cfg.params.lambda >= 0.0)) r->fail("lambda", "must be >= 0");
    cfg.params.adam.beta1 = r->number("beta1", cfg.params.adam.beta1);
    cfg.params.adam.beta2 = r->number("beta2", cfg.params.adam.beta2);
    cfg.params.adam.stabilizer = r->number("stabilizer", cfg.params.adam.stabilizer);
    if (!(cfg.params.adam.beta1 >= 0.0 && cfg.params.adam.beta1 < 1.0)) r->fail("beta1", "must lie in [0, 1)");
    if (!(cfg.params.adam.beta2 >= 0.0 && cfg.params.adam.beta2 < 1.0)) r->fail("beta2", "must lie in [0, 1)");
    cfg.params.ppm.tolerance = r->number("ppm_tolerance", cfg.params.ppm.tolerance);
    cfg.params.ppm.max_iterations =
        static_cast<int>(r->integer("ppm_max_iterations", cfg.params.ppm.max_iterations, 1));
    if (auto pn = r->sub("product_noise")) cfg.params.product_noise = detail::read_noise(*pn);
    if (auto w = r->sub("wrapper")) {
      w->allow({"averaged", "alternating"});
      if (w->has("averaged") && w->has("alternating")) w->fail("alternating", "choose one wrapper");
      if (w->has("averaged")) {
        const double alpha = w->number("averaged", 0.5);
        if (!(alpha > 0.0 && alpha < 1.0)) w->fail("averaged", "alpha must lie in (0, 1)");
        cfg.wrapper = Wrapper::averaged(alpha);
      } else if (w->has("alternating")) {
        const auto ks = w->numbers("alternating");
        if (ks.size() != 2 || ks[0] < 1 || ks[1] < 1 || std::floor(ks[0]) != ks[0] || std::floor(ks[1]) != ks[1]) {
          w->fail("alternating", "expected [k1, k2] with integers >= 1");
        }
        cfg.wrapper = Wrapper::alternating(static_cast<int>(ks[0]), static_cast<int>(ks[1]));
      }
    }
  }

  if (auto r = top.sub("schedule")) {
    r->allow({"kind", "scale", "exponent", "value", "values", "sampling_radius"});
    cfg.schedule.kind = r->text("kind", cfg.schedule.kind);
    if (cfg.schedule.kind == "power") {
      cfg.schedule.scale = r->number("scale", cfg.schedule.scale);
      cfg.schedule.exponent = r->number("exponent", cfg.schedule.exponent);
      if (!(cfg.schedule.scale > 0.0)) r->fail("scale", "must be > 0");
      if (!(cfg.schedule.exponent > 0.0)) r->fail("exponent", "must be > 0");
    } else if (cfg.schedule.kind == "constant") {
      cfg.schedule.scale = r->number("value", 0.01);
      if (!(cfg.schedule.scale > 0.0)) r->fail("value", "must be > 0");
    } else if (cfg.schedule.kind == "sequence") {
      cfg.schedule.values = r->numbers("values");
      if (cfg.schedule.values.empty()) r->fail("values", "must not be empty");
      for (double v : cfg.schedule.values) {
        if (!(v > 0.0)) r->fail("values", "every step must be > 0");
      }
    } else {
      r->fail("kind", "unknown schedule kind '" + cfg.schedule.kind + "' (expected power, constant, sequence)");
    }
    if (auto d = r->sub("sampling_radius")) {
      d->allow({"scale", "exponent"});
      PowerLaw law{d->number("scale", 1.0), d->number("exponent", 1.0 / 3.0)};
      if (!(law.scale > 0.0)) d->fail("scale", "must be > 0");
      if (!(law.exponent >= 0.0)) d->fail("exponent", "must be >= 0");
      cfg.schedule.sampling_radius = law;
    }
  }
  if (cfg.scheme == SchemeKind::spsa && !cfg.schedule.sampling_radius) {
    top.fail("schedule", "scheme 'spsa' needs schedule.sampling_radius");
  }

  if (auto r = top.sub("noise")) cfg.noise = detail::read_noise(*r);

  if (auto r = top.sub("run")) {
    r->allow({"z0", "horizon", "record_every", "divergence_threshold"});
    cfg.z0 = r->vector("z0", cfg.z0);
    if (cfg.z0.size() != dim) r->fail("z0", "expected " + std::to_string(dim) + " coordinates");
    if (!cfg.z0.allFinite()) r->fail("z0", "coordinates must be finite");
    cfg.horizon = static_cast<std::size_t>(r->integer("horizon", static_cast<std::int64_t>(cfg.horizon), 1));
    cfg.record_every = static_cast<std::size_t>(r->integer("record_every", 1, 1));
    cfg.divergence_threshold = r->number("divergence_threshold", cfg.divergence_threshold);
    if (!(cfg.divergence_threshold > 0.0)) r->fail("divergence_threshold", "must be > 0");
  }
  cfg.init = InitSampler::fixed(cfg.z0);

  if (auto r = top.sub("flow")) {
    r->allow({"duration", "step", "record_stride"});
    cfg.flow_duration = r->number("duration", cfg.flow_duration);
    cfg.flow_step = r->number("step", cfg.flow_step);
    if (!(cfg.flow_duration > 0.0)) r->fail("duration", "must be > 0");
    if (!(cfg.flow_step > 0.0)) r->fail("step", "must be > 0");
    cfg.flow_record_stride = static_cast<std::size_t>(r->integer("record_stride", 1, 1));
  }

  if (auto r = top.sub("cycle")) {
    r->allow({"burn_in", "rel_tol", "center"});
    cfg.cycle.burn_in_fraction = r->number("burn_in", cfg.cycle.burn_in_fraction);
    if (!(cfg.cycle.burn_in_fraction >= 0.0 && cfg.cycle.burn_in_fraction < 1.0)) r->fail("burn_in", "must lie in [0, 1)");
    cfg.cycle.rel_tol = r->number("rel_tol", cfg.cycle.rel_tol);
    if (!(cfg.cycle.rel_tol > 0.0)) r->fail("rel_tol", "must be > 0");
    if (r->has("center")) {
      cfg.cycle.center = r->vector("center", Vec::Zero(2));
      if (cfg.cycle.center->size() != 2) r->fail("center", "expected 2 coordinates");
    }
  }

  if (auto r = top.sub("montecarlo")) {
    r->allow({"runs", "init", "target", "threshold"});
    cfg.runs = static_cast<std::size_t>(r->integer("runs", 1, 1));
    if (auto i = r->sub("init")) cfg.init = detail::read_init(*i, dim);
    if (auto t = r->sub("target")) cfg.target = detail::read_target(*t, dim);
    cfg.threshold = r->number("threshold", cfg.threshold);
    if (!(cfg.threshold >= 0.0)) r->fail("threshold", "must be >= 0");
  }

  if (auto r = top.sub("apt")) {
    r->allow({"times", "window"});
    if (r->has("times")) cfg.apt_times = r->numbers("times");
    cfg.apt_window = r->number("window", cfg.apt_window);
    if (!(cfg.apt_window > 0.0)) r->fail("window", "must be > 0");
    for (double t : cfg.apt_times) {
      if (!(t >= 0.0)) r->fail("times", "times must be >= 0");
    }
  }

  if (auto r = top.sub("critical")) {
    r->allow({"lower", "upper", "grid"});
    cfg.search.lower = r->vector("lower", cfg.search.lower);
    cfg.search.upper = r->vector("upper", cfg.search.upper);
    if (cfg.search.lower.size() != dim) r->fail("lower", "expected " + std::to_string(dim) + " coordinates");
    if (cfg.search.upper.size() != dim) r->fail("upper", "expected " + std::to_string(dim) + " coordinates");
    if (!(cfg.search.upper.array() > cfg.search.lower.array()).all()) r->fail("upper", "box is degenerate");
    cfg.grid_n = static_cast<int>(r->integer("grid", cfg.grid_n, 2));
  }

  if (auto r = top.sub("portrait")) {
    r->allow({"curves", "grid"});
    if (r->has("curves")) {
      const auto* arr = r->node("curves")->as_array();
      if (!arr) r->fail("curves", "expected an array of strings");
      cfg.portrait_curves.clear();
      for (const auto& el : *arr) {
        auto v = el.value<std::string>();
        if (!v || (*v != "scheme" && *v != "flow" && !parse_scheme(*v))) {
          r->fail("curves", "entries must be \"scheme\", \"flow\" or a scheme name");
        }
        cfg.portrait_curves.push_back(*v);
      }
    }
    cfg.streamline_grid = static_cast<int>(r->integer("grid", cfg.streamline_grid, 1));
  }

  if (auto r = top.sub("outputs")) {
    r->allow({"csv", "json", "svg"});
    cfg.outputs.csv = r->text("csv", "");
    cfg.outputs.json = r->text("json", "");
    cfg.outputs.svg = r->text("svg", "");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), file.string());
}

/// Reference configuration listing every key with its default.
inline std::string reference_config() {
  return R"(# rmlab experiment configuration; every key below shows its default.
seed = 0

[problem]
label = "bilinear"            # bilinear | almost-bilinear | forsaken | gradient-well
epsilon = 0.01                # almost-bilinear perturbation magnitude
coefficients = { 2 = 0.5, 4 = -0.25 }  # phi(y) = sum_k a_k y^k
offset = 0.5                  # forsaken: f = x(y - offset) + psi(x) - psi(y)
quartic = 1.0                 # gradient-well: V = (quadratic - quartic |z|^2) z
quadratic = 1.0

[scheme]
name = "sgda"                 # sgda | ppm | seg | peg (og) | spsa | hd | sga | cono | adam | extra-adam
lambda = 0.0                  # sga / cono regularization
beta1 = 0.9
beta2 = 0.999
stabilizer = 1e-8
ppm_tolerance = 1e-12
ppm_max_iterations = 1000
# product_noise = { kind = "gaussian", scale = 0.0 }   # second-order Jacobian-vector noise
# wrapper = { averaged = 0.5 }  or  wrapper = { alternating = [1, 5] }

[schedule]
kind = "power"                # power: scale / n^exponent | constant: value | sequence: values
scale = 0.5
exponent = 1.0
# value = 0.01
# values = [0.1, 0.05]
# sampling_radius = { scale = 1.0, exponent = 0.3333333333333333 }   # required by spsa

[noise]
kind = "none"                 # none | gaussian | bounded-uniform
scale = 0.0                   # gaussian: total std sigma; bounded-uniform: radius K

[run]
z0 = [1.0, 0.0]
horizon = 1000
record_every = 1
divergence_threshold = 1e15

[flow]
duration = 100.0
step = 1e-3
record_stride = 1

[cycle]
burn_in = 0.5
rel_tol = 1e-3
# center = [0.0, 0.0]

[montecarlo]
runs = 1
threshold = 0.1
init = { kind = "point", center = [1.0, 0.0], radius = 0.0 }    # point | ball | circle
target = { kind = "point", center = [0.0, 0.0] }                # point | ball | annulus

[apt]
times = [10.0, 20.0, 40.0]
window = 5.0

[critical]
lower = [-2.0, -2.0]
upper = [2.0, 2.0]
grid = 21

[portrait]
curves = ["scheme", "flow"]   # "scheme", "flow" or a scheme name, one panel each; empty draws the field only
grid = 20                     # streamlines per axis

[outputs]
csv = ""
json = ""
svg = ""
)";
}

}  // namespace rmlab
