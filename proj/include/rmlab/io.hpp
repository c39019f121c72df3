#pragma once

// CSV trajectory files and JSON summaries. Floats are written with 17
// significant digits through std::to_chars, so a CSV round trip is lossless
// and independent of the locale.

#include "rmlab/analysis.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rmlab {

using Json = nlohmann::ordered_json;

/// Shortest-safe decimal form of a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

/// "x,y" for 1+1 blocks, "x1,..,xd1,y1,..,yd2" otherwise.
inline std::vector<std::string> state_columns(Blocks blocks) {
  std::vector<std::string> cols;
  if (blocks.min_dim == 1 && blocks.max_dim == 1) return {"x", "y"};
  for (int i = 1; i <= blocks.min_dim; ++i) cols.push_back("x" + std::to_string(i));
  for (int i = 1; i <= blocks.max_dim; ++i) cols.push_back("y" + std::to_string(i));
  return cols;
}

namespace detail {

template <SampledPath Path, class IndexOf>
void write_rows(std::ostream& out, const Path& path, Blocks blocks, IndexOf index_of) {
  out << "n,tau";
  for (const auto& c : state_columns(blocks)) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << index_of(i) << ',' << format_double(path.time(i));
    const Vec z = path.state(i);
    for (Eigen::Index k = 0; k < z.size(); ++k) out << ',' << format_double(z[k]);
    out << '\n';
  }
}

}  // namespace detail

inline void write_csv(std::ostream& out, const Trajectory& traj) {
  detail::write_rows(out, traj, traj.blocks(), [&](std::size_t i) { return traj.index(i); });
}

/// Flow samples; column n holds the sample index.
inline void write_csv(std::ostream& out, const FlowPath& path, Blocks blocks) {
  if (blocks.dim() != path.dim()) throw ConfigError("write_csv: block sizes do not match the path dimension");
  detail::write_rows(out, path, blocks, [](std::size_t i) { return i; });
}

template <class PathLike, class... Extra>
void write_csv_file(const std::filesystem::path& file, const PathLike& path, Extra&&... extra) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  write_csv(out, path, std::forward<Extra>(extra)...);
}

struct CsvTrajectory {
  std::vector<std::string> columns;
  std::vector<std::size_t> n;
  std::vector<double> tau;
  std::vector<Vec> states;
};

inline CsvTrajectory read_csv(std::istream& in) {
  CsvTrajectory table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("read_csv: empty input");
  auto split = [](const std::string& text) {
    std::vector<std::string_view> cells;
    std::string_view rest(text);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return cells;
  };
  for (auto c : split(line)) table.columns.emplace_back(c);
  if (table.columns.size() < 3 || table.columns[0] != "n" || table.columns[1] != "tau") {
    throw ConfigError("read_csv: header must start with n,tau");
  }
  const auto d = static_cast<Eigen::Index>(table.columns.size() - 2);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.columns.size()) {
      throw ConfigError("read_csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(table.columns.size()));
    }
    std::size_t idx = 0;
    std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), idx);
    table.n.push_back(idx);
    table.tau.push_back(parse_double(cells[1]));
    Vec z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = parse_double(cells[static_cast<std::size_t>(k) + 2]);
    table.states.push_back(std::move(z));
  }
  return table;
}

// -----------------------------------------------------------------------------
// JSON
// -----------------------------------------------------------------------------

inline Json to_json_array(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// {final_point, final_radius, diverged, queries_total} plus run metadata.
inline Json simulate_summary(const Trajectory& traj) {
  Json j;
  const Vec last = traj.state(traj.size() - 1);
  j["final_point"] = to_json_array(last);
  j["final_radius"] = last.norm();
  j["diverged"] = traj.divergence.has_value();
  j["queries_total"] = traj.queries_total;
  j["final_n"] = traj.index(traj.size() - 1);
  j["final_tau"] = traj.time(traj.size() - 1);
  j["max_norm"] = traj.max_norm;
  if (traj.divergence) {
    j["divergence"] = {{"iteration", traj.divergence->iteration},
                       {"max_abs_coordinate", traj.divergence->max_abs_coordinate}};
  }
  return j;
}

inline Json to_json(const CycleDescriptor& c) {
  return {{"period", c.period},
          {"radius_min", c.radius_min},
          {"radius_mean", c.radius_mean},
          {"radius_max", c.radius_max},
          {"section_point", to_json_array(c.section_point)},
          {"center", to_json_array(c.center)},
          {"stability", std::string(to_string(c.stability))},
          {"return_ratio", c.return_ratio}};
}

inline Json to_json(const CycleDetection& d) {
  Json j;
  j["result"] = std::string(to_string(d.flag));
  j["crossings"] = d.crossings;
  j["cycle"] = d.cycle ? to_json(*d.cycle) : Json(nullptr);
  return j;
}

inline Json to_json(const MonteCarloReport& r) {
  Json distances = Json::array();
  for (double v : r.terminal_distances) distances.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
  return {{"runs", r.runs},
          {"converged", r.converged},
          {"diverged", r.diverged},
          {"fraction_converged", r.fraction_converged},
          {"target", r.target},
          {"fingerprint", r.fingerprint},
          {"terminal_distances", distances}};
}

inline Json to_json(const CriticalPoint& p) {
  Json eig = Json::array();
  for (const auto& l : p.eigenvalues) eig.push_back({{"re", l.real()}, {"im", l.imag()}});
  return {{"location", to_json_array(p.location)},
          {"eigenvalues", eig},
          {"classification", std::string(to_string(p.classification))}};
}

inline void write_json_file(const std::filesystem::path& file, const Json& j) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace rmlab
