#pragma once

// Refinement studies: solve each level, measure the control error, write CSV
// and VTK output, and check the results against acceptance thresholds.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "manufactured.hpp"

namespace surfctrl {

struct StudyConfig {
  BenchmarkId benchmark = BenchmarkId::SphereI;
  int first_level = 0;
  int last_level = 5;
  double newton_tol = 1e-6;
  std::string output_dir;  // empty: no files
  bool emit_vtk = false;
  bool emit_iterates = false;
  bool timing = true;  // false writes wall_s = 0 for reproducible CSV

  void validate() const {
    if (first_level < 0 || last_level < first_level) throw InvalidConfig("levels must be a nonempty ascending range");
    if (!(newton_tol > 0.0)) throw InvalidConfig("tol must be positive");
  }
};

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  double l2_error = 0.0;
  std::optional<double> eoc;
  int newton_iters = 0;
  long inner_cg_total = 0;
  double wall_time = 0.0;
  double control_integral = 0.0;
};

/// EOC_i = (ln e_{i-1} - ln e_i) / ln 2
inline std::vector<double> eoc(const std::vector<double>& errors) {
  for (double e : errors)
    if (!(e > 0.0)) throw NonpositiveError("eoc: errors must be positive");
  std::vector<double> rates;
  for (std::size_t i = 1; i < errors.size(); ++i)
    rates.push_back((std::log(errors[i - 1]) - std::log(errors[i])) / std::log(2.0));
  return rates;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "level,h,l2_error,eoc,newton_iters,cg_iters,wall_s";

inline std::string csv_line(const ConvergenceRow& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.level << ',' << r.h << ',' << r.l2_error << ',';
  if (r.eoc) os << *r.eoc;
  os << ',' << r.newton_iters << ',' << r.inner_cg_total << ',' << r.wall_time;
  return os.str();
}

inline void write_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const ConvergenceRow& r : rows) out << csv_line(r) << '\n';
}

/// Legacy ASCII VTK polydata with one point scalar field per entry.
inline void write_vtk(std::ostream& out, const SurfaceMesh& mesh,
                      const std::vector<std::pair<std::string, Vector>>& fields) {
  out << "# vtk DataFile Version 3.0\nsurface mesh level " << mesh.level << "\nASCII\nDATASET POLYDATA\n";
  out << std::setprecision(17);
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Vec3& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  out << "POLYGONS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const Triangle& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (fields.empty()) return;
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  for (const auto& [name, values] : fields) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) out << values[i] << '\n';
  }
}

inline void write_vtk(const std::filesystem::path& path, const SurfaceMesh& mesh,
                      const std::vector<std::pair<std::string, Vector>>& fields) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_vtk(out, mesh, fields);
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct LevelResult {
  SurfaceMesh mesh;
  OptimalSolution solution;
  ConvergenceRow row;
};

inline LevelResult solve_level(const ProblemSpec& spec, int level, double tol, bool record_iterates = false) {
  LevelResult r;
  const auto start = std::chrono::steady_clock::now();
  r.mesh = build_mesh(spec.surface, level);
  const DiscreteProblem problem(spec, r.mesh);
  NewtonOptions options;
  options.tol = tol;
  options.record_iterates = record_iterates;
  r.solution = solve_optimal(problem, options);
  r.row.level = level;
  r.row.h = r.mesh.h;
  r.row.l2_error = l2_error_vs_exact(r.mesh, spec.surface, r.solution.control, spec.exact_control);
  r.row.newton_iters = r.solution.newton_iterations;
  r.row.inner_cg_total = r.solution.inner_cg_iterations;
  r.row.control_integral = integrate(r.mesh, r.solution.control);
  r.row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string study_stem(const StudyConfig& config) { return std::string(benchmark_name(config.benchmark)); }

/// Runs all levels in order. When a level fails, the rows so far are written
/// before the error propagates.
inline std::vector<ConvergenceRow> run_study(const StudyConfig& config, std::ostream* log = nullptr) {
  config.validate();
  const ProblemSpec spec = build_example(config.benchmark);
  std::vector<ConvergenceRow> rows;
  std::filesystem::path dir;
  if (!config.output_dir.empty()) {
    dir = config.output_dir;
    std::filesystem::create_directories(dir);
  }
  const auto flush = [&] {
    if (!dir.empty()) write_csv(dir / (study_stem(config) + ".csv"), rows);
  };

  for (int level = config.first_level; level <= config.last_level; ++level) {
    LevelResult res;
    try {
      res = solve_level(spec, level, config.newton_tol, config.emit_vtk && config.emit_iterates);
    } catch (...) {
      flush();
      throw;
    }
    ConvergenceRow row = res.row;
    if (!config.timing) row.wall_time = 0.0;
    if (!rows.empty()) row.eoc = eoc({rows.back().l2_error, row.l2_error}).front();
    rows.push_back(row);
    if (log) *log << benchmark_name(config.benchmark) << ' ' << csv_line(row) << std::endl;

    if (!dir.empty() && config.emit_vtk) {
      const std::string base = study_stem(config) + "_level" + std::to_string(level);
      const PiecewiseControl u = PiecewiseControl::from(res.solution.control);
      write_vtk(dir / (base + ".vtk"), res.mesh,
                {{"u", vertex_values(u)}, {"y", res.solution.state}, {"p", res.solution.adjoint}});
      for (std::size_t k = 0; k < res.solution.iterates.size(); ++k)
        write_vtk(dir / (base + "_iterate" + std::to_string(k) + ".vtk"), res.mesh,
                  {{"iterate_" + std::to_string(k), vertex_values(res.solution.iterates[k])}});
    }
  }
  flush();
  return rows;
}

// ---------------------------------------------------------------------------
// Acceptance
// ---------------------------------------------------------------------------

struct CheckResult {
  bool pass = true;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

/// Rate, Newton-count and mean checks of one benchmark study.
/// Least-squares slope of Newton iterations against level.
inline double newton_trend(const std::vector<ConvergenceRow>& rows) {
  const double n = static_cast<double>(rows.size());
  double mx = 0.0, my = 0.0;
  for (const auto& r : rows) mx += r.level / n, my += r.newton_iters / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : rows) {
    sxy += (r.level - mx) * (r.newton_iters - my);
    sxx += (r.level - mx) * (r.level - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline CheckResult check_rates(BenchmarkId id, const std::vector<ConvergenceRow>& rows) {
  const AcceptanceThresholds t = acceptance_thresholds(id);
  CheckResult c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    const std::string at = " at level " + std::to_string(r.level);
    if (r.eoc) c.require(*r.eoc >= t.eoc_min && *r.eoc <= t.eoc_max, "EOC " + std::to_string(*r.eoc) + at);
    const int limit = r.level == 0 ? t.newton_max_level0 : t.newton_max_later;
    c.require(r.newton_iters <= limit, "Newton iterations " + std::to_string(r.newton_iters) + at);
    if (t.newton_center)
      c.require(std::abs(r.newton_iters - *t.newton_center) <= t.newton_spread,
                "Newton iterations " + std::to_string(r.newton_iters) + at);
    if (t.mean_zero_check)
      c.require(std::abs(r.control_integral) <= t.mean_tol, "control integral " + std::to_string(r.control_integral) + at);
  }
  if (t.newton_nonincreasing && rows.size() > 1) {
    const double slope = newton_trend(rows);
    c.require(slope <= 0.0, "Newton iteration trend " + std::to_string(slope) + " per level");
  }
  return c;
}

/// Errors within the tolerated factor of the reference values.
inline CheckResult check_magnitudes(BenchmarkId id, const std::vector<ConvergenceRow>& rows) {
  const ReferenceTable& ref = reference_table(id);
  const double factor = acceptance_thresholds(id).error_factor;
  CheckResult c;
  for (const ConvergenceRow& r : rows) {
    if (r.level < 0 || r.level >= static_cast<int>(ref.l2_error.size())) continue;
    const double ratio = r.l2_error / ref.l2_error[r.level];
    c.require(ratio <= factor && ratio >= 1.0 / factor,
              "error ratio " + std::to_string(ratio) + " at level " + std::to_string(r.level));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Flat `key = value` file; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidConfig("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidConfig("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// "a:b" or a single level "a".
inline std::pair<int, int> parse_levels(const std::string& text) {
  try {
    std::size_t pos = 0;
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
      const int l = std::stoi(text, &pos);
      if (pos != text.size()) throw InvalidConfig("");
      return {l, l};
    }
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const int first = std::stoi(a, &pos);
    if (pos != a.size()) throw InvalidConfig("");
    const int last = std::stoi(b, &pos);
    if (pos != b.size()) throw InvalidConfig("");
    return {first, last};
  } catch (const std::exception&) {
    throw InvalidConfig("levels must look like 0:5, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidConfig(key + ": expected a boolean, got '" + v + "'");
}

/// Applies recognised keys (example, levels, tol, out, vtk, iterates, timing).
inline void apply_config(StudyConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "example") {
      config.benchmark = parse_benchmark(value);
    } else if (key == "levels") {
      std::tie(config.first_level, config.last_level) = parse_levels(value);
    } else if (key == "tol") {
      try {
        std::size_t pos = 0;
        config.newton_tol = std::stod(value, &pos);
        if (pos != value.size()) throw InvalidConfig("");
      } catch (const std::exception&) {
        throw InvalidConfig("tol: expected a number, got '" + value + "'");
      }
    } else if (key == "out") {
      config.output_dir = value;
    } else if (key == "vtk") {
      config.emit_vtk = parse_bool(key, value);
    } else if (key == "iterates") {
      config.emit_iterates = parse_bool(key, value);
    } else if (key == "timing") {
      config.timing = parse_bool(key, value);
    } else {
      throw InvalidConfig("unknown config key '" + key + "'");
    }
  }
}

}  // namespace surfctrl
