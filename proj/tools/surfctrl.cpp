// Command line driver: refinement studies and reference-table checks.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <surfctrl/harness.hpp>

namespace {

struct Flags {
  std::string config;
  std::string example;
  std::string levels;
  double tol = 0.0;
  std::string out;
  bool vtk = false;
  bool iterates = false;
  bool no_timing = false;
};

void add_study_flags(CLI::App* cmd, Flags& f, bool with_output) {
  cmd->add_option("--config", f.config, "key=value configuration file (flags override it)");
  cmd->add_option("--example", f.example, "sphere1, graph, sphere2, torus (table also accepts all)");
  cmd->add_option("--levels", f.levels, "refinement levels, e.g. 0:5");
  cmd->add_option("--tol", f.tol, "Newton residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory for CSV and VTK files");
  cmd->add_flag("--no-timing", f.no_timing, "write wall_s = 0 for reproducible CSV");
  if (with_output) {
    cmd->add_flag("--vtk", f.vtk, "write VTK files of u, y, p per level");
    cmd->add_flag("--iterates", f.iterates, "with --vtk, also write every Newton iterate");
  }
}

// Config file first, then the flags that were given on the command line.
surfctrl::StudyConfig make_config(const CLI::App* cmd, const Flags& f) {
  surfctrl::StudyConfig config;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw surfctrl::InvalidConfig("cannot read config file " + f.config);
    surfctrl::apply_config(config, surfctrl::parse_key_values(in));
  }
  std::map<std::string, std::string> overrides;
  if (cmd->count("--example") && f.example != "all") overrides["example"] = f.example;
  if (cmd->count("--levels")) overrides["levels"] = f.levels;
  if (cmd->count("--out")) overrides["out"] = f.out;
  if (f.vtk) overrides["vtk"] = "true";
  if (f.iterates) overrides["iterates"] = "true";
  if (f.no_timing) overrides["timing"] = "false";
  surfctrl::apply_config(config, overrides);
  if (cmd->count("--tol")) config.newton_tol = f.tol;
  config.validate();
  return config;
}

void print_rows(const std::vector<surfctrl::ConvergenceRow>& rows) {
  std::cout << surfctrl::kCsvHeader << '\n';
  for (const auto& r : rows) std::cout << surfctrl::csv_line(r) << '\n';
}

int run_command(const CLI::App* cmd, const Flags& f) {
  if (f.example == "all") throw surfctrl::InvalidConfig("run takes a single example");
  const surfctrl::StudyConfig config = make_config(cmd, f);
  print_rows(surfctrl::run_study(config, &std::cerr));
  return 0;
}

void print_comparison(surfctrl::BenchmarkId id, const std::vector<surfctrl::ConvergenceRow>& rows) {
  const surfctrl::ReferenceTable& ref = surfctrl::reference_table(id);
  std::cout << "level  l2_error     reference    ratio   eoc      ref_eoc  newton  ref_newton\n";
  for (const auto& r : rows) {
    const bool has_ref = r.level >= 0 && r.level < 6;
    std::cout << std::setw(5) << r.level << "  " << std::scientific << std::setprecision(4) << r.l2_error << "  ";
    if (has_ref)
      std::cout << ref.l2_error[r.level] << "  " << std::fixed << std::setprecision(3) << std::setw(6)
                << r.l2_error / ref.l2_error[r.level] << "  ";
    else
      std::cout << "      -             -   ";
    std::cout << std::fixed << std::setprecision(4);
    if (r.eoc) std::cout << std::setw(7) << *r.eoc << "  ";
    else std::cout << "      -  ";
    if (has_ref && r.level > 0) std::cout << std::setw(7) << ref.eoc[r.level - 1] << "  ";
    else std::cout << "      -  ";
    std::cout << std::setw(6) << r.newton_iters << "  ";
    if (has_ref) std::cout << std::setw(10) << ref.newton_iters[r.level];
    std::cout << '\n';
  }
  std::cout << std::defaultfloat;
}

int table_command(const CLI::App* cmd, const Flags& f) {
  const surfctrl::StudyConfig base = make_config(cmd, f);
  std::vector<surfctrl::BenchmarkId> ids;
  if (!cmd->count("--example") || f.example == "all")
    ids.assign(surfctrl::kAllBenchmarks.begin(), surfctrl::kAllBenchmarks.end());
  else
    ids.push_back(base.benchmark);

  bool all_pass = true;
  for (const surfctrl::BenchmarkId id : ids) {
    surfctrl::StudyConfig config = base;
    config.benchmark = id;
    std::cout << "== " << surfctrl::benchmark_name(id) << '\n';
    std::vector<surfctrl::ConvergenceRow> rows;
    try {
      rows = surfctrl::run_study(config);
    } catch (const surfctrl::Error& e) {
      std::cout << "FAIL study aborted: " << e.what() << '\n';
      all_pass = false;
      continue;
    }
    print_comparison(id, rows);
    for (const auto& [label, check] : {std::pair{"rates", surfctrl::check_rates(id, rows)},
                                       std::pair{"magnitudes", surfctrl::check_magnitudes(id, rows)}}) {
      std::cout << (check.pass ? "PASS " : "FAIL ") << label;
      for (const auto& why : check.failures) std::cout << "; " << why;
      std::cout << '\n';
      all_pass = all_pass && check.pass;
    }
  }
  std::cout << (all_pass ? "all thresholds met" : "some thresholds not met") << '\n';
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of elliptic equations on surfaces"};
  app.require_subcommand(1);
  Flags run_flags, table_flags;
  CLI::App* run = app.add_subcommand("run", "run a refinement study and write CSV (and VTK)");
  add_study_flags(run, run_flags, true);
  CLI::App* table = app.add_subcommand("table", "run studies and compare with the reference tables");
  add_study_flags(table, table_flags, false);
  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(run, run_flags);
    return table_command(table, table_flags);
  } catch (const surfctrl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
