// Solves the first sphere benchmark on a few levels and prints the error table.

#include <iostream>

#include <surfctrl/harness.hpp>

int main(int argc, char** argv) {
  surfctrl::StudyConfig config;
  config.benchmark = surfctrl::parse_benchmark(argc > 1 ? argv[1] : "sphere1");
  config.first_level = 0;
  config.last_level = argc > 2 ? std::stoi(argv[2]) : 3;
  std::cout << surfctrl::kCsvHeader << '\n';
  for (const auto& row : surfctrl::run_study(config)) std::cout << surfctrl::csv_line(row) << '\n';
}
