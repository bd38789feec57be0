#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "ml2/error.hpp"
#include "ml2/scenarios.hpp"

namespace {

std::string slurp(std::istream& in) { return {std::istreambuf_iterator<char>(in), {}}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted polynomial approximation toolkit"};
  app.set_version_flag("--version", std::string(ml2::kVersion));
  std::string command, config, out;
  std::string names;
  for (const auto& c : ml2::commands()) names += (names.empty() ? "" : ", ") + c;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config", config, "JSON config path, '-' for stdin")->required();
  app.add_option("--out", out, "output directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ml2::kExitConfig;
  }

  if (const char* t = std::getenv("ML2_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }

  std::string raw;
  if (config == "-") {
    raw = slurp(std::cin);
  } else {
    std::ifstream in(config);
    if (!in) {
      std::cerr << "ConfigError: cannot open " << config << '\n';
      return ml2::kExitConfig;
    }
    raw = slurp(in);
  }

  ml2::RunResult r;
  try {
    r = ml2::run(ml2::parse_config(command, raw));
  } catch (const ml2::Error& e) {
    std::cerr << e.what() << '\n';
    return ml2::kExitConfig;
  }
  if (r.exit_code == ml2::kExitConfig) {
    std::cerr << r.error << '\n';
    return r.exit_code;
  }
  try {
    ml2::write_outputs(r, out);
  } catch (const std::exception& e) {
    std::cerr << "cannot write outputs: " << e.what() << '\n';
    return ml2::kExitConfig;
  }
  if (!r.error.empty()) std::cerr << r.error << '\n';
  return r.exit_code;
}
