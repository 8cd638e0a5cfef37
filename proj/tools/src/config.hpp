#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ibc/grid.hpp"
#include "ibc/model.hpp"
#include "ibc/ops.hpp"

namespace ibc::cli {

//! Sectioned key = value config. Sections: model, grid, run, output.
struct RunConfig {
  std::string resolved_text; //!< config after command-line overrides, as written back out
  std::map<std::string, int> key_lines; //!< "section.key" -> line in the source text

  std::optional<ModelSpec> model;
  std::optional<GridSpec> grid;
  int n_max = 2;
  std::optional<Coord> total_momentum;

  std::vector<double> lambdas;
  std::vector<double> etas;
  std::vector<double> ladder;
  double ladder_spacing = 1.0;
  std::vector<double> spectrum_k_max; //!< spectrum ladder, same spacing as ladder
  std::uint64_t max_dimension = 2000000; //!< refuse Fock spaces larger than this
  int probes = 3;
  double probe_sigma = 0.5;
  std::uint64_t seed = 42;
  double tol = 1e-10;
  int max_iterations = 20000;
  double quad_tol = 1e-8;
  double verdict_tol = 0.05;
  DiagonalMode mode = DiagonalMode::GridConsistent;
  int eigenvalues = 1;
  double bound_p_min = 0.1;
  double bound_p_max = 1000.0;
  int bound_points = 13;
  std::vector<double> bound_theta_3d{1.5, 2.0, 2.5};
  std::vector<double> bound_theta_2d{1.0, 2.0};

  std::string out_dir = "out";
  std::string prefix = "ibc";
  bool write_csv = true;
  bool write_json = true;
};

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

//! ConfigError naming the field and, when it appears in the file, its line.
[[noreturn]] void field_error(const RunConfig &c, const std::string &key, const std::string &msg);

//! Throws ConfigError with "line N: section.key: ..." diagnostics.
RunConfig parse_config(const std::string &text, const Overrides &overrides = {});
RunConfig load_config(const std::string &path, const Overrides &overrides = {});

} // namespace ibc::cli
