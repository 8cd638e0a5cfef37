#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "ibc/error.hpp"

namespace fs = std::filesystem;
using namespace ibc;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ibc");
  std::vector<const char *> argv;
  for (auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
  auto dir = fs::temp_directory_path() / "ibc_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path &dir, const std::string &text) {
  auto p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kConfigs = IBC_CONFIG_DIR;

} // namespace

TEST_CASE("validate on the shipped Nelson config") {
  auto r = run({"validate", "--config", kConfigs + "/nelson.ini"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("Renormalisable, D=0, eta_threshold=0.5\n", 0) == 0);
  CHECK(r.out.find("S1=2, S2=1") != std::string::npos);
}

TEST_CASE("identity-check on the small contact config") {
  auto dir = scratch("identity");
  auto r = run({"identity-check", "--config", kConfigs + "/delta2d_small.ini", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "delta2d_small_identity.csv"));
  std::istringstream lines(r.out);
  std::string name;
  double value;
  int checks = 0;
  while (lines >> name >> value) {
    CHECK(value <= 1e-10);
    ++checks;
  }
  CHECK(checks == 5);
}

TEST_CASE("config errors exit with 1 and name the field") {
  auto dir = scratch("errors");
  auto empty = write_config(dir, "[model]\nkind = delta2d\n[grid]\npoints = 4\nk_max = 2\n[run]\nlambdas =\n");
  auto r = run({"flow", "--config", empty.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 7: run.lambdas") != std::string::npos);

  auto typo = write_config(dir, "[model]\nkind = nelson\ng = x1\n");
  r = run({"validate", "--config", typo.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 3: model.g: expected a number") != std::string::npos);

  auto unknown = write_config(dir, "[grid]\npionts = 4\n");
  r = run({"validate", "--config", unknown.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2: grid.pionts: unknown key") != std::string::npos);

  auto mismatch = write_config(dir, "[model]\nkind = nelson\n[grid]\nd = 2\n");
  CHECK(run({"validate", "--config", mismatch.string()}).code == 1);

  auto big = write_config(dir, "[model]\nkind = delta2d\n[grid]\npoints = 4\nk_max = 2\n[run]\nlambdas = 3\n");
  r = run({"flow", "--config", big.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("run.lambdas: cutoff exceeds grid.k_max") != std::string::npos);

  auto invalid = write_config(dir, "[model]\nkind = custom\nd = 3\nform_factor = power\nalpha = 0.3\n"
                                   "dispersion = relativistic\n");
  r = run({"validate", "--config", invalid.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("alpha > 1/2 - beta^2/(8 + beta^2)") != std::string::npos);

  CHECK(run({"validate"}).code == 1);
  CHECK(run({"nonsense", "--config", empty.string()}).code == 1);
  CHECK(run({"validate", "--config", (dir / "missing.ini").string()}).code == 1);
  CHECK(run({"flow", "--config", empty.string(), "--mode", "sideways"}).code == 1);
}

TEST_CASE("numerical failures exit with 2 and name the cell") {
  auto dir = scratch("numerical");
  auto cfg = write_config(dir, "[model]\nkind = delta2d\n[grid]\npoints = 4\nk_max = 2\nn_max = 2\n"
                               "[run]\nlambdas = 1, 2\nmax_iterations = 4\n");
  auto r = run({"flow", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("[cell reference, probe") != std::string::npos);

  auto huge = write_config(dir, "[model]\nkind = nelson\n[grid]\npoints = 32\nk_max = 16\nn_max = 3\n");
  r = run({"spectrum", "--config", huge.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("exceeds run.max_dimension") != std::string::npos);
}

TEST_CASE("outputs are deterministic and embed the resolved config") {
  auto a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = kConfigs + "/delta2d_small.ini";
  REQUIRE(run({"flow", "--config", cfg, "--out", a.string(), "--seed", "7"}).code == 0);
  REQUIRE(run({"flow", "--config", cfg, "--out", b.string(), "--seed", "7", "--threads", "1"}).code == 0);
  for (const char *f : {"delta2d_small_flow.csv", "delta2d_small_flow.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  const std::string csv = slurp(a / "delta2d_small_flow.csv");
  CHECK(csv.find("# seed=7") != std::string::npos);
  CHECK(csv.find(a.string()) == std::string::npos);

  // Rerunning from the embedded config reproduces the tables.
  std::string embedded;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line) && line.rfind("# ", 0) == 0 && line.rfind("# tolerance", 0) != 0)
    embedded += line.substr(2) + "\n";
  auto c = scratch("det_c");
  auto again = write_config(c, embedded);
  REQUIRE(run({"flow", "--config", again.string(), "--out", c.string()}).code == 0);
  CHECK(slurp(c / "delta2d_small_flow.csv") == csv);
}

TEST_CASE("other commands write their tables") {
  auto dir = scratch("others");
  auto se = run({"self-energy", "--config", kConfigs + "/nelson_self_energy.ini", "--out", dir.string()});
  CHECK(se.code == 0);
  CHECK(se.out.find("Lambda=10 E=2.14044135571e+01") != std::string::npos);
  auto sc = run({"scan", "--config", kConfigs + "/froehlich.ini", "--out", dir.string()});
  CHECK(sc.code == 0);
  CHECK(sc.out.find("eta=0.5 Cauchy") != std::string::npos);
  CHECK(sc.out.find("eta=0.9 Diverging") != std::string::npos);
  auto bd = run({"bounds", "--config", kConfigs + "/bounds.ini", "--out", dir.string()});
  CHECK(bd.code == 0);
  CHECK(slurp(dir / "bounds_bounds.csv").find("p,theta,integral,ratio,dim") != std::string::npos);
  auto sp = run({"spectrum", "--config", kConfigs + "/nelson.ini", "--out", dir.string(), "--mode", "grid"});
  CHECK(sp.code == 0);
  CHECK(fs::exists(dir / "nelson_spectrum.json"));
  auto fr = run({"identity-check", "--config", kConfigs + "/froehlich.ini", "--out", dir.string()});
  CHECK(fr.code == 0);
  CHECK(fr.out.find("T_equals_minus_GLG") != std::string::npos);
}

TEST_CASE("thread count from the environment, flag wins") {
  ::setenv("IBC_NUM_THREADS", "0", 1);
  CHECK(run({"validate", "--config", kConfigs + "/nelson.ini"}).code == 1);
  CHECK(run({"validate", "--config", kConfigs + "/nelson.ini", "--threads", "1"}).code == 0);
  ::setenv("IBC_NUM_THREADS", "1", 1);
  CHECK(run({"validate", "--config", kConfigs + "/nelson.ini"}).code == 0);
  ::unsetenv("IBC_NUM_THREADS");
}

TEST_CASE("config parser overrides") {
  cli::Overrides ov;
  ov.seed = 9;
  ov.mode = "continuum";
  auto c = cli::parse_config("[model]\nkind = delta2d\n[run]\nseed = 1\n", ov);
  CHECK(c.seed == 9);
  CHECK(c.mode == DiagonalMode::Continuum);
  CHECK(c.resolved_text.find("seed=9") != std::string::npos);
  CHECK_THROWS_AS(cli::parse_config("[model\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("[run]\ntol = -1\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("[run]\nmode = fast\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("[output]\nformats = xml\n"), ConfigError);
}
