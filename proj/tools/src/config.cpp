#include "config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ibc/error.hpp"

namespace ibc::cli {
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"model", {"kind", "d", "M", "g", "form_factor", "alpha", "dispersion", "beta"}},
    {"grid", {"d", "points", "k_max", "n_max", "total_momentum"}},
    {"run",
     {"lambdas", "etas", "ladder", "ladder_spacing", "spectrum_k_max", "max_dimension", "max_iterations",
      "probes", "probe_sigma", "seed", "tol", "quad_tol", "verdict_tol", "mode", "eigenvalues", "bound_p_min",
      "bound_p_max", "bound_points", "bound_theta_3d", "bound_theta_2d"}},
    {"output", {"dir", "prefix", "formats"}},
};

std::string trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// ini_parser drops positions, so find them with a second pass over the text.
std::map<std::string, int> key_lines(const std::string &text) {
  std::map<std::string, int> lines;
  std::istringstream is(text);
  std::string line, section;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    auto t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      lines.emplace(section, no);
      continue;
    }
    auto eq = t.find('=');
    if (eq != std::string::npos) lines.emplace(section + "." + trim(t.substr(0, eq)), no);
  }
  return lines;
}

class Reader {
public:
  Reader(const pt::ptree &tree, std::map<std::string, int> lines) : tree_(tree), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string &key, const std::string &msg) const {
    auto it = lines_.find(key);
    std::string where = it == lines_.end() ? "" : "line " + std::to_string(it->second) + ": ";
    throw ConfigError(where + key + ": " + msg);
  }

  bool has(const std::string &key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string str(const std::string &key, const std::string &fallback) const {
    return trim(tree_.get<std::string>(key, fallback));
  }

  double number(const std::string &key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_double(key, str(key, ""));
  }

  double positive(const std::string &key, double fallback) const {
    double v = number(key, fallback);
    if (!(v > 0)) fail(key, "must be positive");
    return v;
  }

  long integer(const std::string &key, long fallback) const {
    if (!has(key)) return fallback;
    auto s = str(key, "");
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(s, &pos);
    } catch (const std::exception &) {
      fail(key, "expected an integer, got '" + s + "'");
    }
    if (pos != s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(const std::string &key, const std::vector<double> &fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    std::istringstream is(str(key, ""));
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
  }

private:
  double parse_double(const std::string &key, const std::string &s) const {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception &) {
      fail(key, "expected a number, got '" + s + "'");
    }
    if (pos != s.size()) fail(key, "expected a number, got '" + s + "'");
    return v;
  }

  const pt::ptree &tree_;
  std::map<std::string, int> lines_;
};

FormFactor form_factor(const Reader &r) {
  auto kind = r.str("model.form_factor", "power");
  double alpha = r.number("model.alpha", 0.0);
  if (kind == "froehlich") return FormFactor::froehlich();
  if (kind == "nelson") return FormFactor::nelson(r.has("model.alpha") ? alpha : 0.5);
  if (kind == "delta") return FormFactor::delta();
  if (kind == "power") return FormFactor::power_law(alpha);
  r.fail("model.form_factor", "unknown form factor '" + kind + "' (froehlich|nelson|delta|power)");
}

Dispersion dispersion(const Reader &r) {
  auto kind = r.str("model.dispersion", "power");
  double beta = r.number("model.beta", 0.0);
  if (kind == "constant") return Dispersion::constant();
  if (kind == "relativistic") return Dispersion::relativistic(r.has("model.beta") ? beta : 1.0);
  if (kind == "nonrel") return Dispersion::nonrelativistic(r.has("model.beta") ? beta : 2.0);
  if (kind == "power") return Dispersion::power_lower(beta);
  r.fail("model.dispersion", "unknown dispersion '" + kind + "' (constant|relativistic|nonrel|power)");
}

ModelSpec read_model(const Reader &r) {
  auto kind = r.str("model.kind", "custom");
  int M = static_cast<int>(r.integer("model.M", 1));
  double g = r.number("model.g", 1.0);
  if (M < 1) r.fail("model.M", "must be at least 1");
  try {
    if (kind == "nelson") return ModelSpec::nelson(M, g);
    if (kind == "froehlich") return ModelSpec::froehlich(M, g);
    if (kind == "delta2d") return ModelSpec::delta2d(M, g);
    if (kind != "custom") r.fail("model.kind", "unknown kind '" + kind + "' (nelson|froehlich|delta2d|custom)");
    if (!r.has("model.d")) r.fail("model.d", "required for kind = custom");
    int d = static_cast<int>(r.integer("model.d", 3));
    return ModelSpec(d, M, g, form_factor(r), dispersion(r));
  } catch (const ConfigError &e) {
    std::string msg = e.what();
    if (msg.rfind("line ", 0) == 0) throw;
    r.fail("model.kind", msg);
  }
}

} // namespace

RunConfig parse_config(const std::string &text, const Overrides &overrides) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  if (overrides.out_dir) tree.put("output.dir", *overrides.out_dir);
  if (overrides.seed) tree.put("run.seed", std::to_string(*overrides.seed));
  if (overrides.mode) tree.put("run.mode", *overrides.mode);

  RunConfig c;
  c.key_lines = key_lines(text);
  Reader r(tree, c.key_lines);
  for (const auto &[section, body] : tree) {
    auto it = kSchema.find(section);
    if (it == kSchema.end()) r.fail(section, "unknown section");
    for (const auto &[key, value] : body)
      if (!it->second.count(key)) r.fail(section + "." + key, "unknown key");
  }

  if (tree.get_child_optional("model")) c.model = read_model(r);

  if (tree.get_child_optional("grid")) {
    GridSpec g;
    g.d = static_cast<int>(r.integer("grid.d", c.model ? c.model->d() : 1));
    g.points = static_cast<int>(r.integer("grid.points", 4));
    g.k_max = r.positive("grid.k_max", 2.0);
    if (g.points < 2 || g.points % 2) r.fail("grid.points", "must be even and at least 2");
    if (g.d < 1 || g.d > 3) r.fail("grid.d", "must be 1, 2 or 3");
    if (c.model && g.d != c.model->d())
      r.fail("grid.d", "grid dimension " + std::to_string(g.d) + " differs from model dimension " +
                           std::to_string(c.model->d()));
    c.grid = g;
    c.n_max = static_cast<int>(r.integer("grid.n_max", 2));
    if (c.n_max < 0) r.fail("grid.n_max", "must be nonnegative");
    if (r.has("grid.total_momentum")) {
      auto q = r.list("grid.total_momentum", {});
      if (static_cast<int>(q.size()) != g.d) r.fail("grid.total_momentum", "needs one entry per axis");
      Coord Q{0, 0, 0};
      for (int a = 0; a < g.d; ++a) {
        // Given in units of h/2, like every lattice coordinate.
        if (q[a] != static_cast<int>(q[a])) r.fail("grid.total_momentum", "entries are integers in units of h/2");
        Q[a] = static_cast<int>(q[a]);
      }
      c.total_momentum = Q;
    }
  }

  c.lambdas = r.list("run.lambdas", {});
  for (double l : c.lambdas) {
    if (!(l > 0)) r.fail("run.lambdas", "cutoffs must be positive");
    if (c.grid && l > c.grid->k_max) r.fail("run.lambdas", "cutoff exceeds grid.k_max");
  }
  c.etas = r.list("run.etas", {});
  for (double e : c.etas)
    if (e < 0) r.fail("run.etas", "must be nonnegative");
  c.ladder = r.list("run.ladder", {});
  for (double k : c.ladder)
    if (!(k > 0)) r.fail("run.ladder", "k_max values must be positive");
  c.spectrum_k_max = r.list("run.spectrum_k_max", {});
  for (double k : c.spectrum_k_max)
    if (!(k > 0)) r.fail("run.spectrum_k_max", "k_max values must be positive");
  long cap = r.integer("run.max_dimension", static_cast<long>(c.max_dimension));
  if (cap < 1) r.fail("run.max_dimension", "must be positive");
  c.max_dimension = static_cast<std::uint64_t>(cap);
  c.max_iterations = static_cast<int>(r.integer("run.max_iterations", c.max_iterations));
  if (c.max_iterations < 1) r.fail("run.max_iterations", "must be positive");
  c.ladder_spacing = r.positive("run.ladder_spacing", c.ladder_spacing);
  c.probes = static_cast<int>(r.integer("run.probes", c.probes));
  if (c.probes < 1) r.fail("run.probes", "must be at least 1");
  c.probe_sigma = r.positive("run.probe_sigma", c.probe_sigma);
  long seed = r.integer("run.seed", static_cast<long>(c.seed));
  if (seed < 0) r.fail("run.seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.tol = r.positive("run.tol", c.tol);
  c.quad_tol = r.positive("run.quad_tol", c.quad_tol);
  c.verdict_tol = r.positive("run.verdict_tol", c.verdict_tol);
  auto mode = r.str("run.mode", "grid");
  if (mode == "grid")
    c.mode = DiagonalMode::GridConsistent;
  else if (mode == "continuum")
    c.mode = DiagonalMode::Continuum;
  else
    r.fail("run.mode", "expected grid or continuum, got '" + mode + "'");
  c.eigenvalues = static_cast<int>(r.integer("run.eigenvalues", c.eigenvalues));
  if (c.eigenvalues < 1) r.fail("run.eigenvalues", "must be at least 1");
  c.bound_p_min = r.positive("run.bound_p_min", c.bound_p_min);
  c.bound_p_max = r.positive("run.bound_p_max", c.bound_p_max);
  if (c.bound_p_max < c.bound_p_min) r.fail("run.bound_p_max", "must not be below bound_p_min");
  c.bound_points = static_cast<int>(r.integer("run.bound_points", c.bound_points));
  if (c.bound_points < 2) r.fail("run.bound_points", "must be at least 2");
  c.bound_theta_3d = r.list("run.bound_theta_3d", c.bound_theta_3d);
  for (double t : c.bound_theta_3d)
    if (!(t > 1 && t < 3)) r.fail("run.bound_theta_3d", "theta must lie in (1, 3)");
  c.bound_theta_2d = r.list("run.bound_theta_2d", c.bound_theta_2d);
  for (double t : c.bound_theta_2d)
    if (t != 1 && t != 2) r.fail("run.bound_theta_2d", "theta must be 1 or 2");

  c.out_dir = r.str("output.dir", c.out_dir);
  c.prefix = r.str("output.prefix", c.prefix);
  if (r.has("output.formats")) {
    c.write_csv = c.write_json = false;
    std::istringstream is(r.str("output.formats", ""));
    std::string f;
    while (std::getline(is, f, ',')) {
      f = trim(f);
      if (f == "csv")
        c.write_csv = true;
      else if (f == "json")
        c.write_json = true;
      else if (!f.empty())
        r.fail("output.formats", "unknown format '" + f + "' (csv|json)");
    }
  }

  // The output directory does not change results, so leave it out of the embedded config.
  pt::ptree resolved = tree;
  if (auto out = resolved.get_child_optional("output")) out->erase("dir");
  std::ostringstream os;
  pt::write_ini(os, resolved);
  c.resolved_text = os.str();
  return c;
}

void field_error(const RunConfig &c, const std::string &key, const std::string &msg) {
  auto it = c.key_lines.find(key);
  std::string where = it == c.key_lines.end() ? "" : "line " + std::to_string(it->second) + ": ";
  throw ConfigError(where + key + ": " + msg);
}

RunConfig load_config(const std::string &path, const Overrides &overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

} // namespace ibc::cli
