#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "ibc/analysis.hpp"
#include "ibc/dense.hpp"
#include "ibc/error.hpp"
#include "ibc/io.hpp"
#include "ibc/parallel.hpp"
#include "ibc/quad.hpp"

namespace ibc::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kIdentityTol = 1e-10;

struct Context {
  RunConfig cfg;
  std::ostream &out;
};

const ModelSpec &need_model(const RunConfig &c) {
  if (!c.model) field_error(c, "model", "section required for this command");
  return *c.model;
}

const GridSpec &need_grid(const RunConfig &c) {
  if (!c.grid) field_error(c, "grid", "section required for this command");
  return *c.grid;
}

Provenance provenance(const RunConfig &c, std::vector<std::pair<std::string, double>> tols) {
  return {c.resolved_text, std::move(tols)};
}

json provenance_json(const Provenance &p) { return json::parse(provenance_json_text(p)); }

fs::path output_path(const RunConfig &c, const std::string &stem, const std::string &ext) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / (c.prefix + "_" + stem + "." + ext);
}

void write_text(const fs::path &p, const std::string &text, std::ostream &out) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  out << "wrote " << p.string() << "\n";
}

template <class Fn> void write_csv(const RunConfig &c, const std::string &stem, Fn &&body, std::ostream &out) {
  if (!c.write_csv) return;
  std::ostringstream os;
  body(os);
  write_text(output_path(c, stem, "csv"), os.str(), out);
}

void write_json(const RunConfig &c, const std::string &stem, const std::string &text, std::ostream &out) {
  if (!c.write_json) return;
  write_text(output_path(c, stem, "json"), text + "\n", out);
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

int cmd_validate(Context &ctx) {
  const ModelSpec &m = need_model(ctx.cfg);
  auto p = select_regularity_params(m);
  ctx.out << to_string(m.condition()) << ", D=" << fmt(m.D()) << ", eta_threshold=" << fmt(regularity_threshold(m))
          << "\n";
  ctx.out << "model " << m.name() << ": d=" << m.d() << " M=" << m.M() << " g=" << fmt(m.g())
          << " alpha=" << fmt(m.alpha()) << " beta=" << fmt(m.beta()) << "\n";
  ctx.out << "S1=" << fmt(p.S1) << ", S2=" << fmt(p.S2) << ", eps=" << fmt(p.eps) << ", s=" << fmt(p.s)
          << ", delta1=" << fmt(p.delta1) << ", delta2=" << fmt(p.delta2) << ", eta=" << fmt(p.eta) << "\n";
  return 0;
}

int cmd_self_energy(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const ModelSpec &m = need_model(c);
  if (c.lambdas.empty()) field_error(c, "run.lambdas", "self-energy needs at least one cutoff");
  std::optional<MomentumGrid> grid;
  if (c.grid) grid.emplace(*c.grid);
  std::vector<double> cont, disc;
  for (double lam : c.lambdas) {
    try {
      cont.push_back(self_energy(m, lam, c.quad_tol));
    } catch (const QuadratureFailure &e) {
      throw QuadratureFailure(std::string(e.what()) + " [cell Lambda=" + fmt(lam) + "]", e.estimate(), e.target());
    }
    if (grid) disc.push_back(grid_self_energy(m, *grid, Cutoff{lam}));
  }
  auto prov = provenance(c, {{"quad_tol", c.quad_tol}});
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
    ctx.out << "Lambda=" << fmt(c.lambdas[i]) << " E=" << format_number(cont[i]);
    if (grid) ctx.out << " E_grid=" << format_number(disc[i]);
    ctx.out << "\n";
  }
  write_csv(
      c, "self_energy",
      [&](std::ostream &os) {
        write_csv_preamble(os, prov);
        os << "lambda,E_continuum" << (grid ? ",E_grid" : "") << "\n";
        for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
          os << format_number(c.lambdas[i]) << "," << format_number(cont[i]);
          if (grid) os << "," << format_number(disc[i]);
          os << "\n";
        }
      },
      ctx.out);
  json j;
  j["report"] = "self_energy";
  j["provenance"] = provenance_json(prov);
  j["model"] = json::parse(model_json_text(m));
  j["lambdas"] = c.lambdas;
  j["E_continuum"] = cont;
  if (grid) {
    j["grid"] = json::parse(grid_json_text(*c.grid));
    j["E_grid"] = disc;
  }
  write_json(c, "self_energy", j.dump(2), ctx.out);
  return 0;
}

FockSpacePtr make_space(const RunConfig &c, const GridSpec &g) {
  const int M = need_model(c).M();
  const MomentumGrid grid(g);
  // A momentum fiber keeps roughly one state in every P^d.
  double fiber = c.total_momentum ? double(grid.node_count()) : 1.0;
  double estimate = 0.0;
  for (int n = 0; n <= c.n_max; ++n) estimate += double(sector_dimension(grid, M, n)) / fiber;
  if (estimate > double(c.max_dimension))
    throw DimensionCap("Fock space of about " + fmt(estimate) + " states on the grid k_max=" + fmt(g.k_max) +
                       ", points=" + std::to_string(g.points) + " exceeds run.max_dimension");
  return FockSpace::create(g, M, c.n_max, c.total_momentum);
}

int cmd_flow(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const ModelSpec &m = need_model(c);
  if (c.lambdas.empty()) field_error(c, "run.lambdas", "flow needs at least one cutoff");
  if (!m.renormalisable()) field_error(c, "model.kind", "flow needs a renormalisable model");
  auto space = make_space(c, need_grid(c));
  SolverOptions so;
  so.tol = c.tol;
  so.max_iterations = c.max_iterations;
  so.restart = std::min(so.restart, c.max_iterations);
  auto report = renorm_flow(m, space, c.lambdas, probe_family(c.probes, c.seed, c.probe_sigma), so);
  auto prov = provenance(c, {{"solver_tol", c.tol}});
  for (std::size_t l = 0; l < report.lambdas.size(); ++l) {
    ctx.out << "Lambda=" << fmt(report.lambdas[l]) << " E_grid=" << format_number(report.E_grid[l]) << " errors";
    for (double e : report.errors[l]) ctx.out << " " << format_number(e);
    ctx.out << "\n";
  }
  ctx.out << "monotone " << (flow_monotone(report) ? "yes" : "no") << "\n";
  write_csv(c, "flow", [&](std::ostream &os) { write_report_csv(os, report, prov); }, ctx.out);
  write_json(c, "flow", report_json(report, prov), ctx.out);
  return 0;
}

int cmd_scan(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const ModelSpec &m = need_model(c);
  if (c.etas.empty()) field_error(c, "run.etas", "scan needs at least one eta");
  if (c.ladder.size() < 2) field_error(c, "run.ladder", "scan needs at least two k_max values");
  auto ladder = fixed_spacing_ladder(c.ladder, c.ladder_spacing);
  auto probe = probe_family(1, c.seed, c.probe_sigma).front();
  auto report = regularity_scan(m, ladder, c.etas, probe, c.verdict_tol);
  auto prov = provenance(c, {{"verdict_tol", c.verdict_tol}});
  for (std::size_t e = 0; e < report.etas.size(); ++e)
    ctx.out << "eta=" << fmt(report.etas[e]) << " " << to_string(report.verdicts[e]) << "\n";
  write_csv(c, "scan", [&](std::ostream &os) { write_report_csv(os, report, prov); }, ctx.out);
  write_json(c, "scan", report_json(report, prov), ctx.out);
  return 0;
}

int cmd_bounds(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  auto ps = log_grid(c.bound_p_min, c.bound_p_max, c.bound_points);
  std::vector<int> th2;
  for (double t : c.bound_theta_2d) th2.push_back(static_cast<int>(t));
  auto samples = bound_sweep_3d(ps, c.bound_theta_3d, c.quad_tol);
  auto s2 = bound_sweep_2d(ps, th2, c.quad_tol);
  samples.insert(samples.end(), s2.begin(), s2.end());
  std::map<std::pair<int, double>, double> sup;
  for (const auto &s : samples) {
    auto &v = sup[{s.dim, s.theta}];
    v = std::max(v, s.ratio);
  }
  for (const auto &[key, v] : sup)
    ctx.out << "dim=" << key.first << " theta=" << fmt(key.second) << " sup_ratio=" << format_number(v) << "\n";
  auto prov = provenance(c, {{"quad_tol", c.quad_tol}});
  write_csv(c, "bounds", [&](std::ostream &os) { write_bounds_csv(os, samples, prov); }, ctx.out);
  json j;
  j["report"] = "bounds";
  j["provenance"] = provenance_json(prov);
  json rows = json::array();
  for (const auto &s : samples)
    rows.push_back({{"dim", s.dim}, {"p", s.p}, {"theta", s.theta}, {"integral", s.integral}, {"ratio", s.ratio}});
  j["samples"] = rows;
  write_json(c, "bounds", j.dump(2), ctx.out);
  return 0;
}

int cmd_spectrum(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const ModelSpec &m = need_model(c);
  const GridSpec &base = need_grid(c);
  std::vector<GridSpec> grids;
  if (c.spectrum_k_max.empty()) {
    grids.push_back(base);
  } else {
    for (const auto &step : fixed_spacing_ladder(c.spectrum_k_max, c.ladder_spacing))
      grids.push_back({base.d, step.points, step.k_max});
  }
  GroundEnergyOptions opts;
  opts.lanczos.seed = c.seed;
  std::vector<std::vector<double>> levels;
  std::vector<std::size_t> dims;
  for (const auto &g : grids) {
    auto space = make_space(c, g);
    dims.push_back(space->dimension());
    try {
      levels.push_back(ground_energy(m, space, c.mode, c.eigenvalues, opts));
    } catch (const NoConvergence &e) {
      throw NoConvergence(std::string(e.what()) + " [cell k_max=" + fmt(g.k_max) + "]", e.iterations(),
                          e.best_residual());
    }
    ctx.out << "k_max=" << fmt(g.k_max) << " points=" << g.points << " dim=" << dims.back() << " E0="
            << format_number(levels.back().front()) << "\n";
  }
  auto prov = provenance(c, {{"eigen_tol", opts.lanczos.tol}});
  write_csv(
      c, "spectrum",
      [&](std::ostream &os) {
        write_csv_preamble(os, prov);
        os << "k_max,points,dim";
        for (int k = 0; k < c.eigenvalues; ++k) os << ",E" << k;
        os << "\n";
        for (std::size_t i = 0; i < grids.size(); ++i) {
          os << format_number(grids[i].k_max) << "," << grids[i].points << "," << dims[i];
          for (double e : levels[i]) os << "," << format_number(e);
          os << "\n";
        }
      },
      ctx.out);
  json j;
  j["report"] = "spectrum";
  j["provenance"] = provenance_json(prov);
  j["model"] = json::parse(model_json_text(m));
  j["mode"] = to_string(c.mode);
  json rows = json::array();
  for (std::size_t i = 0; i < grids.size(); ++i)
    rows.push_back({{"grid", json::parse(grid_json_text(grids[i]))}, {"dim", dims[i]}, {"eigenvalues", levels[i]}});
  j["ladder"] = rows;
  write_json(c, "spectrum", j.dump(2), ctx.out);
  return 0;
}

double max_abs(const Eigen::MatrixXd &A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

int cmd_identity_check(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const ModelSpec &m = need_model(c);
  auto space = make_space(c, need_grid(c));
  std::vector<std::pair<std::string, double>> defects;

  auto a = assemble_dense(annihilation(m, space));
  auto as = assemble_dense(creation(m, space));
  defects.emplace_back("adjointness", max_abs(a.transpose() - as));
  auto G = assemble_dense(G_operator(m, space));
  auto Linv = assemble_dense(free_multiplier(m, space, -1.0));
  defects.emplace_back("G_identity", max_abs(G + m.g() * Linv * as));
  auto H = assemble_dense(H_operator(m, space, DiagonalMode::GridConsistent));
  auto HL = assemble_dense(H_Lambda_operator(m, space));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(H.rows(), H.cols());
  const double E = m.renormalisable() ? grid_self_energy(m, space->grid()) : 0.0;
  defects.emplace_back("headline", max_abs(H - HL - E * I));
  defects.emplace_back("hermiticity_H", hermiticity_defect(H));
  defects.emplace_back("hermiticity_Tod", hermiticity_defect(assemble_dense(Tod_operator(m, space))));
  if (!m.renormalisable()) {
    auto T = assemble_dense(T_operator(m, space));
    auto L = assemble_dense(free_multiplier(m, space, 1.0));
    defects.emplace_back("T_equals_minus_GLG", max_abs(T + G.transpose() * L * G));
  }

  std::string failing;
  for (const auto &[name, v] : defects) {
    ctx.out << name << " " << format_number(v) << "\n";
    if (!(v <= kIdentityTol) && failing.empty()) failing = name;
  }
  auto prov = provenance(c, {{"identity_tol", kIdentityTol}});
  write_csv(
      c, "identity",
      [&](std::ostream &os) {
        write_csv_preamble(os, prov);
        os << "check,defect\n";
        for (const auto &[name, v] : defects) os << name << "," << format_number(v) << "\n";
      },
      ctx.out);
  json j;
  j["report"] = "identity_check";
  j["provenance"] = provenance_json(prov);
  j["model"] = json::parse(model_json_text(m));
  j["grid"] = json::parse(grid_json_text(space->grid().spec()));
  j["n_max"] = c.n_max;
  j["dimension"] = space->dimension();
  json d = json::object();
  for (const auto &[name, v] : defects) d[name] = v;
  j["defects"] = d;
  write_json(c, "identity", j.dump(2), ctx.out);
  if (!failing.empty())
    throw Error("identity-check: " + failing + " defect exceeds " + format_number(kIdentityTol));
  return 0;
}

const std::map<std::string, std::function<int(Context &)>> kCommands = {
    {"validate", cmd_validate}, {"self-energy", cmd_self_energy}, {"flow", cmd_flow},
    {"scan", cmd_scan},         {"bounds", cmd_bounds},           {"spectrum", cmd_spectrum},
    {"identity-check", cmd_identity_check},
};

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Interior-boundary-condition Hamiltonians on truncated Fock spaces", "ibc"};
  app.set_version_flag("--version", library_version());
  std::string command, config_path, mode;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = -1;
  std::vector<std::string> names;
  for (const auto &[k, v] : kCommands) names.push_back(k);
  app.add_option("command", command, "validate | self-energy | flow | scan | bounds | spectrum | identity-check")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "probe and sampling seed");
  app.add_option("--threads", threads, "worker threads (default: IBC_NUM_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "diagonal mode")->check(CLI::IsMember({"grid", "continuum"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion &) {
    out << library_version() << "\n";
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  if (threads < 0) {
    if (const char *env = std::getenv("IBC_NUM_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception &) {
        err << "error: IBC_NUM_THREADS: expected a positive integer\n";
        return 1;
      }
      if (threads < 1) {
        err << "error: IBC_NUM_THREADS: expected a positive integer\n";
        return 1;
      }
    }
  }
  if (threads > 0) set_num_threads(threads);

  try {
    Overrides ov;
    ov.out_dir = out_dir;
    ov.seed = seed;
    if (!mode.empty()) ov.mode = mode;
    Context ctx{load_config(config_path, ov), out};
    return kCommands.at(command)(ctx);
  } catch (const ConfigError &e) {
    err << "config error: " << config_path << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

} // namespace ibc::cli
