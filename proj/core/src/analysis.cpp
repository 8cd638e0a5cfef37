#include "ibc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ibc/error.hpp"
#include "ibc/parallel.hpp"

namespace ibc {

double ProbeSpec::operator()(const std::array<double, 3> &q, int d) const {
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) {
    const double x = q[a] - centre[a];
    r2 += x * x;
  }
  if (r2 > support_radius() * support_radius())
    return 0.0;
  return amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
}

std::vector<ProbeSpec> probe_family(int count, std::uint64_t seed, double sigma) {
  std::vector<ProbeSpec> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int j = 0; j < count; ++j) {
    ProbeSpec p;
    p.sigma = sigma;
    p.id = "probe" + std::to_string(j);
    if (j > 0) {
      p.sigma = sigma * (1.0 + 0.3 * unit(rng));
      for (double &c : p.centre)
        c = 0.5 * sigma * unit(rng);
      p.amplitude = 1.0 + 0.5 * unit(rng);
    }
    out.push_back(p);
  }
  return out;
}

namespace {

std::array<double, 3> momentum_of(const MomentumGrid &grid, const Coord &c) {
  return {grid.momentum(c[0]), grid.momentum(c[1]), grid.momentum(c[2])};
}

} // namespace

FockVector make_probe(FockSpacePtr space, const ProbeSpec &probe, bool with_one_boson) {
  FockVector v(space);
  const MomentumGrid &grid = space->grid();
  const int M = space->M(), d = grid.dim();
  const int top = with_one_boson ? std::min(1, space->n_max()) : 0;
  std::vector<std::size_t> src(M);
  std::vector<std::uint32_t> K(top);
  for (int n = 0; n <= top; ++n) {
    const SectorBasis &b = space->sector(n);
    ProbeSpec boson = probe;
    boson.centre = {0.0, 0.0, 0.0};
    for (std::size_t idx = 0; idx < b.size(); ++idx) {
      b.decode(idx, src.data(), K.data());
      double f = 1.0;
      for (int i = 0; i < M && f != 0.0; ++i)
        f *= probe(momentum_of(grid, grid.source_coord(src[i])), d);
      for (int j = 0; j < n && f != 0.0; ++j)
        f *= boson(momentum_of(grid, grid.node_coord(K[j])), d);
      v.sector(n)[Eigen::Index(idx)] = f;
    }
  }
  const double nv = norm(v);
  if (nv == 0.0)
    throw ConfigError("probe '" + probe.id + "' vanishes on this grid");
  v *= 1.0 / nv;
  return v;
}

namespace {

FockVector solve_cell(const OperatorHandle &op, std::complex<double> z, const FockVector &psi,
                      const SolverOptions &solver, SolveStats &st, const std::string &cell) {
  try {
    return resolvent_solve(op, z, psi, solver, &st);
  } catch (const NoConvergence &e) {
    throw NoConvergence(std::string(e.what()) + " [cell " + cell + "]", e.iterations(), e.best_residual());
  }
}

} // namespace

RenormFlowReport renorm_flow(const ModelSpec &model, FockSpacePtr space, const std::vector<double> &lambdas,
                             const std::vector<ProbeSpec> &probes, const SolverOptions &solver) {
  if (!model.renormalisable())
    throw ConfigError("renorm_flow needs a renormalisable model");
  if (lambdas.empty())
    throw ConfigError("renorm_flow needs at least one cutoff");
  if (probes.empty())
    throw ConfigError("renorm_flow needs at least one probe");
  const MomentumGrid &grid = space->grid();
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    if (!(lambdas[l] > 0.0) || lambdas[l] > grid.k_max())
      throw ConfigError("cutoffs must lie in (0, k_max]");
    if (l > 0 && !(lambdas[l] > lambdas[l - 1]))
      throw ConfigError("cutoffs must be strictly increasing");
  }
  RenormFlowReport r;
  r.model = model.name();
  r.spec = model;
  r.grid = grid.spec();
  r.n_max = space->n_max();
  r.lambdas = lambdas;
  r.tol = solver.tol;
  const std::complex<double> z(0.0, 1.0);

  const OperatorHandle H = H_operator(model, space, DiagonalMode::GridConsistent);
  std::vector<FockVector> states, reference;
  for (const auto &p : probes) {
    r.probe_ids.push_back(p.id);
    states.push_back(make_probe(space, p, true));
    SolveStats st;
    reference.push_back(solve_cell(H, z, states.back(), solver, st, "reference, probe " + p.id));
    r.reference_residuals.push_back(st.relative_residual);
  }
  for (double lam : lambdas) {
    const Cutoff cut{lam};
    const double E = grid_self_energy(model, grid, cut);
    r.E_grid.push_back(E);
    r.E_continuum.push_back(self_energy(model, lam));
    const OperatorHandle HL = shifted(H_Lambda_operator(model, space, cut), E);
    std::vector<double> errs, res;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      SolveStats st;
      FockVector x =
          solve_cell(HL, z, states[p], solver, st, "Lambda=" + std::to_string(lam) + ", probe " + probes[p].id);
      x -= reference[p];
      errs.push_back(norm(x));
      res.push_back(st.relative_residual);
    }
    r.errors.push_back(errs);
    r.solver_residuals.push_back(res);
  }
  return r;
}

bool flow_monotone(const RenormFlowReport &r, double slack) {
  for (std::size_t p = 0; p < r.probe_ids.size(); ++p)
    for (std::size_t l = 1; l < r.errors.size(); ++l)
      if (!(r.errors[l][p] < r.errors[l - 1][p] * (1.0 + slack)))
        return false;
  return true;
}

std::string to_string(Verdict v) {
  switch (v) {
  case Verdict::Cauchy: return "Cauchy";
  case Verdict::Diverging: return "Diverging";
  case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::vector<LadderStep> fixed_spacing_ladder(const std::vector<double> &k_maxes, double h) {
  std::vector<LadderStep> out;
  for (double k : k_maxes) {
    const double pts = 2.0 * k / h;
    const int P = int(std::lround(pts));
    if (std::abs(pts - P) > 1e-9 || P < 2 || P % 2 != 0)
      throw ConfigError("ladder k_max must be a multiple of the spacing giving an even point count");
    out.push_back({k, P});
  }
  return out;
}

Verdict classify_increments(const std::vector<double> &inc, double tol, double growth) {
  if (inc.empty())
    return Verdict::Inconclusive;
  const std::size_t n = inc.size();
  if (n >= 3 && inc[n - 1] > growth && inc[n - 2] > growth && inc[n - 3] > growth)
    return Verdict::Diverging;
  bool shrinking = true;
  for (std::size_t j = 1; j < n; ++j)
    shrinking = shrinking && inc[j] < inc[j - 1];
  if (inc[n - 1] < tol && shrinking)
    return Verdict::Cauchy;
  return Verdict::Inconclusive;
}

namespace {

double streamed_single_source(const ModelSpec &model, const MomentumGrid &grid, const ProbeSpec &probe,
                              double eta) {
  const auto tab = grid.tables(model);
  const int d = grid.dim();
  std::vector<std::size_t> support;
  std::vector<double> fq;
  for (std::size_t q = 0; q < grid.node_count(); ++q) {
    const double f = probe(momentum_of(grid, grid.node_coord(q)), d);
    if (f != 0.0) {
      support.push_back(q);
      fq.push_back(f);
    }
  }
  std::vector<double> partial(support.size(), 0.0);
  const double power = 2.0 * eta - 2.0;
  parallel_for(
      support.size(),
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
          double acc = 0.0;
          for (std::size_t k = 0; k < grid.node_count(); ++k) {
            const std::ptrdiff_t p = grid.shift(support[s], k, -1);
            if (p < 0)
              continue;
            const double L = grid.source_norm2(std::size_t(p)) + tab.omega[k];
            acc += tab.vhat[k] * tab.vhat[k] * std::pow(L, power);
          }
          partial[s] = fq[s] * fq[s] * acc;
        }
      },
      1);
  double sum = 0.0;
  for (double x : partial)
    sum += x;
  const double g = model.g(), h2d = grid.cell_volume() * grid.cell_volume();
  return std::sqrt(g * g * h2d * sum);
}

// General M: accumulate the one-boson coefficients of Gψ in a map keyed by the output state.
double streamed_multi_source(const ModelSpec &model, const MomentumGrid &grid, const ProbeSpec &probe, double eta) {
  const auto tab = grid.tables(model);
  const int d = grid.dim(), M = model.M();
  std::vector<std::size_t> support;
  for (std::size_t s = 0; s < grid.source_count(); ++s)
    if (probe(momentum_of(grid, grid.source_coord(s)), d) != 0.0)
      support.push_back(s);
  std::map<std::vector<std::size_t>, double> acc;
  std::vector<std::size_t> q(M, 0), key(M + 1);
  const std::size_t S = support.size();
  std::size_t total = 1;
  for (int i = 0; i < M; ++i)
    total *= S;
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rest = t;
    int odd = 0;
    double f = 1.0;
    for (int i = M - 1; i >= 0; --i) {
      q[i] = support[rest % S];
      rest /= S;
      odd += grid.source_class(q[i]);
      f *= probe(momentum_of(grid, grid.source_coord(q[i])), d);
    }
    if (odd % 2 != 0)
      continue;
    for (int i = 0; i < M; ++i)
      for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const std::ptrdiff_t p = grid.shift(q[i], k, -1);
        if (p < 0)
          continue;
        std::copy(q.begin(), q.end(), key.begin());
        key[i] = std::size_t(p);
        key[M] = k;
        acc[key] += tab.vhat[k] * f;
      }
  }
  double sum = 0.0;
  for (const auto &[k, v] : acc) {
    double L = tab.omega[k[M]];
    for (int i = 0; i < M; ++i)
      L += grid.source_norm2(k[i]);
    sum += v * v * std::pow(L, 2.0 * eta - 2.0);
  }
  const double w = std::pow(grid.cell_volume(), M) * std::ldexp(1.0, 1 - M) * grid.cell_volume();
  return std::abs(model.g()) * std::sqrt(w * sum);
}

} // namespace

double streamed_G_norm(const ModelSpec &model, const GridSpec &spec, const ProbeSpec &probe, double eta) {
  if (model.d() != spec.d)
    throw ConfigError("model dimension does not match the grid dimension");
  const MomentumGrid grid(spec);
  if (model.M() == 1)
    return streamed_single_source(model, grid, probe, eta);
  return streamed_multi_source(model, grid, probe, eta);
}

RegularityReport regularity_scan(const ModelSpec &model, const std::vector<LadderStep> &ladder,
                                 const std::vector<double> &etas, const ProbeSpec &probe, double tol) {
  if (ladder.size() < 2)
    throw ConfigError("regularity_scan needs at least two ladder steps");
  if (etas.empty())
    throw ConfigError("regularity_scan needs at least one eta");
  if (!(tol > 0.0))
    throw ConfigError("regularity tolerance must be positive");
  for (std::size_t c = 1; c < ladder.size(); ++c)
    if (!(ladder[c].k_max > ladder[c - 1].k_max))
      throw ConfigError("ladder k_max values must increase");
  RegularityReport r;
  r.model = model.name();
  r.spec = model;
  r.d = model.d();
  r.eta_threshold = regularity_threshold(model);
  r.etas = etas;
  r.ladder = ladder;
  r.tol = tol;
  r.probe_id = probe.id;
  for (double eta : etas) {
    std::vector<double> row, inc;
    for (const auto &step : ladder)
      row.push_back(streamed_G_norm(model, {model.d(), step.points, step.k_max}, probe, eta));
    for (std::size_t c = 1; c < row.size(); ++c)
      inc.push_back(row[c - 1] > 0.0 ? row[c] / row[c - 1] - 1.0 : 0.0);
    r.norms.push_back(row);
    r.increments.push_back(inc);
    r.verdicts.push_back(classify_increments(inc, tol));
  }
  return r;
}

NumberBoundResult number_bound_check(const ModelSpec &model, FockSpacePtr space, int samples, std::uint64_t seed) {
  if (samples < 1)
    throw ConfigError("number_bound_check needs at least one sample");
  const OperatorHandle G = G_operator(model, space);
  const OperatorHandle N = number_multiplier(space, 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> amp(0.0, 1.0);
  NumberBoundResult r;
  r.samples = samples;
  for (int s = 0; s < samples; ++s) {
    FockVector psi(space);
    for (int n = 0; n <= space->n_max(); ++n) {
      for (Eigen::Index i = 0; i < psi.sector(n).size(); ++i)
        psi.sector(n)[i] = normal(rng);
      const double sn = sector_norm(psi, n);
      if (sn > 0.0)
        psi.sector(n) *= amp(rng) / sn;
    }
    FockVector x = psi;
    x -= G(psi);
    const double denom = norm(N(x)) + norm(psi);
    if (denom > 0.0)
      r.sup_ratio = std::max(r.sup_ratio, norm(N(psi)) / denom);
  }
  return r;
}

PowerFit fit_power_law(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("fit_power_law needs at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw ConfigError("fit_power_law needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, std::exp((sy - slope * sx) / n)};
}

std::vector<double> sector_norms(const OperatorHandle &op, const std::vector<int> &ns) {
  std::vector<double> out;
  for (int n : ns)
    out.push_back(sector_norm_estimate(op, n));
  return out;
}

} // namespace ibc
