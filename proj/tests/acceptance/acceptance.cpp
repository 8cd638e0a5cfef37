// One line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/helpers.hpp"
#include "ibc/analysis.hpp"
#include "ibc/dense.hpp"
#include "ibc/error.hpp"
#include "ibc/quad.hpp"

using namespace ibc;
using std::numbers::pi;

namespace {

// Tolerances and budgets.
constexpr double kAdjointTol = 1e-12;
constexpr double kGIdentityTol = 1e-12;
constexpr double kHeadlineTol = 1e-10;
constexpr double kHermiticityTol = 1e-10;
constexpr double kFormIdentityTol = 1e-11;
constexpr double kLogSlopeTol = 0.02;
constexpr double kDivergenceRatio = 1.8;
constexpr double kFlowSlack = 0.01;
constexpr double kFlowSolverTol = 1e-10;
constexpr double kBoundPiCubedTol = 0.03;
constexpr double kBoundTailGrowth3d = 0.01; // relative growth over the last grid step
constexpr double kBoundTailGrowth2d = 0.05;
constexpr double kBound2dCap = 4 * pi;       // large-|p| limit of the θ=2 ratio
constexpr double kGExponentMax = -1.0 / 4 + 0.15;
constexpr double kALExponentMax = (2.0 - 1.0) / 4 + 0.15;
constexpr double kNeumannTol = 1e-13;
constexpr double kNumberBoundGrowth = 1.5;

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      note << "FAILED " << what << "; ";
    }
  }
};

double max_abs(const Eigen::MatrixXd &A) { return A.cwiseAbs().maxCoeff(); }

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

void exactness(Outcome &o) {
  const auto m = ModelSpec::delta2d(1, 1.0);
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  auto a = assemble_dense(annihilation(m, sp));
  auto as = assemble_dense(creation(m, sp));
  const double adj = max_abs(a.transpose() - as);
  auto G = assemble_dense(G_operator(m, sp));
  const double gid = max_abs(G + m.g() * assemble_dense(free_multiplier(m, sp, -1.0)) * as);
  auto H = assemble_dense(H_operator(m, sp, DiagonalMode::GridConsistent));
  auto HL = assemble_dense(H_Lambda_operator(m, sp));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(H.rows(), H.cols());
  const double head = max_abs(H - HL - grid_self_energy(m, sp->grid()) * I);
  const double herm = std::max(hermiticity_defect(H), hermiticity_defect(assemble_dense(Tod_operator(m, sp))));

  const auto f = ModelSpec::froehlich(1, 1.0);
  auto fs = FockSpace::create({3, 2, 1.0}, 1, 3);
  auto T = assemble_dense(T_operator(f, fs));
  auto Gf = assemble_dense(G_operator(f, fs));
  const double tglg = max_abs(T + Gf.transpose() * assemble_dense(free_multiplier(f, fs, 1.0)) * Gf);

  o.require(adj <= kAdjointTol, "adjointness");
  o.require(gid <= kGIdentityTol, "G identity");
  o.require(head <= kHeadlineTol, "headline identity");
  o.require(herm <= kHermiticityTol, "hermiticity");
  o.require(tglg <= kFormIdentityTol, "T = -G*LG");
  o.note << "dim " << sp->dimension() << ", adjoint " << sci(adj) << ", G " << sci(gid) << ", headline "
         << sci(head) << ", hermiticity " << sci(herm) << ", T+G*LG " << sci(tglg) << " (dim "
         << fs->dimension() << ")";
}

void counterterm(Outcome &o) {
  struct Case {
    ModelSpec m;
    double slope;
  };
  for (const auto &[m, slope] : {Case{ModelSpec::nelson(1, 1.0), 4 * pi * std::log(2.0)},
                                 Case{ModelSpec::delta2d(1, 1.0), pi * std::log(2.0)}}) {
    const double inc = self_energy(m, 400.0, 1e-10) - self_energy(m, 200.0, 1e-10);
    const double rel = std::abs(inc - slope) / slope;
    const double ratio = self_energy(m, 1e4, 1e-10) / self_energy(m, 1e2, 1e-10);
    o.require(rel <= kLogSlopeTol, m.name() + " slope");
    o.require(ratio >= kDivergenceRatio, m.name() + " divergence");
    o.note << m.name() << ": slope error " << sci(rel) << ", E(1e4)/E(1e2) " << sci(ratio) << "; ";
  }
}

void flow(Outcome &o) {
  auto sp = FockSpace::create({2, 8, 4.0}, 1, 2);
  SolverOptions so;
  so.tol = kFlowSolverTol;
  auto r = renorm_flow(ModelSpec::delta2d(1, 1.0), sp, {1.0, 2.0, 3.0, 4.0}, probe_family(3, 42), so);
  const double last = *std::max_element(r.errors.back().begin(), r.errors.back().end());
  o.require(flow_monotone(r, kFlowSlack), "monotone decrease");
  o.require(last <= 10 * kFlowSolverTol, "final error");
  o.note << "dim " << sp->dimension() << ", errors";
  for (const auto &row : r.errors)
    o.note << " " << sci(*std::max_element(row.begin(), row.end()));
  o.note << " (max over 3 probes)";
}

void regularity(Outcome &o) {
  struct Case {
    ModelSpec m;
    double cauchy, diverging;
  };
  const auto ladder = fixed_spacing_ladder({4, 8, 16, 32});
  const auto probe = probe_family(1, 42).front();
  for (const auto &[m, lo, hi] : {Case{ModelSpec::nelson(), 0.3, 0.7}, Case{ModelSpec::froehlich(), 0.5, 0.9},
                                  Case{ModelSpec::delta2d(), 0.3, 0.7}}) {
    auto r = regularity_scan(m, ladder, {lo, hi}, probe);
    o.require(r.verdicts[0] == Verdict::Cauchy, m.name() + " eta=" + sci(lo) + " Cauchy");
    o.require(r.verdicts[1] == Verdict::Diverging, m.name() + " eta=" + sci(hi) + " Diverging");
    o.note << m.name() << " " << sci(lo) << ":" << to_string(r.verdicts[0]) << " " << sci(hi) << ":"
           << to_string(r.verdicts[1]) << "; ";
  }
}

void bounds(Outcome &o) {
  const auto ps3 = log_grid(0.1, 1000.0, 13);
  for (double th : {1.5, 2.0, 2.5}) {
    std::vector<double> r;
    for (double p : ps3)
      r.push_back(verify_bound_3d(p, th));
    const double sup = *std::max_element(r.begin(), r.end());
    const double tail = r.back() / r[r.size() - 2] - 1.0;
    o.require(std::isfinite(sup) && tail <= kBoundTailGrowth3d, "3d theta=" + sci(th) + " bounded");
    o.note << "3d theta=" << sci(th) << " sup " << sci(sup) << "; ";
  }
  const double r1000 = verify_bound_3d(1000.0, 2.0);
  const double dev = std::abs(r1000 - pi * pi * pi) / (pi * pi * pi);
  o.require(dev <= kBoundPiCubedTol, "theta=2 ratio near pi^3");
  o.note << "ratio(1000) vs pi^3 " << sci(dev) << "; ";
  const auto ps2 = log_grid(1.0, 256.0, 9);
  for (int th : {1, 2}) {
    std::vector<double> r;
    for (double p : ps2)
      r.push_back(verify_bound_2d(p, th));
    const double sup = *std::max_element(r.begin(), r.end());
    const double tail = r.back() / r[r.size() - 2] - 1.0;
    o.require(sup <= kBound2dCap && tail <= kBoundTailGrowth2d, "2d theta=" + std::to_string(th) + " bounded");
    o.note << "2d theta=" << th << " sup " << sci(sup) << "; ";
  }
}

void scaling(Outcome &o) {
  const auto m = ModelSpec::froehlich(1, 1.0);
  const std::vector<int> ns{1, 2, 3, 4};
  const std::vector<double> x{1, 2, 3, 4};
  for (double kmax : {1.0, 2.0}) {
    auto sp = FockSpace::create({3, 2, kmax}, 1, 5);
    auto G = G_operator(m, sp);
    auto aL = compose(annihilation(m, sp), free_multiplier(m, sp, -0.5));
    const double eg = fit_power_law(x, sector_norms(G, ns)).exponent;
    const double ea = fit_power_law(x, sector_norms(aL, ns)).exponent;
    o.require(eg <= kGExponentMax, "G exponent");
    o.require(ea <= kALExponentMax, "a L^-1/2 exponent");
    o.note << "k_max=" << kmax << ": G " << sci(eg) << ", aL^-1/2 " << sci(ea) << "; ";
  }
}

void invertibility(Outcome &o) {
  struct Case {
    ModelSpec m;
    GridSpec coarse, fine;
  };
  for (const auto &[m, coarse, fine] : {Case{ModelSpec::delta2d(), {2, 4, 2.0}, {2, 8, 2.0}},
                                        Case{ModelSpec::froehlich(), {3, 2, 1.0}, {3, 4, 1.0}}}) {
    double sup[2];
    int i = 0;
    for (const auto &g : {coarse, fine}) {
      auto sp = FockSpace::create(g, 1, 2);
      std::mt19937_64 rng(5);
      const auto psi = test::random_vector(sp, rng);
      auto r = neumann_inverse(G_operator(m, sp), psi);
      o.require(r.terms == 3 && r.residual <= kNeumannTol * norm(psi), m.name() + " Neumann residual");
      o.note << m.name() << " P=" << g.points << " residual " << sci(r.residual / norm(psi));
      sup[i] = number_bound_check(m, sp, 20, 3).sup_ratio;
      o.note << ", sup " << sci(sup[i]) << "; ";
      ++i;
    }
    o.require(std::isfinite(sup[1]) && sup[1] <= kNumberBoundGrowth * sup[0], m.name() + " number bound");
  }
}

void parameters(Outcome &o) {
  auto is = [](ConditionCase c, CaseKind k) { return c.kind == k; };
  o.require(ModelSpec::froehlich().condition() == CaseKind::FormPerturbation,
            "Froehlich case 1");
  o.require(uv_exponent(3, 1.0) == -1.0 && regularity_threshold(-1.0) == 0.75, "Froehlich D and threshold");
  o.require(is(validate(3, 0.5, 1.0), CaseKind::Renormalisable) && uv_exponent(3, 0.5) == 0.0 &&
                regularity_threshold(0.0) == 0.5,
            "Nelson case 2");
  const double b718 = 7.0 / 18.0;
  o.require(is(validate(3, b718 + 1e-9, 1.0), CaseKind::Renormalisable) &&
                is(validate(3, b718 - 1e-9, 1.0), CaseKind::Invalid) && is(validate(3, 0.3, 1.0), CaseKind::Invalid),
            "Nelson boundary 7/18");
  o.require(is(validate(2, 0.0, 2.0), CaseKind::Renormalisable) && uv_exponent(2, 0.0) == 0.0,
            "d=2 contact case 2");
  o.require(is(validate(3, 1.0 / 6.0 + 1e-9, 2.0), CaseKind::Renormalisable) &&
                is(validate(3, 1.0 / 6.0 - 1e-9, 2.0), CaseKind::Invalid),
            "d=3 beta=2 boundary 1/6");
  bool d1 = true;
  for (double a = 0.0; a < 0.5; a += 0.01)
    for (double b : {0.0, 0.5, 1.0, 2.0})
      d1 = d1 && is(validate(1, a, b), CaseKind::FormPerturbation);
  o.require(d1, "d=1 always case 1");
  o.note << "Froehlich D=-1 eta*=0.75, Nelson D=0 eta*=0.5, boundaries 7/18 and 1/6, d=1 all case 1";
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *title;
    double budget_s;
    std::function<void(Outcome &)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "exactness suite", 60, exactness},   {2, "counterterm asymptotics", 30, counterterm},
      {3, "renormalization flow", 300, flow},  {4, "regularity dichotomy", 300, regularity},
      {5, "integral bounds", 60, bounds},      {6, "scaling exponents", 180, scaling},
      {7, "invertibility and number bound", 60, invertibility},
      {8, "parameter logic table", 10, parameters},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.note << "exception: " << e.what();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > c.budget_s) {
      o.pass = false;
      o.note << " over budget";
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d %s: %s [%.1f s / %.0f s] %s\n", c.id, c.title, o.pass ? "PASS" : "FAIL", dt,
                c.budget_s, o.note.str().c_str());
    std::fflush(stdout);
  }
  return failures;
}
