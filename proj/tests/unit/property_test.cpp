// Randomized invariants over small configurations. Seeds are fixed.
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "ibc/dense.hpp"
#include "ibc/error.hpp"
#include "ibc/ops.hpp"

using namespace ibc;
using test::random_vector;
using test::rel_diff;

namespace {

struct Config {
  ModelSpec model;
  GridSpec grid;
  int n_max;
};

std::vector<Config> configs() {
  return {
      {ModelSpec::delta2d(1, 0.8), {2, 4, 2.0}, 2},
      {ModelSpec::delta2d(2, 1.1), {2, 4, 2.0}, 1},
      {ModelSpec::nelson(1, 0.6), {3, 2, 2.0}, 3},
      {ModelSpec::froehlich(1, 1.2), {3, 2, 1.0}, 3},
      {ModelSpec(1, 1, 0.7, FormFactor::power_law(0.2), Dispersion::relativistic()), {1, 8, 4.0}, 3},
      {ModelSpec(1, 2, 0.5, FormFactor::power_law(0.0), Dispersion::power_lower(2.0)), {1, 6, 3.0}, 2},
  };
}

// ⟨a, b⟩ summed over ordered boson tuples, each counted once, with h^(dn) and the source weight.
std::complex<double> brute_inner(const FockVector &a, const FockVector &b) {
  const auto &sp = a.space();
  const auto &g = sp.grid();
  std::complex<double> total = 0.0;
  for (int n = 0; n <= sp.n_max(); ++n) {
    const auto &basis = sp.sector(n);
    const double hd = std::pow(g.cell_volume(), n) * sp.source_weight();
    for (std::size_t i = 0; i < basis.size(); ++i) {
      SectorIndex s = basis.index(i);
      std::vector<std::size_t> perm = s.bosons;
      std::sort(perm.begin(), perm.end());
      do {
        SectorIndex t{s.sources, perm, 1};
        t.canonicalize();
        auto j = basis.find(t).value();
        total += std::conj(a.sector(n)[j]) * b.sector(n)[j] * hd;
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
  return total;
}

} // namespace

TEST_CASE("inner product equals the sum over ordered boson tuples") {
  std::mt19937_64 rng(41);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), std::min(c.n_max, 2));
    auto x = random_vector(sp, rng), y = random_vector(sp, rng);
    const auto fast = inner(x, y), slow = brute_inner(x, y);
    CHECK(std::abs(fast - slow) <= 1e-12 * std::abs(slow));
  }
}

TEST_CASE("orthonormal coordinates preserve the inner product") {
  std::mt19937_64 rng(42);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), c.n_max);
    auto x = random_vector(sp, rng), y = random_vector(sp, rng);
    const auto ox = to_orthonormal(x), oy = to_orthonormal(y);
    CHECK(std::abs(ox.dot(oy) - inner(x, y)) <= 1e-12 * std::abs(inner(x, y)));
    CHECK(rel_diff(from_orthonormal(sp, ox), x) < 1e-15);
  }
}

TEST_CASE("index round trip over random states") {
  std::mt19937_64 rng(43);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), c.n_max);
    for (int n = 0; n <= c.n_max; ++n) {
      const auto &b = sp->sector(n);
      std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
      for (int t = 0; t < 50; ++t) {
        const std::size_t i = pick(rng);
        CHECK(b.find(b.index(i)).value() == i);
      }
    }
  }
}

TEST_CASE("adjoint pairs and symmetry across configurations") {
  std::mt19937_64 rng(44);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), c.n_max);
    const auto &m = c.model;
    auto x = random_vector(sp, rng), y = random_vector(sp, rng);
    auto check_pair = [&](const OperatorHandle &op, const OperatorHandle &adj) {
      const auto lhs = inner(op(x), y), rhs = inner(x, adj(y));
      CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(lhs)));
    };
    check_pair(annihilation(m, sp), creation(m, sp));
    check_pair(annihilation(m, sp, Cutoff{1.0}), creation(m, sp, Cutoff{1.0}));
    check_pair(G_operator(m, sp), G_adjoint_operator(m, sp));
    auto H = H_operator(m, sp);
    check_pair(H, H);
    auto Tod = Tod_operator(m, sp);
    check_pair(Tod, Tod);
    if (m.renormalisable()) {
      auto Hc = H_operator(m, sp, DiagonalMode::Continuum);
      check_pair(Hc, Hc);
    }
  }
}

TEST_CASE("operators are linear") {
  std::mt19937_64 rng(45);
  const std::complex<double> alpha(0.3, -1.7), beta(-2.0, 0.4);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), c.n_max);
    auto x = random_vector(sp, rng), y = random_vector(sp, rng);
    FockVector combo = alpha * x + beta * y;
    for (const auto &op : {H_operator(c.model, sp), G_operator(c.model, sp), creation(c.model, sp)}) {
      FockVector lhs = op(combo);
      FockVector rhs = alpha * op(x) + beta * op(y);
      CHECK(rel_diff(lhs, rhs) < 1e-13);
    }
  }
}

TEST_CASE("headline identity holds across configurations and cutoffs") {
  std::mt19937_64 rng(46);
  for (const auto &c : configs()) {
    auto sp = FockSpace::create(c.grid, c.model.M(), c.n_max);
    for (double lam : {0.6, 1.0, 1.6, double(INFINITY)}) {
      const Cutoff cut{lam};
      auto x = random_vector(sp, rng);
      auto lhs = H_operator(c.model, sp, DiagonalMode::GridConsistent, cut)(x);
      auto rhs = H_Lambda_operator(c.model, sp, cut)(x);
      if (c.model.renormalisable())
        rhs.axpy(grid_self_energy(c.model, sp->grid(), cut), x);
      CHECK(rel_diff(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("form perturbation branch is exactly D < 0") {
  for (int d = 1; d <= 3; ++d)
    for (double alpha = 0.0; alpha < 0.5 * d; alpha += 0.05)
      for (double beta : {0.5, 1.0, 2.0}) {
        auto c = validate(d, alpha, beta);
        if (c.kind == CaseKind::FormPerturbation)
          CHECK(uv_exponent(d, alpha) < 0.0);
        if (c.kind == CaseKind::Renormalisable)
          CHECK(uv_exponent(d, alpha) >= 0.0);
      }
}

TEST_CASE("regularity parameters satisfy their invariants") {
  for (double beta : {0.5, 1.0, 1.5, 2.0}) {
    const double dmax = 2 * beta * beta / (beta * beta + 8);
    for (int i = 0; i < 8; ++i) {
      const double D = dmax * i / 8.0 * 0.95;
      auto p = select_regularity_params(beta, D, default_eps(beta, D));
      const double us = u_transform(p.s, beta, D);
      CHECK(us < 1.0);
      CHECK(u_transform(us, beta, D) > 0.0);
      CHECK(p.delta1 < 1.0);
      CHECK(p.delta2 < 1.0);
      CHECK(p.delta1 >= 0.0);
      CHECK(p.eta_threshold == doctest::Approx((2 - D) / 4));
    }
  }
}

TEST_CASE("u transform is affine") {
  for (double beta : {0.5, 1.0, 2.0})
    for (double D : {0.0, 0.1}) {
      const double a = u_transform(0.0, beta, D), b = u_transform(1.0, beta, D);
      for (double s : {-0.5, 0.3, 2.0})
        CHECK(u_transform(s, beta, D) == doctest::Approx(a + s * (b - a)));
    }
}

TEST_CASE("self energy is nondecreasing in the cutoff") {
  for (const auto &m : {ModelSpec::nelson(), ModelSpec::delta2d(), ModelSpec::froehlich()}) {
    double prev = 0.0;
    for (double L : {0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
      const double e = self_energy(m, L);
      CHECK(e >= prev);
      prev = e;
    }
  }
}
