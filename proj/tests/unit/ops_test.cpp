#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ibc/error.hpp"
#include "ibc/ops.hpp"

using namespace ibc;
using test::random_vector;
using test::rel_diff;

namespace {

double kinetic(const MomentumGrid &g, const Coord &c) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a)
    s += g.momentum(c[a]) * g.momentum(c[a]);
  return s;
}

} // namespace

TEST_CASE("grid counterterm is the plain node sum") {
  const auto m = ModelSpec::delta2d(1, 1.0);
  MomentumGrid g({2, 4, 2.0});
  double sum = 0.0, inner_sum = 0.0;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const double k2 = kinetic(g, g.node_coord(k));
    sum += 1.0 / (2 * k2 + 1);
    if (g.node_sup(k) < 1.0)
      inner_sum += 1.0 / (2 * k2 + 1);
  }
  CHECK(grid_self_energy(m, g) == doctest::Approx(sum).epsilon(1e-14));
  CHECK(grid_self_energy(m, g) == doctest::Approx(56.0 / 15.0).epsilon(1e-14));
  CHECK(grid_self_energy(m, g, Cutoff{1.0}) == doctest::Approx(inner_sum).epsilon(1e-14));
  CHECK(grid_self_energy(m.with_sources(2).with_coupling(0.5), g) == doctest::Approx(0.5 * sum).epsilon(1e-14));
}

TEST_CASE("creation is the adjoint of annihilation") {
  std::mt19937_64 rng(11);
  for (auto [m, spec, M] : {std::tuple{ModelSpec::delta2d(1, 0.8), GridSpec{2, 4, 2.0}, 1},
                            std::tuple{ModelSpec::nelson(2, 1.3), GridSpec{3, 2, 2.0}, 2},
                            std::tuple{ModelSpec::froehlich(1, 1.0), GridSpec{3, 2, 1.0}, 1}}) {
    auto sp = FockSpace::create(spec, M, 2);
    for (const Cutoff &cut : {Cutoff::full(), Cutoff{1.0}}) {
      auto a = annihilation(m, sp, cut), as = creation(m, sp, cut);
      auto x = random_vector(sp, rng), y = random_vector(sp, rng);
      const auto lhs = inner(a(x), y), rhs = inner(x, as(y));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
    }
  }
}

TEST_CASE("G is minus g L^-1 a*, and its adjoint matches") {
  std::mt19937_64 rng(12);
  const auto m = ModelSpec::delta2d(1, 0.7);
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  auto x = random_vector(sp, rng), y = random_vector(sp, rng);
  auto Gx = G_operator(m, sp)(x);
  auto ref = free_multiplier(m, sp, -1.0)(creation(m, sp)(x));
  ref *= -m.g();
  CHECK(rel_diff(Gx, ref) < 1e-13);
  const auto lhs = inner(Gx, y), rhs = inner(x, G_adjoint_operator(m, sp)(y));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("connectivity of the ladder operators") {
  std::mt19937_64 rng(13);
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 3);
  for (int n = 0; n <= 3; ++n) {
    FockVector x(sp);
    x.sector(n) = random_vector(sp, rng).sector(n);
    auto ax = annihilation(m, sp)(x), cx = creation(m, sp)(x), tx = Tod_operator(m, sp)(x);
    for (int j = 0; j <= 3; ++j) {
      if (j != n - 1)
        CHECK(sector_norm(ax, j) == 0.0);
      if (j != n + 1)
        CHECK(sector_norm(cx, j) == 0.0);
      if (j != n)
        CHECK(sector_norm(tx, j) == 0.0);
    }
  }
  CHECK(annihilation(m, sp).connectivity == Connectivity::Lower);
  CHECK(G_operator(m, sp).connectivity == Connectivity::Raise);
  CHECK(Td_operator(m, sp, DiagonalMode::GridConsistent).connectivity == Connectivity::Diagonal);
}

TEST_CASE("headline identity H = H_Lambda + E on vectors") {
  std::mt19937_64 rng(14);
  for (auto [m, spec, M] : {std::tuple{ModelSpec::delta2d(1, 1.0), GridSpec{2, 4, 2.0}, 1},
                            std::tuple{ModelSpec::delta2d(2, 0.6), GridSpec{2, 4, 2.0}, 2},
                            std::tuple{ModelSpec::nelson(1, 0.5), GridSpec{3, 2, 2.0}, 1}}) {
    auto sp = FockSpace::create(spec, M, M == 1 ? 2 : 1);
    for (const Cutoff &cut : {Cutoff::full(), Cutoff{1.2}}) {
      auto x = random_vector(sp, rng);
      auto lhs = H_operator(m, sp, DiagonalMode::GridConsistent, cut)(x);
      auto rhs = H_Lambda_operator(m, sp, cut)(x);
      rhs.axpy(grid_self_energy(m, sp->grid(), cut), x);
      CHECK(rel_diff(lhs, rhs) < 1e-13);
    }
  }
}

TEST_CASE("form perturbation: T = -G*LG and H = H_Lambda") {
  std::mt19937_64 rng(15);
  const auto m = ModelSpec::froehlich(1, 0.9);
  auto sp = FockSpace::create({3, 2, 1.0}, 1, 3);
  auto x = random_vector(sp, rng);
  auto G = G_operator(m, sp);
  auto glg = G_adjoint_operator(m, sp)(free_multiplier(m, sp, 1.0)(G(x)));
  glg *= -1.0;
  CHECK(rel_diff(T_operator(m, sp)(x), glg) < 1e-12);
  CHECK(rel_diff(H_operator(m, sp)(x), H_Lambda_operator(m, sp)(x)) < 1e-12);
}

TEST_CASE("T vanishes on the top sector apart from the counterterm") {
  std::mt19937_64 rng(16);
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  FockVector x(sp);
  x.sector(2) = random_vector(sp, rng).sector(2);
  CHECK(norm(T_kernel_operator(m, sp)(x)) == 0.0);
  auto td = Td_operator(m, sp, DiagonalMode::GridConsistent)(x);
  td.axpy(-grid_self_energy(m, sp->grid()), x);
  CHECK(norm(td) < 1e-13 * norm(x));
}

TEST_CASE("continuum diagonal uses the regularized integral") {
  const auto m = ModelSpec::delta2d(1, 1.0);
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 1);
  auto cache = std::make_shared<TdCache>(m, 1e-9);
  FockVector x(sp);
  x.sector(0)[0] = 1.0;
  auto y = Td_operator(m, sp, DiagonalMode::Continuum, {}, cache)(x);
  const SectorIndex s = sp->sector(0).index(0);
  const double p = std::sqrt(kinetic(sp->grid(), sp->grid().source_coord(s.sources[0])));
  CHECK(y.sector(0)[0].real() == doctest::Approx(-cache->direct(p, 0.0)).epsilon(1e-9));
  CHECK(cache->size() >= 1);
  CHECK(cache->value(p, 0.0) == cache->direct(p, 0.0));
  TdCache buckets(m, 1e-9, 0.05);
  CHECK(buckets.value(1.01, 0.0) == doctest::Approx(buckets.direct(1.01, 0.0)).epsilon(1e-3));
}

TEST_CASE("H is symmetric in both diagonal modes") {
  std::mt19937_64 rng(17);
  const auto m = ModelSpec::delta2d(1, 1.0);
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  for (auto mode : {DiagonalMode::GridConsistent, DiagonalMode::Continuum}) {
    auto H = H_operator(m, sp, mode);
    CHECK(H.selfadjoint_claim);
    auto x = random_vector(sp, rng), y = random_vector(sp, rng);
    const auto lhs = inner(H(x), y), rhs = inner(x, H(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("Neumann series inverts 1 - G exactly") {
  std::mt19937_64 rng(18);
  const auto m = ModelSpec::nelson(1, 2.0);
  auto sp = FockSpace::create({3, 2, 2.0}, 1, 3);
  auto psi = random_vector(sp, rng);
  auto r = neumann_inverse(G_operator(m, sp), psi);
  CHECK(r.terms == 4);
  CHECK(r.residual <= 1e-13 * norm(psi));
}

TEST_CASE("L^-1 refuses a zero energy state") {
  const auto m = ModelSpec::froehlich(2, 1.0);
  auto sp = FockSpace::create({3, 2, 1.0}, 2, 1);
  const auto &g = sp->grid();
  const std::size_t origin = *g.source_id({0, 0, 0});
  SectorIndex s{{origin, origin}, {}, 1};
  auto Linv = free_multiplier(m, sp, -1.0);
  FockVector x(sp);
  x.sector(1).setOnes();
  CHECK_NOTHROW(Linv(x));
  x.set(s, 1.0);
  CHECK_THROWS_AS(Linv(x), SingularInverse);
  x.set(s, 0.0);
  CHECK_NOTHROW(Linv(x));
  CHECK(free_energies(m, *sp, 1).minCoeff() >= 1.0);
}

TEST_CASE("operator algebra helpers") {
  std::mt19937_64 rng(19);
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 1);
  auto x = random_vector(sp, rng);
  auto L = free_multiplier(m, sp, 1.0);
  auto twice = linear_combination(1.0, L, 1.0, L);
  auto ref = L(x);
  ref *= 2.0;
  CHECK(rel_diff(twice(x), ref) < 1e-15);
  auto s = shifted(L, 3.0)(x);
  auto r2 = L(x);
  r2.axpy(3.0, x);
  CHECK(rel_diff(s, r2) < 1e-15);
  auto n2 = number_multiplier(sp, 2.0)(x);
  CHECK(sector_norm(n2, 0) == 0.0);
  CHECK(sector_norm(n2, 1) == doctest::Approx(sector_norm(x, 1)));
  CHECK(rel_diff(compose(identity_operator(sp), L)(x), L(x)) == 0.0);
}
