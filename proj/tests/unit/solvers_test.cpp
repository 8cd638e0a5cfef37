#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "helpers.hpp"
#include "ibc/dense.hpp"
#include "ibc/error.hpp"
#include "ibc/solvers.hpp"

using namespace ibc;
using test::random_vector;
using test::rel_diff;

TEST_CASE("resolvent of a diagonal operator") {
  std::mt19937_64 rng(21);
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 1);
  auto psi = random_vector(sp, rng);
  const std::complex<double> z(0.5, 2.0);
  auto e = free_energies(m, *sp, 0), e1 = free_energies(m, *sp, 1);
  FockVector exact = psi;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    exact.sector(0)[i] /= e[i] + z;
  for (Eigen::Index i = 0; i < e1.size(); ++i)
    exact.sector(1)[i] /= e1[i] + z;
  SolveStats st;
  auto x = resolvent_solve(free_multiplier(m, sp, 1.0), z, psi, {}, &st);
  CHECK(st.relative_residual <= 1e-10);
  CHECK(rel_diff(x, exact) < 1e-9);
}

TEST_CASE("MINRES on H meets its residual contract") {
  std::mt19937_64 rng(22);
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  auto H = H_operator(m, sp);
  auto psi = random_vector(sp, rng);
  SolveStats st;
  auto x = resolvent_solve(H, {0.0, 1.0}, psi, {}, &st);
  auto r = H(x);
  r.axpy({0.0, 1.0}, x);
  r -= psi;
  CHECK(norm(r) <= 2e-10 * norm(psi));
  SolverOptions few;
  few.max_iterations = 3;
  few.restart = 3;
  CHECK_THROWS_AS(resolvent_solve(H, {0.0, 1.0}, psi, few), NoConvergence);
  CHECK_THROWS_AS(resolvent_solve(H, 1.0, psi), ConfigError);
  CHECK_THROWS_AS(resolvent_solve(G_operator(m, sp), {0.0, 1.0}, psi), ConfigError);
}

TEST_CASE("Lanczos agrees with dense diagonalization") {
  const auto m = ModelSpec::delta2d(1, 1.0);
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 2);
  auto H = H_operator(m, sp);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble_dense(H));
  auto low = lanczos_eigenvalues(H, 3, Extremal::Smallest);
  auto high = lanczos_eigenvalues(H, 1, Extremal::Largest);
  // Single-vector Lanczos resolves each level once; the ground level here is 4-fold degenerate.
  CHECK(low[0] == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-8));
  for (double v : low) {
    const auto gap = (es.eigenvalues().array() - v).abs().minCoeff();
    CHECK(gap <= 1e-8 * std::abs(v));
  }
  CHECK(high[0] == doctest::Approx(es.eigenvalues()[es.eigenvalues().size() - 1]).epsilon(1e-8));
  GroundEnergyOptions lanczos_only;
  lanczos_only.dense_cap = 0;
  auto a = lowest_eigenvalues(H, 2), b = lowest_eigenvalues(H, 2, lanczos_only);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-8));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-8));
}

TEST_CASE("sector norm estimate matches the dense singular value") {
  const auto m = ModelSpec::froehlich(1, 1.0);
  auto sp = FockSpace::create({3, 2, 1.0}, 1, 3);
  auto G = G_operator(m, sp);
  auto D = assemble_dense(G);
  for (int n = 0; n < 3; ++n) {
    const auto off = Eigen::Index(sp->offset(n)), len = Eigen::Index(sp->sector(n).size());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D.middleCols(off, len));
    CHECK(sector_norm_estimate(G, n) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-8));
  }
  CHECK(sector_norm_estimate(G, 0) == doctest::Approx(1.1547).epsilon(1e-4));
}

TEST_CASE("dense assembly helpers") {
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, 4, 2.0}, 1, 1);
  auto D = assemble_dense(free_multiplier(m, sp, 1.0));
  CHECK(D.rows() == Eigen::Index(sp->dimension()));
  CHECK(hermiticity_defect(D) == 0.0);
  CHECK((D.diagonal() - Eigen::VectorXd(to_orthonormal(free_multiplier(m, sp, 1.0)(from_orthonormal(
                            sp, Eigen::VectorXcd::Ones(D.rows()))))
                            .real()))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  CHECK_THROWS_AS(assemble_dense(free_multiplier(m, sp, 1.0), 0, -1, 10), DimensionCap);
  auto part = assemble_dense(creation(m, sp), 0, 0);
  CHECK(part.rows() == Eigen::Index(sp->sector(0).size()));
}
