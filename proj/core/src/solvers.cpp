#include "ibc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "ibc/dense.hpp"
#include "ibc/error.hpp"

namespace ibc {

FockVector resolvent_solve(const OperatorHandle &op, std::complex<double> z, const FockVector &psi,
                           const SolverOptions &opts, SolveStats *stats) {
  using cd = std::complex<double>;
  if (z.imag() == 0.0)
    throw ConfigError("resolvent_solve needs Im z != 0");
  if (!op.selfadjoint_claim)
    throw ConfigError("resolvent_solve needs a self-adjoint operator, got '" + op.name + "'");
  const double psi_norm = norm(psi);
  FockVector x = psi.zeros_like();
  if (psi_norm == 0.0) {
    if (stats)
      *stats = {0, 0.0};
    return x;
  }
  const double target = opts.tol * psi_norm;
  int iterations = 0;
  double best = std::numeric_limits<double>::infinity();
  FockVector best_x = x;

  while (true) {
    FockVector r = psi;
    r -= op(x);
    r.axpy(-z, x);
    const double beta1 = norm(r);
    if (beta1 < best) {
      best = beta1;
      best_x = x;
    }
    if (beta1 <= target)
      break;
    if (iterations >= opts.max_iterations)
      throw NoConvergence("MINRES did not reach the requested residual", std::size_t(iterations),
                          best / psi_norm);

    FockVector v_prev = psi.zeros_like();
    FockVector v = r;
    v *= 1.0 / beta1;
    FockVector d_prev = psi.zeros_like(), d_prev2 = psi.zeros_like();
    double beta = 0.0;
    double c_old = 1.0, c_old2 = 1.0;
    cd s_old = 0.0, s_old2 = 0.0;
    cd t = beta1;
    for (int k = 0; k < opts.restart && iterations < opts.max_iterations; ++k) {
      FockVector w = op(v);
      if (k > 0)
        w.axpy(-beta, v_prev);
      const double alpha = inner(v, w).real();
      w.axpy(-alpha, v);
      const double beta_next = norm(w);
      const cd alpha_z = alpha + z;

      const cd eps = s_old2 * beta;
      const cd delta_p = c_old2 * beta;
      const cd delta = c_old * delta_p + s_old * alpha_z;
      const cd gamma_bar = -std::conj(s_old) * delta_p + c_old * alpha_z;
      const double rr = std::hypot(std::abs(gamma_bar), beta_next);
      double c;
      cd s, gamma;
      if (std::abs(gamma_bar) == 0.0) {
        c = 0.0;
        s = 1.0;
        gamma = beta_next;
      } else {
        const cd phase = gamma_bar / std::abs(gamma_bar);
        c = std::abs(gamma_bar) / rr;
        s = phase * beta_next / rr;
        gamma = phase * rr;
      }
      const cd tau = c * t;
      t = -std::conj(s) * t;

      FockVector d = v;
      d.axpy(-delta, d_prev);
      d.axpy(-eps, d_prev2);
      d *= 1.0 / gamma;
      x.axpy(tau, d);

      d_prev2 = std::move(d_prev);
      d_prev = std::move(d);
      c_old2 = c_old;
      s_old2 = s_old;
      c_old = c;
      s_old = s;
      ++iterations;
      if (std::abs(t) <= 0.5 * target || beta_next == 0.0)
        break;
      v_prev = std::move(v);
      v = std::move(w);
      v *= 1.0 / beta_next;
      beta = beta_next;
    }
  }
  FockVector r = psi;
  r -= op(x);
  r.axpy(-z, x);
  if (stats)
    *stats = {iterations, norm(r) / psi_norm};
  return x;
}

namespace {

FockVector random_start(FockSpacePtr space, std::uint64_t seed, int only_sector = -1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FockVector v(space);
  for (int n = 0; n <= space->n_max(); ++n) {
    if (only_sector >= 0 && n != only_sector)
      continue;
    for (Eigen::Index i = 0; i < v.sector(n).size(); ++i)
      v.sector(n)[i] = normal(rng);
  }
  return v;
}

std::vector<double> lanczos_core(const LinearMap &A, FockVector v0, int k, Extremal which, const EigenOptions &opts,
                                 std::size_t dim) {
  if (k < 1)
    throw ConfigError("lanczos: k must be >= 1");
  if (std::size_t(k) > dim)
    throw ConfigError("lanczos: k exceeds the space dimension");
  const int m = int(std::min<std::size_t>(std::size_t(std::max(opts.krylov_dim, 2 * k + 1)), dim));
  double worst = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    const double n0 = norm(v0);
    if (n0 == 0.0)
      throw NoConvergence("lanczos: start vector vanished", std::size_t(restart), worst);
    v0 *= 1.0 / n0;
    std::vector<FockVector> V{v0};
    std::vector<double> alpha, beta;
    bool invariant = false;
    for (int j = 0; j < m; ++j) {
      FockVector w = A(V[j]);
      if (j > 0)
        w.axpy(-beta[j - 1], V[j - 1]);
      const double a = inner(V[j], w).real();
      alpha.push_back(a);
      w.axpy(-a, V[j]);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto &q : V)
          w.axpy(-inner(q, w), q);
      const double b = norm(w);
      beta.push_back(b);
      if (b <= 1e-13 * std::max(1.0, std::abs(a))) {
        invariant = true;
        break;
      }
      if (j + 1 < m) {
        w *= 1.0 / b;
        V.push_back(std::move(w));
      }
    }
    const int me = int(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(me, me);
    for (int j = 0; j < me; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < me)
        T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const int kk = std::min(k, me);
    std::vector<int> order(kk);
    for (int i = 0; i < kk; ++i)
      order[i] = which == Extremal::Smallest ? i : me - 1 - i;
    worst = 0.0;
    for (int i : order) {
      const double theta = es.eigenvalues()[i];
      const double res = invariant ? 0.0 : std::abs(beta[me - 1] * es.eigenvectors()(me - 1, i));
      worst = std::max(worst, res / std::max(1.0, std::abs(theta)));
    }
    const bool exhausted = std::size_t(me) == dim;
    if (kk == k && (worst <= opts.tol || invariant || exhausted)) {
      std::vector<double> out;
      for (int i : order)
        out.push_back(es.eigenvalues()[i]);
      return out;
    }
    // explicit restart from the sum of the wanted Ritz vectors
    FockVector next = v0.zeros_like();
    for (int i : order)
      for (int j = 0; j < me; ++j)
        next.axpy(es.eigenvectors()(j, i), V[j]);
    v0 = std::move(next);
  }
  throw NoConvergence("lanczos did not converge", std::size_t(opts.max_restarts), worst);
}

} // namespace

std::vector<double> lanczos_eigenvalues(const OperatorHandle &op, int k, Extremal which, const EigenOptions &opts) {
  if (!op.selfadjoint_claim)
    throw ConfigError("lanczos needs a self-adjoint operator, got '" + op.name + "'");
  return lanczos_core(op.apply, random_start(op.space, opts.seed), k, which, opts, op.space->dimension());
}

double sector_norm_estimate(const OperatorHandle &op, int n, int iters, double tol) {
  if (n < 0 || n > op.space->n_max())
    throw ConfigError("sector_norm_estimate: sector out of range");
  const std::size_t dim = op.space->sector(n).size();
  if (dim == 0)
    throw ConfigError("sector_norm_estimate: empty sector");
  auto project = [n](FockVector v) {
    for (int m = 0; m <= v.n_max(); ++m)
      if (m != n)
        v.sector(m).setZero();
    return v;
  };
  LinearMap B = [&op, project](const FockVector &v) { return project(op.apply_adjoint(op(project(v)))); };
  EigenOptions opts;
  opts.tol = tol;
  opts.krylov_dim = std::max(2, std::min(iters, 120));
  opts.max_restarts = std::max(1, iters / opts.krylov_dim + 1);
  const auto top = lanczos_core(B, random_start(op.space, 11, n), 1, Extremal::Largest, opts, dim);
  return std::sqrt(std::max(0.0, top[0]));
}

std::vector<double> lowest_eigenvalues(const OperatorHandle &op, int k, const GroundEnergyOptions &opts) {
  const std::size_t dim = op.space->dimension();
  if (k < 1 || std::size_t(k) > dim)
    throw ConfigError("lowest_eigenvalues: k out of range");
  if (dim <= opts.dense_cap) {
    const Eigen::MatrixXd A = assemble_dense(op, 0, -1, opts.dense_cap);
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + k);
  }
  return lanczos_eigenvalues(op, k, Extremal::Smallest, opts.lanczos);
}

std::vector<double> ground_energy(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode, int k,
                                  const GroundEnergyOptions &opts) {
  return lowest_eigenvalues(H_operator(model, std::move(space), mode), k, opts);
}

} // namespace ibc
