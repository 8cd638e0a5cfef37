#pragma once
#include <complex>
#include <cstdint>
#include <vector>

#include "ibc/ops.hpp"

namespace ibc {

struct SolverOptions {
  double tol = 1e-10;      //!< relative residual target ‖(op+z)x - ψ‖ <= tol ‖ψ‖
  int max_iterations = 20000;
  int restart = 400;       //!< inner iterations between true-residual checks
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

//! Solves (op + z) x = ψ for a self-adjoint op and Im z != 0 with MINRES on the
//! shifted Lanczos tridiagonal. Throws NoConvergence with the best residual reached.
FockVector resolvent_solve(const OperatorHandle &op, std::complex<double> z, const FockVector &psi,
                           const SolverOptions &opts = {}, SolveStats *stats = nullptr);

struct EigenOptions {
  double tol = 1e-9;       //!< Ritz residual relative to max(1, |θ|)
  int krylov_dim = 80;
  int max_restarts = 200;
  std::uint64_t seed = 7;
};

enum class Extremal { Smallest, Largest };

//! k extremal eigenvalues of a self-adjoint handle by restarted Lanczos with full
//! reorthogonalization, ascending for Smallest, descending for Largest.
std::vector<double> lanczos_eigenvalues(const OperatorHandle &op, int k, Extremal which,
                                        const EigenOptions &opts = {});

//! ‖op‖ restricted to inputs in sector n: the square root of the top eigenvalue of
//! P_n op† op P_n. Needs op's adjoint.
double sector_norm_estimate(const OperatorHandle &op, int n, int iters = 300, double tol = 1e-10);

struct GroundEnergyOptions {
  std::size_t dense_cap = 4000;
  EigenOptions lanczos;
};

//! k lowest eigenvalues of H: dense below the cap, Lanczos above it.
std::vector<double> ground_energy(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode, int k,
                                  const GroundEnergyOptions &opts = {});
std::vector<double> lowest_eigenvalues(const OperatorHandle &op, int k, const GroundEnergyOptions &opts = {});

} // namespace ibc
