#pragma once
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "ibc/grid.hpp"
#include "ibc/model.hpp"

namespace ibc {

enum class Connectivity { Diagonal, Lower, Raise, Tridiagonal };
enum class DiagonalMode { GridConsistent, Continuum };

std::string to_string(Connectivity c);
std::string to_string(DiagonalMode m);

using LinearMap = std::function<FockVector(const FockVector &)>;

//! Matrix-free linear map on one Fock space.
struct OperatorHandle {
  LinearMap apply;
  LinearMap adjoint; //!< may be empty
  Connectivity connectivity = Connectivity::Diagonal;
  bool selfadjoint_claim = false;
  std::shared_ptr<const ModelSpec> model; //!< null for model-free maps
  FockSpacePtr space;
  Cutoff cutoff;
  std::string name;

  FockVector operator()(const FockVector &v) const { return apply(v); }
  bool has_adjoint() const { return bool(adjoint) || selfadjoint_claim; }
  FockVector apply_adjoint(const FockVector &v) const;
};

OperatorHandle identity_operator(FockSpacePtr space);
//! a ∘ b
OperatorHandle compose(const OperatorHandle &a, const OperatorHandle &b);
OperatorHandle linear_combination(std::complex<double> ca, const OperatorHandle &a, std::complex<double> cb,
                                  const OperatorHandle &b);
//! op + shift*Id
OperatorHandle shifted(const OperatorHandle &op, double shift);

//! Memoized continuum values I(|p|, env). By default keys are exact; a positive
//! bucket width switches to bilinear interpolation between bucket centres.
class TdCache {
public:
  explicit TdCache(ModelSpec model, double tol = 1e-8, double bucket_width = 0.0);

  double value(double p_norm, double env);
  double direct(double p_norm, double env) const;
  std::size_t size() const;
  double tolerance() const { return tol_; }
  double bucket_width() const { return width_; }

private:
  double node_value(long ip, long ie);

  ModelSpec model_;
  double tol_;
  double width_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<double, double>, double> exact_;
  std::map<std::pair<long, long>, double> buckets_;
};

//! g²M Σ_{k in cutoff} h^d |v̂(k)|²/(k²+ω(k)), the grid counterterm.
double grid_self_energy(const ModelSpec &model, const MomentumGrid &grid, const Cutoff &cutoff = {});

//! Multiplies by L^eta with L = P² + Σ ω(k_j). Throws SingularInverse when eta < 0
//! meets a nonzero coefficient on a state with L = 0.
OperatorHandle free_multiplier(const ModelSpec &model, FockSpacePtr space, double eta);
OperatorHandle number_multiplier(FockSpacePtr space, double power);

OperatorHandle annihilation(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
OperatorHandle creation(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
//! G = -g L⁻¹ a*; its adjoint is -g a L⁻¹.
OperatorHandle G_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
OperatorHandle G_adjoint_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});

//! Diagonal part of T. GridConsistent: the grid sum plus the grid counterterm, which
//! leaves only the counterterm on the top sector. Continuum: -g² Σ_l I(|p_l|, P̂_l² + Ω(K)).
OperatorHandle Td_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode,
                           const Cutoff &cutoff = {}, std::shared_ptr<TdCache> cache = nullptr);
//! θ and τ kernels, sector preserving.
OperatorHandle Tod_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
//! g a G as a kernel sum (diagonal grid part plus off-diagonal part), no counterterm.
OperatorHandle T_kernel_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
//! T: g a G for form perturbations, T_d + T_od otherwise.
OperatorHandle T_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode = DiagonalMode::GridConsistent,
                          const Cutoff &cutoff = {}, std::shared_ptr<TdCache> cache = nullptr);

//! L + g(a + a*) with the cutoff.
OperatorHandle H_Lambda_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff = {});
//! (1-G)† L (1-G) + T.
OperatorHandle H_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode = DiagonalMode::GridConsistent,
                          const Cutoff &cutoff = {}, std::shared_ptr<TdCache> cache = nullptr);

FockVector apply_annihilation(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_creation(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_G(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_Td(const ModelSpec &model, DiagonalMode mode, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_Tod(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_H_Lambda(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi);
FockVector apply_H(const ModelSpec &model, DiagonalMode mode, const Cutoff &cutoff, const FockVector &psi);

struct NeumannResult {
  FockVector x;
  int terms = 0;
  double residual = 0.0; //!< ‖(1-G)x - ψ‖
};

//! x = Σ_{j<=terms} G^j ψ; G raises the boson number, so N_max+1 terms invert 1-G exactly.
NeumannResult neumann_inverse(const OperatorHandle &G, const FockVector &psi, int terms = -1);

//! L(P, K) for every basis state of sector n.
Eigen::VectorXd free_energies(const ModelSpec &model, const FockSpace &space, int n);

} // namespace ibc
