#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibc/ops.hpp"
#include "ibc/solvers.hpp"

namespace ibc {

//! Smooth Gaussian profile exp(-|q - centre|²/(2σ²)) sampled on source momenta, used
//! identically on every grid so ladder comparisons see the same physical state.
struct ProbeSpec {
  double sigma = 0.5;
  std::array<double, 3> centre{0.0, 0.0, 0.0};
  double amplitude = 1.0;
  std::string id = "gauss";

  double operator()(const std::array<double, 3> &q, int d) const;
  //! Radius beyond which the profile is treated as zero.
  double support_radius() const { return 7.0 * sigma; }
};

//! Deterministic family: the first member is centred, the others get seeded offsets and widths.
std::vector<ProbeSpec> probe_family(int count, std::uint64_t seed, double sigma = 0.5);

//! Sector-0 state with coefficients ψ(P) = Π_i probe(p_i) and, when with_one_boson is set,
//! a sector-1 component probe(P)·probe(k); normalized to unit norm.
FockVector make_probe(FockSpacePtr space, const ProbeSpec &probe, bool with_one_boson = false);

struct RenormFlowReport {
  std::string model;
  std::optional<ModelSpec> spec;
  GridSpec grid;
  int n_max = 0;
  std::vector<double> lambdas;
  std::vector<double> E_grid;      //!< grid counterterm at each Λ
  std::vector<double> E_continuum; //!< g²M ∫_{|k|<Λ} |v̂|²/(k²+ω)
  std::vector<std::string> probe_ids;
  //! errors[l][p] = ‖(H_Λ + E_Λ + i)⁻¹ψ_p - (H + i)⁻¹ψ_p‖
  std::vector<std::vector<double>> errors;
  std::vector<std::vector<double>> solver_residuals;
  std::vector<double> reference_residuals;
  double tol = 0.0;
};

//! Resolvent errors of H_Λ + E_Λ against the GridConsistent full-grid H at z = i.
RenormFlowReport renorm_flow(const ModelSpec &model, FockSpacePtr space, const std::vector<double> &lambdas,
                             const std::vector<ProbeSpec> &probes, const SolverOptions &solver = {});

//! Errors nonincreasing along the ladder with relative slack.
bool flow_monotone(const RenormFlowReport &r, double slack = 0.01);

enum class Verdict { Cauchy, Diverging, Inconclusive };
std::string to_string(Verdict v);

struct LadderStep {
  double k_max = 0.0;
  int points = 0;
};

//! k_max values at fixed spacing h: points = 2 k_max / h.
std::vector<LadderStep> fixed_spacing_ladder(const std::vector<double> &k_maxes, double h = 1.0);

struct RegularityReport {
  std::string model;
  std::optional<ModelSpec> spec;
  int d = 0;
  double eta_threshold = 0.0;
  std::vector<double> etas;
  std::vector<LadderStep> ladder;
  std::vector<std::vector<double>> norms;      //!< norms[e][c] = ‖L^η Gψ‖
  std::vector<std::vector<double>> increments; //!< relative growth between ladder steps
  std::vector<Verdict> verdicts;
  double tol = 0.05;
  std::string probe_id;
};

//! Relative increments x_{j+1}/x_j - 1 and the verdict: Diverging when the last three each
//! exceed the growth threshold, Cauchy when the last is below tol and they shrink.
Verdict classify_increments(const std::vector<double> &increments, double tol = 0.05, double growth = 0.05);

//! ‖L^η G ψ‖ for ψ the sector-0 probe state, on a grid without building the one-boson sector.
double streamed_G_norm(const ModelSpec &model, const GridSpec &grid, const ProbeSpec &probe, double eta);

RegularityReport regularity_scan(const ModelSpec &model, const std::vector<LadderStep> &ladder,
                                 const std::vector<double> &etas, const ProbeSpec &probe, double tol = 0.05);

struct NumberBoundResult {
  double sup_ratio = 0.0; //!< sup ‖Nψ‖ / (‖N(1-G)ψ‖ + ‖ψ‖)
  int samples = 0;
};

NumberBoundResult number_bound_check(const ModelSpec &model, FockSpacePtr space, int samples,
                                     std::uint64_t seed = 1);

struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
};

//! Least-squares fit of log y = log c + exponent · log x.
PowerFit fit_power_law(const std::vector<double> &x, const std::vector<double> &y);

//! sector_norm_estimate for inputs in each sector of ns.
std::vector<double> sector_norms(const OperatorHandle &op, const std::vector<int> &ns);

} // namespace ibc
