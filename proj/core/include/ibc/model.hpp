#pragma once
#include <limits>
#include <string>

namespace ibc {

enum class FormFactorKind { Froehlich, NelsonMassive, Delta2D, PowerLaw };
enum class DispersionKind { Constant1, RelativisticMassive, NonrelMassive, PowerLower };

//! Interaction profile v̂(|k|); alpha is the exponent in |v̂(k)| <= |k|^-alpha.
struct FormFactor {
  FormFactorKind kind = FormFactorKind::PowerLaw;
  double alpha = 0.0;

  double operator()(double k) const;
  //! Smallest alpha for which |v̂(k)| <= |k|^-alpha holds everywhere, and the largest.
  double alpha_min() const;
  double alpha_max() const;

  static FormFactor froehlich() { return {FormFactorKind::Froehlich, 1.0}; }
  static FormFactor nelson(double alpha = 0.5) { return {FormFactorKind::NelsonMassive, alpha}; }
  static FormFactor delta() { return {FormFactorKind::Delta2D, 0.0}; }
  static FormFactor power_law(double alpha) { return {FormFactorKind::PowerLaw, alpha}; }
};

//! Boson energy ω(|k|) with the lower bound ω(k) >= (1+k²)^(beta/2).
struct Dispersion {
  DispersionKind kind = DispersionKind::PowerLower;
  double beta = 0.0;

  double operator()(double k) const;
  double beta_max() const;
  //! Exponent g with ω(k) ~ |k|^g at large |k|.
  double growth() const;

  static Dispersion constant() { return {DispersionKind::Constant1, 0.0}; }
  static Dispersion relativistic(double beta = 1.0) { return {DispersionKind::RelativisticMassive, beta}; }
  static Dispersion nonrelativistic(double beta = 2.0) { return {DispersionKind::NonrelMassive, beta}; }
  static Dispersion power_lower(double beta) { return {DispersionKind::PowerLower, beta}; }
};

enum class CaseKind { FormPerturbation, Renormalisable, Invalid };

struct ConditionCase {
  CaseKind kind = CaseKind::Invalid;
  std::string reason;
  bool valid() const { return kind != CaseKind::Invalid; }
};

std::string to_string(CaseKind kind);
std::string to_string(FormFactorKind kind);
std::string to_string(DispersionKind kind);

double uv_exponent(int d, double alpha);

//! Tail exponent of r^(d-1) |v̂|²/(k²+ω) at large r; the counterterm integral
//! diverges iff it is >= -1.
double counterterm_tail_exponent(int d, double alpha, double omega_growth = 0.0);
bool counterterm_diverges(int d, double alpha, double omega_growth = 0.0);

ConditionCase validate(int d, double alpha, double beta);
//! Also checks that alpha and beta are admissible for the chosen kinds.
ConditionCase validate(int d, const FormFactor &v, const Dispersion &omega);

class ModelSpec {
public:
  //! Throws ConfigError if the parameters fail validation.
  ModelSpec(int d, int M, double g, FormFactor v, Dispersion omega);

  static ModelSpec froehlich(int M = 1, double g = 1.0);
  static ModelSpec nelson(int M = 1, double g = 1.0);
  static ModelSpec delta2d(int M = 1, double g = 1.0);

  int d() const { return d_; }
  int M() const { return M_; }
  double g() const { return g_; }
  const FormFactor &v() const { return v_; }
  const Dispersion &omega() const { return omega_; }
  double alpha() const { return v_.alpha; }
  double beta() const { return omega_.beta; }
  double D() const { return D_; }
  CaseKind condition() const { return case_; }
  bool renormalisable() const { return case_ == CaseKind::Renormalisable; }

  ModelSpec with_coupling(double g) const;
  ModelSpec with_sources(int M) const;
  std::string name() const;

private:
  int d_;
  int M_;
  double g_;
  FormFactor v_;
  Dispersion omega_;
  double D_;
  CaseKind case_;
};

double u_transform(double s, double beta, double D);
double u_transform(double s, const ModelSpec &spec);

struct RegularityParams {
  double s = 0.0;
  double sigma = 0.0;
  double eps = 0.0;
  double S1 = 0.0;
  double S2 = std::numeric_limits<double>::infinity();
  double delta1 = 0.0;
  double delta2 = 0.0;
  //! L-power carried by the range of G in the chosen branch.
  double eta = 0.0;
  double eta_threshold = 0.0;
};

RegularityParams select_regularity_params(double beta, double D, double eps);
RegularityParams select_regularity_params(const ModelSpec &spec, double eps);
//! Supremum of admissible eps in (0, 1); admissible eps form the interval (0, sup).
double admissible_eps_bound(double beta, double D);
double default_eps(double beta, double D);
RegularityParams select_regularity_params(const ModelSpec &spec);

double regularity_threshold(double D);
double regularity_threshold(const ModelSpec &spec);

//! g²M ∫_{|k|<Lambda} |v̂|²/(k²+ω) dk, relative accuracy tol.
double self_energy(const ModelSpec &spec, double Lambda, double tol = 1e-8);

} // namespace ibc
