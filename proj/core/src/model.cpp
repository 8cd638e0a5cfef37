#include "ibc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ibc/error.hpp"
#include "ibc/quad.hpp"

namespace ibc {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

} // namespace

double FormFactor::operator()(double k) const {
  switch (kind) {
  case FormFactorKind::Froehlich:
    return 1.0 / k;
  case FormFactorKind::NelsonMassive:
    return std::pow(1.0 + k * k, -0.25);
  case FormFactorKind::Delta2D:
    return 1.0;
  case FormFactorKind::PowerLaw:
    return alpha == 0.0 ? 1.0 : std::pow(k, -alpha);
  }
  return 0.0;
}

double FormFactor::alpha_min() const {
  switch (kind) {
  case FormFactorKind::Froehlich:
    return 1.0;
  case FormFactorKind::NelsonMassive:
  case FormFactorKind::Delta2D:
    return 0.0;
  case FormFactorKind::PowerLaw:
    return alpha;
  }
  return 0.0;
}

double FormFactor::alpha_max() const {
  switch (kind) {
  case FormFactorKind::Froehlich:
    return 1.0;
  case FormFactorKind::NelsonMassive:
    return 0.5;
  case FormFactorKind::Delta2D:
    return 0.0;
  case FormFactorKind::PowerLaw:
    return alpha;
  }
  return 0.0;
}

double Dispersion::operator()(double k) const {
  switch (kind) {
  case DispersionKind::Constant1:
    return 1.0;
  case DispersionKind::RelativisticMassive:
    return std::sqrt(1.0 + k * k);
  case DispersionKind::NonrelMassive:
    return 1.0 + k * k;
  case DispersionKind::PowerLower:
    return beta == 0.0 ? 1.0 : std::pow(1.0 + k * k, 0.5 * beta);
  }
  return 1.0;
}

double Dispersion::beta_max() const {
  switch (kind) {
  case DispersionKind::Constant1:
    return 0.0;
  case DispersionKind::RelativisticMassive:
    return 1.0;
  case DispersionKind::NonrelMassive:
    return 2.0;
  case DispersionKind::PowerLower:
    return beta;
  }
  return 0.0;
}

double Dispersion::growth() const {
  switch (kind) {
  case DispersionKind::Constant1:
    return 0.0;
  case DispersionKind::RelativisticMassive:
    return 1.0;
  case DispersionKind::NonrelMassive:
    return 2.0;
  case DispersionKind::PowerLower:
    return beta;
  }
  return 0.0;
}

std::string to_string(CaseKind kind) {
  switch (kind) {
  case CaseKind::FormPerturbation:
    return "FormPerturbation";
  case CaseKind::Renormalisable:
    return "Renormalisable";
  case CaseKind::Invalid:
    return "Invalid";
  }
  return "Invalid";
}

std::string to_string(FormFactorKind kind) {
  switch (kind) {
  case FormFactorKind::Froehlich:
    return "froehlich";
  case FormFactorKind::NelsonMassive:
    return "nelson";
  case FormFactorKind::Delta2D:
    return "delta2d";
  case FormFactorKind::PowerLaw:
    return "power_law";
  }
  return "power_law";
}

std::string to_string(DispersionKind kind) {
  switch (kind) {
  case DispersionKind::Constant1:
    return "constant";
  case DispersionKind::RelativisticMassive:
    return "relativistic";
  case DispersionKind::NonrelMassive:
    return "nonrelativistic";
  case DispersionKind::PowerLower:
    return "power_lower";
  }
  return "power_lower";
}

double uv_exponent(int d, double alpha) { return d - 2.0 * alpha - 2.0; }

double counterterm_tail_exponent(int d, double alpha, double omega_growth) {
  return d - 1.0 - 2.0 * alpha - std::max(2.0, omega_growth);
}

bool counterterm_diverges(int d, double alpha, double omega_growth) {
  return counterterm_tail_exponent(d, alpha, omega_growth) >= -1.0;
}

ConditionCase validate(int d, double alpha, double beta) {
  if (d < 1 || d > 3)
    return {CaseKind::Invalid, "dimension d must be 1, 2 or 3 (got " + fmt(d) + ")"};
  if (!(alpha >= 0.0))
    return {CaseKind::Invalid, "alpha >= 0 violated (alpha = " + fmt(alpha) + ")"};
  if (!(beta >= 0.0 && beta <= 2.0))
    return {CaseKind::Invalid, "0 <= beta <= 2 violated (beta = " + fmt(beta) + ")"};
  const double half = 0.5 * d;
  if (!(alpha < half))
    return {CaseKind::Invalid, "alpha < d/2 violated (alpha = " + fmt(alpha) + ", d/2 = " + fmt(half) + ")"};
  if (alpha > half - 1.0)
    return {CaseKind::FormPerturbation, ""};
  if (!counterterm_diverges(d, alpha))
    return {CaseKind::Invalid, "counterterm integral converges although alpha <= d/2 - 1"};
  if (d == 2) {
    if (alpha == 0.0 && beta > 0.0)
      return {CaseKind::Renormalisable, ""};
    return {CaseKind::Invalid, "d = 2 requires alpha = 0 and beta > 0 (alpha = " + fmt(alpha) +
                                   ", beta = " + fmt(beta) + ")"};
  }
  // d == 3; d == 1 never reaches here since alpha >= 0 > d/2 - 1.
  const double bound = 0.5 - beta * beta / (8.0 + beta * beta);
  if (alpha > bound)
    return {CaseKind::Renormalisable, ""};
  return {CaseKind::Invalid, "alpha > 1/2 - beta^2/(8 + beta^2) = " + fmt(bound) +
                                 " violated (alpha = " + fmt(alpha) + ")"};
}

ConditionCase validate(int d, const FormFactor &v, const Dispersion &omega) {
  if (v.alpha < v.alpha_min() || v.alpha > v.alpha_max())
    return {CaseKind::Invalid, "form factor " + to_string(v.kind) + " admits alpha in [" + fmt(v.alpha_min()) +
                                   ", " + fmt(v.alpha_max()) + "] only (alpha = " + fmt(v.alpha) + ")"};
  if (omega.beta < 0.0 || omega.beta > omega.beta_max())
    return {CaseKind::Invalid, "dispersion " + to_string(omega.kind) + " admits beta <= " +
                                   fmt(omega.beta_max()) + " only (beta = " + fmt(omega.beta) + ")"};
  if (v.kind == FormFactorKind::Delta2D && d != 2)
    return {CaseKind::Invalid, "the contact form factor is only used with d = 2"};
  ConditionCase c = validate(d, v.alpha, omega.beta);
  if (c.kind == CaseKind::Renormalisable && !counterterm_diverges(d, v.alpha, omega.growth()))
    return {CaseKind::Invalid, "counterterm integral converges for this dispersion"};
  return c;
}

ModelSpec::ModelSpec(int d, int M, double g, FormFactor v, Dispersion omega)
    : d_(d), M_(M), g_(g), v_(v), omega_(omega), D_(uv_exponent(d, v.alpha)), case_(CaseKind::Invalid) {
  if (M < 1)
    throw ConfigError("source count M must be >= 1 (got " + fmt(M) + ")");
  if (!std::isfinite(g))
    throw ConfigError("coupling g must be finite");
  ConditionCase c = validate(d, v, omega);
  if (!c.valid())
    throw ConfigError("model parameters invalid: " + c.reason);
  case_ = c.kind;
}

ModelSpec ModelSpec::froehlich(int M, double g) {
  return ModelSpec(3, M, g, FormFactor::froehlich(), Dispersion::constant());
}

ModelSpec ModelSpec::nelson(int M, double g) {
  return ModelSpec(3, M, g, FormFactor::nelson(), Dispersion::relativistic());
}

ModelSpec ModelSpec::delta2d(int M, double g) {
  return ModelSpec(2, M, g, FormFactor::delta(), Dispersion::nonrelativistic());
}

ModelSpec ModelSpec::with_coupling(double g) const { return ModelSpec(d_, M_, g, v_, omega_); }
ModelSpec ModelSpec::with_sources(int M) const { return ModelSpec(d_, M, g_, v_, omega_); }

std::string ModelSpec::name() const {
  if (v_.kind == FormFactorKind::Froehlich && omega_.kind == DispersionKind::Constant1 && d_ == 3)
    return "froehlich";
  if (v_.kind == FormFactorKind::NelsonMassive && omega_.kind == DispersionKind::RelativisticMassive && d_ == 3)
    return "nelson";
  if (v_.kind == FormFactorKind::Delta2D && omega_.kind == DispersionKind::NonrelMassive && d_ == 2)
    return "delta2d";
  return "custom";
}

double u_transform(double s, double beta, double D) { return 0.5 * beta * s - 0.5 * D; }
double u_transform(double s, const ModelSpec &spec) { return u_transform(s, spec.beta(), spec.D()); }

double regularity_threshold(double D) { return (2.0 - D) / 4.0; }
double regularity_threshold(const ModelSpec &spec) { return regularity_threshold(spec.D()); }

namespace {

// Fills s, sigma, S1, S2, eta and the deltas; no admissibility check.
RegularityParams raw_params(double beta, double D, double eps) {
  RegularityParams r;
  r.eps = eps;
  r.eta_threshold = regularity_threshold(D);
  const double inf = std::numeric_limits<double>::infinity();
  if (beta == 2.0) {
    r.S1 = 1.0 + 0.5 * D;
    r.S2 = inf;
  } else {
    r.S1 = (2.0 + D) / beta;
    r.S2 = (1.0 - 1.5 * D) / (2.0 - beta);
  }
  if (beta == 2.0 && D == 0.0) {
    r.s = 1.0 - eps;
    r.sigma = 1.0 - eps;
    r.eta = 0.5 * (1.0 - eps);
  } else {
    r.s = std::min(r.S1, r.S2) - eps;
    const double cap = r.S2 == inf ? r.S1 : std::min(2.0 * (r.S2 - r.S1), r.S1);
    r.sigma = std::max(0.0, cap - 2.0 * eps);
    r.eta = r.s - u_transform(r.s, beta, D);
  }
  const double us = u_transform(r.s, beta, D);
  r.delta1 = r.s <= 1.0 ? 1.0 - us : r.s - us;
  r.delta2 = std::max(0.0, 1.0 - r.s) + 0.5 * std::max(0.0, 1.0 - r.sigma);
  return r;
}

// Name of the first violated strict inequality, empty if admissible.
std::string violated(const RegularityParams &r, double beta, double D) {
  auto u = [&](double x) { return u_transform(x, beta, D); };
  if (!(r.eps > 0.0 && r.eps < 1.0))
    return "0 < eps < 1";
  if (!(r.s > 0.0))
    return "s > 0";
  if (!(u(r.sigma) < 1.0))
    return "u(sigma) < 1";
  if (!(r.s - u(r.s) + 0.5 * (r.sigma - u(r.sigma) - 1.0) < 0.0))
    return "s - u(s) + (sigma - u(sigma) - 1)/2 < 0";
  if (!(u(r.s) < 1.0))
    return "u(s) < 1";
  if (!(u(u(r.s)) > 0.0))
    return "u(u(s)) > 0";
  if (!(r.delta1 < 1.0))
    return "delta1 < 1";
  if (!(r.delta2 < 1.0))
    return "delta2 < 1";
  return {};
}

void check_renormalisable_pair(double beta, double D) {
  if (!(beta > 0.0 && beta <= 2.0))
    throw ConfigError("regularity parameters need 0 < beta <= 2 (beta = " + fmt(beta) + ")");
  if (!(D >= 0.0))
    throw ConfigError("regularity parameters need D >= 0 (D = " + fmt(D) + ")");
}

} // namespace

RegularityParams select_regularity_params(double beta, double D, double eps) {
  check_renormalisable_pair(beta, D);
  RegularityParams r = raw_params(beta, D, eps);
  const std::string bad = violated(r, beta, D);
  if (!bad.empty())
    throw EpsilonTooLarge("eps = " + fmt(eps) + " violates " + bad);
  return r;
}

RegularityParams select_regularity_params(const ModelSpec &spec, double eps) {
  if (!spec.renormalisable())
    throw ConfigError("regularity parameters are defined for Renormalisable models only");
  return select_regularity_params(spec.beta(), spec.D(), eps);
}

double admissible_eps_bound(double beta, double D) {
  check_renormalisable_pair(beta, D);
  auto ok = [&](double e) { return violated(raw_params(beta, D, e), beta, D).empty(); };
  double lo = 0.0, hi = 1.0;
  // Smallest eps scanned; if even this fails the pair sits on the boundary of Condition 1.
  double probe = 1e-9;
  if (!ok(probe))
    throw EpsilonTooLarge("no admissible eps for beta = " + fmt(beta) + ", D = " + fmt(D));
  lo = probe;
  if (ok(std::nextafter(1.0, 0.0)))
    return 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

double default_eps(double beta, double D) { return 0.25 * admissible_eps_bound(beta, D); }

RegularityParams select_regularity_params(const ModelSpec &spec) {
  if (!spec.renormalisable())
    throw ConfigError("regularity parameters are defined for Renormalisable models only");
  return select_regularity_params(spec, default_eps(spec.beta(), spec.D()));
}

double self_energy(const ModelSpec &spec, double Lambda, double tol) {
  if (!(Lambda >= 0.0))
    throw ConfigError("self_energy needs Lambda >= 0");
  if (Lambda == 0.0)
    return 0.0;
  const FormFactor v = spec.v();
  const Dispersion w = spec.omega();
  auto f = [v, w](double r) {
    const double vr = v(r);
    return vr * vr / (r * r + w(r));
  };
  const QuadratureResult q = radial_integral(f, spec.d(), 0.0, Lambda, tol, spec.alpha());
  return spec.g() * spec.g() * spec.M() * q.value;
}

} // namespace ibc
