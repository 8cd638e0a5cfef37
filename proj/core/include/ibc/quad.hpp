#pragma once
#include <cstddef>
#include <functional>
#include <vector>

namespace ibc {

class ModelSpec;

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

using RealFunction = std::function<double(double)>;

//! Adaptive Gauss-Kronrod on [a, b]; b may be +infinity.
//! Throws QuadratureFailure unless estimate <= tol*|value| + abs_floor.
QuadratureResult integrate_interval(const RealFunction &f, double a, double b, double tol,
                                    double abs_floor = 1e-300);

//! Sum of adaptive integrals over consecutive panels [pts[i], pts[i+1]].
QuadratureResult integrate_panels(const RealFunction &f, const std::vector<double> &pts, double tol,
                                  double abs_floor = 1e-300);

//! Surface area of the unit sphere in R^d (2, 2π, 4π).
double surface_measure(int d);

//! ∫_{r_min<|k|<r_max} f(|k|) dk over R^d. singular_alpha > 0 announces
//! f ~ r^(-2 singular_alpha) at the origin; the substitution r = t^(1/(d-2 alpha))
//! flattens it. r_max may be +infinity.
QuadratureResult radial_integral(const RealFunction &f, int d, double r_min, double r_max, double tol,
                                 double singular_alpha = 0.0);

//! ∫ |v̂|² [1/((p-k)² + env + ω(k)) - 1/(k² + ω(k))] dk for a Renormalisable model.
double regularized_I(const ModelSpec &spec, double p_norm, double env, double tol = 1e-8);

//! The same difference restricted to |k| < Lambda, without the tail treatment.
double regularized_I_cutoff(const ModelSpec &spec, double p_norm, double env, double Lambda,
                            double tol = 1e-8);

//! ∫_{R³} dq / (((p-q)²+1) |q|^theta) and the scaled ratio integral * p^(theta-1).
double bound_integral_3d(double p_norm, double theta, double tol = 1e-6);
double verify_bound_3d(double p_norm, double theta, double tol = 1e-6);

//! ∫_{R²} dq / (((p-q)²+1)(q²+1)^(theta/2)) and integral * p^theta / (log(1+p) + 1).
double bound_integral_2d(double p_norm, int theta, double tol = 1e-6);
double verify_bound_2d(double p_norm, int theta, double tol = 1e-6);

struct BoundSample {
  int dim = 3;
  double p = 0.0;
  double theta = 0.0;
  double integral = 0.0;
  double ratio = 0.0;
};

std::vector<BoundSample> bound_sweep_3d(const std::vector<double> &ps, const std::vector<double> &thetas,
                                        double tol = 1e-6);
std::vector<BoundSample> bound_sweep_2d(const std::vector<double> &ps, const std::vector<int> &thetas,
                                        double tol = 1e-6);

//! n points log-spaced from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

} // namespace ibc
