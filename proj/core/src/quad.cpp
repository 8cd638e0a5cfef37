#include "ibc/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ibc/error.hpp"
#include "ibc/model.hpp"

namespace ibc {

namespace {

constexpr unsigned kMaxDepth = 20;
constexpr double kPi = std::numbers::pi;
// Beyond u = 200 in r = R e^u every tail integrand here is below double precision.
constexpr double kTailCut = 200.0;

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

std::string describe(double a, double b, double value, double err) {
  std::ostringstream os;
  os << "[" << a << ", " << b << "] (value " << value << ", error estimate " << err << ")";
  return os.str();
}

} // namespace

QuadratureResult integrate_interval(const RealFunction &f, double a, double b, double tol, double abs_floor) {
  QuadratureResult out;
  if (a == b)
    return out;
  std::size_t count = 0;
  auto g = [&](double x) {
    ++count;
    return f(x);
  };
  auto accept = [&](double value, double err) {
    return std::isfinite(value) && err <= tol * std::abs(value) + abs_floor;
  };
  double err = 0.0, l1 = 0.0;
  double value = GK::integrate(g, a, b, kMaxDepth, tol, &err, &l1);
  // Kronrod estimates are very pessimistic at endpoint singularities; the
  // double-exponential rules handle those with reliable estimates.
  if (!accept(value, err)) {
    double err2 = 0.0, l1b = 0.0;
    std::size_t levels = 0;
    double value2 = value;
    try {
      if (std::isinf(b)) {
        static thread_local boost::math::quadrature::exp_sinh<double> es;
        value2 = es.integrate(g, a, b, tol, &err2, &l1b, &levels);
      } else {
        static thread_local boost::math::quadrature::tanh_sinh<double> ts;
        value2 = ts.integrate(g, a, b, tol, &err2, &l1b, &levels);
      }
    } catch (const std::exception &) {
      err2 = std::numeric_limits<double>::infinity();
    }
    if (accept(value2, err2) || err2 < err) {
      value = value2;
      err = err2;
    }
  }
  out.value = value;
  out.abs_error_estimate = err;
  out.evaluations = count;
  if (!accept(value, err))
    throw QuadratureFailure("adaptive quadrature on " + describe(a, b, value, err) + " did not reach tolerance",
                            err, tol * std::abs(value) + abs_floor);
  return out;
}

QuadratureResult integrate_panels(const RealFunction &f, const std::vector<double> &pts, double tol,
                                  double abs_floor) {
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const QuadratureResult r = integrate_interval(f, pts[i], pts[i + 1], tol, abs_floor);
    total.value += r.value;
    total.abs_error_estimate += r.abs_error_estimate;
    total.evaluations += r.evaluations;
  }
  return total;
}

double surface_measure(int d) {
  switch (d) {
  case 1:
    return 2.0;
  case 2:
    return 2.0 * kPi;
  case 3:
    return 4.0 * kPi;
  }
  throw ConfigError("dimension must be 1, 2 or 3");
}

QuadratureResult radial_integral(const RealFunction &f, int d, double r_min, double r_max, double tol,
                                 double singular_alpha) {
  const double S = surface_measure(d);
  if (!(r_min >= 0.0) || !(r_max >= r_min))
    throw ConfigError("radial_integral needs 0 <= r_min <= r_max");
  QuadratureResult out;
  if (r_max == r_min)
    return out;
  const double split = std::clamp(1.0, r_min, r_max);
  std::vector<QuadratureResult> parts;

  if (split > r_min) {
    if (singular_alpha > 0.0 && r_min == 0.0) {
      const double expo = d - 2.0 * singular_alpha;
      if (!(expo > 0.0))
        throw ConfigError("radial integrand is not integrable at the origin");
      const double q = 1.0 / expo;
      auto g = [&](double t) {
        if (t <= 0.0)
          return 0.0;
        const double r = std::pow(t, q);
        return q * std::pow(t, q - 1.0) * std::pow(r, d - 1) * f(r);
      };
      parts.push_back(integrate_interval(g, 0.0, std::pow(split, expo), tol));
    } else {
      auto g = [&](double r) { return std::pow(r, d - 1) * f(r); };
      parts.push_back(integrate_interval(g, r_min, split, tol));
    }
  }
  if (r_max > split) {
    // r = e^u turns algebraic tails into exponentially decaying ones.
    auto g = [&](double u) {
      if (u > kTailCut)
        return 0.0;
      const double r = std::exp(u);
      return std::pow(r, d) * f(r);
    };
    const double umax = std::isinf(r_max) ? std::numeric_limits<double>::infinity() : std::log(r_max);
    parts.push_back(integrate_interval(g, std::log(split), umax, tol));
  }
  for (const auto &p : parts) {
    out.value += S * p.value;
    out.abs_error_estimate += S * p.abs_error_estimate;
    out.evaluations += p.evaluations;
  }
  return out;
}

namespace {

// log1p(x)/x - 1 without cancellation for small x.
double log1p_ratio_minus_one(double x) {
  if (std::abs(x) < 1e-2) {
    double term = 1.0, sum = 0.0;
    for (int m = 1; m <= 12; ++m) {
      term *= -x;
      sum += term / (m + 1);
    }
    return sum;
  }
  return std::log1p(x) / x - 1.0;
}

// Angular integral of 1/((p-k)²+env+ω) - 1/(k²+ω) over the sphere of radius r,
// rearranged so the leading terms cancel algebraically.
double angular_difference(int d, double r, double p, double env, double w) {
  const double c = r * r + w;
  if (d == 3) {
    const double bm = (r - p) * (r - p) + env + w;
    const double x = 4.0 * r * p / bm;
    const double q = log1p_ratio_minus_one(x);
    return 4.0 * kPi * (q / bm + (2.0 * r * p - p * p - env) / (bm * c));
  }
  const double S = c + p * p + env;
  const double Q = std::sqrt(((r - p) * (r - p) + env + w) * ((r + p) * (r + p) + env + w));
  const double num = 4.0 * r * r * p * p - (p * p + env) * (S + c);
  return 2.0 * kPi * num / (c * Q * (c + Q));
}

void check_regularized(const ModelSpec &spec, double p, double env) {
  if (!spec.renormalisable())
    throw ConfigError("regularized_I is defined for Renormalisable models only");
  if (spec.d() != 2 && spec.d() != 3)
    throw ConfigError("regularized_I needs d = 2 or 3");
  if (!(p >= 0.0) || !(env >= 0.0))
    throw ConfigError("regularized_I needs p_norm >= 0 and env >= 0");
  // Tail of the subtracted integrand behaves like r^(d-1-2 alpha-4) = r^(D-3).
  if (!(spec.D() - 3.0 < -1.0))
    throw ConfigError("subtracted tail of regularized_I is not integrable");
}

} // namespace

double regularized_I(const ModelSpec &spec, double p, double env, double tol) {
  check_regularized(spec, p, env);
  const double R = 2.0 * (p + std::sqrt(env));
  if (R == 0.0)
    return 0.0;
  const int d = spec.d();
  const FormFactor v = spec.v();
  const Dispersion w = spec.omega();
  auto kernel = [=](double r) {
    if (r <= 0.0)
      return 0.0;
    const double vr = v(r);
    return std::pow(r, d - 1) * vr * vr * angular_difference(d, r, p, env, w(r));
  };
  std::vector<double> pts{0.0};
  if (p > 0.0 && p < R)
    pts.push_back(p);
  pts.push_back(R);
  const QuadratureResult inner = integrate_panels(kernel, pts, tol, 1e-14);
  auto tail = [&](double u) {
    if (u > kTailCut)
      return 0.0;
    const double r = R * std::exp(u);
    return r * kernel(r);
  };
  const QuadratureResult outer =
      integrate_interval(tail, 0.0, std::numeric_limits<double>::infinity(), tol, 1e-14);
  const double value = inner.value + outer.value;
  const double err = inner.abs_error_estimate + outer.abs_error_estimate;
  if (!(err <= tol * std::abs(value) + 1e-13))
    throw QuadratureFailure("regularized_I did not reach tolerance", err, tol * std::abs(value));
  return value;
}

double regularized_I_cutoff(const ModelSpec &spec, double p, double env, double Lambda, double tol) {
  check_regularized(spec, p, env);
  if (!(Lambda > 0.0))
    return 0.0;
  const int d = spec.d();
  const FormFactor v = spec.v();
  const Dispersion w = spec.omega();
  auto kernel = [=](double r) {
    if (r <= 0.0)
      return 0.0;
    const double vr = v(r);
    return std::pow(r, d - 1) * vr * vr * angular_difference(d, r, p, env, w(r));
  };
  std::vector<double> pts{0.0};
  const double R = 2.0 * (p + std::sqrt(env));
  if (p > 0.0 && p < Lambda)
    pts.push_back(p);
  if (R > pts.back() && R < Lambda)
    pts.push_back(R);
  if (Lambda > 10.0 * std::max(R, 1.0)) {
    pts.push_back(10.0 * std::max(R, 1.0));
    double r = pts.back();
    while (4.0 * r < Lambda) {
      r *= 4.0;
      pts.push_back(r);
    }
  }
  pts.push_back(Lambda);
  return integrate_panels(kernel, pts, tol, 1e-14).value;
}

double bound_integral_3d(double p, double theta, double tol) {
  if (!(p > 0.0))
    throw ConfigError("verify_bound_3d needs p_norm > 0");
  if (!(theta > 1.0 && theta < 3.0))
    throw ConfigError("verify_bound_3d needs theta in (1, 3)");
  auto f = [=](double r) {
    if (r <= 0.0)
      return 0.0;
    const double den = (r - p) * (r - p) + 1.0;
    return std::pow(r, 1.0 - theta) * std::log1p(4.0 * r * p / den);
  };
  // r = p u^(1/(3-theta)) flattens the r^(2-theta) behaviour at the origin.
  const double q = 1.0 / (3.0 - theta);
  auto near = [=](double u) {
    if (u <= 0.0)
      return 0.0;
    return p * q * std::pow(u, q - 1.0) * f(p * std::pow(u, q));
  };
  const double R = 2.0 * p + 2.0;
  auto tail = [=](double u) {
    if (u > kTailCut)
      return 0.0;
    const double r = R * std::exp(u);
    return r * f(r);
  };
  const QuadratureResult a = integrate_interval(near, 0.0, 1.0, tol);
  const QuadratureResult b = integrate_interval(f, p, R, tol);
  const QuadratureResult c = integrate_interval(tail, 0.0, std::numeric_limits<double>::infinity(), tol);
  return kPi / p * (a.value + b.value + c.value);
}

double verify_bound_3d(double p, double theta, double tol) {
  return bound_integral_3d(p, theta, tol) * std::pow(p, theta - 1.0);
}

double bound_integral_2d(double p, int theta, double tol) {
  if (!(p > 0.0))
    throw ConfigError("verify_bound_2d needs p_norm > 0");
  if (theta != 1 && theta != 2)
    throw ConfigError("verify_bound_2d needs theta in {1, 2}");
  auto f = [=](double r) {
    const double den = std::sqrt(((r - p) * (r - p) + 1.0) * ((r + p) * (r + p) + 1.0));
    return 2.0 * kPi * r * std::pow(r * r + 1.0, -0.5 * theta) / den;
  };
  const double R = 2.0 * p + 2.0;
  auto tail = [=](double u) {
    if (u > kTailCut)
      return 0.0;
    const double r = R * std::exp(u);
    return r * f(r);
  };
  const QuadratureResult a = integrate_interval(f, 0.0, p, tol);
  const QuadratureResult b = integrate_interval(f, p, R, tol);
  const QuadratureResult c = integrate_interval(tail, 0.0, std::numeric_limits<double>::infinity(), tol);
  return a.value + b.value + c.value;
}

double verify_bound_2d(double p, int theta, double tol) {
  return bound_integral_2d(p, theta, tol) * std::pow(p, theta) / (std::log1p(p) + 1.0);
}

std::vector<BoundSample> bound_sweep_3d(const std::vector<double> &ps, const std::vector<double> &thetas,
                                        double tol) {
  std::vector<BoundSample> out;
  for (double th : thetas)
    for (double p : ps) {
      const double I = bound_integral_3d(p, th, tol);
      out.push_back({3, p, th, I, I * std::pow(p, th - 1.0)});
    }
  return out;
}

std::vector<BoundSample> bound_sweep_2d(const std::vector<double> &ps, const std::vector<int> &thetas,
                                        double tol) {
  std::vector<BoundSample> out;
  for (int th : thetas)
    for (double p : ps) {
      const double I = bound_integral_2d(p, th, tol);
      out.push_back({2, p, double(th), I, I * std::pow(p, th) / (std::log1p(p) + 1.0)});
    }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 0)
    return out;
  if (n == 1)
    return {lo};
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i)
    out.push_back(std::exp(a + (b - a) * i / (n - 1)));
  out.back() = hi;
  return out;
}

} // namespace ibc
