"""Independent oracle for the regularized diagonal integral of the 2d contact model.

I(p) = int_{R^2} [1/((p-k)^2 + 1 + k^2) - 1/(2k^2 + 1)] dk,  |p| = 1, env = 0.

Route 1: scipy dblquad in Cartesian coordinates on a large box plus an
analytic tail estimate is avoided; instead we use polar coordinates with a
*numerical* angular integral (no closed form), which is independent of the
closed-form angular kernel used by the library.
Route 2: brute-force tensor midpoint grid on [-R, R]^2 at three refinements,
Richardson-extrapolated in h, then in R.
"""
import numpy as np
from scipy import integrate


def integrand_polar(phi, r, p):
    k2 = r * r
    pk = p * r * np.cos(phi)
    return r * (1.0 / (p * p - 2 * pk + k2 + 1 + k2) - 1.0 / (2 * k2 + 1))


def route_polar(p):
    inner = lambda r: integrate.quad(integrand_polar, 0, 2 * np.pi, args=(r, p), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    a = integrate.quad(inner, 0, 10, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    b = integrate.quad(inner, 10, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return a + b


def route_tensor(p, R, n):
    h = 2 * R / n
    x = -R + h * (np.arange(n) + 0.5)
    kx, ky = np.meshgrid(x, x, indexing="ij")
    k2 = kx * kx + ky * ky
    f = 1.0 / ((p - kx) ** 2 + ky ** 2 + 1 + k2) - 1.0 / (2 * k2 + 1)
    return f.sum() * h * h


if __name__ == "__main__":
    p = 1.0
    print("polar route I(1) =", repr(route_polar(p)))
    for R in (20.0, 40.0, 80.0):
        vals = [route_tensor(p, R, n) for n in (int(40 * R), int(80 * R))]
        rich = vals[1] + (vals[1] - vals[0]) / 3.0
        print("tensor R=%g  I~%.10f" % (R, rich))
    print("I(0.5) polar =", repr(route_polar(0.5)))
    print("I(2) polar =", repr(route_polar(2.0)))
