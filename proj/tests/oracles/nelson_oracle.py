"""Oracles for the 3d relativistic model: v(k) = (1+k^2)^(-1/4), w(k) = sqrt(1+k^2).

Regularized diagonal integral with a numerical polar-angle integral, and the
ball-cutoff self-energy E(L) = int_{|k|<L} v^2/(k^2+w) dk by direct quadrature.
"""
import numpy as np
from scipy import integrate

w = lambda r: np.sqrt(1 + r * r)
v2 = lambda r: 1.0 / np.sqrt(1 + r * r)


def reg_I(p, env):
    def inner(r):
        f = lambda c: 1.0 / (r * r + p * p - 2 * r * p * c + env + w(r))
        ang = 2 * np.pi * integrate.quad(f, -1, 1, epsabs=1e-15, epsrel=1e-13)[0]
        return r * r * v2(r) * (ang - 4 * np.pi / (r * r + w(r)))
    pts = [0, 1, 4, 20, 100]
    s = sum(integrate.quad(inner, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)[0] for a, b in zip(pts, pts[1:]))
    return s + integrate.quad(inner, 100, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)[0]


def self_energy(L):
    f = lambda r: 4 * np.pi * r * r * v2(r) / (r * r + w(r))
    pts = [0.0] + [x for x in (1, 10, 100, 1000, 10000) if x < L] + [L]
    return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0] for a, b in zip(pts, pts[1:]))


if __name__ == "__main__":
    print("I(1,0) =", repr(reg_I(1.0, 0.0)))
    print("I(0.5,2) =", repr(reg_I(0.5, 2.0)))
    print("I(3,1.5) =", repr(reg_I(3.0, 1.5)))
    for L in (10, 100, 1000, 10000):
        print("E(%g) = %r" % (L, self_energy(L)))
    for L in (50, 100, 200):
        print("E(2L)-E(L) L=%g: %r  target %r" % (L, self_energy(2 * L) - self_energy(L), 4 * np.pi * np.log(2)))
    print("E(1e4)/E(1e2) =", self_energy(1e4) / self_energy(1e2))
