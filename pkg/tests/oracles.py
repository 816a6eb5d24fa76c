"""Independent reference implementations used only by the tests."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
from scipy import integrate


def laguerre_exact(m, alpha, t):
    """L_m^alpha(t) in exact rational arithmetic from the falling-factorial series."""
    t = Fraction(t)
    total = Fraction(0)
    for k in range(m + 1):
        top, j = m + alpha, m - k
        binom = Fraction(1)
        for i in range(j):
            binom *= Fraction(top - i, i + 1)
        total += binom * (-t) ** k / math.factorial(k)
    return total


def bessel_k_integral(nu, z):
    """K_nu(z) = int_0^inf exp(-z cosh s) cosh(nu s) ds."""
    # beyond s_max the integrand is below e^-700 of its peak
    s_max = math.acosh(1 + 750.0 / z) + 1.0
    val, _ = integrate.quad(lambda s: math.exp(-z * math.cosh(s) + nu * s) * 0.5 * (1 + math.exp(-2 * nu * s)),
                            0, s_max, epsabs=0, epsrel=1e-13, limit=400)
    return val


def bessel_j_integral(n, x):
    """J_n(x) = (1/pi) int_0^pi cos(n theta - x sin theta) d theta (400-point Gauss-Legendre)."""
    th, w = np.polynomial.legendre.leggauss(400)
    th = 0.5 * math.pi * (th + 1)
    return float(0.5 * np.dot(w, np.cos(n * th - x * np.sin(th))))


def fourier4_bruteforce(F, r):
    """int d^4p/(2 pi)^4 e^{i<p, xi>} F(|p|) as an iterated (p, polar angle) integral.

    The angular measure on S^3 is 4 pi sin^2(theta) d theta, integrated by a
    high-order Gauss-Legendre rule; the outer oscillatory integral is
    accelerated by mpmath.
    """
    th, wt = np.polynomial.legendre.leggauss(200)
    th = 0.5 * math.pi * (th + 1)
    wt = 0.5 * math.pi * wt * np.sin(th) ** 2
    cth = np.cos(th)

    def outer(p):
        p = float(p)
        return p**3 * F(p) * float(wt @ np.cos(p * r * cth))

    with mp.workdps(15):
        val = mp.quadosc(outer, [0, mp.inf], period=2 * mp.pi / r)
    return float(4 * mp.pi * val / (2 * mp.pi) ** 4)


def truncated_hilbert_free(a, lam2):
    """(1/pi) PV int_0^{lam2} dp / ((1 + p)(p - a)) in closed form."""
    return (math.log((lam2 - a) / (1 + lam2)) - math.log(a)) / (math.pi * (1 + a))
