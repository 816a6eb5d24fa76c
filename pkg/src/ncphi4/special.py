"""Special functions used throughout the package.

Associated Laguerre polynomials (any integer upper index), the Bessel
functions K_nu, J_0 and J_1, the Gamma function and an arctangent on the
[0, pi] branch.  Everything here is pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Accuracy",
    "laguerre",
    "gamma_fn",
    "bessel_k",
    "bessel_j0",
    "bessel_j1",
    "bessel_j1_zeros",
    "arctan_upper",
    "K_SERIES_CROSSOVER",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Accuracy:
    """Stopping rule for the iterative series in this module."""

    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_ACCURACY = Accuracy()


# ---------------------------------------------------------------------------
# Laguerre polynomials
# ---------------------------------------------------------------------------

def laguerre(m, alpha, t):
    """Associated Laguerre polynomial L_m^alpha(t) for any integer ``alpha``.

    ``t`` may be an array.  For ``alpha >= 0`` the three-term recurrence in
    the degree is used (stable for t >= 0; the power series cancels badly
    for large m).  For ``-m <= alpha < 0`` the reflection

        L_m^alpha(t) = (-t)^(-alpha) (m+alpha)!/m! L_{m+alpha}^(-alpha)(t)

    maps back to a nonnegative upper index, the factorial ratio taken as a
    falling-factorial product.  For ``alpha < -m`` the finite series
    sum_k binom(m+alpha, m-k) (-t)^k / k! has terms of one sign and is
    summed directly.
    """
    m = int(m)
    alpha = int(alpha)
    if m < 0:
        raise ValueError("degree m must be nonnegative")
    t = np.asarray(t, dtype=float)
    if alpha < -m:
        return _laguerre_series(m, alpha, t)
    if alpha < 0:
        k = -alpha
        ratio = 1.0
        for i in range(m - k + 1, m + 1):
            ratio /= i
        return ratio * (-t) ** k * _laguerre_rec(m - k, k, t)
    return _laguerre_rec(m, alpha, t)


def _laguerre_rec(m, alpha, t):
    prev = np.ones_like(t)
    if m == 0:
        return prev if t.ndim else float(prev)
    cur = 1.0 + alpha - t
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 + alpha - t) * cur - (k + alpha) * prev) / (k + 1)
    return cur if t.ndim else float(cur)


def _laguerre_series(m, alpha, t):
    # binom(m+alpha, m) as a falling factorial; valid for negative m+alpha
    coef = 1.0
    for i in range(1, m + 1):
        coef *= (alpha + i) / i
    term = coef * np.ones_like(t)
    total = term.copy()
    for k in range(0, m):
        term = term * ((m - k) / ((alpha + k + 1) * (k + 1))) * (-t)
        total = total + term
    return total if t.ndim else float(total)


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x):
    """Gamma function via the Lanczos approximation (g=7, 9 terms).

    Arguments below 1/2 go through the reflection formula.  Nonpositive
    integers raise ``ValueError``.
    """
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise ValueError(f"Gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    a = _LANCZOS_COEF[0]
    t = x + _LANCZOS_G + 0.5
    for i in range(1, len(_LANCZOS_COEF)):
        a += _LANCZOS_COEF[i] / (x + i)
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


@lru_cache(maxsize=1)
def _rgamma_taylor():
    # Taylor coefficients of 1/Gamma(z) about z=0; c[1] = 1, c[2] = Euler gamma, ...
    import mpmath

    with mpmath.workdps(40):
        coefs = mpmath.taylor(mpmath.rgamma, 0, 28)
    return tuple(float(c) for c in coefs)


def _temme_gammas(mu):
    """gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2."""
    c = _rgamma_taylor()
    # 1/Gamma(1+x) = sum_{k>=1} c_k x^(k-1)
    gampl = sum(c[k] * mu ** (k - 1) for k in range(1, len(c)))
    gammi = sum(c[k] * (-mu) ** (k - 1) for k in range(1, len(c)))
    gam1 = -sum(c[k] * mu ** (k - 2) for k in range(2, len(c), 2))
    gam2 = sum(c[k] * mu ** (k - 1) for k in range(1, len(c), 2))
    return gam1, gam2, gampl, gammi


# ---------------------------------------------------------------------------
# Modified Bessel function K_nu
# ---------------------------------------------------------------------------

# Temme's series below this argument, Steed's continued fraction above.
K_SERIES_CROSSOVER = 2.0


def _k_mu_pair(mu, x, acc):
    """K_mu(x), K_{mu+1}(x) for |mu| <= 1/2."""
    if x < K_SERIES_CROSSOVER:
        x2 = 0.5 * x
        pimu = math.pi * mu
        fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = mu * d
        fact2 = 1.0 if abs(e) < EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _temme_gammas(mu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, acc.max_terms + 1):
            ff = (i * ff + p + q) / (i * i - mu * mu)
            c *= d / i
            p /= i - mu
            q /= i + mu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * min(acc.rel_tol, 1e-15):
                break
        else:
            raise ArithmeticError("Temme series for K_nu did not converge")
        return total, total1 * 2.0 / x
    # Steed's method for the continued fraction CF2 (Thompson-Barnett form)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, acc.max_terms + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < min(acc.rel_tol, 1e-15):
            break
    else:
        raise ArithmeticError("continued fraction for K_nu did not converge")
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def _bessel_k_scalar(nu, z, acc):
    nu = abs(float(nu))
    z = float(z)
    if not z > 0:
        raise ValueError("bessel_k requires z > 0")
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu, k1 = _k_mu_pair(mu, z, acc)
    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * (2.0 / z) * k1 + kmu
        if not math.isfinite(k1) and i < nl:
            raise OverflowError(f"K_{nu}({z}) overflows double precision")
    if not math.isfinite(kmu):
        raise OverflowError(f"K_{nu}({z}) overflows double precision")
    return kmu


def bessel_k(nu, z, accuracy=DEFAULT_ACCURACY):
    """Modified Bessel function of the second kind K_nu(z), z > 0.

    Temme's series is used for ``z < 2`` and Steed's continued fraction
    otherwise, followed by forward recurrence in the order.  Arrays of
    ``z`` are evaluated elementwise.
    """
    if np.ndim(z) == 0:
        return _bessel_k_scalar(nu, z, accuracy)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    for idx, zi in np.ndenumerate(z):
        out[idx] = _bessel_k_scalar(nu, zi, accuracy)
    return out


# ---------------------------------------------------------------------------
# Bessel functions J_0, J_1
# ---------------------------------------------------------------------------

_J_ASYMPTOTIC_FROM = 25.0


def _j01_miller(x):
    """J_0, J_1 for 0 < x <= 25 by normalised backward recurrence."""
    start = int(np.max(x)) + 40
    start += start % 2
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j0 = j1 = None
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        # j now holds the unnormalised J_{k-1}
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 == 1:
            j1 = j.copy()
        big = np.abs(j) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j *= scale
            jp1 *= scale
            norm *= scale
            if j1 is not None:
                j1 *= scale
    j0 = j
    norm += j0
    return j0 / norm, j1 / norm


def _j_hankel(n, x):
    """Hankel asymptotic expansion of J_n for large x (n = 0 or 1)."""
    mu = 4.0 * n * n
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 40):
        term = term * (mu - (2 * k - 1) ** 2) * inv8x / k
        if k % 2 == 1:
            q += term * (-1) ** ((k - 1) // 2)
        else:
            p += term * (-1) ** (k // 2)
        if np.all(np.abs(term) < 1e-17):
            break
    chi = x - (2 * n + 1) * math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _j01(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Bessel J is evaluated for x >= 0 only")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    tiny = x < 1e-6
    j0[tiny] = 1.0 - x[tiny] ** 2 / 4.0
    j1[tiny] = 0.5 * x[tiny] - x[tiny] ** 3 / 16.0
    mid = (~tiny) & (x <= _J_ASYMPTOTIC_FROM)
    if np.any(mid):
        j0[mid], j1[mid] = _j01_miller(x[mid])
    big = x > _J_ASYMPTOTIC_FROM
    if np.any(big):
        j0[big] = _j_hankel(0, x[big])
        j1[big] = _j_hankel(1, x[big])
    if scalar:
        return float(j0[0]), float(j1[0])
    return j0, j1


def bessel_j0(x):
    """Bessel function J_0(x) for x >= 0."""
    return _j01(x)[0]


def bessel_j1(x):
    """Bessel function J_1(x) for x >= 0.

    Normalised Miller recurrence up to x = 25, Hankel's asymptotic series
    beyond.
    """
    return _j01(x)[1]


@lru_cache(maxsize=64)
def _j1_zeros_cached(count):
    k = np.arange(1, count + 1, dtype=float)
    beta = (k + 0.25) * math.pi
    # McMahon's expansion for nu = 1 (mu = 4)
    x = beta - 3.0 / (8.0 * beta) + 12.0 / (8.0 * beta) ** 3
    for _ in range(4):
        j0, j1 = _j01(x)
        x = x - j1 / (j0 - j1 / x)
    x.setflags(write=False)
    return x


def bessel_j1_zeros(count):
    """First ``count`` positive zeros of J_1."""
    return _j1_zeros_cached(int(count))


# ---------------------------------------------------------------------------
# Arctangent on [0, pi]
# ---------------------------------------------------------------------------

def arctan_upper(num, den):
    """Angle theta in [0, pi] with tan(theta) = num/den, for num >= 0.

    ``den = 0`` gives pi/2, and the angle moves continuously through pi/2
    as ``den`` changes sign at fixed positive ``num``.
    """
    num_a = np.asarray(num, dtype=float)
    if np.any(num_a < 0):
        raise ValueError("arctan_upper is only defined for num >= 0")
    out = np.arctan2(num_a, np.asarray(den, dtype=float))
    if out.ndim == 0:
        return float(out)
    return out
