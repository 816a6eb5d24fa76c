"""Matrix-basis functions f_mn and cyclic sums of products of Laguerre polynomials.

Truncated cyclic sums sum_{m_1..m_J <= m_max} prod_i A_i[m_i, m_{i+1}] are
evaluated as traces of products of transfer matrices A_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .special import laguerre

__all__ = [
    "CycleSpec",
    "PlanePoint",
    "f_mn",
    "lemma_sum",
    "corollary_sum",
    "finite_volume_cycle",
    "gaussian_limit",
    "gaussian_limit_check",
    "TruncationTooLarge",
]

MAX_INDEX = 400
MAX_TERMS = 10**7


class TruncationTooLarge(ValueError):
    """(m_max + 1)^J exceeds the truncation budget."""


@dataclass(frozen=True)
class CycleSpec:
    """Cycle data (z_i, t_i), i = 1..J, with cyclic index identification."""

    z: tuple
    t: tuple

    def __post_init__(self):
        z = tuple(complex(v) for v in np.atleast_1d(self.z))
        t = tuple(float(v) for v in np.atleast_1d(self.t))
        if len(z) != len(t) or not z:
            raise ValueError("z and t need the same positive length")
        if any(abs(v) >= 1 for v in z):
            raise ValueError("all |z_i| must be < 1")
        if any(v < 0 for v in t):
            raise ValueError("t_i must be nonnegative")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)

    @property
    def J(self):
        return len(self.z)

    def rotated(self, k):
        return CycleSpec(self.z[k:] + self.z[:k], self.t[k:] + self.t[:k])


@dataclass(frozen=True)
class PlanePoint:
    """Point (y0, y1) of R^2, identified with y0 + i y1."""

    y0: float
    y1: float

    @property
    def complex(self):
        return complex(self.y0, self.y1)

    @property
    def norm(self):
        return float(np.hypot(self.y0, self.y1))

    @property
    def phase(self):
        return float(np.arctan2(self.y1, self.y0))


def _as_complex(y):
    if isinstance(y, PlanePoint):
        return y.complex
    if isinstance(y, complex):
        return y
    arr = np.asarray(y, dtype=float)
    if arr.shape == (2,):
        return complex(arr[0], arr[1])
    return complex(y)


def f_mn(m, n, y, theta):
    """Matrix-basis function f_mn at y in R^2 for deformation parameter theta."""
    m, n = int(m), int(n)
    if m < 0 or n < 0:
        raise ValueError("indices must be nonnegative")
    if m > MAX_INDEX or n > MAX_INDEX:
        raise OverflowError(f"indices above {MAX_INDEX} are not supported")
    if not theta > 0:
        raise ValueError("theta must be positive")
    yc = _as_complex(y)
    r2 = abs(yc) ** 2
    sign = -1.0 if m % 2 else 1.0
    if r2 == 0:
        return complex(2.0 * sign) if m == n else 0j
    lag = float(laguerre(m, n - m, 2.0 * r2 / theta))
    if lag == 0:
        return 0j
    k = n - m
    log_mag = (0.5 * (lgamma(m + 1) - lgamma(n + 1)) + 0.5 * k * np.log(2.0 * r2 / theta)
               + np.log(abs(lag)) - r2 / theta)
    phase = np.exp(1j * k * np.angle(yc))
    return 2.0 * sign * np.sign(lag) * np.exp(log_mag) * phase


def _check_budget(m_max, J):
    if m_max < 0:
        raise ValueError("m_max must be nonnegative")
    if (m_max + 1) ** J > MAX_TERMS:
        raise TruncationTooLarge(f"(m_max+1)^J = {(m_max + 1) ** J} exceeds {MAX_TERMS}")


def _trace_of_product(mats):
    acc = mats[0]
    for mat in mats[1:]:
        acc = acc @ mat
    return complex(np.trace(acc))


def _lemma_closed(spec):
    z = np.array(spec.z)
    t = np.array(spec.t)
    J = spec.J
    prod = np.prod(z)
    num = 0j
    for i in range(1, J + 1):
        for j in range(1, J + 1):
            # z_{j+i} ... z_{J+i} with 1-based cyclic indices
            idx = [(k - 1) % J for k in range(j + i, J + i + 1)]
            num += t[i - 1] * np.prod(z[idx])
    return complex(np.exp(-num / (1 - prod)) / (1 - prod))


def lemma_sum(spec, m_max=None):
    """Cyclic Laguerre sum: closed form (``m_max=None``) or truncated at m_max."""
    if m_max is None:
        return _lemma_closed(spec)
    m_max = int(m_max)
    _check_budget(m_max, spec.J)
    idx = np.arange(m_max + 1)
    mats = []
    for z, t in zip(spec.z, spec.t):
        a = np.empty((m_max + 1, m_max + 1), dtype=complex)
        for m in idx:
            for mp in idx:
                a[m, mp] = laguerre(int(m), int(mp - m), t)
            a[m, :] *= z**m
        mats.append(a)
    return _trace_of_product(mats)


def _corollary_closed(xs, z, theta):
    J = len(xs)
    mz = -np.asarray(z, dtype=complex)
    P = np.prod(mz)
    den = 1 - P
    sq = sum(abs(x) ** 2 for x in xs)
    expo = -(sq / theta) * (1 + P) / den
    cross = 0j
    for k in range(J):
        for l in range(k + 1, J):
            xkxl = xs[k] * np.conj(xs[l])
            inner = np.prod(mz[k + 1:l + 1])
            outer = np.prod([mz[(q) % J] for q in range(l + 1, J + k + 1)])
            cross += xkxl * inner / den + np.conj(xkxl) * outer / den
    expo -= 2.0 / theta * cross
    return complex(2.0**J / den * np.exp(expo))


def corollary_sum(points, z, theta, m_max=None):
    """sum prod_i f_{m_i m_{i+1}}(x_i) z_i^{m_i}: closed form or truncated."""
    xs = [_as_complex(p) for p in points]
    z = [complex(v) for v in np.atleast_1d(z)]
    if len(xs) != len(z) or not xs:
        raise ValueError("need one z per point")
    if any(abs(v) >= 1 for v in z):
        raise ValueError("all |z_i| must be < 1")
    if not theta > 0:
        raise ValueError("theta must be positive")
    if m_max is None:
        return _corollary_closed(xs, z, theta)
    m_max = int(m_max)
    _check_budget(m_max, len(xs))
    mats = []
    for x, zi in zip(xs, z):
        f = np.array([[f_mn(m, mp, x, theta) for mp in range(m_max + 1)] for m in range(m_max + 1)])
        mats.append(f * (zi ** np.arange(m_max + 1))[:, None])
    return _trace_of_product(mats)


def finite_volume_cycle(j, positions, t, volume):
    """(1/(V j)) sum_M f_M(x_1..x_j) exp(-(t/sqrt V) |M|) at omega = 0, theta = 4 sqrt V.

    The 4D sum is the product of two plane sums with z_i = exp(-t/sqrt V).
    """
    pts = np.asarray(positions, dtype=float)
    if pts.shape != (j, 4):
        raise ValueError("positions must be a (j, 4) array")
    if not (t > 0 and volume > 0):
        raise ValueError("t and V must be positive")
    sv = np.sqrt(volume)
    theta = 4.0 * sv
    z = [np.exp(-t / sv)] * j
    first = corollary_sum([complex(p[0], p[1]) for p in pts], z, theta)
    second = corollary_sum([complex(p[2], p[3]) for p in pts], z, theta)
    return complex(first * second / (volume * j))


def gaussian_limit(j, positions, t):
    """V -> infinity limit of the cycle sum: 4^j/(j^3 t^2) exp(-|xi|^2/(2 j t)), zero for odd j."""
    if j % 2:
        return 0.0
    pts = np.asarray(positions, dtype=float)
    xi = np.array([(-1) ** i for i in range(j)], dtype=float) @ pts
    return float(4.0**j / (j**3 * t**2) * np.exp(-np.dot(xi, xi) / (2 * j * t)))


def gaussian_limit_check(j, positions, t, volumes=(1e2, 1e4, 1e6)):
    """Deviation of the finite-volume cycle sum from its limit along a V ladder.

    For even j the relative deviations are returned; for odd j, where the
    limit vanishes, the absolute finite-volume values.
    """
    limit = gaussian_limit(j, positions, t)
    out = []
    for v in volumes:
        val = finite_volume_cycle(j, positions, t, v)
        out.append(float(abs(val - limit) / abs(limit)) if limit else float(abs(val)))
    return out
