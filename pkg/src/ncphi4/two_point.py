"""General 2-point function G(a, b) from the boundary solution.

    G(a, b) = exp(H_a[theta_b] - H_0[theta_0]) / sqrt((lam pi a)^2 + (b + B_a)^2),
    theta_b(p) = arctan_[0,pi](lam pi p, b + B_p),

with B_p = (1 + lam pi p H_p[G(., 0)]) / G(p, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .boundary import BoundarySolution, NegativeCoupling, b_table
from .quadrature import SampledFunction, hilbert, hilbert_at_nodes
from .special import arctan_upper

__all__ = [
    "TwoPointEvaluator",
    "theta_angle",
    "g_ab",
    "g_diag",
    "perturbative_diag",
    "fit_exponent",
    "power_law_fit",
    "FitResult",
]


@dataclass(frozen=True, eq=False)
class TwoPointEvaluator:
    """Precomputed H_p[G(., 0)] and B_p on the boundary grid.

    ``hilbert_of_g`` and ``b_nodes`` are node arrays.  Their last entries
    sit on the cutoff, where H diverges, and hold -inf.
    """

    g: SampledFunction
    lam: float
    hilbert_of_g: np.ndarray = field(repr=False)
    b_nodes: np.ndarray = field(repr=False)
    boundary: BoundarySolution | None = field(default=None, repr=False)

    @classmethod
    def from_sampled(cls, g, lam, boundary=None):
        if lam < 0:
            raise NegativeCoupling("G(a, b) is only defined here for lam >= 0")
        if lam == 0:
            q = g.grid.nodes
            h = hilbert_at_nodes(g)
            return cls(g, 0.0, h, 1.0 + q, boundary)
        return cls(g, float(lam), hilbert_at_nodes(g), b_table(g, lam), boundary)

    @classmethod
    def from_solution(cls, solution):
        return cls.from_sampled(solution.g, solution.params.lam, boundary=solution)

    @property
    def grid(self):
        return self.g.grid

    def b_at(self, a):
        """B_a at a scalar a in [0, Lambda^2]."""
        a = float(a)
        q = self.grid.nodes
        if self.lam == 0:
            return 1.0 + a
        if a == 0:
            return 1.0 / self.g.value_at_zero
        k = np.searchsorted(q, a)
        if k < len(q) and q[k] == a:
            return float(self.b_nodes[k])
        return (1.0 + self.lam * np.pi * a * hilbert(self.g, a)) / self.g(a)

    def theta(self, b):
        """theta_b sampled on the grid (value 0 at p = 0)."""
        return _theta_cached(self, float(b))

    @property
    def h0_theta0(self):
        return _h0_cached(self)


@lru_cache(maxsize=256)
def _theta_cached(ev, b):
    q = ev.grid.nodes
    vals = arctan_upper(ev.lam * np.pi * q, b + ev.b_nodes)
    return SampledFunction(ev.grid, vals, tail_exponent=0.0, value_at_zero=0.0)


@lru_cache(maxsize=32)
def _h0_cached(ev):
    return hilbert(ev.theta(0.0), 0.0)


def theta_angle(ev, b, p):
    """theta_b(p) in [0, pi]."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    if p == 0:
        return 0.0
    return float(arctan_upper(ev.lam * np.pi * p, b + ev.b_at(p)))


def g_ab(ev, a, b):
    """G(a, b) for 0 <= a <= Lambda^2, b >= 0 (``a`` may be an array)."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    lam2 = ev.grid.lambda_cutoff
    if np.any(a_arr < 0) or np.any(a_arr > lam2):
        raise ValueError("a must lie in [0, cutoff]")
    if ev.lam == 0:
        out = 1.0 / (1.0 + a_arr + b)
    else:
        out = np.zeros(a_arr.shape)
        inner = a_arr < lam2
        if np.any(inner):
            th = ev.theta(b)
            h = np.atleast_1d(hilbert(th, a_arr[inner]))
            bb = np.array([ev.b_at(x) for x in a_arr[inner]])
            out[inner] = np.exp(h - ev.h0_theta0) / np.hypot(ev.lam * np.pi * a_arr[inner], b + bb)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite G(a, b)")
    if np.ndim(a) == 0:
        return float(out[0])
    return out


def g_diag(ev, a):
    """Diagonal G(a, a)."""
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.array([g_ab(ev, x, x) for x in a_arr])
    if np.ndim(a) == 0:
        return float(out[0])
    return out


def perturbative_diag(a, lam, dimension=4):
    """First-order diagonal 2-point function in D = 2 or D = 4."""
    a = np.asarray(a, dtype=float)
    base = 1.0 / (1.0 + 2 * a)
    lg = np.log1p(a)
    if dimension == 2:
        return base + lam * 2 * lg * base**2
    if dimension == 4:
        return base - lam * (2 + 2 * a) * lg * base**2
    raise ValueError("dimension must be 2 or 4")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def power_law_fit(x, y, min_samples=8, min_decades=1.0):
    """Least-squares fit of -log y against log x.

    Returns the slope (the decay exponent), intercept and R^2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be matching 1-d arrays")
    if len(x) < min_samples:
        raise ValueError(f"need at least {min_samples} samples")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(x), -np.log(y)
    if lx.max() - lx.min() < min_decades * np.log(10) * (1 - 1e-12):
        raise ValueError(f"samples must span at least {min_decades:g} decades")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), float(r2))


def fit_exponent(a, gaa, wf_param=0.0, full=False):
    """Decay exponent kappa of G(a, a) ~ (1 + 2(1+Y)a)^(-kappa).

    Needs at least 8 samples spanning two decades in ``a``.
    """
    a = np.asarray(a, dtype=float)
    if len(a) and (np.min(a) <= 0 or np.max(a) / np.min(a) < 100 * (1 - 1e-12)):
        raise ValueError("samples must span at least two decades in a")
    res = power_law_fit(1.0 + 2.0 * (1.0 + wf_param) * a, gaa, min_decades=0.0)
    return res if full else res.slope
