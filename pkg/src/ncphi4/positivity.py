"""Finite-order tests of the Stieltjes property and complete monotonicity.

A function f on R_+ is Stieltjes iff

    (S1)  f(x) >= 0,
    (S2)  (-1)^n d^{2n+1}/dx^{2n+1} (x^{n+1} f(x)) >= 0,   n = 1, 2, ...

and completely monotone iff (-1)^n f^(n)(x) >= 0 for all n.  Derivatives
come from a Chebyshev interpolant; each value carries an error estimate,
and a condition fails only when the value is below minus that estimate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate as sint
from scipy.fft import dct

from .quadrature import SampledFunction, gauss_legendre_pieces
from .special import gamma_fn

__all__ = [
    "ChebFit",
    "ChebDerivative",
    "cheb_derivative",
    "WidderReport",
    "widder_check",
    "cm_check",
    "SpectralMeasure",
    "stieltjes_forward",
    "order_lift_check",
]

MAX_ORDER = 11


@lru_cache(maxsize=None)
def _stirling1(k):
    """Signed Stirling numbers s(k, j), j = 0..k."""
    row = [1]
    for n in range(k):
        new = [0] * (len(row) + 1)
        for j, v in enumerate(row):
            new[j + 1] += v
            new[j] -= n * v
        row = new
    return tuple(row)


@lru_cache(maxsize=None)
def _cheb_der_matrix(degree, j):
    """Columns hold the Chebyshev coefficients of d^j T_m / ds^j."""
    eye = np.eye(degree + 1)
    out = np.zeros((degree + 1, degree + 1))
    for m in range(degree + 1):
        c = C.chebder(eye[m], j) if j else eye[m]
        out[: len(c), m] = c
    out.setflags(write=False)
    return out


class ChebFit:
    """Degree-d Chebyshev interpolant of f on [0, X_max] and its derivatives.

    With ``stretch="log"`` the interpolant is built in u = log(1 + x) and
    x-derivatives follow from (1+x)^k f^(k)(x) = sum_j s(k, j) g^(j)(u)
    with signed Stirling numbers s(k, j).  ``error_bound(x, k)`` is
    eps * sum_m |d^j T_m / du^j| pushed through the same map, where eps is
    the size of the trailing quarter of the coefficients.
    """

    def __init__(self, f, x_max=50.0, degree=64, stretch="affine"):
        if stretch not in ("affine", "log"):
            raise ValueError("stretch must be 'affine' or 'log'")
        if not x_max > 0:
            raise ValueError("x_max must be positive")
        if int(degree) < 2:
            raise ValueError("degree must be at least 2")
        self.x_max = float(x_max)
        self.degree = int(degree)
        self.stretch = stretch
        u_max = np.log1p(self.x_max) if stretch == "log" else self.x_max
        self.u_max = float(u_max)
        k = np.arange(self.degree + 1)
        s = np.cos(np.pi * (k + 0.5) / (self.degree + 1))
        self.nodes = self._to_x(0.5 * u_max * (s + 1.0))
        vals = np.asarray(f(self.nodes), dtype=float)
        if vals.shape != self.nodes.shape or not np.all(np.isfinite(vals)):
            raise FloatingPointError("function values at the Chebyshev nodes are not finite")
        # interpolation coefficients at the first-kind nodes (DCT-II)
        self.coef = dct(vals, type=2) / (self.degree + 1)
        self.coef[0] *= 0.5
        tail = np.abs(self.coef[(3 * self.degree) // 4:])
        self.eps = max(float(tail.max()), 16 * np.finfo(float).eps * float(np.abs(self.coef).max()))

    def _to_x(self, u):
        return np.expm1(u) if self.stretch == "log" else u

    def _to_s(self, x):
        u = np.log1p(x) if self.stretch == "log" else x
        return 2.0 * u / self.u_max - 1.0

    def _check(self, x, k):
        if k < 0 or k > self.degree - 2:
            raise ValueError("derivative order must satisfy 0 <= k <= degree - 2")
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.x_max * (1 + 1e-12)):
            raise ValueError("evaluation point outside the fit domain")
        return x

    def _u_deriv(self, s, j):
        return C.chebval(s, C.chebder(self.coef, j) if j else self.coef) * (2.0 / self.u_max) ** j

    def _u_basis_abs(self, s, j):
        s = np.asarray(s, dtype=float)
        vander = C.chebvander(s.ravel(), self.degree)
        total = np.sum(np.abs(vander @ _cheb_der_matrix(self.degree, j)), axis=-1)
        return total.reshape(s.shape) * (2.0 / self.u_max) ** j

    def _combine(self, x, k, fn, absolute):
        s = self._to_s(x)
        if self.stretch == "affine" or k == 0:
            return fn(s, k)
        st = _stirling1(k)
        total = np.zeros(np.shape(s))
        for j in range(1, k + 1):
            coef = abs(st[j]) if absolute else st[j]
            total = total + coef * fn(s, j)
        return total / (1.0 + x) ** k

    def derivative(self, x, k=0):
        out = self._combine(self._check(x, k), k, self._u_deriv, absolute=False)
        return float(out) if np.ndim(out) == 0 else out

    def error_bound(self, x, k=0):
        out = self.eps * self._combine(self._check(x, k), k, self._u_basis_abs, absolute=True)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def info(self):
        return {"degree": self.degree, "domain": [0.0, self.x_max], "stretch": self.stretch}


class ChebDerivative:
    """Fixed-order view of a ChebFit: ``d(x)`` and ``d.error_bound(x)``."""

    def __init__(self, fit, order):
        if order < 0 or order > fit.degree - 2:
            raise ValueError("derivative order must satisfy 0 <= k <= degree - 2")
        self.fit = fit
        self.order = order

    @property
    def nodes(self):
        return self.fit.nodes

    def __call__(self, x):
        return self.fit.derivative(x, self.order)

    def error_bound(self, x):
        return self.fit.error_bound(x, self.order)


def cheb_derivative(f, x_max=50.0, degree=64, order=0, stretch="affine"):
    """Order-``order`` derivative of the degree-``degree`` Chebyshev fit of f."""
    if order < 0 or order > degree - 2:
        raise ValueError("derivative order must satisfy 0 <= k <= degree - 2")
    return ChebDerivative(ChebFit(f, x_max, degree, stretch), order)


@dataclass
class WidderReport:
    """Per-order verdicts with the signed minimum found at the probes.

    ``minima[n]`` is (x, value, bound) at the probe where value + bound is
    smallest.  For kind "widder" slot 0 is (S1) and slot n >= 1 is (S2).
    """

    kind: str
    verdicts: list
    minima: list
    first_failure: tuple | None
    engine: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts)

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _report(kind, vals_by_n, bounds_by_n, probes, engine):
    verdicts, minima, first = [], [], None
    for n, (v, b) in enumerate(zip(vals_by_n, bounds_by_n)):
        margin = v + b
        i = int(np.argmin(margin))
        minima.append((float(probes[i]), float(v[i]), float(b[i])))
        bad = np.nonzero(margin < 0)[0]
        verdicts.append(bool(len(bad) == 0))
        if len(bad) and first is None:
            j = bad[0]
            first = (n, float(probes[j]), float(v[j]))
    return WidderReport(kind, verdicts, minima, first, engine)


def _probes(probe_points, x_max):
    if probe_points is None:
        return np.geomspace(1e-2, 0.9 * x_max, 200)
    p = np.asarray(probe_points, dtype=float)
    if np.any(p <= 0) or np.any(p > x_max):
        raise ValueError("probe points must lie in (0, x_max]")
    return p


def widder_check(f, n_max=4, probe_points=None, x_max=50.0, degree=64, stretch="log"):
    """Check (S1) and (S2) for n = 1..n_max at the probe points."""
    if not 0 <= n_max <= 5:
        raise ValueError("n_max must lie in 0..5")
    x = _probes(probe_points, x_max)
    fit = ChebFit(f, x_max, degree, stretch)
    vals = {k: fit.derivative(x, k) for k in range(2 * n_max + 2)}
    errs = {k: fit.error_bound(x, k) for k in range(2 * n_max + 2)}
    out_v, out_b = [vals[0]], [errs[0]]
    for n in range(1, n_max + 1):
        m = 2 * n + 1
        v = np.zeros_like(x)
        b = np.zeros_like(x)
        for i in range(0, min(m, n + 1) + 1):
            # i-th derivative of x^(n+1)
            dpow = comb(m, i) * (np.prod(range(n + 2 - i, n + 2)) if i else 1) * x ** (n + 1 - i)
            v += dpow * vals[m - i]
            b += np.abs(dpow) * errs[m - i]
        out_v.append((-1) ** n * v)
        out_b.append(b)
    return _report("widder", out_v, out_b, x, fit.info)


def cm_check(f, n_max=4, probe_points=None, x_max=50.0, degree=64, stretch="log"):
    """Check (-1)^n f^(n) >= 0 for n = 0..n_max at the probe points."""
    if not 0 <= n_max <= MAX_ORDER:
        raise ValueError(f"n_max must lie in 0..{MAX_ORDER}")
    x = _probes(probe_points, x_max)
    fit = ChebFit(f, x_max, degree, stretch)
    out_v = [(-1) ** n * fit.derivative(x, n) for n in range(n_max + 1)]
    out_b = [fit.error_bound(x, n) for n in range(n_max + 1)]
    return _report("cm", out_v, out_b, x, fit.info)


@dataclass(frozen=True)
class SpectralMeasure:
    """Positive measure: point masses plus an optional density.

    ``density`` is a SampledFunction (support [0, its cutoff]) or a callable
    together with ``density_support``.
    """

    atoms: tuple = ()
    density: object = None
    density_support: tuple | None = None

    def __post_init__(self):
        atoms = tuple((float(m), float(w)) for m, w in self.atoms)
        for m, w in atoms:
            if m < 0 or w <= 0:
                raise ValueError("atoms need location >= 0 and weight > 0")
        object.__setattr__(self, "atoms", atoms)
        if self.density is not None:
            if isinstance(self.density, SampledFunction):
                if np.any(self.density.values < 0):
                    raise ValueError("density must be nonnegative")
                if self.density_support is None:
                    object.__setattr__(self, "density_support", (0.0, self.density.grid.lambda_cutoff))
            elif self.density_support is None:
                raise ValueError("callable densities need density_support")

    def _density_rule(self):
        lo, hi = self.density_support
        if isinstance(self.density, SampledFunction):
            pts = np.concatenate(([0.0], self.density.grid.nodes))
            inner = pts[(pts > lo) & (pts < hi)]
        else:
            inner = np.linspace(lo, hi, 257)[1:-1]
        return gauss_legendre_pieces(np.concatenate(([lo], inner, [hi])), order=8)


def stieltjes_forward(measure, x, kappa=1.0):
    """sum_atoms w (x + M^2)^-kappa + int rho(M^2) (x + M^2)^-kappa dM^2."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x must be nonnegative")
    out = np.zeros(xa.shape)
    for m, w in measure.atoms:
        out = out + w * (xa + m) ** (-kappa)
    if measure.density is not None:
        nodes, weights = measure._density_rule()
        rho = np.asarray(measure.density(nodes), dtype=float)
        out = out + np.sum(weights * rho * (xa[..., None] + nodes) ** (-kappa), axis=-1)
    return float(out) if out.ndim == 0 else out


def order_lift_check(kappa, kappa_prime, x, t):
    """Both sides of the order-lift identity for (x + t)^-kappa.

    The right side integrates u^(kappa'-kappa-1) (s+u)^-kappa' (s = x + t)
    on [0, 20 s] with an algebraic-weight rule and adds the binomial series
    of the tail.
    """
    if not 0 < kappa < kappa_prime:
        raise ValueError("need 0 < kappa < kappa_prime")
    s = float(x) + float(t)
    if not s > 0:
        raise ValueError("x + t must be positive")
    lhs = s ** (-kappa)
    a = kappa_prime - kappa
    upper = 20.0 * s
    body, _ = sint.quad(lambda u: (s + u) ** (-kappa_prime), 0.0, upper,
                        weight="alg", wvar=(a - 1.0, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)
    tail, term, k = 0.0, 1.0, 0
    while True:
        # binom(-kappa', k) (s/U)^k U^-kappa / (kappa + k)
        contrib = term * upper ** (-kappa) / (kappa + k)
        tail += contrib
        if abs(contrib) < 1e-18 * abs(tail) or k > 200:
            break
        term *= (-kappa_prime - k) / (k + 1) * (s / upper)
        k += 1
    pref = gamma_fn(kappa_prime) / (gamma_fn(kappa) * gamma_fn(a))
    rhs = pref * (body + tail)
    return lhs, rhs, abs(lhs - rhs)
