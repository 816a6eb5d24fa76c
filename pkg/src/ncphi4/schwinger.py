"""Position-space Schwinger functions assembled from diagonal matrix correlators.

The connected N-point function is

    S(x_1..x_N) = 1/(64 pi^2) sum_{j_1+..+j_B = N, j even} sum_{sigma in S_N}
                  prod_beta (4^j_beta / j_beta) int d^4p_beta / (4 pi^2) e^{i <p_beta, xi_beta>}
                  G(a_1 .. a_1 | ... | a_B .. a_B),

with a_beta = |p_beta|^2 / (2 (1 + Y)) and xi_beta the alternating sum of
the positions in cycle beta.  Every 4D integral of a radial function is
reduced to the Hankel-type integral

    int d^4p/(2 pi)^4 e^{i<p, xi>} F(|p|) = 1/(4 pi^2 r) int_0^inf p^2 J_1(p r) F(p) dp,

evaluated as a fixed linear rule (nodes, weights) so that products and
tensor products of transforms share one quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, pi

import numpy as np
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

from .quadrature import gauss_legendre_pieces
from .special import bessel_j1, bessel_j1_zeros, bessel_k, gamma_fn
from .two_point import g_diag, power_law_fit

__all__ = [
    "RadialKernel",
    "TransformNonConvergence",
    "radial_fourier4",
    "radial_rule",
    "closed_form_2pt",
    "schwinger2",
    "npoint",
    "even_compositions",
    "cluster_limit4",
    "anomalous_fit",
    "FreeProvider",
    "FactorizedProvider",
    "GaussianProvider",
    "TwoPointProvider",
    "TabulatedProvider",
    "ZeroProvider",
]

GL_ORDER = 16
P_SMOOTH = 60.0
EULER_TERMS = 30
XI0_PMAX = 1e4


class TransformNonConvergence(ArithmeticError):
    """The accelerated oscillatory tail or the xi = 0 integral did not settle."""


@dataclass(frozen=True)
class RadialKernel:
    """F(|p|) with its documented large-p decay exponent (F ~ p^-decay)."""

    evaluate: object
    decay_exponent: float | None = None

    def __call__(self, p):
        return self.evaluate(p)


@lru_cache(maxsize=4096)
def radial_rule(r):
    """Nodes p_i and weights such that sum w_i F(p_i) = 1/(4 pi^2 r) int p^2 J_1(pr) F dp.

    Below x = pr = P_SMOOTH r the integral is split at the zeros of J_1 and
    at geometric breakpoints r * [1e-3, P_SMOOTH]; beyond it the next
    EULER_TERMS half-waves are combined by binomial (Euler) averaging of the
    partial sums.  A second weight set with four fewer tail terms is
    returned for the convergence check.
    """
    r = float(r)
    if not r > 0:
        raise ValueError("r must be positive")
    x_smooth = P_SMOOTH * r
    count = int(x_smooth / pi) + EULER_TERMS + 8
    zeros = bessel_j1_zeros(count)
    inner_zeros = zeros[zeros < x_smooth]
    k0 = len(inner_zeros)
    # the oscillatory part starts at the first zero past x_smooth
    x_a = zeros[k0]
    geo = r * np.geomspace(1e-3, P_SMOOTH, 48)
    breaks = np.unique(np.concatenate(([0.0], geo[geo < x_a], inner_zeros, [x_a])))
    xa, wa = gauss_legendre_pieces(breaks, GL_ORDER)
    tail_breaks = zeros[k0:k0 + EULER_TERMS + 1]
    xt, wt = gauss_legendre_pieces(tail_breaks, GL_ORDER)
    xt = xt.reshape(EULER_TERMS, GL_ORDER)
    wt = wt.reshape(EULER_TERMS, GL_ORDER)

    def euler(m):
        # interval i enters every partial sum S_j with j > i
        c = np.array([comb(m, j) for j in range(m + 1)], dtype=float) / 2.0**m
        tail_w = np.array([c[i + 1:].sum() for i in range(m)])
        return tail_w

    x = np.concatenate((xa, xt.ravel()))
    kern = x**2 * bessel_j1(x) / r**3
    pref = 1.0 / (4 * pi**2 * r)
    w_main = np.concatenate((wa, (wt * euler(EULER_TERMS)[:, None]).ravel())) * kern * pref
    short = np.zeros(EULER_TERMS)
    short[:EULER_TERMS - 4] = euler(EULER_TERMS - 4)
    w_check = np.concatenate((wa, (wt * short[:, None]).ravel())) * kern * pref
    p = x / r
    for arr in (p, w_main, w_check):
        arr.setflags(write=False)
    return p, w_main, w_check


@lru_cache(maxsize=1)
def _xi0_rule():
    """Nodes and weights for 1/(8 pi^2) int_0^inf p^3 F(p) dp truncated at XI0_PMAX."""
    breaks = np.concatenate(([0.0], np.geomspace(1e-3, XI0_PMAX, 120)))
    p, w = gauss_legendre_pieces(breaks, GL_ORDER)
    w = w * p**3 / (8 * pi**2)
    last = p > XI0_PMAX / 10
    return p, w, last


def _apply(F, rule_p, weights):
    vals = np.asarray(F(rule_p), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("kernel returned non-finite values")
    return float(np.dot(weights, vals))


def radial_fourier4(kernel, r, check=True):
    """int d^4p/(2 pi)^4 e^{i<p, xi>} F(|p|) at |xi| = r.

    ``r = 0`` uses the plain moment 1/(8 pi^2) int p^3 F dp.
    """
    r = float(r)
    decay = getattr(kernel, "decay_exponent", None)
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        if decay is not None and decay <= 4:
            raise TransformNonConvergence("xi = 0 moment diverges for decay exponent <= 4")
        p, w, last = _xi0_rule()
        vals = np.asarray(kernel(p), dtype=float)
        total = float(np.dot(w, vals))
        if check and abs(np.dot(w[last], vals[last])) > 1e-7 * max(abs(total), 1e-300):
            raise TransformNonConvergence("xi = 0 moment not converged at the truncation")
        return total
    if decay is not None and decay <= 1.5:
        raise TransformNonConvergence("radial transform diverges for decay exponent <= 1.5")
    p, w, w_chk = radial_rule(r)
    vals = np.asarray(kernel(p), dtype=float)
    val = float(np.dot(w, vals))
    if check:
        alt = float(np.dot(w_chk, vals))
        scale = float(np.dot(np.abs(w), np.abs(vals)))
        if abs(val - alt) > 1e-7 * scale:
            raise TransformNonConvergence(f"accelerated tail unstable at r={r:g}")
    return val


def closed_form_2pt(lam, r):
    """2^-lam / (4 pi^2 Gamma(1+lam)) K_{1-lam}(r) / r^(1-lam), for lam > -1."""
    if not lam > -1:
        raise ValueError("closed form needs lam > -1")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    nu = 1.0 - lam
    out = 2.0**(-lam) / (4 * pi**2 * gamma_fn(1.0 + lam)) * bessel_k(nu, r) / r**nu
    return float(out) if np.ndim(out) == 0 else out


def anomalous_fit(r, s, full=False):
    """Short-distance exponent: slope of -log S against log r."""
    res = power_law_fit(r, s, min_samples=8, min_decades=1.0)
    return res if full else res.slope


# providers ---------------------------------------------------------------


class Provider:
    """Source of G(a_1..a_1 | ... | a_B..a_B) for a cycle profile (j_1..j_B).

    ``evaluate(profile, args)`` broadcasts over array arguments.  Providers
    that factorize over boundary components also expose
    ``factor(j, a)`` with G = prod_beta factor(j_beta, a_beta).
    """

    factorized = False

    def supports(self, profile):
        return True

    def evaluate(self, profile, args):
        raise NotImplementedError

    def decay_exponent(self, j):
        return None


class ZeroProvider(Provider):
    factorized = True

    def supports(self, profile):
        return False

    def factor(self, j, a):
        return np.zeros_like(np.asarray(a, dtype=float))

    def evaluate(self, profile, args):
        return np.zeros(np.broadcast(*args).shape) if args else 0.0


class FactorizedProvider(Provider):
    """G(profile | args) = prod_beta g_{j_beta}(a_beta) on an allowed set of profiles.

    ``factors`` maps a cycle length j to a callable; ``profiles`` restricts
    the nonvanishing sectors (None allows any profile whose lengths all
    have a factor).
    """

    factorized = True

    def __init__(self, factors, profiles=None, decay=None):
        self.factors = dict(factors)
        self.profiles = None if profiles is None else {tuple(p) for p in profiles}
        self._decay = dict(decay or {})

    def supports(self, profile):
        profile = tuple(profile)
        if self.profiles is not None and profile not in self.profiles:
            return False
        return all(j in self.factors for j in profile)

    def factor(self, j, a):
        return self.factors[j](a)

    def evaluate(self, profile, args):
        if not self.supports(profile):
            return np.zeros(np.broadcast(*args).shape)
        out = 1.0
        for j, a in zip(profile, args):
            out = out * self.factor(j, a)
        return out

    def decay_exponent(self, j):
        return self._decay.get(j)


class FreeProvider(FactorizedProvider):
    """Free theory: only the (2,) sector, G(a, a) = 1/(1 + 2a)."""

    def __init__(self):
        super().__init__({2: lambda a: 1.0 / (1.0 + 2.0 * np.asarray(a, dtype=float))}, profiles=[(2,)], decay={2: 2.0})


class GaussianProvider(FactorizedProvider):
    """Toy provider prod_beta exp(-width a_beta) on every even profile."""

    def __init__(self, width=100.0, max_n=6):
        self.width = float(width)
        f = lambda a: np.exp(-self.width * np.asarray(a, dtype=float))  # noqa: E731
        super().__init__({j: f for j in range(2, max_n + 1, 2)})


class TwoPointProvider(FactorizedProvider):
    """(2,) sector from a TwoPointEvaluator.

    G(a, a) is tabulated on ``n_table`` log-spaced points in [0, a_max] and
    continued beyond a_max by the power law a^-(1 + lam).
    """

    def __init__(self, evaluator, a_max=None, n_table=400):
        lam2 = evaluator.grid.lambda_cutoff
        a_max = float(a_max if a_max is not None else lam2 / 100.0)
        if not 0 < a_max < lam2:
            raise ValueError("a_max must lie inside the cutoff")
        a = np.concatenate(([0.0], np.geomspace(1e-6, a_max, n_table - 1)))
        vals = g_diag(evaluator, a)
        self.a_table = a
        self.g_table = vals
        self.a_max = a_max
        self.exponent = -(1.0 + evaluator.lam)
        self._interp = PchipInterpolator(np.log1p(a), np.log(vals))
        super().__init__({2: self._gdiag}, profiles=[(2,)], decay={2: 2.0 * (1.0 + evaluator.lam)})

    def _gdiag(self, a):
        a = np.asarray(a, dtype=float)
        inside = a <= self.a_max
        out = np.empty(a.shape)
        out[inside] = np.exp(self._interp(np.log1p(a[inside])))
        out[~inside] = self.g_table[-1] * (a[~inside] / self.a_max) ** self.exponent
        return out


class TabulatedProvider(Provider):
    """Provider read from a versioned text file.

    Format: first line ``# ncphi4-provider v1``; each block starts with
    ``# cycle_profile=j_1,...,j_B`` followed by rows ``a_1,...,a_B,value``
    on a rectangular grid.  One-component blocks are continued beyond the
    table by the power law through the last two rows; multi-component
    blocks vanish outside the table.
    """

    VERSION = "# ncphi4-provider v1"

    def __init__(self, tables):
        self.tables = {}
        for profile, rows in tables.items():
            self.tables[tuple(profile)] = self._build(tuple(profile), np.asarray(rows, dtype=float))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != cls.VERSION:
            raise ValueError("provider file: missing or unknown version header")
        tables, current = {}, None
        for ln in lines[1:]:
            if ln.startswith("# cycle_profile="):
                current = tuple(int(v) for v in ln.split("=", 1)[1].split(","))
                tables[current] = []
            elif ln.startswith("#"):
                continue
            else:
                if current is None:
                    raise ValueError("provider file: data row before a cycle_profile header")
                row = [float(v) for v in ln.split(",")]
                if len(row) != len(current) + 1:
                    raise ValueError("provider file: row length does not match the profile")
                tables[current].append(row)
        return cls(tables)

    @staticmethod
    def _build(profile, rows):
        b = len(profile)
        if any(j % 2 or j <= 0 for j in profile):
            raise ValueError("cycle lengths must be positive and even")
        if b == 1:
            order = np.argsort(rows[:, 0])
            a, v = rows[order, 0], rows[order, 1]
            interp = PchipInterpolator(a, v, extrapolate=False)
            slope = np.log(v[-1] / v[-2]) / np.log(a[-1] / a[-2]) if v[-1] > 0 and v[-2] > 0 and a[-2] > 0 else None

            def fn(x):
                x = np.asarray(x, dtype=float)
                out = np.zeros(x.shape)
                inside = x <= a[-1]
                out[inside] = interp(np.clip(x[inside], a[0], a[-1]))
                if slope is not None:
                    out[~inside] = v[-1] * (x[~inside] / a[-1]) ** slope
                return out

            return fn
        axes = [np.unique(rows[:, i]) for i in range(b)]
        shape = tuple(len(ax) for ax in axes)
        if np.prod(shape) != len(rows):
            raise ValueError("multi-component tables must be rectangular")
        idx = tuple(np.searchsorted(ax, rows[:, i]) for i, ax in enumerate(axes))
        grid_vals = np.zeros(shape)
        grid_vals[idx] = rows[:, -1]
        rgi = RegularGridInterpolator(axes, grid_vals, bounds_error=False, fill_value=0.0)
        return lambda *xs: rgi(np.stack(np.broadcast_arrays(*xs), axis=-1))

    @property
    def factorized(self):
        return all(len(p) == 1 for p in self.tables)

    def supports(self, profile):
        return tuple(profile) in self.tables

    def factor(self, j, a):
        return self.tables[(j,)](a)

    def evaluate(self, profile, args):
        profile = tuple(profile)
        if profile not in self.tables:
            return np.zeros(np.broadcast(*args).shape)
        fn = self.tables[profile]
        return fn(args[0]) if len(profile) == 1 else fn(*args)


# assembly ----------------------------------------------------------------


def even_compositions(n):
    """Ordered compositions of n into positive even parts."""
    if n == 0:
        return [()]
    out = []
    for first in range(2, n + 1, 2):
        out.extend((first,) + rest for rest in even_compositions(n - first))
    return out


def _alternating(points, idx):
    signs = np.array([(-1) ** i for i in range(len(idx))], dtype=float)
    return signs @ points[list(idx)]


def _terms(positions):
    """Yield (profile, sigma, [xi_beta]) for every literal term."""
    n = len(positions)
    for profile in even_compositions(n):
        for sigma in itertools.permutations(range(n)):
            xis, start = [], 0
            for j in profile:
                xis.append(_alternating(positions, sigma[start:start + j]))
                start += j
            yield profile, sigma, xis


def _cycle_prefactor(j):
    # (4^j / j) * (1 / (4 pi^2)) * (2 pi)^4
    return 4.0**j / j * 4.0 * pi**2


class _Assembler:
    def __init__(self, provider, wf_param):
        self.provider = provider
        self.scale = 1.0 / (2.0 * (1.0 + wf_param))
        self._cache = {}

    def _radius(self, xi):
        return float(np.sqrt(np.dot(xi, xi)))

    def _factor_transform(self, j, r):
        key = (j, r)
        if key not in self._cache:
            kern = RadialKernel(lambda p: self.provider.factor(j, self.scale * p * p),
                                self.provider.decay_exponent(j))
            self._cache[key] = radial_fourier4(kern, r)
        return self._cache[key]

    def _rule(self, r):
        if r == 0:
            p, w, _ = _xi0_rule()
            return p, w
        p, w, _ = radial_rule(r)
        return p, w

    def term(self, profile, xis):
        if not self.provider.supports(profile):
            return 0.0
        radii = [self._radius(xi) for xi in xis]
        pref = np.prod([_cycle_prefactor(j) for j in profile])
        if self.provider.factorized:
            return pref * np.prod([self._factor_transform(j, r) for j, r in zip(profile, radii)])
        key = (profile, tuple(radii))
        if key not in self._cache:
            if len(profile) == 1:
                kern = RadialKernel(lambda p: self.provider.evaluate(profile, [self.scale * p * p]))
                self._cache[key] = radial_fourier4(kern, radii[0])
            elif len(profile) == 2:
                (p1, w1), (p2, w2) = self._rule(radii[0]), self._rule(radii[1])
                vals = self.provider.evaluate(profile, [self.scale * p1[:, None] ** 2, self.scale * p2[None, :] ** 2])
                self._cache[key] = float(w1 @ np.asarray(vals, dtype=float) @ w2)
            else:
                raise NotImplementedError("non-factorized providers support at most two boundary components")
        return pref * self._cache[key]


def _positions(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValueError("positions must be an (N, 4) array")
    return pts


def npoint(positions, provider, wf_param=0.0, keep=None):
    """Connected N-point Schwinger function, literal sum over compositions and S_N.

    ``keep(profile, sigma, xis)`` optionally filters the terms.
    """
    pts = _positions(positions)
    n = len(pts)
    if n > 6:
        raise ValueError("npoint supports N <= 6")
    if n % 2:
        return 0.0
    asm = _Assembler(provider, wf_param)
    vals = [asm.term(profile, xis) for profile, sigma, xis in _terms(pts)
            if keep is None or keep(profile, sigma, xis)]
    return float(np.sum(np.sort(vals))) / (64 * pi**2) if vals else 0.0


def schwinger2(source, r, wf_param=0.0):
    """Two-point function: radial transform of p -> G(p^2/(2(1+Y)), same).

    ``source`` is a TwoPointEvaluator or a provider with a (2,) sector.
    """
    provider = source if isinstance(source, Provider) else TwoPointProvider(source)
    scale = 1.0 / (2.0 * (1.0 + wf_param))
    kern = RadialKernel(lambda p: provider.evaluate((2,), [scale * np.asarray(p) ** 2]),
                        provider.decay_exponent(2))
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.array([radial_fourier4(kern, x) for x in r_arr])
    return float(out[0]) if np.ndim(r) == 0 else out


def cluster_limit4(x1, x2, x3, x4, shift_dir, taus, provider, wf_param=0.0):
    """S_4 with x3, x4 shifted by tau * shift_dir, and its tau -> infinity limit.

    The limit keeps exactly the terms of the literal sum whose alternating
    sums do not involve the shift.
    """
    base = _positions([x1, x2, x3, x4])
    d = np.asarray(shift_dir, dtype=float)
    if d.shape != (4,) or not np.isclose(np.linalg.norm(d), 1.0):
        raise ValueError("shift_dir must be a unit 4-vector")
    shift = np.zeros((4, 4))
    shift[2] = shift[3] = d
    values = []
    for tau in taus:
        values.append(npoint(base + tau * shift, provider, wf_param))

    def tau_free(profile, sigma, xis):
        start = 0
        for j in profile:
            idx = sigma[start:start + j]
            coeff = sum((-1) ** i for i, s in enumerate(idx) if s >= 2)
            if coeff:
                return False
            start += j
        return True

    limit = npoint(base, provider, wf_param, keep=tau_free)
    return np.array(values), limit
