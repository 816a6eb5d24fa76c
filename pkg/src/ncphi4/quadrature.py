"""Radial grids on [0, Lambda^2], sampled functions and the finite Hilbert transform.

All integrals live on the cut-off interval [0, Lambda^2] (units mu = 1).
The principal-value transform

    H_a[f] = (1/pi) PV int_0^{Lambda^2} f(p) / (p - a) dp

is evaluated by subtracting f(a):

    H_a[f] = (1/pi) [ int (f(p) - f(a)) / (p - a) dp + f(a) ln((Lambda^2 - a) / a) ].

Inside the transform f(a) and f'(a) come from the local four-point
Lagrange polynomial in the grid abscissa, which keeps H linear in the
samples (the monotone PCHIP interpolant used by ``interpolate`` is not).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "RadialGrid",
    "SampledFunction",
    "build_grid",
    "integrate",
    "interpolate",
    "hilbert",
    "hilbert_at_nodes",
    "gauss_legendre_pieces",
]

SCHEMES = ("log_uniform", "uniform")
LOG_SPAN = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature nodes in (0, Lambda^2] with positive composite weights.

    The weights integrate over the whole of [0, Lambda^2].  Each interval
    between nodes is covered by the cubic through the four surrounding
    nodes (trapezoids on grids too coarse for positive cubic weights), and
    [0, nodes[0]] by linear extrapolation on uniform grids or a rectangle
    on geometric ones.
    """

    nodes: np.ndarray
    weights: np.ndarray
    lambda_cutoff: float
    scheme: str

    def __post_init__(self):
        nodes, weights = self.nodes, self.weights
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if not nodes[0] > 0:
            raise ValueError("first node must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if nodes[-1] != self.lambda_cutoff:
            raise ValueError("last node must equal the cutoff")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)

    @property
    def n(self):
        return len(self.nodes)

    @cached_property
    def abscissa(self):
        """Interpolation coordinate: log(p) on log grids, p otherwise."""
        if self.scheme == "log_uniform":
            return np.log(self.nodes)
        return self.nodes

    @cached_property
    def _pv_matrix(self):
        # M[p, k] = w_k / (q_k - q_p), zero diagonal
        q = self.nodes
        diff = q[None, :] - q[:, None]
        np.fill_diagonal(diff, 1.0)
        m = self.weights[None, :] / diff
        np.fill_diagonal(m, 0.0)
        m.setflags(write=False)
        return m, m.sum(axis=1)

    @cached_property
    def _node_stencils(self):
        # slope weights d/da of the local cubic at every node
        x = self.abscissa
        idx = np.empty((self.n, 4), dtype=int)
        vw = np.empty((self.n, 4))
        dw = np.empty((self.n, 4))
        for k in range(self.n):
            s, vw[k], dw[k] = _stencil(x, x[k])
            idx[k] = np.arange(s, s + 4)
        if self.scheme == "log_uniform":
            dw /= self.nodes[:, None]
        return idx, vw, dw


def _stencil(x, xi):
    """Start index and value/slope weights of the cubic through 4 nodes around xi."""
    n = len(x)
    k = int(np.clip(np.searchsorted(x, xi) - 1, 0, n - 2))
    s = min(max(k - 1, 0), n - 4)
    sten = x[s:s + 4]
    vw = np.empty(4)
    dw = np.empty(4)
    for j in range(4):
        others = np.delete(sten, j)
        den = np.prod(sten[j] - others)
        d = xi - others
        vw[j] = np.prod(d) / den
        dw[j] = (d[1] * d[2] + d[0] * d[2] + d[0] * d[1]) / den
    return s, vw, dw


def _lagrange(f, a):
    """Value and a-derivative of the local cubic of f at scalar a >= nodes[0]."""
    grid = f.grid
    a = float(a)
    x = grid.abscissa
    xi = np.log(a) if grid.scheme == "log_uniform" else a
    s, vw, dw = _stencil(x, xi)
    vals = f.values[s:s + 4]
    slope = float(np.dot(dw, vals))
    if grid.scheme == "log_uniform":
        slope /= a
    return float(np.dot(vw, vals)), slope


def _cubic_weights(x):
    """Node weights of the composite rule integrating local cubics exactly."""
    n = len(x)
    w = np.zeros(n)
    gx = 0.5 * (_GL_X + 1.0)
    gw = 0.5 * _GL_W
    for k in range(n - 1):
        s = min(max(k - 1, 0), n - 4)
        sten = x[s:s + 4]
        a, b = x[k], x[k + 1]
        pts = a + (b - a) * gx
        for j in range(4):
            others = np.delete(sten, j)
            basis = np.prod((pts[:, None] - others[None, :]) / (sten[j] - others[None, :]), axis=1)
            w[s + j] += (b - a) * np.dot(gw, basis)
    return w


def build_grid(n, lambda_cutoff, scheme="log_uniform"):
    """Grid of ``n`` nodes ending at ``lambda_cutoff``.

    ``uniform`` places nodes at k/n * Lambda^2 (k = 1..n); ``log_uniform``
    spaces them geometrically from 1e-8 * Lambda^2 to Lambda^2.
    """
    n = int(n)
    if n < 16:
        raise ValueError("a grid needs at least 16 nodes")
    lambda_cutoff = float(lambda_cutoff)
    if not lambda_cutoff > 0 or not np.isfinite(lambda_cutoff):
        raise ValueError("cutoff must be positive and finite")
    if scheme == "uniform":
        nodes = lambda_cutoff * np.arange(1, n + 1) / n
    elif scheme == "log_uniform":
        nodes = np.geomspace(lambda_cutoff * LOG_SPAN, lambda_cutoff, n)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    nodes[-1] = lambda_cutoff
    w = _cubic_weights(nodes)
    if np.any(w <= 0):
        # very coarse geometric grids: fall back to the trapezoid rule
        h = np.diff(nodes)
        w = np.zeros(n)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
    x0, dx = nodes[0], nodes[1] - nodes[0]
    if scheme == "uniform":
        # linear extrapolation from the first two nodes
        w[0] += x0 + x0 * x0 / (2 * dx)
        w[1] -= x0 * x0 / (2 * dx)
    else:
        # [0, 1e-8 Lambda^2] is negligible; a rectangle keeps the weights positive
        w[0] += x0
    return RadialGrid(nodes=nodes, weights=w, lambda_cutoff=lambda_cutoff, scheme=scheme)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Node values of a real function on a RadialGrid.

    Between nodes the function is the monotone cubic (PCHIP) interpolant,
    on [0, nodes[0]] a straight line to ``value_at_zero``, and beyond the
    cutoff the power law ``f(Lambda^2) (a/Lambda^2)^tail_exponent``.
    """

    grid: RadialGrid
    values: np.ndarray
    tail_exponent: float = 0.0
    value_at_zero: float = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("need exactly one value per grid node")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.value_at_zero is None:
            object.__setattr__(self, "value_at_zero", float(values[0]))

    @cached_property
    def _pchip(self):
        return PchipInterpolator(self.grid.abscissa, self.values, extrapolate=False)

    def __call__(self, a):
        return interpolate(self, a)

    def derivative(self, a):
        """d f / d a of the local four-point Lagrange polynomial, a in [nodes[0], Lambda^2]."""
        a_arr = np.asarray(a, dtype=float)
        out = np.array([_lagrange(self, x)[1] for x in a_arr.ravel()]).reshape(a_arr.shape)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def node_derivatives(self):
        idx, _, dw = self.grid._node_stencils
        return np.sum(self.values[idx] * dw, axis=1)

    def with_values(self, values, **changes):
        """Same grid, new values."""
        kw = dict(tail_exponent=self.tail_exponent, value_at_zero=None)
        kw.update(changes)
        return SampledFunction(self.grid, values, **kw)


def interpolate(f, a):
    """Evaluate a SampledFunction at ``a >= 0`` (scalar or array)."""
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr < 0):
        raise ValueError("interpolate needs a >= 0")
    grid = f.grid
    lam2 = grid.lambda_cutoff
    q0 = grid.nodes[0]
    out = np.empty(a_arr.shape)
    inside = (a_arr >= q0) & (a_arr <= lam2)
    if np.any(inside):
        x = np.log(a_arr[inside]) if grid.scheme == "log_uniform" else a_arr[inside]
        x = np.clip(x, grid.abscissa[0], grid.abscissa[-1])
        out[inside] = f._pchip(x)
        # exact node reproduction
        idx = np.searchsorted(grid.nodes, a_arr[inside])
        idx = np.minimum(idx, grid.n - 1)
        hit = grid.nodes[idx] == a_arr[inside]
        if np.any(hit):
            sub = out[inside]
            sub[hit] = f.values[idx[hit]]
            out[inside] = sub
    low = a_arr < q0
    if np.any(low):
        out[low] = f.value_at_zero + (f.values[0] - f.value_at_zero) * a_arr[low] / q0
    high = a_arr > lam2
    if np.any(high):
        out[high] = f.values[-1] * (a_arr[high] / lam2) ** f.tail_exponent
    if out.ndim == 0:
        return float(out)
    return out


def gauss_legendre_pieces(breaks, order=4):
    """Nodes and weights of composite Gauss-Legendre on the given breakpoints."""
    x, w = np.polynomial.legendre.leggauss(order)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(f, a_lo=0.0, a_hi=None, grid=None):
    """Integral of ``f`` over [a_lo, a_hi].

    A SampledFunction is integrated through its interpolant; a callable is
    sampled at composite 4-point Gauss-Legendre nodes on the pieces of
    ``grid`` (default: 2000-node log grid ending at ``a_hi``).
    """
    if isinstance(f, SampledFunction):
        grid = f.grid
    if a_hi is None:
        if grid is None:
            raise ValueError("a_hi is required for callables without a grid")
        a_hi = grid.lambda_cutoff
    a_lo, a_hi = float(a_lo), float(a_hi)
    if grid is None:
        grid = build_grid(2000, a_hi)
    if not (0 <= a_lo <= a_hi <= grid.lambda_cutoff * (1 + 1e-15)):
        raise ValueError("integration range must satisfy 0 <= a_lo <= a_hi <= cutoff")
    if a_lo == a_hi:
        return 0.0
    pts = np.concatenate(([0.0], grid.nodes))
    inner = pts[(pts > a_lo) & (pts < a_hi)]
    breaks = np.concatenate(([a_lo], inner, [a_hi]))
    x, w = gauss_legendre_pieces(breaks)
    vals = f(x) if isinstance(f, SampledFunction) else np.asarray(f(x), dtype=float)
    return float(np.dot(w, vals))


def _near(q, a):
    return np.abs(q - a) <= 1e-10 * np.maximum(np.abs(a), np.abs(q))


def hilbert(f, a):
    """Finite Hilbert transform (1/pi) PV int_0^{Lambda^2} f(p)/(p - a) dp.

    ``a`` may be a scalar or an array in [0, Lambda^2).  At ``a = 0`` the
    function must vanish at the origin (``f.value_at_zero == 0``).
    """
    grid = f.grid
    lam2 = grid.lambda_cutoff
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(a_arr < 0) or np.any(a_arr >= lam2):
        raise ValueError("Hilbert transform needs 0 <= a < cutoff")
    if np.any(a_arr == 0) and f.value_at_zero != 0:
        raise ValueError("H_0[f] requires f(0) = 0")
    q = grid.nodes
    w = grid.weights
    out = np.empty(a_arr.shape)
    for i, ai in enumerate(a_arr):
        if ai == 0:
            out[i] = np.dot(w, f.values / q) / np.pi
            continue
        if ai >= q[0]:
            fa, slope = _lagrange(f, ai)
        else:
            fa = interpolate(f, ai)
            slope = (f.values[0] - f.value_at_zero) / q[0]
        diff = q - ai
        near = _near(q, ai)
        safe = np.where(near, 1.0, diff)
        quot = np.where(near, 0.0, (f.values - fa) / safe)
        total = np.dot(w, quot)
        if np.any(near):
            # removable point: the quotient equals f'(a) there
            total += np.sum(w[near]) * slope
        out[i] = (total + fa * (np.log(lam2 - ai) - np.log(ai))) / np.pi
    if np.ndim(a) == 0:
        return float(out[0])
    return out


def hilbert_at_nodes(f):
    """H_p[f] at every grid node.

    The last node sits on the cutoff, where the transform diverges like
    f(Lambda^2) ln(Lambda^2 - p); it is returned as -inf (or +inf, 0
    following the sign of f there).
    """
    grid = f.grid
    m, rowsum = grid._pv_matrix
    v = f.values
    q = grid.nodes
    lam2 = grid.lambda_cutoff
    total = m @ v - v * rowsum + grid.weights * f.node_derivatives
    with np.errstate(divide="ignore"):
        logs = np.log((lam2 - q) / q)
    out = np.empty_like(v)
    out[:-1] = (total[:-1] + v[:-1] * logs[:-1]) / np.pi
    out[-1] = -np.inf * np.sign(v[-1]) if v[-1] != 0 else total[-1] / np.pi
    return out
