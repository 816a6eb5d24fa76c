"""Boundary 2-point function G(a, 0) as the fixed point of a nonlinear map.

The map is

    T[g](a) = exp(-lam int_0^{Lambda^2} dp Phi_p(a)) / (1 + a),

    Phi_p(a) = int_0^a dt / ((lam pi p)^2 + (t + B_p)^2),
    B_p      = (1 + lam pi p H_p[g]) / g(p),

with the t-integral done in closed form,
Phi_p(a) = atan2(a c, c^2 + B_p (a + B_p)) / c for c = lam pi p.
The atan2 form stays on the correct branch when B_p changes sign and
reduces to a / (B_p (a + B_p)) as c -> 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .quadrature import SampledFunction, build_grid, hilbert_at_nodes

__all__ = [
    "ModelParams",
    "SolverConfig",
    "BoundarySolution",
    "NegativeCoupling",
    "NonConvergence",
    "MapBreakdown",
    "b_table",
    "fixed_point_map",
    "solve",
    "perturbative_boundary",
]

log = logging.getLogger(__name__)


class NegativeCoupling(ValueError):
    """The solver path only exists for lam >= 0."""


class NonConvergence(RuntimeError):
    """Picard iteration hit ``max_iter`` above tolerance."""

    def __init__(self, iterations, residual):
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class MapBreakdown(ArithmeticError):
    """B_p became non-finite inside the grid (the iterate touched zero)."""


@dataclass(frozen=True)
class ModelParams:
    """Coupling ``lam``, cutoff ``lambda_cutoff`` (= Lambda^2) and Y, units mu = 1."""

    lam: float
    lambda_cutoff: float = 1e4
    wf_param: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ValueError("coupling must be finite")
        if not (self.lambda_cutoff > 0 and np.isfinite(self.lambda_cutoff)):
            raise ValueError("cutoff must be positive and finite")

    @property
    def tail_exponent(self):
        return -(1.0 + self.lam)


@dataclass(frozen=True)
class SolverConfig:
    """Damped Picard settings and the discretisation of [0, Lambda^2]."""

    damping: float = 0.5
    tol: float = 1e-9
    max_iter: int = 500
    n_nodes: int = 2000
    scheme: str = "log_uniform"
    min_damping: float = 1e-4

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")


@dataclass(frozen=True)
class BoundarySolution:
    """Converged samples of G(a, 0) with provenance."""

    g: SampledFunction
    residual: float
    iterations: int
    params: ModelParams
    history: tuple = field(default=(), repr=False)

    @property
    def grid(self):
        return self.g.grid

    def __call__(self, a):
        return self.g(a)


def perturbative_boundary(a, lam):
    """First-order boundary function (1 + a)^(-(1 + lam))."""
    return np.power(1.0 + np.asarray(a, dtype=float), -(1.0 + lam))


def b_table(g, lam):
    """B_p = (1 + lam pi p H_p[g]) / g(p) at the grid nodes.

    The last node sits on the cutoff where H_p[g] diverges to -inf, so B
    is -inf there; that is the exact limit and gives Phi = 0, theta = pi.
    """
    if np.any(g.values <= 0):
        raise MapBreakdown("iterate must stay positive")
    q = g.grid.nodes
    h = hilbert_at_nodes(g)
    with np.errstate(invalid="ignore"):
        b = (1.0 + lam * np.pi * q * h) / g.values
    if not np.all(np.isfinite(b[:-1])):
        raise MapBreakdown("non-finite B_p inside the grid")
    return b


def _phi_integral(a, q, w, b, lam, block=256):
    """sum_p w_p Phi_p(a) for every a, in a fixed summation order."""
    c = lam * np.pi * q
    out = np.empty(len(a))
    for s in range(0, len(a), block):
        ab = a[s:s + block, None]
        with np.errstate(invalid="ignore", over="ignore"):
            den = c * c + b * (ab + b)
        den = np.where(np.isfinite(b), den, np.inf)
        phi = np.arctan2(ab * c, den) / c
        out[s:s + block] = phi @ w
    return out


def _free(grid, lam):
    return SampledFunction(grid, 1.0 / (1.0 + grid.nodes), tail_exponent=-(1.0 + lam), value_at_zero=1.0)


def fixed_point_map(g, params):
    """One application of T to the sampled iterate ``g``.

    Returns T[g] at the nodes of ``g.grid`` with value 1 at a = 0.
    """
    lam = params.lam
    if lam < 0:
        raise NegativeCoupling("the boundary map is only defined for lam >= 0")
    grid = g.grid
    q = grid.nodes
    if lam == 0:
        return _free(grid, 0.0)
    b = b_table(g, lam)
    expo = lam * _phi_integral(q, q, grid.weights, b, lam)
    vals = np.exp(-expo) / (1.0 + q)
    return SampledFunction(grid, vals, tail_exponent=params.tail_exponent, value_at_zero=1.0)


def _residual(g, tg):
    return float(np.max(np.abs(g.values - tg.values)))


def solve(params, config=None, grid=None):
    """Damped Picard iteration g <- (1 - alpha) g + alpha T[g] from 1/(1+a).

    A step that would raise the sup-norm residual is rejected and retried
    with half the damping.
    """
    config = config or SolverConfig()
    if params.lam < 0:
        raise NegativeCoupling("solve requires lam >= 0")
    if grid is None:
        grid = build_grid(config.n_nodes, params.lambda_cutoff, config.scheme)
    elif grid.lambda_cutoff != params.lambda_cutoff:
        raise ValueError("grid cutoff differs from params.lambda_cutoff")
    if params.lam == 0:
        return BoundarySolution(_free(grid, 0.0), 0.0, 1, params, (0.0,))

    g = _free(grid, params.lam)
    tg = fixed_point_map(g, params)
    res = _residual(g, tg)
    history = [res]
    alpha = config.damping
    it = 0
    while res > config.tol:
        if it >= config.max_iter:
            raise NonConvergence(it, res)
        it += 1
        trial = g.with_values((1 - alpha) * g.values + alpha * tg.values, value_at_zero=1.0)
        t_trial = fixed_point_map(trial, params)
        r_trial = _residual(trial, t_trial)
        if r_trial > res and alpha > config.min_damping:
            alpha *= 0.5
            log.debug("residual rose to %.3e, damping -> %g", r_trial, alpha)
            continue
        g, tg, res = trial, t_trial, r_trial
        history.append(res)
        log.debug("iteration %d residual %.3e", it, res)
    return BoundarySolution(g, res, it, replace(params), tuple(history))

