"""Command-line driver: ``ncphi4 <command> [config] [--set key=value ...]``.

Configuration is plain ``key = value`` text with ``#`` comments; ``--set``
overrides single keys.  Every emitted CSV/JSON file starts with a
provenance record (package and library versions, hash of the config).
Exit status: 0 on success, 1 on configuration or input errors, 2 on
numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .boundary import (
    BoundarySolution,
    MapBreakdown,
    ModelParams,
    NegativeCoupling,
    NonConvergence,
    SolverConfig,
    solve,
)
from .matrix_basis import CycleSpec, corollary_sum, gaussian_limit_check, lemma_sum
from .positivity import cm_check, widder_check
from .quadrature import SampledFunction, build_grid
from .schwinger import (
    FreeProvider,
    GaussianProvider,
    TabulatedProvider,
    TransformNonConvergence,
    TwoPointProvider,
    closed_form_2pt,
    cluster_limit4,
    npoint,
    schwinger2,
)
from .two_point import TwoPointEvaluator, fit_exponent, g_ab, g_diag, power_law_fit

log = logging.getLogger("ncphi4")

CACHE_VERSION = "# ncphi4-cache v1"
COMMANDS = (
    "solve", "gab", "diag", "widder", "cm", "exponent", "schwinger2", "closed2pt",
    "npoint", "cluster-demo", "laguerre-verify", "basis-limit",
)


class ConfigError(ValueError):
    """Bad configuration, unreadable input or cache mismatch (exit 1)."""


@dataclass
class RunConfig:
    """All knobs of a run; units are fixed to mu = 1."""

    lam: float = 0.1
    lambda_cutoff: float = 1e4
    wf_param: float = 0.0
    n_nodes: int = 2000
    scheme: str = "log_uniform"
    damping: float = 0.5
    tol: float = 1e-9
    max_iter: int = 500
    n_max: int = 4
    x_max: float = 50.0
    degree: int = 64
    a_min: float = 1e-2
    a_max: float = 1e2
    n_points: int = 60
    gab_max: float = 10.0
    gab_n: int = 11
    fit_a_min: float = 1e1
    fit_a_max: float = 1e3
    r_min: float = 0.1
    r_max: float = 10.0
    input: str = ""
    positions: str = ""
    provider: str = "free"
    provider_file: str = ""
    gaussian_width: float = 100.0
    taus: str = "5,10,20,50"
    shift_dir: str = "1,0,0,0"
    cycle_j: int = 2
    cycle_t: float = 1.0
    volumes: str = "1e2,1e4,1e6"
    output_dir: str = "."
    cache: str = ""

    def __post_init__(self):
        try:
            self.model_params()
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.scheme not in ("log_uniform", "uniform"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.provider not in ("free", "gaussian", "two_point", "tabulated"):
            raise ConfigError(f"unknown provider {self.provider!r}")

    def model_params(self):
        return ModelParams(self.lam, self.lambda_cutoff, self.wf_param)

    def solver_config(self):
        return SolverConfig(self.damping, self.tol, self.max_iter, self.n_nodes, self.scheme)

    def floats(self, name):
        return [float(v) for v in getattr(self, name).split(",") if v.strip()]

    def canonical(self):
        # output locations do not change results, so they stay out of the hash
        skip = ("output_dir", "cache")
        return "\n".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self) if f.name not in skip)

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def solver_digest(self):
        keys = ("lam", "lambda_cutoff", "wf_param", "n_nodes", "scheme", "damping", "tol", "max_iter")
        text = "\n".join(f"{k}={getattr(self, k)!r}" for k in keys)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_config(text, overrides=()):
    """RunConfig from ``key = value`` lines plus ``key=value`` overrides."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    for ln in [x for x in lines if x] + list(overrides):
        if "=" not in ln:
            raise ConfigError(f"expected key = value, got {ln!r}")
        key, val = (s.strip() for s in ln.split("=", 1))
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = {"float": float, "int": int}.get(types[key], str)(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return RunConfig(**values)


def provenance(cfg):
    return (f"# ncphi4 {__version__} numpy {np.__version__} scipy {scipy.__version__} "
            f"config_hash={cfg.digest()}")


def _fmt(x):
    return f"{x:.17g}"


def write_csv(path, cfg, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(provenance(cfg) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")
    return path


def write_json(path, cfg, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"provenance": provenance(cfg)[2:], **payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# cache ---------------------------------------------------------------------


def save_cache(solution, path, cfg):
    """Write nodes and G(a, 0) with 17 significant digits."""
    p = solution.params
    g = solution.g
    lines = [
        CACHE_VERSION,
        provenance(cfg),
        f"# solver_hash={cfg.solver_digest()}",
        f"# lam={_fmt(p.lam)} lambda_cutoff={_fmt(p.lambda_cutoff)} wf_param={_fmt(p.wf_param)}",
        f"# n_nodes={g.grid.n} scheme={g.grid.scheme}",
        f"# iterations={solution.iterations} residual={_fmt(solution.residual)}",
        "a,G",
    ]
    lines += [f"{_fmt(a)},{_fmt(v)}" for a, v in zip(g.grid.nodes, g.values)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def _header_fields(line):
    return dict(item.split("=", 1) for item in line[1:].split())


def load_cache(path):
    """Inverse of save_cache; the grid is rebuilt and checked node by node."""
    try:
        text = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read cache {path}: {exc}") from exc
    if not text or text[0] != CACHE_VERSION:
        raise ConfigError("cache version mismatch")
    try:
        meta = {}
        for ln in text[1:6]:
            if not ln.startswith("# ncphi4 "):
                meta.update(_header_fields(ln))
        if text[6] != "a,G":
            raise ValueError("missing column header")
        rows = np.array([[float(v) for v in ln.split(",")] for ln in text[7:] if ln])
        params = ModelParams(float(meta["lam"]), float(meta["lambda_cutoff"]), float(meta["wf_param"]))
        grid = build_grid(int(meta["n_nodes"]), params.lambda_cutoff, meta["scheme"])
        if rows.shape != (grid.n, 2) or not np.array_equal(rows[:, 0], grid.nodes):
            raise ValueError("cached nodes differ from the rebuilt grid")
        g = SampledFunction(grid, rows[:, 1], tail_exponent=params.tail_exponent, value_at_zero=1.0)
        sol = BoundarySolution(g, float(meta["residual"]), int(meta["iterations"]), params)
    except (KeyError, IndexError, ValueError) as exc:
        raise ConfigError(f"corrupt cache {path}: {exc}") from exc
    return sol, meta.get("solver_hash")


def cache_roundtrip(solution, path, cfg=None):
    cfg = cfg or RunConfig(lam=solution.params.lam, lambda_cutoff=solution.params.lambda_cutoff,
                           wf_param=solution.params.wf_param, n_nodes=solution.grid.n,
                           scheme=solution.grid.scheme)
    save_cache(solution, path, cfg)
    return load_cache(path)[0]


# pipelines -----------------------------------------------------------------


def _out(cfg, name):
    return Path(cfg.output_dir) / name


def obtain_solution(cfg):
    """Load the cache when it matches the solver settings, else solve (and store)."""
    if cfg.cache and Path(cfg.cache).exists():
        sol, digest = load_cache(cfg.cache)
        if digest == cfg.solver_digest():
            log.info("reusing cache %s", cfg.cache)
            return sol
        log.info("cache %s was made with other settings; re-solving", cfg.cache)
    sol = solve(cfg.model_params(), cfg.solver_config())
    if cfg.cache:
        save_cache(sol, cfg.cache, cfg)
    return sol


def _evaluator(cfg):
    return TwoPointEvaluator.from_solution(obtain_solution(cfg))


def cmd_solve(cfg):
    sol = solve(cfg.model_params(), cfg.solver_config())
    cache = cfg.cache or str(_out(cfg, "boundary_cache.txt"))
    save_cache(sol, cache, cfg)
    write_csv(_out(cfg, "residual_history.csv"), cfg, ["iteration", "residual"], enumerate(sol.history))
    log.info("solved in %d iterations, residual %.3e", sol.iterations, sol.residual)
    return sol


def cmd_gab(cfg):
    ev = _evaluator(cfg)
    axis = np.linspace(0.0, cfg.gab_max, cfg.gab_n)
    rows = [(a, b, v) for b in axis for a, v in zip(axis, g_ab(ev, axis, b))]
    return write_csv(_out(cfg, "gab.csv"), cfg, ["a", "b", "G"], rows)


def _a_axis(cfg):
    return np.concatenate(([0.0], np.geomspace(cfg.a_min, cfg.a_max, cfg.n_points)))


def cmd_diag(cfg):
    ev = _evaluator(cfg)
    a = _a_axis(cfg)
    return write_csv(_out(cfg, "diag.csv"), cfg, ["a", "G"], zip(a, g_diag(ev, a)))


def read_table(path):
    """Two-column numeric CSV (comment lines and a header row allowed)."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    rows = []
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in ln.split(",")])
        except ValueError:
            if rows:
                raise ConfigError(f"bad row in {path}: {ln!r}")
    arr = np.array(rows)
    if arr.ndim != 2 or arr.shape[1] < 2 or len(arr) < 4:
        raise ConfigError(f"{path}: need at least 4 rows of x,value")
    return arr[:, 0], arr[:, 1]


def _positivity_target(cfg):
    if cfg.input:
        from scipy.interpolate import PchipInterpolator

        x, y = read_table(cfg.input)
        if x.min() > 0 or x.max() < cfg.x_max:
            raise ConfigError("tabulated input must cover [0, x_max]")
        return PchipInterpolator(x, y)
    ev = _evaluator(cfg)
    scale = 1.0 + cfg.wf_param
    return lambda x: g_diag(ev, np.asarray(x) / scale)


def _positivity(cfg, check, name):
    f = _positivity_target(cfg)
    report = check(f, n_max=cfg.n_max, x_max=cfg.x_max, degree=cfg.degree)
    return write_json(_out(cfg, f"{name}.json"), cfg, {"report": report.to_dict()})


def cmd_widder(cfg):
    return _positivity(cfg, widder_check, "widder")


def cmd_cm(cfg):
    return _positivity(cfg, cm_check, "cm")


def cmd_exponent(cfg):
    if not 0 < cfg.fit_a_min < cfg.fit_a_max <= 0.1 * cfg.lambda_cutoff:
        raise ConfigError("fit window must satisfy 0 < fit_a_min < fit_a_max <= lambda_cutoff/10")
    ev = _evaluator(cfg)
    a = np.geomspace(cfg.fit_a_min, cfg.fit_a_max, 24)
    res = fit_exponent(a, g_diag(ev, a), cfg.wf_param, full=True)
    payload = {"kappa": res.slope, "r_squared": res.r_squared, "one_plus_lambda": 1.0 + cfg.lam,
               "window": [cfg.fit_a_min, cfg.fit_a_max]}
    return write_json(_out(cfg, "exponent.json"), cfg, payload)


def _r_axis(cfg):
    return np.geomspace(cfg.r_min, cfg.r_max, cfg.n_points)


def cmd_schwinger2(cfg):
    provider = TwoPointProvider(_evaluator(cfg))
    r = _r_axis(cfg)
    return write_csv(_out(cfg, "schwinger2.csv"), cfg, ["r", "S"], zip(r, schwinger2(provider, r, cfg.wf_param)))


def cmd_closed2pt(cfg):
    r = _r_axis(cfg)
    return write_csv(_out(cfg, "closed2pt.csv"), cfg, ["r", "S"], zip(r, closed_form_2pt(cfg.lam, r)))


def _provider(cfg):
    if cfg.provider == "free":
        return FreeProvider()
    if cfg.provider == "gaussian":
        return GaussianProvider(cfg.gaussian_width)
    if cfg.provider == "tabulated":
        try:
            return TabulatedProvider.from_file(cfg.provider_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"provider file: {exc}") from exc
    return TwoPointProvider(_evaluator(cfg))


def _read_positions(path):
    try:
        rows = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
        pts = np.array([[float(v) for v in ln.split(",")] for ln in rows if ln])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read positions from {path}: {exc}") from exc
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ConfigError("positions file needs rows of four comma-separated coordinates")
    return pts


def cmd_npoint(cfg):
    if not cfg.positions:
        raise ConfigError("npoint needs positions = <file>")
    pts = _read_positions(cfg.positions)
    value = npoint(pts, _provider(cfg), cfg.wf_param)
    return write_json(_out(cfg, "npoint.json"), cfg, {"N": len(pts), "value": value, "provider": cfg.provider})


def cmd_cluster_demo(cfg):
    if cfg.positions:
        pts = _read_positions(cfg.positions)
        if len(pts) != 4:
            raise ConfigError("cluster-demo needs exactly four positions")
    else:
        pts = np.array([[0.3, 0, 0, 0], [0, 0.4, 0, 0], [0, 0, 0.5, 0], [0, 0, 0, 0.2]])
    taus = cfg.floats("taus")
    vals, limit = cluster_limit4(*pts, cfg.floats("shift_dir"), taus, _provider(cfg), cfg.wf_param)
    return write_csv(_out(cfg, "cluster.csv"), cfg, ["tau", "S4", "limit"], [(t, v, limit) for t, v in zip(taus, vals)])


def laguerre_suite():
    """Truncated-versus-closed relative deviations for a fixed set of cycles."""
    rng = np.random.default_rng(20240611)
    out = {}
    out["lemma_J1"] = CycleSpec([0.3], [1.0]), 80
    out["lemma_t0_J3"] = CycleSpec([0.2, 0.4, -0.3], [0.0, 0.0, 0.0]), 60
    z = rng.uniform(-0.5, 0.5, 3) + 1j * rng.uniform(-0.2, 0.2, 3)
    out["lemma_J3"] = CycleSpec(z * 0.5 / np.maximum(0.5, np.abs(z)), rng.uniform(0, 2, 3)), 60
    devs = {}
    for name, (spec, m_max) in out.items():
        closed = lemma_sum(spec)
        devs[name] = abs(lemma_sum(spec, m_max) - closed) / abs(closed)
    theta = 2.0
    xs = [complex(*v) for v in rng.uniform(-0.9, 0.9, (2, 2))]
    zc = rng.uniform(-0.5, 0.5, 2)
    closed = corollary_sum(xs, zc, theta)
    devs["corollary_J2"] = abs(corollary_sum(xs, zc, theta, 70) - closed) / abs(closed)
    closed = corollary_sum([0j, 0j], [0.3, 0.4], theta)
    devs["corollary_origin"] = abs(corollary_sum([0j, 0j], [0.3, 0.4], theta, 40) - closed) / abs(closed)
    return {k: float(v) for k, v in devs.items()}


def cmd_laguerre_verify(cfg):
    devs = laguerre_suite()
    ok = all(v <= 1e-8 for v in devs.values())
    write_json(_out(cfg, "laguerre_verify.json"), cfg, {"deviations": devs, "passed": ok})
    if not ok:
        raise ArithmeticError("Laguerre identity deviation above 1e-8")
    return devs


def cmd_basis_limit(cfg):
    volumes = cfg.floats("volumes")
    j = cfg.cycle_j
    if cfg.positions:
        pts = _read_positions(cfg.positions)
    else:
        pts = np.random.default_rng(7).normal(scale=0.5, size=(j, 4))
    if len(pts) != j:
        raise ConfigError("number of positions must equal cycle_j")
    devs = gaussian_limit_check(j, pts, cfg.cycle_t, volumes)
    path = write_csv(_out(cfg, "basis_limit.csv"), cfg, ["V", "deviation"], zip(volumes, devs))
    if len(volumes) >= 2 and all(d > 0 for d in devs):
        slope = -power_law_fit(volumes, devs, min_samples=2, min_decades=0.0).slope
        write_json(_out(cfg, "basis_limit.json"), cfg, {"slope": slope, "j": j})
    return path


HANDLERS = {
    "solve": cmd_solve, "gab": cmd_gab, "diag": cmd_diag, "widder": cmd_widder, "cm": cmd_cm,
    "exponent": cmd_exponent, "schwinger2": cmd_schwinger2, "closed2pt": cmd_closed2pt,
    "npoint": cmd_npoint, "cluster-demo": cmd_cluster_demo,
    "laguerre-verify": cmd_laguerre_verify, "basis-limit": cmd_basis_limit,
}


def run(command, cfg):
    """Run one subcommand; returns the exit status."""
    if command not in HANDLERS:
        log.error("unknown command %r", command)
        return 1
    try:
        HANDLERS[command](cfg)
    except (ConfigError, NegativeCoupling) as exc:
        log.error("%s", exc)
        return 1
    except (NonConvergence, MapBreakdown, TransformNonConvergence, ArithmeticError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return 2
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ncphi4", description=__doc__.splitlines()[0])
    parser.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    parser.add_argument("config", nargs="?", help="key = value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    overrides = list(args.overrides) + ([f"output_dir={args.out}"] if args.out else [])
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text, overrides)
    except (OSError, ConfigError) as exc:
        log.error("configuration: %s", exc)
        return 1
    return run(args.command, cfg)


__all__ = ["RunConfig", "ConfigError", "parse_config", "run", "main", "save_cache", "load_cache",
           "cache_roundtrip", "laguerre_suite"]

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
