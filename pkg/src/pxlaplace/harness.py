"""Exponent-sequence orchestration: solves, limit comparison, and reports.

A run is described by a RunConfig: domain, boundary datum, exponent family
with its j range, and solver knobs.  ``run_sequence`` solves the Dirichlet
problem for every p_j, solves the limit equation once, and assembles per-j
metrics:

    energy_half      sum w |grad(u_j / 2)|^{p_j} / p_j   (bounded by |Omega|)
    lux_grad_norm    Luxemburg norm of |grad u_j| under p_j
                     (bounded by 2 e^{1/e} max{1, |Omega|})
    sup_dist_to_limit  max over interior nodes of |u_j - u_inf|
    holder_seminorm_alpha  max quotient |u(x)-u(y)| / |x-y|^{1-dim/alpha}

together with verdicts for the two bounds and for monotone decrease of the
sup distance from j = 2 on.  Reports serialize to a JSON document, a CSV
table with one row per j, and a plot-ready (j, sup_dist) CSV; identical
configs and seeds produce bit-identical reports (the elapsed-time field is
excluded from comparisons).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyFunctional, minimize
from .exponents import make_exponent_family, validate_admissibility
from .grids import EXTERIOR, Grid, ScalarField, build_grid, cell_gradients
from .infinity import InfinityProblem, exact_solution, solve_infinity
from .modulars import luxemburg_norm, modular_rho

__all__ = [
    "ConfigError",
    "RunConfig",
    "PerJRecord",
    "LimitRecord",
    "ConvergenceReport",
    "build_domain",
    "build_datum",
    "run_sequence",
    "holder_seminorm",
    "emit_report",
    "report_from_json",
    "parse_config_text",
]

LUX_BOUND_FACTOR = 2.0 * math.exp(1.0 / math.e)


class ConfigError(ValueError):
    """Invalid run configuration or config file."""


@dataclass(frozen=True)
class RunConfig:
    """Full description of a convergence run (all fields have defaults)."""

    name: str = "run"
    domain_kind: str = "box_2d"
    bounds: tuple = (0.0, 1.0)
    n: int = 65
    radius: float | None = None
    center: tuple | None = None
    datum_kind: str = "affine"
    datum_params: dict = field(default_factory=dict)
    family: str = "constant_doubling"
    family_params: dict = field(default_factory=dict)
    j_min: int = 0
    j_max: int = 4
    exponent_cap: float = 1.0e6
    alpha: float | None = None
    solver_tol: float = 1.0e-8
    solver_max_iter: int = 20000
    solver_method: str = "auto"
    inf_tol: float = 1.0e-2
    inf_max_sweeps: int = 200000
    inf_eps_grad: float = 1.0e-10
    inf_drift_cap: float = 10.0
    holder_pair_budget: int = 200000
    seed: int = 0
    warm_start: bool = True
    out_dir: str = "reports"
    out_format: str = "json"

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


# flat config keys <-> RunConfig fields; datum.* and family.* collect params
_FLAT_KEYS = {
    "name": "name",
    "domain.kind": "domain_kind",
    "domain.bounds": "bounds",
    "domain.n": "n",
    "domain.radius": "radius",
    "domain.center": "center",
    "datum.kind": "datum_kind",
    "family.name": "family",
    "family.j_min": "j_min",
    "family.j_max": "j_max",
    "family.cap": "exponent_cap",
    "alpha": "alpha",
    "solver.tol": "solver_tol",
    "solver.max_iter": "solver_max_iter",
    "solver.method": "solver_method",
    "infinity.tol": "inf_tol",
    "infinity.max_sweeps": "inf_max_sweeps",
    "infinity.eps_grad": "inf_eps_grad",
    "infinity.drift_cap": "inf_drift_cap",
    "holder.pair_budget": "holder_pair_budget",
    "seed": "seed",
    "warm_start": "warm_start",
    "out.dir": "out_dir",
    "out.format": "out_format",
}

_INT_FIELDS = {"n", "j_min", "j_max", "solver_max_iter", "inf_max_sweeps",
               "holder_pair_budget", "seed"}
_STR_FIELDS = {"name", "domain_kind", "datum_kind", "family", "solver_method",
               "out_dir", "out_format"}


def _parse_value(text):
    text = text.strip()
    if "," in text:
        return tuple(float(t) for t in text.split(",") if t.strip())
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> RunConfig:
    """Parse the flat key-value config format (see docs/config.md)."""
    flat = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        flat[key] = _parse_value(val)
    return config_from_flat(flat)


def config_from_flat(flat: dict) -> RunConfig:
    kw = {}
    datum_params, family_params = {}, {}
    for key, val in flat.items():
        if key in _FLAT_KEYS:
            f = _FLAT_KEYS[key]
            if f in _INT_FIELDS:
                val = int(val)
            elif f in _STR_FIELDS:
                val = str(val)
            kw[f] = val
        elif key.startswith("datum."):
            datum_params[key.split(".", 1)[1]] = val
        elif key.startswith("family."):
            family_params[key.split(".", 1)[1]] = val
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if datum_params:
        kw["datum_params"] = datum_params
    if family_params:
        kw["family_params"] = family_params
    try:
        return RunConfig(**kw)
    except TypeError as exc:  # pragma: no cover - defensive
        raise ConfigError(str(exc)) from exc


def config_to_flat(cfg: RunConfig) -> dict:
    flat = {}
    inv = {v: k for k, v in _FLAT_KEYS.items()}
    for f in dataclasses.fields(cfg):
        if f.name == "datum_params":
            for k, v in cfg.datum_params.items():
                flat[f"datum.{k}"] = v
        elif f.name == "family_params":
            for k, v in cfg.family_params.items():
                flat[f"family.{k}"] = v
        else:
            v = getattr(cfg, f.name)
            if v is not None:
                flat[inv[f.name]] = v
    return flat


def build_domain(cfg: RunConfig) -> Grid:
    try:
        return build_grid(cfg.domain_kind, cfg.bounds, cfg.n,
                          radius=cfg.radius, center=cfg.center)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_datum(grid: Grid, kind: str, params: dict) -> ScalarField:
    """Builtin boundary data, evaluated at every non-exterior node."""
    if kind in ("affine", "cone", "aronsson"):
        return exact_solution(kind, params, grid)
    if kind == "harmonic_poly":
        if grid.dim != 2:
            raise ConfigError("harmonic_poly datum is 2D")
        s = float(params.get("scale", 1.0))
        return ScalarField.from_function(
            grid, lambda x, y: s * (x * x - y * y))
    raise ConfigError(f"unknown datum kind {kind!r}")


@dataclass(frozen=True)
class PerJRecord:
    j: int
    min_p: float
    max_p: float
    p_saturated: bool
    energy_half: float
    lux_grad_norm: float
    sup_dist_to_limit: float
    holder_seminorm_alpha: float
    residual_sup: float
    iterations: int
    converged: bool
    accepted_saturated: bool


@dataclass(frozen=True)
class LimitRecord:
    residual_sup: float
    sweeps: int
    converged: bool


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-j metrics, the limit record, and the run verdicts."""

    name: str
    volume: float
    alpha: float
    datum_lipschitz: float
    records: tuple
    limit: LimitRecord
    energy_bound_ok: bool
    lux_bound_ok: bool
    monotone_convergence_ok: bool
    all_converged: bool
    timing_seconds: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return (self.energy_bound_ok and self.lux_bound_ok
                and self.monotone_convergence_ok and self.all_converged)


def holder_seminorm(u: ScalarField, alpha: float, dim: int,
                    pair_budget: int = 200000, seed: int = 0) -> float:
    """Max quotient |u(x)-u(y)| / |x-y|^{1 - dim/alpha} over node pairs.

    All pairs are used when their count fits the budget.  Otherwise the
    sample is deterministic given ``seed``: every lattice-neighbor pair is
    included (small separations dominate the quotient) plus uniformly drawn
    pairs stratified by distance decade, capped per decade.

    Raises:
        ValueError: alpha <= dim.
    """
    if alpha <= dim:
        raise ValueError("alpha must exceed the dimension")
    grid = u.grid
    expo = 1.0 - dim / alpha
    mask = (grid.node_class != EXTERIOR)
    vals = u.values[mask]
    if grid.dim == 1:
        pts = grid.axis_coords(0)[mask][:, None]
    else:
        xg, yg = grid.coords()
        pts = np.column_stack([xg[mask], yg[mask]])
    m = vals.size
    total_pairs = m * (m - 1) // 2

    def quotient(ia, ib):
        d = np.linalg.norm(pts[ia] - pts[ib], axis=1)
        keep = d > 0
        if not keep.any():
            return 0.0
        return float((np.abs(vals[ia][keep] - vals[ib][keep])
                      / d[keep] ** expo).max())

    if total_pairs <= pair_budget:
        ia, ib = np.triu_indices(m, k=1)
        return quotient(ia, ib)

    best = 0.0
    # all lattice-neighbor pairs
    idx_grid = np.full(grid.shape, -1, dtype=int)
    idx_grid[mask] = np.arange(m)
    if grid.dim == 1:
        a = idx_grid[:-1]
        b = idx_grid[1:]
        keep = (a >= 0) & (b >= 0)
        best = max(best, quotient(a[keep], b[keep]))
    else:
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
            a = idx_grid[max(0, di):grid.n, max(0, dj):grid.n + min(0, dj)]
            b = idx_grid[:grid.n - di or None,
                         max(0, -dj):grid.n - max(0, dj)]
            keep = (a >= 0) & (b >= 0)
            best = max(best, quotient(a[keep].ravel(), b[keep].ravel()))
    # stratified random pairs, capped per distance decade
    rng = np.random.default_rng(seed)
    draw = rng.integers(0, m, size=(2, 3 * pair_budget))
    d = np.linalg.norm(pts[draw[0]] - pts[draw[1]], axis=1)
    ok = d > 0
    draw, d = draw[:, ok], d[ok]
    decades = np.floor(np.log2(d / grid.h)).astype(int)
    quota = max(1, pair_budget // max(1, decades.max() - decades.min() + 1))
    chosen = np.zeros(d.size, dtype=bool)
    for dec in np.unique(decades):
        where = np.flatnonzero(decades == dec)[:quota]
        chosen[where] = True
    best = max(best, quotient(draw[0][chosen], draw[1][chosen]))
    return best


def run_sequence(cfg: RunConfig) -> ConvergenceReport:
    """Solve every p_j problem and the limit problem; assemble the report.

    Solver failures do not raise: they are carried in the per-record
    ``converged`` flags and flip ``all_converged`` (the CLI maps that to a
    nonzero exit code).

    Raises:
        ConfigError: invalid domain/datum/family or inadmissible sequence.
    """
    t0 = time.perf_counter()
    grid = build_domain(cfg)
    phi = build_datum(grid, cfg.datum_kind, cfg.datum_params)
    alpha = cfg.alpha if cfg.alpha is not None else grid.dim + 1.0
    try:
        seq = make_exponent_family(cfg.family, cfg.family_params, grid,
                                   (cfg.j_min, cfg.j_max), cfg.exponent_cap)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    adm = validate_admissibility(seq, grid, alpha)
    if not adm.admissible:
        bad = [r.j for r in adm.rows if not r.exceeds_alpha]
        raise ConfigError(
            f"family {cfg.family} is inadmissible for alpha={alpha} at "
            f"j={bad}; min p must exceed alpha")

    lip = float(cell_gradients(phi).magnitudes.max())

    problem = InfinityProblem(grid, phi, seq.xi, cfg.inf_eps_grad,
                              cfg.inf_tol, cfg.inf_max_sweeps,
                              cfg.inf_drift_cap)
    limit_sol = solve_infinity(problem)
    limit = LimitRecord(limit_sol.residual_sup, limit_sol.iterations,
                        limit_sol.converged)

    records = []
    prev = None
    for j in seq.js():
        p_field = seq.field(j)
        pvals = p_field.values[grid.node_class != EXTERIOR]
        functional = EnergyFunctional(grid, p_field, phi)
        init = prev if (cfg.warm_start and prev is not None) else None
        sol = minimize(functional, init=init, tol=cfg.solver_tol,
                       max_iter=cfg.solver_max_iter,
                       method=cfg.solver_method)
        prev = sol.u
        half = modular_rho(cell_gradients(sol.u * 0.5), p_field,
                           weighted=True)
        lux = luxemburg_norm(cell_gradients(sol.u), p_field, weighted=False)
        records.append(PerJRecord(
            j=j,
            min_p=float(pvals.min()),
            max_p=float(pvals.max()),
            p_saturated=bool(pvals.max() >= cfg.exponent_cap),
            energy_half=half.value,
            lux_grad_norm=lux,
            sup_dist_to_limit=sol.u.sup_interior_diff(limit_sol.u),
            holder_seminorm_alpha=holder_seminorm(
                sol.u, alpha, grid.dim, cfg.holder_pair_budget, cfg.seed),
            residual_sup=sol.residual_sup,
            iterations=sol.iterations,
            converged=sol.converged,
            accepted_saturated=sol.accepted_saturated,
        ))

    volume = grid.volume
    energy_ok = all(r.energy_half <= volume + 1e-9 for r in records)
    lux_bound = LUX_BOUND_FACTOR * max(1.0, volume) + 1e-9
    lux_ok = all(r.lux_grad_norm <= lux_bound for r in records)
    dists = [r.sup_dist_to_limit for r in records if r.j >= 2]
    mono_ok = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    all_conv = all(r.converged for r in records) and limit.converged
    return ConvergenceReport(
        name=cfg.name, volume=volume, alpha=float(alpha),
        datum_lipschitz=lip, records=tuple(records), limit=limit,
        energy_bound_ok=bool(energy_ok), lux_bound_ok=bool(lux_ok),
        monotone_convergence_ok=bool(mono_ok),
        all_converged=bool(all_conv),
        timing_seconds=time.perf_counter() - t0)


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


_CSV_COLUMNS = ["j", "min_p", "max_p", "p_saturated", "energy_half",
                "lux_grad_norm", "sup_dist_to_limit",
                "holder_seminorm_alpha", "residual_sup", "iterations",
                "converged", "accepted_saturated"]


def emit_report(report: ConvergenceReport, out_dir: str,
                fmt: str = "json") -> dict:
    """Write the report; returns {kind: path}.

    ``json`` mirrors the report field for field; ``csv`` writes one row per
    j.  A plot-ready (j, sup_dist_to_limit) CSV accompanies both.  Files are
    written atomically (write then rename).

    Raises:
        ConfigError: unknown format; OSError: with path context.
    """
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown report format {fmt!r}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, report.name or "run")
        paths = {}
        if fmt == "json":
            doc = dataclasses.asdict(report)
            path = base + "_report.json"
            _atomic_write(path, json.dumps(doc, indent=2))
            paths["json"] = path
        else:
            path = base + "_report.csv"
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\r\n")
            w.writerow(_CSV_COLUMNS)
            for r in report.records:
                w.writerow([_fmt(getattr(r, c)) for c in _CSV_COLUMNS])
            _atomic_write(path, buf.getvalue())
            paths["csv"] = path
        plot_path = base + "_supdist.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["j", "sup_dist_to_limit"])
        for r in report.records:
            w.writerow([r.j, _fmt(r.sup_dist_to_limit)])
        _atomic_write(plot_path, buf.getvalue())
        paths["plot"] = plot_path
        return paths
    except OSError as exc:
        raise OSError(f"failed writing report under {out_dir!r}: {exc}") \
            from exc


def report_from_json(text: str) -> ConvergenceReport:
    """Reconstruct a report from its JSON document (round-trip identity)."""
    doc = json.loads(text)
    records = tuple(PerJRecord(**r) for r in doc.pop("records"))
    limit = LimitRecord(**doc.pop("limit"))
    return ConvergenceReport(records=records, limit=limit, **doc)
