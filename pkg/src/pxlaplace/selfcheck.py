"""Built-in verification suite behind the ``verify`` CLI subcommand.

Each check is an independent oracle-style test of a load-bearing identity:
exact gradient/divergence adjointness, finite-difference consistency of the
energy gradient, the 1D constant-flux oracle against the minimizer, the
uniform-convexity witness on random pairs, and the centered residual of the
classical two-power solution of the limit equation under grid refinement.
"""

from __future__ import annotations

import numpy as np

from .energy import (EnergyFunctional, energy_gradient, energy_value,
                     minimize, solve_1d_quadrature_oracle)
from .grids import ScalarField, build_grid, cell_gradients, energy_divergence
from .infinity import exact_solution, residual_infinity_field
from .modulars import uc_inequality_check

__all__ = ["run_verify"]


def _check_adjointness(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind, n in (("interval_1d", 33), ("box_2d", 17)):
        grid = build_grid(kind, (0.0, 1.0), n)
        for _ in range(5):
            uv = rng.normal(size=grid.shape)
            vv = rng.normal(size=grid.shape)
            uv[~grid.interior] = 0.0
            vv[~grid.interior] = 0.0
            u = ScalarField(grid, uv)
            v = ScalarField(grid, vv)
            gu = cell_gradients(u)
            gv = cell_gradients(v)
            lhs = float(np.sum(gu.weight * (gu.g * gv.g).sum(axis=1)))
            div = energy_divergence(grid, gu.g)
            rhs = float(np.nansum(v.values * div.values))
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    return worst <= 1e-12, f"max relative defect {worst:.3e}"


def _check_gradient_consistency(seed):
    rng = np.random.default_rng(seed)
    grid = build_grid("box_2d", (0.0, 1.0), 17)
    phi = ScalarField.from_function(grid, lambda x, y: 0.3 * x + 0.1 * y)
    pf = ScalarField.from_function(grid, lambda x, y: 2.0 + x + 0.5 * y)
    F = EnergyFunctional(grid, pf, phi)
    uv = phi.values + 0.1 * rng.normal(size=grid.shape)
    uv[grid.boundary] = phi.values[grid.boundary]
    u = ScalarField(grid, uv)
    g = energy_gradient(F, u)
    worst = 0.0
    t = 1e-6
    for _ in range(20):
        d = rng.normal(size=grid.shape)
        d[~grid.interior] = 0.0
        dn = np.abs(d).max()
        d /= dn
        up = ScalarField(grid, u.values + t * d)
        dn_ = ScalarField(grid, u.values - t * d)
        fd = (energy_value(F, up).value - energy_value(F, dn_).value) / (2 * t)
        an = float(np.nansum(g.values * d))
        worst = max(worst, abs(fd - an) / (1.0 + abs(an)))
    return worst <= 1e-6, f"max relative FD defect {worst:.3e}"


def _check_1d_oracle(_seed):
    grid = build_grid("interval_1d", (0.0, 1.0), 129)
    phi = ScalarField.from_function(grid, lambda x: x)
    pf = ScalarField.from_function(grid, lambda x: 2.0 + x)
    sol = minimize(EnergyFunctional(grid, pf, phi), tol=1e-11)
    oracle = solve_1d_quadrature_oracle(lambda x: 2.0 + x, 0.0, 1.0, grid)
    sup = sol.u.sup_interior_diff(oracle)
    return sol.converged and sup <= 1e-6, f"sup |minimizer - oracle| {sup:.3e}"


def _check_uniform_convexity(seed):
    rng = np.random.default_rng(seed)
    grid = build_grid("interval_1d", (0.0, 1.0), 33)
    x = grid.axis_coords(0)
    violations = 0
    evaluated = 0
    for _ in range(200):
        cu = rng.normal(size=4)
        cv = rng.normal(size=4)
        u = ScalarField(grid, cu[0] * np.sin(np.pi * x) + cu[1] * x**2
                        + cu[2] * x + cu[3])
        v = ScalarField(grid, cv[0] * np.sin(np.pi * x) + cv[1] * x**2
                        + cv[2] * x + cv[3])
        rec = uc_inequality_check(u, v, 2.0, 0.1)
        if rec.premise_holds:
            evaluated += 1
            if not rec.delta_witness >= 1e-4:
                violations += 1
    return violations == 0, f"{evaluated} premises held, {violations} violations"


def _check_aronsson_residual(_seed):
    sups = []
    for n in (33, 65):
        grid = build_grid("box_2d", ((1.0, 2.0), (1.0, 2.0)), n)
        u = exact_solution("aronsson", {}, grid)
        res, _ = residual_infinity_field(u, None)
        sups.append(float(np.nanmax(np.abs(res))))
    ratio = sups[1] / sups[0]
    ok = sups[0] <= 0.5 and ratio <= 0.6
    return ok, f"residual sup {sups[0]:.3e} -> {sups[1]:.3e} (ratio {ratio:.2f})"


_CHECKS = [
    ("adjointness", _check_adjointness),
    ("gradient_consistency", _check_gradient_consistency),
    ("oracle_1d", _check_1d_oracle),
    ("uniform_convexity", _check_uniform_convexity),
    ("aronsson_residual", _check_aronsson_residual),
]


def run_verify(seed: int = 0):
    """Run every built-in check; returns [(name, ok, detail), ...]."""
    results = []
    for name, fn in _CHECKS:
        ok, detail = fn(seed)
        results.append((name, bool(ok), detail))
    return results
