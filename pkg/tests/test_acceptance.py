"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines, or via the package CLI's ``verify`` subcommand for the short
property/oracle subset.  Criterion 2 is asserted for every builtin exponent
family; the variable-exponent families are strict xfails because an affine
datum with gradient magnitude != 1 is not a solution of the
variable-exponent equation (the drift term ln|grad u| <grad u, grad p> does
not vanish), so no correct solver can return the datum there.
"""

import math

import numpy as np
import pytest

from pxlaplace import (
    EnergyFunctional,
    InfinityProblem,
    PRESETS,
    ScalarField,
    build_grid,
    cell_gradients,
    energy_divergence,
    energy_gradient,
    energy_value,
    exact_solution,
    expand_plaplacian,
    luxemburg_norm,
    make_exponent_family,
    minimize,
    monotonicity_gap,
    run_sequence,
    solve_1d_quadrature_oracle,
    solve_infinity,
    uc_inequality_check,
)
from tests.test_energy import five_point_dirichlet_solve
from tests.test_infinity import central_flux_divergence

LUX_BOUND_FACTOR = 2.0 * math.exp(1.0 / math.e)


def report(num, detail):
    print(f"ACCEPTANCE {num:02d} PASS: {detail}")


@pytest.fixture(scope="session")
def preset_reports():
    return {name: run_sequence(cfg) for name, cfg in PRESETS.items()}


def test_criterion_01_variable_exponent_1d_oracle():
    grid = build_grid("interval_1d", (0, 1), 513)
    phi = ScalarField.from_function(grid, lambda x: x)
    p_field = ScalarField.from_function(grid, lambda x: 2.0 + x)
    sol = minimize(EnergyFunctional(grid, p_field, phi), tol=1e-9)
    oracle = solve_1d_quadrature_oracle(lambda x: 2.0 + x, 0.0, 1.0, grid)
    sup = sol.u.sup_interior_diff(oracle)
    assert sol.converged
    assert sup <= 1e-6
    report(1, f"1D p(x)=2+x minimizer vs flux oracle, sup diff {sup:.2e}")


_FAMILY_CASES = [
    ("constant_doubling", {"c": 4.0}, (0, 4), None),
    pytest.param("affine", {"c": 4.0, "a": 1.0}, (0, 4), None,
                 marks=pytest.mark.xfail(
                     strict=True,
                     reason="0.8x is not a solution when grad p has a "
                            "component along grad phi: the flux "
                            "0.8^{p(x)-1} varies and its divergence is "
                            "nonzero, so the true minimizer differs from "
                            "the datum")),
    pytest.param("bump_2d", {"center": (1.5, 0.5), "mask_radius": 0.2},
                 (1, 4), None,
                 marks=pytest.mark.xfail(
                     strict=True,
                     reason="same obstruction as the affine family: "
                            "nonconstant exponent along the datum "
                            "gradient")),
]


@pytest.mark.parametrize("family,params,jr,_", _FAMILY_CASES)
def test_criterion_02_affine_invariance(family, params, jr, _):
    grid = build_grid("box_2d", (0, 1), 33)
    phi = ScalarField.from_function(grid, lambda x, y: 0.8 * x)
    seq = make_exponent_family(family, params, grid, jr)
    worst_res, worst_sup = 0.0, 0.0
    for j in seq.js():
        sol = minimize(EnergyFunctional(grid, seq.field(j), phi), tol=1e-12)
        worst_res = max(worst_res, sol.residual_sup)
        worst_sup = max(worst_sup, sol.u.sup_interior_diff(phi))
    assert worst_res <= 1e-12
    assert worst_sup <= 1e-10
    report(2, f"{family}: residual {worst_res:.2e}, sup|u-phi| "
              f"{worst_sup:.2e} over j={jr[0]}..{jr[1]}")


def test_criterion_03_p2_equivalence():
    grid = build_grid("box_2d", (0, 1), 33)
    phi = ScalarField.from_function(grid, lambda x, y: x * x - y * y)
    sol = minimize(EnergyFunctional(grid, 2.0, phi), tol=1e-10)
    oracle = five_point_dirichlet_solve(grid, phi)
    sup = sol.u.sup_interior_diff(oracle)
    assert sup <= 1e-8
    report(3, f"harmonic polynomial vs direct 5-point solve, sup {sup:.2e}")


def test_criterion_04_energy_bound_every_preset(preset_reports):
    for name, rep in preset_reports.items():
        for r in rep.records:
            assert r.energy_half <= rep.volume + 1e-9, (name, r.j)
        assert rep.energy_bound_ok
    worst = max(r.energy_half / rep.volume
                for rep in preset_reports.values() for r in rep.records)
    report(4, f"half-field energy <= |domain| on all presets "
              f"(worst fraction {worst:.3e})")


def test_criterion_05_luxemburg_bound_every_preset(preset_reports):
    for name, rep in preset_reports.items():
        bound = LUX_BOUND_FACTOR * max(1.0, rep.volume) + 1e-9
        for r in rep.records:
            assert r.lux_grad_norm <= bound, (name, r.j)
        assert rep.lux_bound_ok
    report(5, "gradient Luxemburg norms within 2 e^(1/e) max(1,|domain|) "
              "on all presets")


def test_criterion_06_cone_convergence(preset_reports):
    rep = preset_reports["cone_square"]
    dists = [r.sup_dist_to_limit for r in rep.records]
    tail = [d for r, d in zip(rep.records, dists) if r.j >= 2]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    assert dists[-1] <= 0.05
    assert rep.monotone_convergence_ok
    report(6, f"cone sup distances {['%.1e' % d for d in dists]} "
              f"nonincreasing for j >= 2, final {dists[-1]:.2e}")


def test_criterion_07_unbounded_exponent_run(preset_reports):
    rep = preset_reports["paper_1d_unbounded"]
    assert rep.all_converged
    assert not any(r.accepted_saturated for r in rep.records)
    # independent flux-constant oracle per j, plus the exact drift identity
    grid = build_grid("interval_1d", (0, 1), 257)
    phi = ScalarField.from_function(grid, lambda x: x)
    seq = make_exponent_family("paper_1d", {}, grid, (1, 5))
    x_int = grid.axis_coords(0)[grid.interior]
    xi_exact = -1.0 / x_int**2 + 1.0 / (1.0 - x_int)
    worst = 0.0
    for j in seq.js():
        sol = minimize(EnergyFunctional(grid, seq.field(j), phi), tol=1e-6)
        assert sol.converged and not sol.accepted_saturated
        oracle = solve_1d_quadrature_oracle(seq.field(j), 0.0, 1.0, grid)
        worst = max(worst, sol.u.sup_interior_diff(oracle))
        drift = seq.grad_log_p(x_int)[:, 0]
        assert np.abs(drift - xi_exact).max() <= 1e-12
    assert worst <= 1e-5
    report(7, f"unbounded family solves converge unsaturated; oracle sup "
              f"diff {worst:.2e}; analytic drift exact")


def test_criterion_08_infinity_solver_accuracy():
    errs = []
    for n in (33, 65, 129):
        grid = build_grid("box_2d", ((1, 2), (1, 2)), n)
        ar = exact_solution("aronsson", {}, grid)
        sol = solve_infinity(InfinityProblem(grid, ar, None, tol=1e-3))
        assert sol.converged
        errs.append(sol.u.sup_interior_diff(ar))
    assert errs[1] <= 0.02
    assert errs[0] > errs[1] > errs[2]
    report(8, f"two-power solution errors {['%.2e' % e for e in errs]} "
              f"strictly decreasing, n=65 error <= 0.02")


def test_criterion_09_uniform_convexity():
    grid = build_grid("interval_1d", (0, 1), 65)
    x = grid.axis_coords(0)
    rng = np.random.default_rng(2024)
    held = violations = 0
    for _ in range(1000):
        cu = rng.normal(size=3)
        cv = rng.normal(size=3)
        u = ScalarField(grid, cu[0] * np.sin(np.pi * x) + cu[1] * x + cu[2])
        v = ScalarField(grid, cv[0] * np.sin(np.pi * x) + cv[1] * x + cv[2])
        rec = uc_inequality_check(u, v, 2.0, 0.1)
        if rec.premise_holds:
            held += 1
            if not rec.delta_witness >= 1e-4:
                violations += 1
    assert violations == 0
    assert held > 0
    report(9, f"{held}/1000 premises held, zero witness violations")


def test_criterion_10_gradient_adjoint_identities():
    rng = np.random.default_rng(10)
    grid = build_grid("box_2d", (0, 1), 17)
    phi = ScalarField.from_function(grid, lambda x, y: 0.3 * x + 0.1 * y)
    pf = ScalarField.from_function(grid, lambda x, y: 2.0 + x)
    F = EnergyFunctional(grid, pf, phi)
    uv = phi.values + 0.1 * rng.normal(size=grid.shape)
    uv[grid.boundary] = phi.values[grid.boundary]
    u = ScalarField(grid, uv)
    grad = energy_gradient(F, u)
    t = 1e-6
    worst_fd = 0.0
    for _ in range(20):
        d = rng.normal(size=grid.shape)
        d[~grid.interior] = 0.0
        d /= np.abs(d).max()
        plus = energy_value(F, ScalarField(grid, u.values + t * d)).value
        minus = energy_value(F, ScalarField(grid, u.values - t * d)).value
        fd = (plus - minus) / (2 * t)
        an = float(np.nansum(grad.values * d))
        worst_fd = max(worst_fd, abs(fd - an) / (1 + abs(an)))
    assert worst_fd <= 1e-6

    worst_adj = 0.0
    for _ in range(10):
        a = rng.normal(size=grid.shape)
        b = rng.normal(size=grid.shape)
        a[~grid.interior] = 0.0
        b[~grid.interior] = 0.0
        ga = cell_gradients(ScalarField(grid, a))
        gb = cell_gradients(ScalarField(grid, b))
        lhs = float(np.sum(ga.weight * (ga.g * gb.g).sum(axis=1)))
        rhs = float(np.nansum(b * energy_divergence(grid, ga.g).values))
        worst_adj = max(worst_adj, abs(lhs - rhs) / (1 + abs(lhs)))
    assert worst_adj <= 1e-12

    count = 0
    for p in (2.0, 3.0, 4.0, 10.0):
        for _ in range(25):
            base = rng.normal(size=grid.shape)
            pert = np.zeros(grid.shape)
            pert[grid.interior] = rng.normal(size=int(grid.interior.sum()))
            rec = monotonicity_gap(ScalarField(grid, base),
                                   ScalarField(grid, base + pert), p)
            assert rec.lhs >= rec.rhs - 1e-10 * (1 + abs(rec.lhs))
            count += 1
    assert count == 100
    report(10, f"FD gradient defect {worst_fd:.2e}, adjointness defect "
               f"{worst_adj:.2e}, 100 monotonicity pairs nonnegative")


def test_criterion_11_expansion_consistency():
    # the pinned datum x^2 - y^2 + 0.1 x y with p = 4 makes every centered
    # divergence exact (odd-cubic flux: the two third-derivative terms
    # cancel), so agreement is at round-off, stronger than the O(h^2) the
    # halving ratio would certify; the ratio window is asserted whenever
    # the truncation error is measurably nonzero
    def grad(x, y):
        return (2 * x + 0.1 * y, -2 * y + 0.1 * x)

    def hess(_x, _y):
        return np.array([[2.0, 0.1], [0.1, -2.0]])

    point = (0.4, 0.7)
    an = -expand_plaplacian(grad(*point), hess(*point), 4.0, (0.0, 0.0))
    errs = [abs(central_flux_divergence(grad, 4.0, point, h) - an)
            for h in (1 / 64, 1 / 128)]
    noise = 1e-10 * (1 + abs(an))
    if errs[0] > noise and errs[1] > noise:
        assert 3.5 <= errs[0] / errs[1] <= 4.5
        detail = f"halving ratio {errs[0] / errs[1]:.2f}"
    else:
        assert max(errs) <= noise
        detail = f"exact agreement (errors {errs[0]:.1e}, {errs[1]:.1e})"
    report(11, f"expansion vs flux-divergence oracle: {detail}")
