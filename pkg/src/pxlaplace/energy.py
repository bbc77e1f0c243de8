"""Dirichlet integral assembly, minimization, and the 1D flux oracle.

The Dirichlet integral of a field w under a per-cell exponent p is

    E(w) = sum_cells weight_c * |g_c(w)|^{p_c} / p_c,

with g_c the midpoint cell gradient.  The weak solution of the Dirichlet
problem with datum phi is the unique minimizer of E over fields that agree
with phi at the boundary nodes; equivalently it minimizes the shifted
functional |grad(v - phi)|^p / p over fields v vanishing on the boundary,
the two parametrizations differing by the substitution w = phi - v which
leaves the integrand invariant.  ``energy_value``/``energy_gradient``
expose the shifted form (the energy of u - phi); ``minimize`` produces the
boundary-datum solution, whose residual is the discrete weak form of
div(|grad u|^{p-2} grad u) = 0.

All powers are evaluated in log scale.  The reported energy and residual
saturate at exp(700) per cell; the line search instead works on ln E
computed by logsumexp, which stays finite and well scaled for exponents up
to the cap, so iterates can descend through astronomically large energies
without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize as scipy_minimize
from scipy.special import logsumexp

from .grids import EXTERIOR, Grid, ScalarField, cell_gradients, scatter_cells
from .modulars import MODULAR_LOG_CAP, ModularValue

__all__ = [
    "EnergyFunctional",
    "Solution",
    "energy_value",
    "energy_gradient",
    "minimize",
    "solve_p2_reference",
    "solve_1d_quadrature_oracle",
    "monotonicity_gap",
    "MonotonicityGap",
]


def _cell_exponent_array(grid, p):
    if isinstance(p, ScalarField):
        if p.grid != grid:
            raise ValueError("exponent field lives on a different grid")
        pc = grid.average_to_cells(p.values)
    else:
        pc = np.broadcast_to(np.asarray(p, dtype=float),
                             (grid.num_cells,)).copy()
    if not np.all(pc > 1.0):
        raise ValueError("exponent must exceed 1 on every cell")
    return pc


def _gradient_matrix(grid):
    """Sparse cell-gradient operator, rows = dim * ncells, cols = nodes."""
    nc, nn = grid.num_cells, grid.n**grid.dim
    if grid.dim == 1:
        (i,) = grid.cell_corner_indices()
        h = grid.spacing[0]
        rows = np.repeat(np.arange(nc), 2)
        cols = np.column_stack([i, i + 1]).ravel()
        vals = np.tile([-1.0 / h, 1.0 / h], nc)
        return sp.csr_matrix((vals, (rows, cols)), shape=(nc, nn))
    sw, se, nw, ne = grid.cell_corner_indices()
    hx, hy = grid.spacing
    # gx rows: (se - sw + ne - nw) / (2 hx); gy rows: (nw - sw + ne - se)/(2 hy)
    ax, ay = 1.0 / (2 * hx), 1.0 / (2 * hy)
    gx_rows = 2 * np.arange(nc)
    gy_rows = gx_rows + 1
    rows = np.concatenate([np.repeat(gx_rows, 4), np.repeat(gy_rows, 4)])
    cols = np.concatenate([
        np.column_stack([sw, se, nw, ne]).ravel(),
        np.column_stack([sw, se, nw, ne]).ravel(),
    ])
    vals = np.concatenate([
        np.tile([-ax, ax, -ax, ax], nc),
        np.tile([-ay, -ay, ay, ay], nc),
    ])
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * nc, nn))


def _p2_stiffness(grid):
    """Assembled p = 2 stiffness G^T W G on all nodes."""
    G = _gradient_matrix(grid)
    w = np.repeat(grid.cell_weights, grid.dim) if grid.dim == 2 \
        else grid.cell_weights
    return (G.T @ sp.diags(w) @ G).tocsr()


@dataclass(frozen=True, eq=False)
class EnergyFunctional:
    """Dirichlet integral data: grid, per-cell exponent, boundary datum.

    ``p`` may be a ScalarField (averaged to cells), a per-cell array, or a
    scalar; values must exceed 1 on every cell.  ``phi`` must be finite on
    interior and boundary nodes.
    """

    grid: Grid
    p: object
    phi: ScalarField
    cell_p: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.phi.grid != self.grid:
            raise ValueError("phi lives on a different grid")
        active = self.grid.node_class != EXTERIOR
        if not np.all(np.isfinite(self.phi.values[active])):
            raise ValueError("phi must be finite on interior and boundary")
        object.__setattr__(self, "cell_p",
                           _cell_exponent_array(self.grid, self.p))


def _log_terms(grid, cell_p, values):
    """Per-cell (|g|, log(w |g|^p / p)) for a nodal value array."""
    v = values.ravel()
    if grid.dim == 1:
        (i,) = grid.cell_corner_indices()
        g = ((v[i + 1] - v[i]) / grid.spacing[0])[:, None]
    else:
        sw, se, nw, ne = grid.cell_corner_indices()
        hx, hy = grid.spacing
        gx = (v[se] - v[sw] + v[ne] - v[nw]) / (2.0 * hx)
        gy = (v[nw] - v[sw] + v[ne] - v[se]) / (2.0 * hy)
        g = np.column_stack([gx, gy])
    mag = np.sqrt((g * g).sum(axis=1))
    with np.errstate(divide="ignore"):
        logmag = np.where(mag > 0.0, np.log(np.maximum(mag, 1e-320)), -np.inf)
    lt = cell_p * logmag - np.log(cell_p)
    return g, mag, lt


def _energy_raw(grid, cell_p, values):
    """Saturating energy: per-cell terms capped at exp(700), plus a flag."""
    _, _, lt = _log_terms(grid, cell_p, values)
    lw = np.log(grid.cell_weights)
    terms = lt + lw
    saturated = bool(np.any(terms > MODULAR_LOG_CAP))
    total = float(np.sum(np.exp(np.minimum(terms, MODULAR_LOG_CAP))))
    return total, saturated


def _energy_log(grid, cell_p, values):
    """ln E by logsumexp; -inf for the zero-gradient field."""
    _, _, lt = _log_terms(grid, cell_p, values)
    finite = lt > -np.inf
    if not finite.any():
        return -np.inf
    return float(logsumexp(lt[finite], b=grid.cell_weights[finite]))


def _residual_raw(grid, cell_p, values):
    """Divergence of the saturating flux |g|^{p-1} g/|g| (nodal array)."""
    g, mag, _ = _log_terms(grid, cell_p, values)
    with np.errstate(divide="ignore"):
        logmag = np.where(mag > 0.0, np.log(np.maximum(mag, 1e-320)), -np.inf)
    fmag = np.exp(np.minimum((cell_p - 1.0) * logmag, MODULAR_LOG_CAP))
    scale = np.where(mag > 0.0, fmag / np.maximum(mag, 1e-320), 0.0)
    flux = g * scale[:, None]
    out = scatter_cells(grid, flux * grid.cell_weights[:, None])
    out[~grid.interior] = 0.0
    return out


def _grad_log_energy(grid, cell_p, values, log_e):
    """Gradient of ln E via softmax cell weights (stable for huge p)."""
    g, mag, lt = _log_terms(grid, cell_p, values)
    if log_e == -np.inf:
        return np.zeros(grid.shape)
    sigma = np.exp(np.minimum(lt + np.log(grid.cell_weights) - log_e, 700.0))
    coef = np.where(mag > 0.0, sigma * cell_p / np.maximum(mag, 1e-320) ** 2,
                    0.0)
    out = scatter_cells(grid, g * coef[:, None])
    out[~grid.interior] = 0.0
    return out


def energy_value(F: EnergyFunctional, u: ScalarField) -> ModularValue:
    """Dirichlet integral of u - phi (u should carry phi boundary values)."""
    if u.grid != F.grid:
        raise ValueError("field lives on a different grid")
    diff = np.where(F.grid.node_class == EXTERIOR, 0.0, u.values - F.phi.values)
    total, saturated = _energy_raw(F.grid, F.cell_p, diff)
    return ModularValue(total, saturated)


def energy_gradient(F: EnergyFunctional, u: ScalarField) -> ScalarField:
    """First variation of ``energy_value``: the discrete weak residual.

    The value at an interior node is the divergence of the per-cell flux
    weight * |g|^{p-2} g of u - phi; zero-gradient cells contribute zero
    flux (subgradient choice).
    """
    if u.grid != F.grid:
        raise ValueError("field lives on a different grid")
    diff = np.where(F.grid.node_class == EXTERIOR, 0.0, u.values - F.phi.values)
    return ScalarField(F.grid, _residual_raw(F.grid, F.cell_p, diff))


@dataclass(frozen=True, eq=False)
class Solution:
    """Minimizer field plus diagnostics.

    ``u`` equals the boundary datum bit-for-bit at boundary nodes.
    ``energy`` is the Dirichlet integral of u (its saturation state in
    ``energy_saturated``); ``converged`` means the sup-norm of the weak
    residual reached the requested tolerance.  ``accepted_saturated``
    records whether any accepted line-search iterate had a saturated
    energy.
    """

    u: ScalarField
    energy: float
    residual_sup: float
    iterations: int
    converged: bool
    energy_saturated: bool = False
    accepted_saturated: bool = False


def solve_p2_reference(grid: Grid, phi: ScalarField) -> ScalarField:
    """Direct sparse solve of the p = 2 Euler-Lagrange system (harmonic
    extension of the boundary values in the cell-energy discretization)."""
    A = _p2_stiffness(grid)
    flat_int = np.flatnonzero(grid.interior.ravel())
    flat_bnd = np.flatnonzero(grid.boundary.ravel())
    phib = phi.values.ravel()[flat_bnd]
    rhs = -A[flat_int][:, flat_bnd] @ phib
    sol = spla.spsolve(A[flat_int][:, flat_int].tocsc(), rhs)
    out = phi.values.copy()
    out.ravel()[flat_int] = sol
    return ScalarField(grid, out)


def minimize(F: EnergyFunctional, init: ScalarField | None = None,
             tol: float = 1.0e-8, max_iter: int = 20000,
             method: str = "auto") -> Solution:
    """Minimize the Dirichlet integral over fields with datum boundary values.

    Descent runs on interior values only, with the diagonal of the p = 2
    stiffness as preconditioner and Armijo backtracking on ln E (stable for
    arbitrarily large exponents).  ``method`` is ``descent``, ``lbfgs``, or
    ``auto`` (bounded descent warmup, L-BFGS finish, and exponent
    continuation: very large exponents are approached through a ladder of
    capped exponent fields, each solve warm-starting the next, with the
    final solve on the true field).  Stops when the sup-norm of the weak
    residual drops below ``tol``; note that the achievable residual floor
    scales like max(p) times unit round-off, so tolerances below ~1e-9 are
    unreachable for exponents near the cap.

    Non-convergence is reported through ``Solution.converged``; a NaN in
    the iterate raises RuntimeError.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method not in ("auto", "descent", "lbfgs"):
        raise ValueError(f"unknown method {method!r}")
    grid, pc, phi = F.grid, F.cell_p, F.phi
    if np.all(pc == 2.0):
        # quadratic energy: the direct sparse solve is the exact minimizer
        u = solve_p2_reference(grid, phi)
        rs = float(np.abs(_residual_raw(grid, pc, np.where(
            grid.node_class == EXTERIOR, 0.0, u.values))[grid.interior]).max())
        energy, esat = _energy_raw(grid, pc, np.where(
            grid.node_class == EXTERIOR, 0.0, u.values))
        return Solution(u, energy, rs, 1, bool(rs <= tol), esat, False)
    if init is None:
        init = solve_p2_reference(grid, phi)
    else:
        if init.grid != grid:
            raise ValueError("init lives on a different grid")
        if not np.array_equal(init.values[grid.boundary],
                              phi.values[grid.boundary]):
            raise ValueError("init must agree with phi on boundary nodes")

    if method == "auto" and float(pc.max()) > 64.0:
        rs0 = float(np.abs(_residual_raw(grid, pc, np.where(
            grid.node_class == EXTERIOR, 0.0,
            init.values))[grid.interior]).max())
        total_iter = 0
        current = init
        if rs0 > 1.0e3 * tol:
            # exponent continuation: approach the true field through a
            # ladder of capped exponents, each rung warm-starting the next
            cap = 64.0
            while cap < float(pc.max()):
                rung = EnergyFunctional(grid, np.minimum(pc, cap), phi)
                sol = minimize(rung, init=current,
                               tol=max(tol, 1e-9 * cap),
                               max_iter=min(max_iter, 1500),
                               method="lbfgs")
                current = sol.u
                total_iter += sol.iterations
                cap *= 4.0
        sol = minimize(F, init=current, tol=tol, max_iter=max_iter,
                       method="lbfgs")
        total_iter += sol.iterations
        u, rs = sol.u, sol.residual_sup
        if rs > tol and float(pc.max()) <= 4096.0:
            vals = u.values.copy()
            vals[grid.node_class == EXTERIOR] = 0.0
            vals, it = _newton_polish(grid, pc, vals, grid.interior, tol)
            total_iter += it
            rs = float(np.abs(_residual_raw(grid, pc, vals)
                              [grid.interior]).max())
            out = phi.values.copy()
            out[grid.interior] = vals[grid.interior]
            u = ScalarField(grid, out)
        energy, esat = _energy_raw(grid, pc, np.where(
            grid.node_class == EXTERIOR, 0.0, u.values))
        return Solution(u, energy, rs, total_iter, bool(rs <= tol),
                        esat, sol.accepted_saturated)

    W = init.values.copy()
    W[grid.node_class == EXTERIOR] = 0.0  # scratch value; never read through cells
    interior = grid.interior
    diag = _p2_stiffness(grid).diagonal().reshape(grid.shape)
    diag = np.where(interior, diag, 1.0)

    accepted_saturated = False
    iterations = 0

    def residual_sup(vals):
        r = _residual_raw(grid, pc, vals)
        return float(np.abs(r[interior]).max()), r

    rs, _ = residual_sup(W)
    if method in ("auto", "descent"):
        # in auto mode the descent phase is a bounded warmup before L-BFGS
        budget = max_iter if method == "descent" else min(150, max_iter)
        log_e = _energy_log(grid, pc, W)
        step = 1.0
        stalled = False
        while rs > tol and iterations < budget:
            if not np.all(np.isfinite(W[interior])):
                raise RuntimeError("NaN in minimize iterate")
            if log_e == -np.inf:
                break
            gl = _grad_log_energy(grid, pc, W, log_e)
            d = gl / diag
            slope = float(np.sum(gl[interior] * d[interior]))
            if slope <= 0.0:
                break
            accepted = False
            t = step
            for _ in range(120):
                trial = W.copy()
                trial[interior] -= t * d[interior]
                le_t = _energy_log(grid, pc, trial)
                if le_t <= log_e and (log_e - le_t) >= _armijo_gain(t * slope):
                    W, log_e = trial, le_t
                    accepted = True
                    break
                t *= 0.5
            iterations += 1
            if not accepted:
                stalled = True
                break
            step = min(t * 2.0, 1.0e6)
            rs, _ = residual_sup(W)
            _, sat = _energy_raw(grid, pc, W)
            accepted_saturated = accepted_saturated or sat
        if method == "descent" or (not stalled and rs <= tol):
            pass
        elif method == "auto" and rs > tol:
            W, it2 = _lbfgs_polish(grid, pc, W, interior, max_iter)
            iterations += it2
            rs, _ = residual_sup(W)
    if method == "lbfgs":
        W, it2 = _lbfgs_polish(grid, pc, W, interior, max_iter)
        iterations += it2
        rs, _ = residual_sup(W)
    if method == "auto" and rs > tol and float(pc.max()) <= 4096.0:
        W, it3 = _newton_polish(grid, pc, W, interior, tol)
        iterations += it3
        rs, _ = residual_sup(W)

    if not np.all(np.isfinite(W[interior])):
        raise RuntimeError("NaN in minimize iterate")
    out = phi.values.copy()
    out[interior] = W[interior]
    u = ScalarField(grid, out)
    energy, esat = _energy_raw(grid, pc, np.where(grid.node_class == EXTERIOR,
                                                  0.0, u.values))
    return Solution(u, energy, rs, iterations, bool(rs <= tol),
                    esat, accepted_saturated)


def _armijo_gain(ts):
    """Required decrease of ln E for a step of predicted log-gain ts.

    Armijo on E reads E_new <= E (1 - c ts) with ts the inner product of
    grad ln E and the step; in log scale that is a decrease of at least
    -log1p(-c ts).
    """
    c1 = 1.0e-4
    x = min(c1 * ts, 0.5)
    return -math.log1p(-x)


def _newton_polish(grid, pc, W, interior, tol, max_steps=15):
    """Damped Newton steps on the weak residual for moderate exponents.

    Assembles the exact sparse Hessian G^T D G with per-cell blocks
    w (|g|^{p-2} I + (p-2)|g|^{p-4} g g^T) and keeps a step only when it
    reduces the residual sup-norm; returns the (possibly unchanged) iterate
    and the number of accepted steps.  Intended as a finisher once a
    first-order method is near the minimizer; not used in the degenerate
    huge-exponent regime where these blocks overflow or vanish.
    """
    G = _gradient_matrix(grid)
    w = grid.cell_weights
    flat_int = np.flatnonzero(interior.ravel())
    nn = grid.n**grid.dim
    steps = 0
    for _ in range(max_steps):
        r = _residual_raw(grid, pc, W)
        rs = float(np.abs(r[interior]).max())
        if rs <= tol:
            break
        g, mag, _ = _log_terms(grid, pc, W)
        with np.errstate(divide="ignore"):
            lm = np.where(mag > 0.0, np.log(np.maximum(mag, 1e-320)),
                          -np.inf)
        a = np.exp(np.minimum((pc - 2.0) * lm, MODULAR_LOG_CAP))
        a = np.where(mag > 0.0, a, 0.0)
        b = np.where(mag > 0.0,
                     (pc - 2.0) * np.exp(np.minimum((pc - 4.0) * lm,
                                                    MODULAR_LOG_CAP)), 0.0)
        nc = grid.num_cells
        if grid.dim == 1:
            D = sp.diags(w * (a + b * g[:, 0] ** 2))
        else:
            dxx = w * (a + b * g[:, 0] ** 2)
            dyy = w * (a + b * g[:, 1] ** 2)
            dxy = w * b * g[:, 0] * g[:, 1]
            rows = np.concatenate([2 * np.arange(nc), 2 * np.arange(nc) + 1,
                                   2 * np.arange(nc), 2 * np.arange(nc) + 1])
            cols = np.concatenate([2 * np.arange(nc), 2 * np.arange(nc) + 1,
                                   2 * np.arange(nc) + 1, 2 * np.arange(nc)])
            D = sp.csr_matrix((np.concatenate([dxx, dyy, dxy, dxy]),
                               (rows, cols)), shape=(2 * nc, 2 * nc))
        H = (G.T @ D @ G).tocsr()[flat_int][:, flat_int]
        reg = 1e-14 * max(1.0, float(np.abs(H.diagonal()).max()))
        H = H + reg * sp.eye(flat_int.size, format="csr")
        try:
            delta = spla.spsolve(H.tocsc(), r.ravel()[flat_int])
        except Exception:
            break
        if not np.all(np.isfinite(delta)):
            break
        improved = False
        t = 1.0
        for _ in range(25):
            trial = W.copy()
            trial.ravel()[flat_int] -= t * delta
            rt = _residual_raw(grid, pc, trial)
            if float(np.abs(rt[interior]).max()) < rs:
                W = trial
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        steps += 1
    return W, steps


def _lbfgs_polish(grid, pc, W, interior, max_iter):
    shape = grid.shape
    base = W.copy()

    def fun(x):
        vals = base.copy()
        vals[interior] = x
        le = _energy_log(grid, pc, vals)
        if le == -np.inf:
            return -1.0e30, np.zeros_like(x)
        g = _grad_log_energy(grid, pc, vals, le)
        return le, g[interior]

    res = scipy_minimize(fun, base[interior], jac=True, method="L-BFGS-B",
                         options={"maxiter": max_iter, "maxcor": 25,
                                  "ftol": 1e-18, "gtol": 1e-16,
                                  "maxfun": 4 * max_iter})
    out = base
    out[interior] = res.x
    return out, int(res.nit)


def solve_1d_quadrature_oracle(p, a, b, grid: Grid) -> ScalarField:
    """Independent 1D oracle: constant-flux quadrature of the exponent ODE.

    The flux |u'|^{p(x)-2} u' of a 1D solution is a constant C, so
    u'(x) = sgn(C) |C|^{1/(p(x)-1)}.  Bisection on ln|C| matches the total
    rise to b - a; the solution is the cumulative midpoint sum.  ``p`` is a
    callable p(x) or a ScalarField (averaged to edge midpoints).

    Raises:
        ValueError: non-1D grid; RuntimeError: bracket failure.
    """
    if grid.dim != 1:
        raise ValueError("the quadrature oracle is 1D only")
    x = grid.axis_coords(0)
    mids = 0.5 * (x[:-1] + x[1:])
    if isinstance(p, ScalarField):
        pm = grid.average_to_cells(p.values)
    else:
        pm = np.asarray(p(mids), dtype=float)
        pm = np.broadcast_to(pm, mids.shape)
    if np.any(pm <= 1.0):
        raise ValueError("oracle requires p > 1 on the grid")
    h = grid.spacing[0]
    rise = float(b - a)
    if rise == 0.0:
        return ScalarField.constant(grid, a)
    sign = math.copysign(1.0, rise)

    def total(s):  # total rise for ln|C| = s
        return float(np.sum(h * np.exp(s / (pm - 1.0))))

    target = abs(rise)
    lo, hi = 0.0, 0.0
    if total(0.0) < target:
        while total(hi) < target:
            hi += 16.0
            if hi > 1500.0:
                raise RuntimeError("oracle failed to bracket the flux")
        lo = hi - 16.0
    else:
        while total(lo) > target:
            lo -= 16.0
            if lo < -1500.0:
                raise RuntimeError("oracle failed to bracket the flux")
        hi = lo + 16.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) > target:
            hi = mid
        else:
            lo = mid
    s = 0.5 * (lo + hi)
    slopes = sign * np.exp(s / (pm - 1.0))
    vals = a + np.concatenate([[0.0], np.cumsum(h * slopes)])
    vals += (b - vals[-1]) * (x - x[0]) / (x[-1] - x[0])
    return ScalarField(grid, vals)


@dataclass(frozen=True)
class MonotonicityGap:
    """lhs/rhs of the flux-monotonicity inequality; lhs >= rhs for p >= 2."""

    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


def monotonicity_gap(w1: ScalarField, w2: ScalarField, p) -> MonotonicityGap:
    """Evaluate the pointwise flux-difference inequality integrated in cells:

        sum w (|g1|^{p-2} g1 - |g2|^{p-2} g2) . (g1 - g2)
            >= sum w 2^{2-p} |g1 - g2|^p.

    Raises:
        ValueError: different grids or boundary-value mismatch.
    """
    if w1.grid != w2.grid:
        raise ValueError("fields live on different grids")
    grid = w1.grid
    bnd = grid.boundary
    if not np.allclose(w1.values[bnd], w2.values[bnd], rtol=0.0, atol=0.0):
        raise ValueError("boundary values differ")
    pc = _cell_exponent_array(grid, p)
    g1 = cell_gradients(w1).g
    g2 = cell_gradients(w2).g
    w = grid.cell_weights

    def flux(g):
        mag = np.sqrt((g * g).sum(axis=1))
        with np.errstate(divide="ignore"):
            lm = np.where(mag > 0.0, np.log(np.maximum(mag, 1e-320)), -np.inf)
        fm = np.exp(np.minimum((pc - 1.0) * lm, MODULAR_LOG_CAP))
        return g * np.where(mag > 0.0,
                            fm / np.maximum(mag, 1e-320), 0.0)[:, None]

    diff = g1 - g2
    lhs = float(np.sum(w * ((flux(g1) - flux(g2)) * diff).sum(axis=1)))
    dm = np.sqrt((diff * diff).sum(axis=1))
    with np.errstate(divide="ignore"):
        ld = np.where(dm > 0.0, np.log(np.maximum(dm, 1e-320)), -np.inf)
    rhs_terms = np.exp(np.minimum((2.0 - pc) * math.log(2.0) + pc * ld,
                                  MODULAR_LOG_CAP))
    rhs = float(np.sum(w * np.where(dm > 0.0, rhs_terms, 0.0)))
    return MonotonicityGap(lhs, rhs)
