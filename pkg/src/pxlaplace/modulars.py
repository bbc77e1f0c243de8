"""Modulars, Luxemburg norms, and the uniform-convexity midpoint inequality.

The weighted modular of a field u under a variable exponent p is

    rho(u) = sum_cells weight_c * |u_c|^{p_c} / p_c,

the discrete counterpart of the integral of |u|^p / p; the unweighted
variant drops the 1/p factor.  Every power is evaluated in log space with
saturation at exp(700), so unbounded exponents produce a flagged cap value
instead of an overflow.  The Luxemburg norm is the unique lambda > 0 with
modular(u / lambda) = 1, found by bisection on ln lambda.

The two modulars generate equivalent norms:

    ||u||_unweighted <= e^(1/e) * ||u||_weighted <= e^(1/e) * ||u||_unweighted

because p * e^(-p/e) <= 1 for every p >= 1 with equality at p = e.  That
inequality, the uniform-convexity witness, and the embedding bound are
exposed as computable checks used by the convergence harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import CellGradients, Grid, ScalarField, cell_gradients

__all__ = [
    "MODULAR_LOG_CAP",
    "MODULAR_CAP",
    "ModularValue",
    "modular_rho",
    "sobolev_modular",
    "luxemburg_norm",
    "uc_inequality_check",
    "embedding_check",
    "UCRecord",
    "EmbeddingRecord",
]

# natural-log overflow threshold for exp(); the cap itself is exp of it
MODULAR_LOG_CAP = 700.0
MODULAR_CAP = math.exp(MODULAR_LOG_CAP)


@dataclass(frozen=True)
class ModularValue:
    """Nonnegative modular value; ``saturated`` means it hit the cap."""

    value: float
    saturated: bool = False

    def __float__(self):
        return self.value


def _cell_magnitudes(u, grid=None):
    """Per-cell |u| and the owning grid, from a field or cell gradients."""
    if isinstance(u, ScalarField):
        return np.abs(u.grid.average_to_cells(u.values)), u.grid
    if isinstance(u, CellGradients):
        return u.magnitudes, u.grid
    if grid is not None:
        m = np.asarray(u, dtype=float)
        if m.shape != (grid.num_cells,):
            raise ValueError("per-cell magnitudes have the wrong length")
        return np.abs(m), grid
    raise TypeError("u must be a ScalarField, CellGradients, or per-cell "
                    "magnitudes with an explicit grid")


def _cell_exponents(p, grid):
    if isinstance(p, ScalarField):
        if p.grid != grid:
            raise ValueError("exponent field lives on a different grid")
        pc = grid.average_to_cells(p.values)
    else:
        pc = np.broadcast_to(np.asarray(p, dtype=float),
                             (grid.num_cells,)).copy()
    if np.any(pc <= 1.0):
        raise ValueError("exponent must exceed 1 on every cell")
    return pc


def _modular_sum(mags, pc, weights, weighted):
    with np.errstate(divide="ignore"):
        logm = np.log(mags)
    log_terms = pc * logm
    if weighted:
        log_terms = log_terms - np.log(pc)
    log_terms = np.where(mags == 0.0, -np.inf, log_terms)
    saturated = bool(np.any(log_terms > MODULAR_LOG_CAP))
    terms = np.exp(np.minimum(log_terms, MODULAR_LOG_CAP))
    total = float(np.sum(weights * terms))
    return ModularValue(MODULAR_CAP if saturated else total, saturated)


def modular_rho(u, p, weighted=True, grid=None) -> ModularValue:
    """Discrete modular of ``u`` under exponent ``p``.

    ``u`` may be a ScalarField (cell-averaged before the power) or the
    CellGradients of one (Euclidean cell-gradient magnitudes).  ``p`` is a
    ScalarField, a per-cell array, or a scalar.  ``weighted`` selects the
    1/p-weighted integrand.
    """
    mags, g = _cell_magnitudes(u, grid)
    pc = _cell_exponents(p, g)
    return _modular_sum(mags, pc, g.cell_weights, weighted)


def sobolev_modular(u: ScalarField, p) -> ModularValue:
    """Weighted modular of u plus weighted modular of |grad u|."""
    a = modular_rho(u, p, weighted=True)
    b = modular_rho(cell_gradients(u), p, weighted=True)
    return ModularValue(MODULAR_CAP if (a.saturated or b.saturated)
                        else a.value + b.value,
                        a.saturated or b.saturated)


def luxemburg_norm(u, p, weighted=False, tol=1.0e-10, grid=None) -> float:
    """inf{lambda > 0 : modular(u / lambda) <= 1} by bisection on ln lambda.

    Returns 0 for the zero field.  Stops when the scaled modular is within
    ``tol`` of 1 or the bracket is relatively smaller than ``tol``.

    Raises:
        RuntimeError: no bracket within 2**±1024 rescaling (pathological
            input, e.g. non-finite magnitudes).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mags, g = _cell_magnitudes(u, grid)
    pc = _cell_exponents(p, g)
    w = g.cell_weights
    if not np.all(np.isfinite(mags)):
        raise RuntimeError("non-finite magnitudes in luxemburg_norm")
    if np.all(mags == 0.0):
        return 0.0

    limit = 1024.0 * math.log(2.0)
    lo = hi = 0.0
    f0 = _scaled_modular(mags, pc, w, weighted, 0.0)
    if f0 > 1.0:
        while _scaled_modular(mags, pc, w, weighted, hi) > 1.0:
            hi += math.log(2.0) * 8
            if hi > limit:
                raise RuntimeError("failed to bracket the Luxemburg norm")
        lo = hi - math.log(2.0) * 8
    elif f0 < 1.0:
        while _scaled_modular(mags, pc, w, weighted, lo) < 1.0:
            lo -= math.log(2.0) * 8
            if lo < -limit:
                raise RuntimeError("failed to bracket the Luxemburg norm")
        hi = lo + math.log(2.0) * 8
    else:
        return 1.0

    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = _scaled_modular(mags, pc, w, weighted, mid)
        if abs(fm - 1.0) <= tol or (hi - lo) <= tol:
            return math.exp(mid)
        if fm > 1.0:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def _scaled_modular(mags, pc, weights, weighted, t) -> float:
    """Modular of u / e^t as a plain float (cap if saturated)."""
    with np.errstate(divide="ignore"):
        logm = np.log(mags)
    log_terms = pc * (logm - t)
    if weighted:
        log_terms = log_terms - np.log(pc)
    log_terms = np.where(mags == 0.0, -np.inf, log_terms)
    if np.any(log_terms > MODULAR_LOG_CAP):
        return MODULAR_CAP
    return float(np.sum(weights * np.exp(log_terms)))


@dataclass(frozen=True)
class UCRecord:
    """Outcome of one uniform-convexity midpoint inequality evaluation."""

    premise_holds: bool
    conclusion_holds: bool
    delta_witness: float
    rho_u: float
    rho_v: float
    rho_mid_sum: float
    rho_mid_diff: float


def uc_inequality_check(u: ScalarField, v: ScalarField, p,
                        epsilon: float) -> UCRecord:
    """Evaluate the uniform-convexity implication for the gradient modular.

    With rho(w) the weighted modular of |grad w|, the premise is
    rho((u-v)/2) >= epsilon * (rho(u)+rho(v))/2 and the conclusion is
    rho((u+v)/2) <= (1-delta) * (rho(u)+rho(v))/2 for the reported witness
    delta.  A zero mean modular makes the premise vacuous.
    """
    def rho(w):
        return modular_rho(cell_gradients(w), p, weighted=True).value

    ru, rv = rho(u), rho(v)
    rdiff = rho((u - v) / 2.0)
    rsum = rho((u + v) / 2.0)
    mean = 0.5 * (ru + rv)
    if mean == 0.0:
        return UCRecord(False, True, float("nan"), ru, rv, rsum, rdiff)
    premise = rdiff >= epsilon * mean
    delta = 1.0 - rsum / mean
    return UCRecord(bool(premise), bool(delta > 0.0 or not premise),
                    delta if premise else float("nan"), ru, rv, rsum, rdiff)


@dataclass(frozen=True)
class EmbeddingRecord:
    norm_p: float
    norm_q: float
    ratio: float
    bound: float
    within_bound: bool


def embedding_check(u, p, q, grid=None) -> EmbeddingRecord:
    """Compare Luxemburg norms under p <= q against the embedding constant.

    The documented (conservative) constant is max(1, |Omega|) * e^(1/e).

    Raises:
        ValueError: if p > q somewhere.
    """
    mags, g = _cell_magnitudes(u, grid)
    pc = _cell_exponents(p, g)
    qc = _cell_exponents(q, g)
    if np.any(pc > qc):
        raise ValueError("embedding_check requires p <= q pointwise")
    np_ = luxemburg_norm(mags, pc, weighted=False, grid=g)
    nq = luxemburg_norm(mags, qc, weighted=False, grid=g)
    ratio = np_ / nq if nq > 0 else 0.0
    bound = max(1.0, g.volume) * math.exp(1.0 / math.e)
    return EmbeddingRecord(np_, nq, ratio, bound, bool(ratio <= bound))
