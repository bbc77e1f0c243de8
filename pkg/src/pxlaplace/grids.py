"""Structured grids, nodal scalar fields, and discrete gradient/divergence pairs.

Domains are a 1D interval, a 2D box, or a 2D disk cut out of a box lattice.
Nodes are classified as interior, boundary, or exterior.  All quadrature is
cell based: in 1D a cell is an edge between consecutive nodes, in 2D a cell is
a lattice square of four nodes.  The cell gradient is the midpoint (bilinear)
gradient, which is exact for affine fields and second-order accurate at the
cell center.  The divergence operator is defined as the exact transpose of the
cell-gradient map, so that for any energy of the form

    E(u) = sum_cells weight_c * f(g_c(u))

the analytic gradient dE/du_node is literally the divergence of the per-cell
flux weight_c * df/dg_c.  This exact adjointness is what the solver modules
rely on and what the tests assert down to round-off.

Exterior nodes (only present on disk domains) carry NaN as a quiet poison
value: an exterior value leaking into any computation surfaces immediately as
a NaN result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "INTERIOR",
    "BOUNDARY",
    "EXTERIOR",
    "Grid",
    "ScalarField",
    "CellGradients",
    "build_grid",
    "cell_gradients",
    "energy_divergence",
]

INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2

_KINDS = ("interval_1d", "box_2d", "disk_2d")


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Structured lattice with node classification and cell quadrature data.

    Attributes:
        kind: one of ``interval_1d``, ``box_2d``, ``disk_2d``.
        bounds: ((lo, hi),) in 1D or ((lo0, hi0), (lo1, hi1)) in 2D.
        n: nodes per axis.
        spacing: per-axis node spacing, (hi - lo) / (n - 1).
        node_class: per-node INTERIOR/BOUNDARY/EXTERIOR codes,
            shape (n,) in 1D and (n, n) in 2D.
        radius, center: disk parameters (disk_2d only, else None).
    """

    kind: str
    bounds: tuple
    n: int
    spacing: tuple
    node_class: np.ndarray = field(compare=False)
    radius: float | None = None
    center: tuple | None = None
    # per-cell quadrature: corner index arrays and weights
    _cells: tuple = field(default=(), repr=False, compare=False)
    _weights: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval_1d" else 2

    @property
    def h(self) -> float:
        """Largest axis spacing; the mesh size used in tolerances."""
        return float(max(self.spacing))

    @property
    def shape(self) -> tuple:
        return (self.n,) if self.dim == 1 else (self.n, self.n)

    def axis_coords(self, axis: int = 0) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.n)

    def coords(self):
        """Node coordinates; (n,) in 1D, a pair of (n, n) arrays in 2D."""
        if self.dim == 1:
            return self.axis_coords(0)
        x = self.axis_coords(0)
        y = self.axis_coords(1)
        return np.meshgrid(x, y, indexing="ij")

    @property
    def interior(self) -> np.ndarray:
        return self.node_class == INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.node_class == BOUNDARY

    @property
    def cell_weights(self) -> np.ndarray:
        return self._weights

    @property
    def num_cells(self) -> int:
        return self._weights.size

    @property
    def volume(self) -> float:
        """Discrete measure of the domain: sum of all cell weights."""
        return float(self._weights.sum())

    def cell_corner_indices(self):
        """Flat node indices of cell corners, one array per corner.

        1D: (left, right).  2D: (SW, SE, NW, NE) in ij-index convention,
        where the first axis is x and the second is y.
        """
        return self._cells

    def cell_centers(self):
        """Coordinates of cell midpoints; (ncells,) in 1D, (ncells, 2) in 2D."""
        if self.dim == 1:
            x = self.axis_coords(0)
            i = self._cells[0]
            return 0.5 * (x[i] + x[i + 1])
        xg, yg = self.coords()
        xf, yf = xg.ravel(), yg.ravel()
        sw, se, nw, ne = self._cells
        cx = 0.25 * (xf[sw] + xf[se] + xf[nw] + xf[ne])
        cy = 0.25 * (yf[sw] + yf[se] + yf[nw] + yf[ne])
        return np.column_stack([cx, cy])

    def average_to_cells(self, values: np.ndarray) -> np.ndarray:
        """Average nodal values to cell midpoints (arithmetic corner mean)."""
        v = values.ravel()
        if self.dim == 1:
            i = self._cells[0]
            return 0.5 * (v[i] + v[i + 1])
        sw, se, nw, ne = self._cells
        return 0.25 * (v[sw] + v[se] + v[nw] + v[ne])


def _classify_disk(n, bounds, radius, center):
    (x0, x1), (y0, y1) = bounds
    x = np.linspace(x0, x1, n)
    y = np.linspace(y0, y1, n)
    xg, yg = np.meshgrid(x, y, indexing="ij")
    inside = (xg - center[0]) ** 2 + (yg - center[1]) ** 2 < radius**2
    cls = np.full((n, n), EXTERIOR, dtype=np.int8)
    cls[inside] = INTERIOR
    # boundary nodes: outside the circle but 8-adjacent to an interior node
    near = np.zeros((n, n), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            src = inside[
                max(0, -di) : n - max(0, di), max(0, -dj) : n - max(0, dj)
            ]
            near[
                max(0, di) : n - max(0, -di), max(0, dj) : n - max(0, -dj)
            ] |= src
    cls[near & ~inside] = BOUNDARY
    return cls


def build_grid(kind, bounds, n, radius=None, center=None) -> Grid:
    """Build a classified grid with its cell quadrature.

    Args:
        kind: ``interval_1d``, ``box_2d`` or ``disk_2d``.
        bounds: (lo, hi) for 1D; (lo, hi) applied to both axes or
            ((lo0, hi0), (lo1, hi1)) for 2D.
        n: nodes per axis, at least 3.
        radius, center: disk_2d only; center defaults to the box center.

    Raises:
        ValueError: unknown kind, n < 3, degenerate bounds, or a disk that
            does not fit strictly inside its box.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown grid kind {kind!r}")
    if n < 3:
        raise ValueError(f"need at least 3 nodes per axis, got n={n}")

    if kind == "interval_1d":
        lo, hi = float(bounds[0]), float(bounds[1])
        if not hi > lo:
            raise ValueError(f"degenerate bounds ({lo}, {hi})")
        h = (hi - lo) / (n - 1)
        cls = np.full(n, INTERIOR, dtype=np.int8)
        cls[0] = cls[-1] = BOUNDARY
        left = np.arange(n - 1)
        cells = (left,)
        weights = np.full(n - 1, h)
        return Grid(kind, ((lo, hi),), n, (h,), _freeze(cls),
                    _cells=cells, _weights=_freeze(weights))

    b = np.asarray(bounds, dtype=float)
    if b.ndim == 1:
        b = np.stack([b, b])
    (x0, x1), (y0, y1) = b
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate bounds {bounds!r}")
    hx = (x1 - x0) / (n - 1)
    hy = (y1 - y0) / (n - 1)
    bounds2 = ((x0, x1), (y0, y1))

    if kind == "box_2d":
        cls = np.full((n, n), INTERIOR, dtype=np.int8)
        cls[0, :] = cls[-1, :] = cls[:, 0] = cls[:, -1] = BOUNDARY
        frac = None
    else:
        if radius is None or radius <= 0:
            raise ValueError("disk_2d requires a positive radius")
        if center is None:
            center = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
        # the circle may touch the box edge (interior nodes are strictly
        # inside the circle, so lattice-rim nodes never become interior)
        if (center[0] - radius < x0 or center[0] + radius > x1
                or center[1] - radius < y0 or center[1] + radius > y1):
            raise ValueError("disk must fit inside the box")
        cls = _classify_disk(n, bounds2, radius, center)
        if not (cls == INTERIOR).any():
            raise ValueError("disk contains no interior node; increase n")
        frac = cls == INTERIOR

    # cells: all lattice squares with at least one interior corner.  On the
    # box every cell qualifies and carries full weight hx*hy (boundary nodes
    # lie on the domain boundary).  On the disk, boundary nodes lie outside
    # the circle, so straddling cells are weighted by their interior corner
    # fraction; the total tends to the disk area under refinement.
    ii, jj = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    sw = (ii * n + jj).ravel()
    se = sw + n
    nw = sw + 1
    ne = se + 1
    if kind == "box_2d":
        keep = np.ones(sw.size, dtype=bool)
        w = np.full(sw.size, hx * hy)
    else:
        fin = frac.ravel()
        count = (fin[sw].astype(int) + fin[se].astype(int)
                 + fin[nw].astype(int) + fin[ne].astype(int))
        keep = count > 0
        w = hx * hy * count / 4.0
    cells = (sw[keep], se[keep], nw[keep], ne[keep])
    weights = w[keep]
    return Grid(kind, bounds2, n, (hx, hy), _freeze(cls),
                radius=None if kind == "box_2d" else float(radius),
                center=None if kind == "box_2d" else tuple(center),
                _cells=cells, _weights=_freeze(weights))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value per grid node; exterior nodes hold the NaN poison value.

    Arithmetic is only defined between fields on the same grid; the result
    is a new field (values are immutable after construction).
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"values shape {v.shape} does not match grid {self.grid.shape}")
        v = v.copy()
        v[self.grid.node_class == EXTERIOR] = np.nan
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Evaluate ``fn`` at every node; 1D fn(x), 2D fn(x, y)."""
        if grid.dim == 1:
            vals = np.asarray(fn(grid.axis_coords(0)), dtype=float)
            vals = np.broadcast_to(vals, grid.shape).copy()
        else:
            xg, yg = grid.coords()
            vals = np.broadcast_to(np.asarray(fn(xg, yg), dtype=float),
                                   grid.shape).copy()
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return ScalarField(self.grid, self.values / float(c))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary]

    def sup_interior_diff(self, other: "ScalarField") -> float:
        self._check(other)
        d = np.abs(self.values - other.values)[self.grid.interior]
        return float(d.max()) if d.size else 0.0


@dataclass(frozen=True, eq=False)
class CellGradients:
    """Per-cell gradient vectors with their quadrature weights.

    ``g`` has shape (ncells, dim), ``weight`` shape (ncells,).  The sum of
    weights equals the discrete measure of the domain.
    """

    grid: Grid
    g: np.ndarray
    weight: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        """Euclidean norm of each cell gradient."""
        return np.sqrt((self.g**2).sum(axis=1))


def cell_gradients(u: ScalarField) -> CellGradients:
    """Midpoint cell gradients of a nodal field.

    1D: per edge, g = (u_{i+1} - u_i)/h.  2D: per cell, each component is
    the mean of the two parallel edge difference quotients; exact for
    affine fields.
    """
    grid = u.grid
    v = u.values.ravel()
    if grid.dim == 1:
        (i,) = grid.cell_corner_indices()
        g = ((v[i + 1] - v[i]) / grid.spacing[0])[:, None]
    else:
        sw, se, nw, ne = grid.cell_corner_indices()
        hx, hy = grid.spacing
        gx = (v[se] - v[sw] + v[ne] - v[nw]) / (2.0 * hx)
        gy = (v[nw] - v[sw] + v[ne] - v[se]) / (2.0 * hy)
        g = np.column_stack([gx, gy])
    return CellGradients(grid, _freeze(g), grid.cell_weights)


def scatter_cells(grid: Grid, q: np.ndarray) -> np.ndarray:
    """Apply the transpose of the (unweighted) cell-gradient map to ``q``.

    Returns the nodal array sum_c <q_c, d g_c / d u_node>; callers are
    responsible for folding quadrature weights into ``q``.
    """
    out = np.zeros(grid.n**grid.dim)
    if grid.dim == 1:
        (i,) = grid.cell_corner_indices()
        s = q[:, 0] / grid.spacing[0]
        np.add.at(out, i + 1, s)
        np.add.at(out, i, -s)
    else:
        sw, se, nw, ne = grid.cell_corner_indices()
        hx, hy = grid.spacing
        ax = q[:, 0] / (2.0 * hx)
        ay = q[:, 1] / (2.0 * hy)
        np.add.at(out, sw, -ax - ay)
        np.add.at(out, se, ax - ay)
        np.add.at(out, nw, -ax + ay)
        np.add.at(out, ne, ax + ay)
    return out.reshape(grid.shape)


def energy_divergence(grid: Grid, flux: np.ndarray) -> ScalarField:
    """Weighted divergence of a per-cell flux, as a field on interior nodes.

    The value at each interior node is sum_c weight_c <flux_c, dg_c/du_node>,
    i.e. the exact derivative of sum_c weight_c <flux_c, g_c(u)> with respect
    to that node.  Boundary nodes carry 0, exterior nodes the poison value.
    """
    flux = np.asarray(flux, dtype=float)
    if flux.ndim == 1:
        flux = flux[:, None]
    if flux.shape != (grid.num_cells, grid.dim):
        raise ValueError(
            f"flux shape {flux.shape} != ({grid.num_cells}, {grid.dim})")
    out = scatter_cells(grid, flux * grid.cell_weights[:, None])
    out[~grid.interior] = 0.0
    return ScalarField(grid, out)
