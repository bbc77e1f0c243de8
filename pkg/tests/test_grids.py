import numpy as np
import pytest

from pxlaplace import (
    EXTERIOR,
    INTERIOR,
    ScalarField,
    build_grid,
    cell_gradients,
    energy_divergence,
)


def test_interval_basic():
    g = build_grid("interval_1d", (0, 1), 5)
    assert g.spacing == (0.25,)
    assert g.interior.sum() == 3
    assert g.boundary.sum() == 2
    assert g.volume == pytest.approx(1.0)


def test_box_smallest():
    g = build_grid("box_2d", (0, 1), 3)
    assert g.interior.sum() == 1
    assert g.node_class[1, 1] == INTERIOR
    assert g.volume == pytest.approx(1.0)


def test_disk_area_within_two_percent():
    g = build_grid("disk_2d", (0, 1), 65, radius=0.5)
    exact = np.pi * 0.25
    assert abs(g.volume - exact) / exact <= 0.02


def test_disk_classification_invariant():
    g = build_grid("disk_2d", (0, 1), 33, radius=0.4)
    cls = g.node_class
    n = g.n
    ii, jj = np.nonzero(g.interior)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            assert np.all(cls[ii + di, jj + dj] != EXTERIOR)


def test_build_grid_errors():
    with pytest.raises(ValueError):
        build_grid("interval_1d", (0, 1), 2)
    with pytest.raises(ValueError):
        build_grid("interval_1d", (1, 1), 5)
    with pytest.raises(ValueError):
        build_grid("box_2d", ((0, 1), (2, 2)), 5)
    with pytest.raises(ValueError):
        build_grid("hex", (0, 1), 5)
    with pytest.raises(ValueError):
        build_grid("disk_2d", (0, 1), 9, radius=0.9)


def test_field_requires_matching_grid():
    g1 = build_grid("interval_1d", (0, 1), 5)
    g2 = build_grid("interval_1d", (0, 2), 5)
    u = ScalarField.constant(g1, 1.0)
    v = ScalarField.constant(g2, 1.0)
    with pytest.raises(ValueError):
        _ = u + v


def test_exterior_values_poisoned():
    g = build_grid("disk_2d", (0, 1), 17, radius=0.3)
    u = ScalarField.constant(g, 5.0)
    assert np.isnan(u.values[g.node_class == EXTERIOR]).all()
    assert np.isfinite(u.values[g.node_class != EXTERIOR]).all()


def test_cell_gradients_affine_1d():
    g = build_grid("interval_1d", (0, 1), 9)
    u = ScalarField.from_function(g, lambda x: 3.0 * x)
    cg = cell_gradients(u)
    assert np.allclose(cg.g[:, 0], 3.0, atol=1e-14)
    assert np.allclose(cg.weight.sum(), 1.0)


def test_cell_gradients_affine_2d():
    g = build_grid("box_2d", (0, 1), 7)
    u = ScalarField.from_function(g, lambda x, y: x + 2.0 * y)
    cg = cell_gradients(u)
    assert np.allclose(cg.g[:, 0], 1.0, atol=1e-13)
    assert np.allclose(cg.g[:, 1], 2.0, atol=1e-13)


def test_cell_gradients_quadratic_values():
    g = build_grid("interval_1d", (0, 1), 5)
    u = ScalarField.from_function(g, lambda x: x**2)
    cg = cell_gradients(u)
    assert np.allclose(cg.g[:, 0], [0.25, 0.75, 1.25, 1.75])


def test_cell_gradient_refinement_rate():
    # midpoint gradients of a smooth field converge at second order
    errs = []
    for n in (17, 33):
        g = build_grid("box_2d", (0, 1), n)
        u = ScalarField.from_function(g, lambda x, y: np.sin(2 * x + y))
        cg = cell_gradients(u)
        c = g.cell_centers()
        gx = 2 * np.cos(2 * c[:, 0] + c[:, 1])
        gy = np.cos(2 * c[:, 0] + c[:, 1])
        errs.append(np.abs(cg.g - np.column_stack([gx, gy])).max())
    ratio = errs[0] / errs[1]
    assert 3.5 <= ratio <= 4.5


def test_energy_divergence_zero_flux():
    g = build_grid("box_2d", (0, 1), 9)
    div = energy_divergence(g, np.zeros((g.num_cells, 2)))
    assert np.nanmax(np.abs(div.values)) == 0.0


def test_energy_divergence_constant_flux_is_divergence_free():
    g = build_grid("box_2d", (0, 1), 9)
    u = ScalarField.from_function(g, lambda x, y: 0.3 * x - 0.7 * y)
    cg = cell_gradients(u)
    div = energy_divergence(g, cg.g)
    assert np.abs(div.values[g.interior]).max() <= 1e-13


def test_energy_divergence_matches_fd_energy_gradient():
    # d/du of E = sum w |g(u)|^2 / 2 equals the divergence of w g(u)
    rng = np.random.default_rng(3)
    g = build_grid("box_2d", (0, 1), 9)
    vals = rng.normal(size=g.shape)
    u = ScalarField(g, vals)

    def energy(v):
        cg = cell_gradients(ScalarField(g, v))
        return 0.5 * float(np.sum(cg.weight * (cg.g**2).sum(axis=1)))

    div = energy_divergence(g, cell_gradients(u).g)
    t = 1e-6
    ii, jj = np.nonzero(g.interior)
    for k in range(0, ii.size, 7):
        e = np.zeros(g.shape)
        e[ii[k], jj[k]] = 1.0
        fd = (energy(vals + t * e) - energy(vals - t * e)) / (2 * t)
        an = div.values[ii[k], jj[k]]
        assert abs(fd - an) <= 1e-8 * (1 + abs(an))


@pytest.mark.parametrize("kind,n", [("interval_1d", 33), ("box_2d", 13),
                                    ("disk_2d", 21)])
def test_adjointness_exact(kind, n):
    rng = np.random.default_rng(11)
    kw = {"radius": 0.35} if kind == "disk_2d" else {}
    g = build_grid(kind, (0, 1), n, **kw)
    for _ in range(3):
        uv = rng.normal(size=g.shape)
        vv = rng.normal(size=g.shape)
        uv[~g.interior] = 0.0
        vv[~g.interior] = 0.0
        gu = cell_gradients(ScalarField(g, uv))
        gv = cell_gradients(ScalarField(g, vv))
        lhs = float(np.sum(gu.weight * (gu.g * gv.g).sum(axis=1)))
        rhs = float(np.nansum(vv * energy_divergence(g, gu.g).values))
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_weights_cover_domain():
    g = build_grid("disk_2d", (0, 1), 33, radius=0.4)
    assert cell_gradients(ScalarField.constant(g, 0.0)).weight.sum() \
        == pytest.approx(g.volume)
