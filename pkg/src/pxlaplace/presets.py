"""Shipped run configurations, one per verification scenario.

All presets keep the boundary datum inside the unit Lipschitz ball (checked
numerically by the harness), since the convergence statement is proved for
data with gradient bound 1.

    affine_sanity        affine datum; every solve returns the datum itself
    cone_square          cone datum, doubling constant exponents on a box
    aronsson_shifted     scaled two-power datum on [1,2]^2 (away from axes)
    paper_1d_unbounded   the 1D family j e^{1/x}/(1-x), unbounded at both ends
    bump_2d_unbounded    disk domain, exponent blowing up at a point just
                         outside the boundary circle, nonzero drift field
"""

from __future__ import annotations

from .harness import ConfigError, RunConfig

__all__ = ["PRESETS", "get_preset"]

PRESETS = {
    "affine_sanity": RunConfig(
        name="affine_sanity",
        domain_kind="box_2d", bounds=(0.0, 1.0), n=33,
        datum_kind="affine", datum_params={"a": 0.8, "b": 0.0, "c": 0.0},
        family="constant_doubling", family_params={"c": 4.0},
        j_min=0, j_max=4,
    ),
    "cone_square": RunConfig(
        name="cone_square",
        domain_kind="box_2d", bounds=(0.0, 1.0), n=65,
        datum_kind="cone", datum_params={"x0": (-0.25, 0.5)},
        family="constant_doubling", family_params={"c": 4.0},
        j_min=0, j_max=6,
        solver_tol=1.0e-7, inf_tol=1.0e-3,
    ),
    "aronsson_shifted": RunConfig(
        name="aronsson_shifted",
        domain_kind="box_2d", bounds=(1.0, 2.0), n=65,
        datum_kind="aronsson", datum_params={"scale": 0.4},
        family="constant_doubling", family_params={"c": 4.0},
        j_min=0, j_max=4,
        solver_tol=1.0e-7, inf_tol=1.0e-3,
    ),
    "paper_1d_unbounded": RunConfig(
        name="paper_1d_unbounded",
        domain_kind="interval_1d", bounds=(0.0, 1.0), n=257,
        datum_kind="affine", datum_params={"a": 1.0, "c": 0.0},
        family="paper_1d", family_params={},
        j_min=1, j_max=5,
        solver_tol=1.0e-6,
    ),
    "bump_2d_unbounded": RunConfig(
        name="bump_2d_unbounded",
        domain_kind="disk_2d", bounds=(0.0, 1.0), n=49, radius=0.3,
        center=(0.5, 0.5),
        datum_kind="cone", datum_params={"x0": (1.9, 0.5)},
        family="bump_2d",
        family_params={"center": (1.0, 0.5), "mask_radius": 0.15},
        j_min=1, j_max=4,
        solver_tol=1.0e-5, inf_tol=1.0e-3,
    ),
}


def get_preset(name: str) -> RunConfig:
    """Look up a shipped preset by name.

    Raises:
        ConfigError: unknown preset name.
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}"
        ) from None
