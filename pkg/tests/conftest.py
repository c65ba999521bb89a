"""Shared fixtures and helpers for the test suite.

Every stochastic test pins its seed, so the whole suite is deterministic;
"property-style" tests draw their sample points from a seeded generator
rather than relying on any randomized-testing framework.
"""

import numpy as np
import pytest

from sublevel_kit import get_field


def rel_err(x, ref):
    """|x - ref| / |ref| as a plain float."""
    return float(abs(x - ref) / abs(ref))


def sample_in_annulus(field, rng, n, t_lo, t_hi, avoid_interface=0.0):
    """n points x with t_lo <= f(x) <= t_hi, drawn by rejection.

    With avoid_interface > 0, points closer than that to a smoothness
    interface are rejected too (piecewise fields only).
    """
    lo, hi = field.box_for(t_hi)
    out = []
    for _ in range(400):
        pts = lo + (hi - lo) * rng.random((4 * n, field.dim))
        fv = field.values(pts)
        keep = (fv >= t_lo) & (fv <= t_hi)
        if avoid_interface > 0 and field.interface_distance is not None:
            keep &= field.interface_distance(pts) > avoid_interface
        out.append(pts[keep])
        if sum(len(o) for o in out) >= n:
            break
    pts = np.concatenate(out)
    if len(pts) < n:
        raise RuntimeError(f"rejection sampling starved: {len(pts)} < {n}")
    return pts[:n]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def eu2():
    return get_field("euclidean_norm:2")


@pytest.fixture
def sq2():
    return get_field("squared_norm:2")


@pytest.fixture
def sq3():
    return get_field("squared_norm:3")


@pytest.fixture
def an2():
    return get_field("anisotropic_quadratic:2:1,4")


@pytest.fixture
def wl1_2():
    return get_field("weighted_l1:2")


@pytest.fixture
def wl1_3():
    return get_field("weighted_l1:3")
