"""Field corpus: identifiers, gradients, oracles, and their consistency."""

import math

import numpy as np
import pytest

from sublevel_kit import (
    DomainError,
    FieldIdError,
    LevelRangeError,
    NonDifferentiablePointError,
    ParameterError,
    corpus,
    corpus_ids,
    finite_difference_gradient,
    get_field,
    parse_field_id,
    unit_ball_volume,
)
from sublevel_kit.field import evaluate, gradient

from conftest import rel_err, sample_in_annulus


# -- identifiers --------------------------------------------------------------

def test_corpus_ids_resolve():
    ids = corpus_ids()
    assert len(ids) == 10
    for fid in ids:
        field, oracle = get_field(fid)
        assert field.dim >= 2
        assert field.eps > 0

def test_corpus_matches_ids():
    pairs = corpus()
    assert len(pairs) == len(corpus_ids())


def test_parse_field_id_roundtrip():
    name, dim, params = parse_field_id("anisotropic_quadratic:3:1,2,4")
    assert name == "anisotropic_quadratic"
    assert dim == 3
    assert params == (1.0, 2.0, 4.0)


@pytest.mark.parametrize("bad", [
    "euclidean_norm",            # missing dimension
    "euclidean_norm:two",        # non-integer dimension
    "euclidean_norm:0",          # non-positive dimension
    "euclidean_norm:2:a,b",      # non-numeric parameters
    "a:b:c:d",                   # too many fields
])
def test_parse_field_id_rejects_malformed(bad):
    with pytest.raises(FieldIdError):
        parse_field_id(bad)


def test_get_field_unknown_name():
    with pytest.raises(FieldIdError):
        get_field("unknown:9")


def test_get_field_bad_parameters():
    with pytest.raises(FieldIdError):
        get_field("weighted_l1:2:-1,1")   # weights must be positive
    with pytest.raises(FieldIdError):
        get_field("anisotropic_quadratic:3:1,2")  # wrong parameter count


def test_field_id_rebuilds_same_field(rng):
    for fid in corpus_ids():
        field, _ = get_field(fid)
        clone, _ = get_field(field.field_id)
        pts = sample_in_annulus(field, rng, 50, 0.3 * field.eps, 0.7 * field.eps)
        np.testing.assert_allclose(clone.values(pts), field.values(pts),
                                   rtol=0, atol=0)


# -- gradients ----------------------------------------------------------------

def test_analytic_gradient_matches_finite_differences(rng):
    """100 interior points per field: exact grad vs central differences."""
    for fid in corpus_ids():
        field, _ = get_field(fid)
        pts = sample_in_annulus(field, rng, 100, 0.3 * field.eps,
                                0.7 * field.eps, avoid_interface=1e-3)
        g_exact = field.gradients(pts)
        g_fd = np.stack([finite_difference_gradient(field, x) for x in pts])
        scale = np.linalg.norm(g_exact, axis=1)
        err = np.linalg.norm(g_exact - g_fd, axis=1) / scale
        assert err.max() < 1e-6, f"{fid}: FD mismatch {err.max():.2e}"


def test_gradient_rejects_interface_point(wl1_2):
    field, _ = wl1_2
    with pytest.raises(NonDifferentiablePointError):
        gradient(field, np.array([0.0, 0.5]))


def test_gradient_ok_off_interface(wl1_2):
    field, _ = wl1_2
    g = gradient(field, np.array([0.3, 0.5]))
    a = np.asarray(field.params)
    np.testing.assert_allclose(g, a, rtol=1e-12)


def test_evaluate_checks_domain(eu2):
    field, _ = eu2
    assert evaluate(field, [0.3, 0.4]) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        evaluate(field, [100.0, 0.0])
    with pytest.raises(DomainError):
        evaluate(field, [0.0, 0.0, 0.0])   # wrong dimension


def test_check_level_range(eu2):
    field, _ = eu2
    field.check_level(1.0)
    for bad in (0.0, -1.0, field.eps, field.eps + 1.0):
        with pytest.raises(LevelRangeError):
            field.check_level(bad)


# -- closed-form oracles ------------------------------------------------------

def test_unit_ball_volume_closed_forms():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    assert unit_ball_volume(4) == pytest.approx(math.pi ** 2 / 2.0)


def test_oracle_derivative_consistency():
    """dV/dt == A / |grad f| on the fiber, for every oracle with all three."""
    for fid in corpus_ids():
        field, oracle = get_field(fid)
        if None in (oracle.volume, oracle.area, oracle.grad_norm_on_fiber):
            continue
        for t in (0.4, 0.9, 1.6):
            h = 1e-6 * t
            dv = (oracle.volume(t + h) - oracle.volume(t - h)) / (2 * h)
            ref = oracle.area(t) / oracle.grad_norm_on_fiber(t)
            assert rel_err(dv, ref) < 1e-8, fid


def test_oracle_area_anisotropic_perimeter():
    """Ellipse perimeter oracle against dense polyline arc length."""
    field, oracle = get_field("anisotropic_quadratic:2:1,4")
    t = 1.3
    th = np.linspace(0.0, 2.0 * np.pi, 200_001)
    xy = np.stack([np.sqrt(t / 1.0) * np.cos(th),
                   np.sqrt(t / 4.0) * np.sin(th)], axis=1)
    per = float(np.linalg.norm(np.diff(xy, axis=0), axis=1).sum())
    assert rel_err(oracle.area(t), per) < 1e-8


def test_sublevel_indicator_matches_oracle_volume(rng):
    """Monte Carlo indicator vs closed-form volume, every corpus entry."""
    n_samples = 200_000
    for fid in corpus_ids():
        field, oracle = get_field(fid)
        t = 0.8 * field.eps
        lo, hi = field.box_for(t)
        pts = lo + (hi - lo) * rng.random((n_samples, field.dim))
        p = np.count_nonzero(field.values(pts) <= t) / n_samples
        v_mc = float(np.prod(hi - lo)) * p
        sigma = float(np.prod(hi - lo)) * math.sqrt(p * (1 - p) / n_samples)
        assert abs(v_mc - oracle.volume(t)) < 5.0 * sigma, fid


def test_extent_box_contains_sublevel_set(rng):
    """No point with f <= t escapes box_for(t)."""
    for fid in corpus_ids():
        field, _ = get_field(fid)
        for t in (0.1, 0.7, 1.5):
            lo, hi = field.box_for(t)
            pts = field.domain_lo + (field.domain_hi - field.domain_lo) \
                * rng.random((50_000, field.dim))
            inside = field.values(pts) <= t
            in_box = np.all((pts >= lo) & (pts <= hi), axis=1)
            assert not np.any(inside & ~in_box), (fid, t)


# -- structural properties ----------------------------------------------------

def test_homogeneity_of_corpus_fields(rng):
    """f(s x) = s^k f(x) with the degree implied by each construction."""
    degrees = {"euclidean_norm": 1, "squared_norm": 2, "quartic_norm": 4,
               "anisotropic_quadratic": 2, "weighted_l1": 1}
    s = 0.37
    for fid in corpus_ids():
        field, _ = get_field(fid)
        k = degrees[field.name]
        pts = sample_in_annulus(field, rng, 200, 0.5, 1.5)
        np.testing.assert_allclose(field.values(s * pts),
                                   s ** k * field.values(pts),
                                   rtol=1e-12, err_msg=fid)


def test_sign_flip_symmetry(rng):
    """Every corpus field is even in each coordinate separately."""
    for fid in corpus_ids():
        field, _ = get_field(fid)
        pts = sample_in_annulus(field, rng, 200, 0.5, 1.5)
        for j in range(field.dim):
            flip = pts.copy()
            flip[:, j] *= -1.0
            np.testing.assert_allclose(field.values(flip), field.values(pts),
                                       rtol=1e-12, err_msg=fid)


def test_piece_id_constant_on_orthants(wl1_3):
    field, _ = wl1_3
    pts = np.array([[0.5, 0.5, 0.5], [0.7, 0.1, 0.2], [-0.5, 0.5, 0.5],
                    [-0.1, -0.2, -0.3]])
    labels = field.piece_id(pts)
    assert labels[0] == labels[1]          # same open orthant
    assert labels[0] != labels[2]
    assert len(np.unique(labels)) == 3


def test_loja_exponent_declarations():
    declared = {fid.split(":")[0]: get_field(fid)[1].loja_exponent
                for fid in corpus_ids()}
    assert declared["squared_norm"] == 0.5
    assert declared["quartic_norm"] == 0.75
    assert declared["euclidean_norm"] == 0.0
    assert declared["weighted_l1"] == 0.0
