"""Volume estimators, derivative stencils, and the volume curve."""

import numpy as np
import pytest

from sublevel_kit import (
    ParameterError,
    corpus_ids,
    get_field,
    volume_curve,
    volume_derivative,
    volume_derivatives,
    volume_grid,
    volume_mc,
)

from conftest import rel_err


def test_grid_volume_within_its_own_error_bar():
    for fid in ("euclidean_norm:2", "squared_norm:3", "weighted_l1:2"):
        field, oracle = get_field(fid)
        for t in (0.6, 1.2):
            v, err = volume_grid(field, t, resolution=128)
            assert abs(v - oracle.volume(t)) <= err, (fid, t)
            assert err / v < 0.10, (fid, t)


def test_mc_volume_within_confidence_band():
    for fid in corpus_ids():
        field, oracle = get_field(fid)
        t = 1.0
        v, err = volume_mc(field, t, samples=200_000, seed=4)
        # err is a 95% half-width; 3x covers seed-to-seed variation amply
        assert abs(v - oracle.volume(t)) <= 3.0 * max(err, 1e-12), fid


def test_grid_volume_scale_covariance(eu2):
    """Tight boxes make counting exactly self-similar: V(2t) = 4 V(t)."""
    field, _ = eu2
    v1, _ = volume_grid(field, 0.5, resolution=128)
    v2, _ = volume_grid(field, 1.0, resolution=128)
    assert v2 == pytest.approx(4.0 * v1, rel=1e-12)


def test_volume_argument_errors(eu2):
    field, _ = eu2
    with pytest.raises(ParameterError):
        volume_grid(field, 1.0, resolution=16)
    with pytest.raises(ParameterError):
        volume_mc(field, 1.0, samples=100)


def test_derivative_grid_matches_oracle():
    for fid in ("euclidean_norm:2", "squared_norm:2", "squared_norm:3"):
        field, oracle = get_field(fid)
        t = 1.0
        h = 1e-6
        ref = (oracle.volume(t + h) - oracle.volume(t - h)) / (2 * h)
        d, err = volume_derivative(field, t, method="grid", resolution=256)
        assert rel_err(d, ref) < 0.01, fid


def test_derivative_mc_matches_oracle(sq2):
    field, oracle = sq2
    t = 1.0
    d, err = volume_derivative(field, t, method="mc", samples=2_000_000, seed=9)
    ref = np.pi          # V = pi t -> V' = pi
    assert abs(d - ref) <= 3.0 * err
    assert err / d < 0.05


def test_batched_derivatives_agree_with_per_level(sq3):
    field, oracle = sq3
    levels = np.array([0.8, 1.0, 1.2])
    d_batch, e_batch = volume_derivatives(field, levels, method="grid",
                                          resolution=128)
    for t, d in zip(levels, d_batch):
        d_solo, _ = volume_derivative(field, float(t), method="grid",
                                      resolution=128)
        assert rel_err(d, d_solo) < 0.02
        ref = 1.5 * (4.0 / 3.0) * np.pi * np.sqrt(t)   # d/dt (4/3) pi t^{3/2}
        assert rel_err(d, ref) < 0.02


def test_batched_derivatives_mc_route(sq2):
    field, _ = sq2
    levels = np.array([0.9, 1.1])
    d, err = volume_derivatives(field, levels, method="mc",
                                samples=1_000_000, seed=5)
    for di, ei in zip(d, err):
        assert abs(di - np.pi) <= 3.0 * ei


def test_derivative_unknown_method(eu2):
    field, _ = eu2
    with pytest.raises(ParameterError):
        volume_derivative(field, 1.0, method="nope")
    with pytest.raises(ParameterError):
        volume_derivatives(field, [1.0], method="nope")


def test_volume_curve_grid(eu2):
    field, oracle = eu2
    levels = np.linspace(0.5, 1.5, 11)
    curve = volume_curve(field, levels, method="grid", resolution=128)
    assert np.all(np.diff(curve.volumes) > 0)          # V monotone
    for t, v in zip(curve.levels, curve.volumes):
        assert rel_err(v, oracle.volume(t)) < 0.01
    # central difference against V' = 2 pi t on interior levels
    for t, d, de in zip(curve.interior_levels, curve.derivative,
                        curve.derivative_error):
        ref = 2.0 * np.pi * t
        assert abs(d - ref) <= de + 0.02 * ref


def test_volume_curve_warns_on_tight_spacing(eu2):
    field, _ = eu2
    levels = np.linspace(1.0, 1.0002, 5)
    curve = volume_curve(field, levels, method="grid", resolution=64)
    assert any("derivative-unreliable" in w for w in curve.warnings)


def test_volume_curve_argument_errors(eu2):
    field, _ = eu2
    with pytest.raises(ParameterError):
        volume_curve(field, [0.5, 1.0, 1.5], method="grid")        # < 5 levels
    with pytest.raises(ParameterError):
        volume_curve(field, [0.5, 0.5, 0.6, 0.7, 0.8], method="grid")
    with pytest.raises(ParameterError):
        volume_curve(field, np.linspace(0.5, 1.5, 5), method="nope")


def test_volume_curve_csv(tmp_path, eu2):
    field, _ = eu2
    curve = volume_curve(field, np.linspace(0.5, 1.5, 5), method="grid",
                         resolution=64)
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,V,V_err,dVdt,dVdt_err"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[3] == "nan" and first[4] == "nan"     # no endpoint derivative
    mid = lines[3].split(",")
    assert float(mid[3]) == pytest.approx(2.0 * np.pi, rel=0.05)


def test_grid_and_mc_volumes_consistent(eu2):
    field, _ = eu2
    t = 1.1
    vg, eg = volume_grid(field, t, resolution=128)
    vm, em = volume_mc(field, t, samples=200_000, seed=21)
    assert abs(vg - vm) <= eg + 3.0 * em
