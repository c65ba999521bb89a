"""Sublevel-set volume V(t) = vol{f <= t} and its numeric derivative.

Two independent estimators: deterministic grid counting (cell centers) and
Monte Carlo indicator sampling.  The derivative is taken by central
differences, either across a sampled level grid (VolumeCurve) or with a
tight per-level stencil sharing one sample set (volume_derivative).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ._util import eval_on_grid, format_sig, grid_axes, parallel_map, rng_blocks
from .errors import ParameterError


def _grid_inside_counts(field, levels, resolution, box, threads=1):
    """Cell-center indicator counts for several levels on one shared grid.

    Returns (counts per level, boundary-cell counts per level, cell volume).
    """
    lo, hi = box
    axes, h = grid_axes(lo, hi, resolution, centered=True)
    F = eval_on_grid(field.values, axes, threads=threads)
    cell_vol = float(np.prod(h))
    counts, boundary = [], []
    for t in levels:
        inside = F <= t
        counts.append(int(inside.sum()))
        bnd = np.zeros_like(inside)
        for ax in range(field.dim):
            sl_a = [slice(None)] * field.dim
            sl_b = [slice(None)] * field.dim
            sl_a[ax] = slice(None, -1)
            sl_b[ax] = slice(1, None)
            d = inside[tuple(sl_a)] != inside[tuple(sl_b)]
            bnd[tuple(sl_a)] |= d
            bnd[tuple(sl_b)] |= d
        boundary.append(int(bnd.sum()))
    return counts, boundary, cell_vol


def volume_grid(field, t, resolution=256, box=None, threads=1):
    """Grid-counting estimate of V(t).

    Counts cells whose center satisfies f <= t on a uniform grid over the
    sampling box.  The reported error is (boundary cells) * (cell volume),
    where a boundary cell is one whose indicator differs from an axis
    neighbor; at least one cell volume when the set is below resolution.
    """
    if resolution < 32:
        raise ParameterError(f"resolution must be >= 32, got {resolution}")
    field.check_level(t)
    if box is None:
        box = field.box_for(t)
    counts, boundary, cell_vol = _grid_inside_counts(field, [t], resolution, box,
                                                     threads=threads)
    value = counts[0] * cell_vol
    err = max(boundary[0], 1) * cell_vol
    return value, err


def volume_mc(field, t, samples=1_000_000, seed=0, box=None, threads=1):
    """Monte Carlo estimate of V(t) with a 95% binomial confidence half-width."""
    if samples < 10_000:
        raise ParameterError(f"samples must be >= 10^4, got {samples}")
    field.check_level(t)
    if box is None:
        box = field.box_for(t)
    lo, hi = box
    box_vol = float(np.prod(np.asarray(hi) - np.asarray(lo)))

    def one_block(args):
        rng, size = args
        pts = lo + (hi - lo) * rng.random((size, field.dim))
        return int(np.count_nonzero(field.values(pts) <= t))

    hits = sum(parallel_map(one_block, rng_blocks(seed, samples), threads=threads))
    p = hits / samples
    value = box_vol * p
    err = 1.96 * box_vol * np.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return value, float(err)


@dataclass
class VolumeCurve:
    """Sampled map t -> V(t) with a central-difference derivative.

    derivative[i] approximates V'(levels[i+1]) — endpoints carry no
    derivative.  derivative_error propagates the per-level error bounds.
    """

    levels: np.ndarray
    volumes: np.ndarray
    errors: np.ndarray
    derivative: np.ndarray
    derivative_error: np.ndarray
    method: str
    warnings: list = dc_field(default_factory=list)

    @property
    def interior_levels(self):
        return self.levels[1:-1]

    def to_csv(self, path):
        """Columns t, V, V_err, dVdt, dVdt_err (nan at the endpoints)."""
        with open(path, "w") as fh:
            fh.write("t,V,V_err,dVdt,dVdt_err\n")
            for i, t in enumerate(self.levels):
                if 0 < i < len(self.levels) - 1:
                    d = self.derivative[i - 1]
                    de = self.derivative_error[i - 1]
                else:
                    d = de = float("nan")
                fh.write(",".join(format_sig(v)
                                  for v in (t, self.volumes[i], self.errors[i], d, de)))
                fh.write("\n")


def volume_curve(field, levels, method="grid", resolution=256,
                 samples=1_000_000, seed=0, threads=1):
    """Per-level volumes and the central-difference derivative V'(t).

    Levels must be strictly increasing, at least 5, and inside the regular
    range.  A derivative-unreliable warning is attached when the level
    spacing is too small against the propagated per-level error.
    """
    levels = np.asarray(levels, dtype=float)
    if len(levels) < 5:
        raise ParameterError(f"need >= 5 levels, got {len(levels)}")
    if np.any(np.diff(levels) <= 0):
        raise ParameterError("levels must be strictly increasing")
    for t in levels:
        field.check_level(t)

    if method == "grid":
        def one(t):
            return volume_grid(field, t, resolution=resolution)
    elif method == "mc":
        def one(t):
            return volume_mc(field, t, samples=samples, seed=seed)
    else:
        raise ParameterError(f"unknown method {method!r}")

    pairs = parallel_map(one, levels, threads=threads)
    vols = np.asarray([p[0] for p in pairs])
    errs = np.asarray([p[1] for p in pairs])

    span = levels[2:] - levels[:-2]
    deriv = (vols[2:] - vols[:-2]) / span
    deriv_err = (errs[2:] + errs[:-2]) / span

    warnings = []
    slope = (vols[-1] - vols[0]) / (levels[-1] - levels[0])
    if slope > 0:
        too_tight = span < 10.0 * (errs[2:] + errs[:-2]) / slope
        if too_tight.any():
            warnings.append(
                f"derivative-unreliable: spacing below 10x error/slope at "
                f"{int(too_tight.sum())} interior level(s)")
    return VolumeCurve(levels=levels, volumes=vols, errors=errs,
                       derivative=deriv, derivative_error=deriv_err,
                       method=method, warnings=warnings)


def volume_derivatives(field, levels, method="grid", resolution=256,
                       samples=1_000_000, seed=0, rel_step=0.05, threads=1):
    """V'(t) at several levels from one shared sample set.

    Same estimator as volume_derivative, but all stencil counts come from a
    single grid evaluation (or a single Monte Carlo draw) over the sampling
    box of the largest stencil level.  Small levels therefore see a coarser
    effective resolution than a dedicated call would give them.  Returns
    (derivatives, errors) as arrays aligned with `levels`.
    """
    levels = np.asarray(levels, dtype=float)
    dts = rel_step * levels
    for t, dt in zip(levels, dts):
        field.check_level(t - dt)
        field.check_level(t + dt)
    box = field.box_for(float(np.max(levels + dts)))
    stencil_levels = np.concatenate([levels - dts, levels + dts])

    if method == "grid":
        def stencil(res):
            counts, _, cell_vol = _grid_inside_counts(
                field, stencil_levels, res, box, threads=threads)
            counts = np.asarray(counts, dtype=float)
            m = len(levels)
            return (counts[m:] - counts[:m]) * cell_vol / (2.0 * dts)

        d_full = stencil(resolution)
        d_half = stencil(max(32, resolution // 2))
        return d_full, np.abs(d_full - d_half)

    if method == "mc":
        lo, hi = box
        box_vol = float(np.prod(np.asarray(hi) - np.asarray(lo)))

        def one_block(args):
            rng, size = args
            pts = lo + (hi - lo) * rng.random((size, field.dim))
            fv = field.values(pts)
            return np.array([np.count_nonzero((fv > t - dt) & (fv <= t + dt))
                             for t, dt in zip(levels, dts)])

        hits = sum(parallel_map(one_block, rng_blocks(seed, samples),
                                threads=threads))
        p = hits / samples
        d = box_vol * p / (2.0 * dts)
        err = 1.96 * box_vol * np.sqrt(np.maximum(p * (1.0 - p), 0.0)
                                       / samples) / (2.0 * dts)
        return d, err

    raise ParameterError(f"unknown method {method!r}")


def volume_derivative(field, t, method="grid", resolution=256,
                      samples=1_000_000, seed=0, rel_step=0.05, threads=1):
    """V'(t) by a central difference sharing one sample set.

    Both stencil volumes V(t -+ dt) are counted on the same grid (or the
    same Monte Carlo draws), so their discretization errors cancel in the
    difference.  Grid error is a half-resolution refinement comparison;
    Monte Carlo error is the binomial confidence half-width of the shell
    count.  Returns (dV/dt, error).
    """
    dt = rel_step * t
    field.check_level(t - dt)
    field.check_level(t + dt)
    box = field.box_for(t + dt)

    if method == "grid":
        def stencil(res):
            counts, _, cell_vol = _grid_inside_counts(
                field, [t - dt, t + dt], res, box, threads=threads)
            return (counts[1] - counts[0]) * cell_vol / (2.0 * dt)

        d_full = stencil(resolution)
        d_half = stencil(max(32, resolution // 2))
        return d_full, abs(d_full - d_half)

    if method == "mc":
        lo, hi = box
        box_vol = float(np.prod(np.asarray(hi) - np.asarray(lo)))

        def one_block(args):
            rng, size = args
            pts = lo + (hi - lo) * rng.random((size, field.dim))
            fv = field.values(pts)
            return int(np.count_nonzero((fv > t - dt) & (fv <= t + dt)))

        hits = sum(parallel_map(one_block, rng_blocks(seed, samples),
                                threads=threads))
        p = hits / samples
        d = box_vol * p / (2.0 * dt)
        err = 1.96 * box_vol * np.sqrt(max(p * (1.0 - p), 0.0) / samples) / (2.0 * dt)
        return d, float(err)

    raise ParameterError(f"unknown method {method!r}")
