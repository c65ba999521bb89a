"""Shared numerics plumbing: seeded RNG streams, worker pools, grid evaluation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Samples per Monte Carlo block.  Fixed so that (seed, sample count) alone
# determine every draw, independent of thread scheduling.
MC_BLOCK = 1 << 18


def default_threads():
    return max(1, os.cpu_count() or 1)


def rng_blocks(seed, n_samples, block=MC_BLOCK):
    """Split a sampling budget into per-block independent RNG streams.

    Returns a list of (generator, block_size).  Streams are spawned from a
    single SeedSequence, so results are reproducible for a given seed no
    matter how the blocks are scheduled.
    """
    n_samples = int(n_samples)
    n_blocks = max(1, -(-n_samples // block))
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(n_blocks)
    sizes = [block] * (n_blocks - 1) + [n_samples - block * (n_blocks - 1)]
    return [(np.random.Generator(np.random.PCG64(c)), s)
            for c, s in zip(children, sizes)]


def parallel_map(fn, items, threads=1):
    """Map preserving input order; thread pool when threads > 1.

    Results are assembled in input order, so output is deterministic
    regardless of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def grid_axes(lo, hi, resolution, centered):
    """Per-axis sample coordinates on a box grid.

    centered=True gives cell centers (resolution points per axis),
    centered=False gives cell vertices (resolution + 1 points per axis).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    h = (hi - lo) / resolution
    if centered:
        return [lo[i] + h[i] * (np.arange(resolution) + 0.5)
                for i in range(len(lo))], h
    return [lo[i] + h[i] * np.arange(resolution + 1)
            for i in range(len(lo))], h


def eval_on_grid(func, axes, chunk_rows=64, threads=1):
    """Evaluate a vectorized f(points (m, n)) on the tensor grid of `axes`.

    Chunks over the leading axis to bound peak memory (chunks run on a
    thread pool when threads > 1); returns an array of shape
    tuple(len(a) for a in axes).
    """
    shape = tuple(len(a) for a in axes)
    out = np.empty(shape, dtype=float)
    rest = axes[1:]
    if rest:
        mesh = np.meshgrid(*rest, indexing="ij")
        rest_pts = np.stack([m.ravel() for m in mesh], axis=-1)
    else:
        rest_pts = np.zeros((1, 0))
    m = rest_pts.shape[0]

    def one_chunk(start):
        stop = min(start + chunk_rows, shape[0])
        x0 = np.repeat(axes[0][start:stop], m)
        pts = np.concatenate(
            [x0[:, None], np.tile(rest_pts, (stop - start, 1))], axis=1)
        out[start:stop] = func(pts).reshape((stop - start,) + shape[1:])

    parallel_map(one_chunk, range(0, shape[0], chunk_rows), threads=threads)
    return out


def format_sig(x):
    """Format a float with 17 significant digits (lossless round trip).

    Bools become true/false, ints stay integral, strings pass through.
    """
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def composite_simpson(values, x):
    """Composite Simpson rule on a uniform grid with an odd point count."""
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of nodes >= 3")
    h = (x[-1] - x[0]) / (n - 1)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return h / 3.0 * float(np.dot(w, values))
