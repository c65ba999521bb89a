"""Discrete level sets {f = t} and fiber integrals over them.

Two independent routes to a fiber integral int_{f=t} h dsigma:

* mesh: extract the fiber as facets (marching squares in the plane,
  marching cubes in space), then sum h(centroid) * facet area.  Error is
  estimated by comparison against a half-resolution mesh.
* shell_mc: Monte Carlo over the thin slab {|f - t| < delta}, using
  int_{f=t} h dsigma ~= (1/2 delta) int_{|f-t|<delta} h |grad f| dx.
  Error is a 95% confidence half-width.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from skimage.measure import marching_cubes

from ._util import eval_on_grid, format_sig, grid_axes, parallel_map, rng_blocks
from .errors import (
    IntegrandError,
    LevelRangeError,
    ParameterError,
    TooThinShellError,
)
from .field import INTERFACE_MARGIN

# Gradient norms below this flag a facet as near-critical.
G_MIN = 1e-6

# Minimum Monte Carlo acceptance rate for the shell estimator.
MIN_ACCEPT_RATE = 1e-4


def unit_density(pts):
    """The constant density h == 1."""
    return np.ones(pts.shape[0])


@dataclass
class FiberEstimate:
    """A fiber integral estimate with an error bound.

    error is an estimated absolute error: a refinement-comparison bound for
    the mesh method, a 95% confidence half-width for shell Monte Carlo.
    """

    level: float
    value: float
    error: float
    method: str                 # "mesh" or "shell_mc"
    samples_or_facets: int


@dataclass
class LevelSetMesh:
    """Discrete fiber {f = t}: (n-1)-simplices with areas and normals.

    coords has shape (m, n, n): m facets, n vertices per facet (segments in
    the plane, triangles in space), n coordinates per vertex.  normals are
    unit outward normals (f increases along them).  tau is the measured
    interpolation residual max |f(centroid) - t|.
    """

    level: float
    dim: int
    coords: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    normals: Optional[np.ndarray]
    component_labels: np.ndarray
    resolution: int
    tau: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    field: object = None
    critical_mask: Optional[np.ndarray] = None
    warnings: list = dc_field(default_factory=list)
    _half: object = None

    @property
    def n_facets(self):
        return len(self.areas)

    @property
    def total_area(self):
        return float(self.areas.sum())

    @property
    def n_components(self):
        if self.n_facets == 0:
            return 0
        return int(self.component_labels.max()) + 1

    def component_areas(self):
        """Facet-area totals per component label, in label order."""
        return np.bincount(self.component_labels,
                           weights=self.areas,
                           minlength=self.n_components)


# -- marching squares (n = 2) ------------------------------------------------

# Case -> list of (edge, edge) pairs, edges numbered 0 bottom, 1 right,
# 2 top, 3 left; corner bits 1 BL, 2 BR, 4 TR, 8 TL; "inside" means f < t.
_MS_CASES = {
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    3: [(3, 1)], 12: [(3, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    6: [(0, 2)], 9: [(0, 2)],
    7: [(3, 2)], 8: [(3, 2)],
}


def _marching_squares(F, xs, ys, t):
    """Segment soup for the contour F = t on the vertex grid (xs, ys).

    Returns (coords (m,2,2), edge_ids (m,2)).  The two ambiguous saddle
    cases are resolved by the sign of the bilinear interpolant at its
    saddle point (asymptotic decider), which keeps the contour topology
    consistent across cells.
    """
    R = len(xs) - 1
    inside = F < t
    case = (inside[:-1, :-1] * 1 + inside[1:, :-1] * 2
            + inside[1:, 1:] * 4 + inside[:-1, 1:] * 8)
    active = np.argwhere((case != 0) & (case != 15))
    H = R * (R + 1)  # number of horizontal edges

    coords = []
    edge_ids = []
    for i, j in active:
        v00, v10 = F[i, j], F[i + 1, j]
        v11, v01 = F[i + 1, j + 1], F[i, j + 1]
        c = case[i, j]
        if c in (5, 10):
            denom = v00 + v11 - v10 - v01
            saddle_inside = False
            if abs(denom) > 0:
                saddle_inside = (v00 * v11 - v10 * v01) / denom < t
            if c == 5:
                pairs = [(0, 1), (2, 3)] if saddle_inside else [(3, 0), (1, 2)]
            else:
                pairs = [(3, 0), (1, 2)] if saddle_inside else [(0, 1), (2, 3)]
        else:
            pairs = _MS_CASES[c]

        def crossing(e):
            # returns (point, global edge id)
            if e == 0:    # bottom: (i,j)-(i+1,j)
                fa, fb = v00, v10
                a = (t - fa) / (fb - fa)
                return (xs[i] + a * (xs[i + 1] - xs[i]), ys[j]), i * (R + 1) + j
            if e == 2:    # top: (i,j+1)-(i+1,j+1)
                fa, fb = v01, v11
                a = (t - fa) / (fb - fa)
                return (xs[i] + a * (xs[i + 1] - xs[i]), ys[j + 1]), i * (R + 1) + j + 1
            if e == 3:    # left: (i,j)-(i,j+1)
                fa, fb = v00, v01
                a = (t - fa) / (fb - fa)
                return (xs[i], ys[j] + a * (ys[j + 1] - ys[j])), H + i * R + j
            # right: (i+1,j)-(i+1,j+1)
            fa, fb = v10, v11
            a = (t - fa) / (fb - fa)
            return (xs[i + 1], ys[j] + a * (ys[j + 1] - ys[j])), H + (i + 1) * R + j

        for ea, eb in pairs:
            (pa, ida) = crossing(ea)
            (pb, idb) = crossing(eb)
            coords.append((pa, pb))
            edge_ids.append((ida, idb))

    if not coords:
        return np.zeros((0, 2, 2)), np.zeros((0, 2), dtype=np.int64)
    return np.asarray(coords, dtype=float), np.asarray(edge_ids, dtype=np.int64)


def _label_components(vert_keys, piece=None):
    """Connected components of facets sharing a vertex key.

    Facets whose centroids lie in different smoothness pieces are never
    merged.  Labels are consecutive integers ordered by first appearance.
    """
    m, k = vert_keys.shape
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    keys = vert_keys.astype(np.int64)
    if piece is not None:
        P = int(piece.max()) + 1
        keys = keys * P + piece[:, None]
    uniq, inv = np.unique(keys.ravel(), return_inverse=True)
    rows = np.repeat(np.arange(m), k)
    cols = m + inv
    n = m + len(uniq)
    g = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    raw = lab[:m]
    _, first, new = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[new]


def extract_levelset(field, t, resolution, threads=1):
    """Extract the fiber {f = t} as a LevelSetMesh (dim 2 or 3 only).

    The grid covers the field's sampling box for t with `resolution` cells
    per axis; vertices are placed by linear interpolation of f along grid
    edges and normals are oriented so f increases along them.  Facets whose
    centroid has |grad f| < G_MIN are flagged and a warning is attached.
    """
    if field.dim not in (2, 3):
        raise ParameterError(f"mesh extraction supports dim 2 or 3, got {field.dim}")
    if resolution < 16:
        raise ParameterError(f"resolution must be >= 16, got {resolution}")
    field.check_level(t)

    lo, hi = field.box_for(t)
    axes, h = grid_axes(lo, hi, resolution, centered=False)
    F = eval_on_grid(field.values, axes, threads=threads)
    return _mesh_from_grid(field, t, F, axes, h, lo, hi, resolution)


def levelset_family(field, levels, resolution, threads=1, error_meshes=True):
    """Meshes for several levels from one shared field evaluation.

    The vertex grid covers the sampling box of the largest level, so small
    fibers see a coarser effective resolution than a dedicated extraction
    would give them.  With error_meshes, a half-resolution family is built
    the same way and attached for refinement-comparison error estimates.
    """
    levels = [float(t) for t in levels]
    for t in levels:
        field.check_level(t)
    lo, hi = field.box_for(max(levels))
    axes, h = grid_axes(lo, hi, resolution, centered=False)
    F = eval_on_grid(field.values, axes, threads=threads)
    meshes = [_mesh_from_grid(field, t, F, axes, h, lo, hi, resolution)
              for t in levels]
    if error_meshes:
        halves = levelset_family(field, levels, max(16, resolution // 2),
                                 threads=threads, error_meshes=False)
        for mesh, half in zip(meshes, halves):
            mesh._half = half
    return meshes


def _mesh_from_grid(field, t, F, axes, h, lo, hi, resolution):
    if field.dim == 2:
        coords, vert_keys = _marching_squares(F, axes[0], axes[1], t)
        if len(coords):
            d = coords[:, 1] - coords[:, 0]
            areas = np.linalg.norm(d, axis=1)
            keep = areas > 0
            coords, vert_keys, areas = coords[keep], vert_keys[keep], areas[keep]
            d = d[keep]
            normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / areas[:, None]
        else:
            areas = np.zeros(0)
            normals = np.zeros((0, 2))
    else:
        try:
            verts, faces, _, _ = marching_cubes(
                F, level=t, spacing=tuple(h), allow_degenerate=False)
        except ValueError as exc:
            raise LevelRangeError(f"no level set at t={t}: {exc}") from exc
        verts = verts + lo
        coords = verts[faces]
        cross = np.cross(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0])
        two_area = np.linalg.norm(cross, axis=1)
        keep = two_area > 0
        coords, cross, two_area = coords[keep], cross[keep], two_area[keep]
        vert_keys = faces[keep]
        areas = 0.5 * two_area
        normals = cross / two_area[:, None]

    centroids = coords.mean(axis=1)
    warnings = []
    if len(coords):
        # orient normals outward: f must increase along the normal
        eta = 1e-3 * float(np.mean(h))
        up = field.values(centroids + eta * normals)
        down = field.values(centroids - eta * normals)
        flip = up < down
        normals[flip] *= -1.0

        piece = None
        if field.piece_id is not None:
            piece = np.asarray(field.piece_id(centroids), dtype=np.int64)
        labels = _label_components(vert_keys, piece)

        tau = float(np.max(np.abs(field.values(centroids) - t)))
        norms = field.grad_norms(centroids)
        critical = norms < G_MIN
        if critical.any():
            warnings.append(
                f"critical-proximity: {int(critical.sum())} facet(s) with "
                f"|grad f| < {G_MIN:g}")
    else:
        labels = np.zeros(0, dtype=np.int64)
        tau = 0.0
        critical = np.zeros(0, dtype=bool)
        warnings.append(f"empty mesh: fiber below grid resolution {resolution}")

    return LevelSetMesh(
        level=float(t), dim=field.dim, coords=coords, areas=areas,
        centroids=centroids, normals=normals, component_labels=labels,
        resolution=resolution, tau=tau, box_lo=np.asarray(lo),
        box_hi=np.asarray(hi), field=field, critical_mask=critical,
        warnings=warnings)


def fiber_integral_mesh(mesh, h, with_error=True, subset=None):
    """Quadrature of int_{f=t} h dsigma over mesh facets.

    Sum of h(centroid) * area.  The error bound is the difference against
    the same integral on a half-resolution mesh of the same field (subset
    integrals inherit the full-mesh relative error).
    """
    if mesh.n_facets == 0:
        raise ParameterError("empty mesh")
    idx = np.arange(mesh.n_facets) if subset is None else np.asarray(subset)
    hv = np.asarray(h(mesh.centroids[idx]), dtype=float)
    if not np.all(np.isfinite(hv)):
        raise IntegrandError("integrand non-finite at a facet centroid")
    value = float(np.dot(hv, mesh.areas[idx]))

    error = 0.0
    if with_error:
        if mesh.field is None:
            raise ParameterError("mesh has no field attached; cannot estimate error")
        if mesh._half is None:
            half_res = max(16, mesh.resolution // 2)
            mesh._half = extract_levelset(mesh.field, mesh.level, half_res)
        half = fiber_integral_mesh(mesh._half, h, with_error=False)
        if subset is None:
            error = abs(value - half.value)
        else:
            full = float(np.dot(np.asarray(h(mesh.centroids), dtype=float),
                                mesh.areas))
            rel = abs(full - half.value) / abs(full) if full != 0 else 0.0
            error = abs(value) * rel
    return FiberEstimate(level=mesh.level, value=value, error=error,
                         method="mesh", samples_or_facets=int(len(idx)))


def default_delta(t, tau_mesh=None):
    """Default shell half-width: max(t/100, 10 * mesh tolerance)."""
    d = 0.01 * t
    if tau_mesh is not None:
        d = max(d, 10.0 * tau_mesh)
    return d


def _resample_interface(field, rng, pts, lo, hi):
    """Redraw points that landed within the interface margin (piecewise fields)."""
    if field.interface_distance is None:
        return pts
    for _ in range(100):
        bad = field.interface_distance(pts) < INTERFACE_MARGIN
        if not bad.any():
            break
        k = int(bad.sum())
        pts[bad] = lo + (hi - lo) * rng.random((k, field.dim))
    return pts


def shell_scan(field, t, delta, samples, seed, h=None, keep_points=False,
               threads=1, weight_grad=True):
    """One pass of shell rejection sampling.

    Draws `samples` uniform points in the field's box for t, keeps those in
    {|f - t| < delta}, and accumulates h * |grad f| over the kept points
    (h == 1 when h is None; the gradient factor is dropped when weight_grad
    is False).  Returns a dict with the raw sums, acceptance count, box
    volume, the minimum gradient norm seen on the shell, and optionally the
    kept points and their gradient norms.  Deterministic for a given
    (seed, samples).
    """
    lo, hi = field.box_for(t)
    box_vol = float(np.prod(hi - lo))

    def one_block(args):
        rng, size = args
        pts = lo + (hi - lo) * rng.random((size, field.dim))
        pts = _resample_interface(field, rng, pts, lo, hi)
        fv = field.values(pts)
        acc = np.abs(fv - t) < delta
        pts_a = pts[acc]
        norms = field.grad_norms(pts_a) if len(pts_a) else np.zeros(0)
        w = norms if weight_grad else np.ones(len(pts_a))
        if h is not None:
            hv = np.asarray(h(pts_a), dtype=float) if len(pts_a) else np.zeros(0)
            if not np.all(np.isfinite(hv)):
                raise IntegrandError("integrand non-finite on the shell")
            w = hv * w
        out = {
            "sum": float(w.sum()),
            "sum2": float(np.dot(w, w)),
            "n_acc": int(acc.sum()),
            "min_norm": float(norms.min()) if len(norms) else np.inf,
        }
        if keep_points:
            out["points"] = pts_a
            out["norms"] = norms
        return out

    blocks = rng_blocks(seed, samples)
    results = parallel_map(one_block, blocks, threads=threads)
    scan = {
        "sum": sum(r["sum"] for r in results),
        "sum2": sum(r["sum2"] for r in results),
        "n_acc": sum(r["n_acc"] for r in results),
        "min_norm": min(r["min_norm"] for r in results),
        "n_total": int(samples),
        "box_vol": box_vol,
        "delta": delta,
    }
    if keep_points:
        scan["points"] = np.concatenate([r["points"] for r in results])
        scan["norms"] = np.concatenate([r["norms"] for r in results])
    return scan


def fiber_integral_shell(field, t, h, delta=None, samples=100_000, seed=0,
                         tau_mesh=None, threads=1):
    """Shell Monte Carlo estimate of int_{f=t} h dsigma.

    Estimator: box_volume * mean(1_{|f-t|<delta} h |grad f|) / (2 delta).
    Raises TooThinShellError when the acceptance rate drops below
    MIN_ACCEPT_RATE.
    """
    field.check_level(t)
    if delta is None:
        delta = default_delta(t, tau_mesh)
    if not 0 < delta <= 0.5 * t:
        raise ParameterError(f"delta={delta} must satisfy 0 < delta <= t/2")
    if t + delta >= field.eps or t - delta <= 0:
        raise LevelRangeError(f"shell [{t - delta}, {t + delta}] leaves (0, {field.eps})")
    if samples < 10_000:
        raise ParameterError(f"samples must be >= 10^4, got {samples}")

    scan = shell_scan(field, t, delta, samples, seed, h=h, threads=threads)
    n = scan["n_total"]
    rate = scan["n_acc"] / n
    if rate < MIN_ACCEPT_RATE:
        raise TooThinShellError(
            f"acceptance rate {rate:.2e} < {MIN_ACCEPT_RATE:g}; "
            f"increase delta (now {delta:g}) or the sample count")
    scale = scan["box_vol"] / (2.0 * delta)
    mean = scan["sum"] / n
    var = max(scan["sum2"] / n - mean * mean, 0.0)
    value = scale * mean
    err = 1.96 * scale * np.sqrt(var / n)
    return FiberEstimate(level=float(t), value=float(value), error=float(err),
                         method="shell_mc", samples_or_facets=n)


def area(field, t, method="auto", resolution=256, samples=1_000_000, seed=0,
         delta=None, threads=1):
    """Fiber area A(t) by the mesh route (dim <= 3) or the shell route."""
    if method == "auto":
        method = "mesh" if field.dim <= 3 else "shell_mc"
    if method == "mesh":
        mesh = extract_levelset(field, t, resolution, threads=threads)
        return fiber_integral_mesh(mesh, unit_density)
    if method == "shell_mc":
        return fiber_integral_shell(field, t, unit_density, delta=delta,
                                    samples=samples, seed=seed, threads=threads)
    raise ParameterError(f"unknown method {method!r}")


# -- plain-text facet exchange ----------------------------------------------

def save_facets(mesh, path):
    """Write a mesh to the plain-text facet format.

    Header lines carry the level, resolution, dimension and facet count;
    then one facet per line: vertex coordinates (flattened) followed by the
    component label.
    """
    m, k, n = mesh.coords.shape if mesh.n_facets else (0, mesh.dim, mesh.dim)
    with open(path, "w") as fh:
        fh.write(f"# levelset dim={mesh.dim} level={format_sig(mesh.level)} "
                 f"resolution={mesh.resolution} facets={mesh.n_facets} "
                 f"tau={format_sig(mesh.tau)}\n")
        fh.write("# columns: " + " ".join(
            f"v{i}_{ax}" for i in range(k) for ax in "xyz"[:n]) + " component\n")
        for fi in range(mesh.n_facets):
            row = [format_sig(c) for c in mesh.coords[fi].ravel()]
            row.append(str(int(mesh.component_labels[fi])))
            fh.write(" ".join(row) + "\n")


def load_facets(path):
    """Read a facet file back into a LevelSetMesh (no field attached)."""
    with open(path) as fh:
        header = fh.readline().strip()
        fh.readline()  # column names
        rows = [line.split() for line in fh if line.strip()]
    meta = dict(kv.split("=") for kv in header.lstrip("# ").split()[1:])
    dim = int(meta["dim"])
    level = float(meta["level"])
    resolution = int(meta["resolution"])
    tau = float(meta["tau"])
    if rows:
        data = np.asarray([[float(v) for v in r] for r in rows])
        coords = data[:, :-1].reshape(len(rows), dim, dim)
        labels = data[:, -1].astype(np.int64)
    else:
        coords = np.zeros((0, dim, dim))
        labels = np.zeros(0, dtype=np.int64)
    if dim == 2 and len(coords):
        areas = np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1)
    elif len(coords):
        cr = np.cross(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0])
        areas = 0.5 * np.linalg.norm(cr, axis=1)
    else:
        areas = np.zeros(0)
    centroids = coords.mean(axis=1) if len(coords) else np.zeros((0, dim))
    lo = coords.min(axis=(0, 1)) if len(coords) else np.zeros(dim)
    hi = coords.max(axis=(0, 1)) if len(coords) else np.zeros(dim)
    return LevelSetMesh(level=level, dim=dim, coords=coords, areas=areas,
                        centroids=centroids, normals=None,
                        component_labels=labels, resolution=resolution,
                        tau=tau, box_lo=lo, box_hi=hi, field=None)
