"""Fiber integrals J_g(t) = int_{f=t} g / |grad f| dsigma and the
identities built on them.

J_1(t) equals the volume derivative V'(t), and the ratio A(t) / J_1(t) is
attained as |grad f(xi)| at some mean-value point xi on the fiber, giving
V'(t) = A(t) / |grad f(xi)|.  The checks in this module verify both
identities, plus the coarea factorization
int g dx = int J_g(t) dt, against independent estimators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import composite_simpson, format_sig, parallel_map, rng_blocks
from .errors import (
    CriticalProximityError,
    IntegrandError,
    MeanValueSearchError,
    ParameterError,
    SandwichViolationError,
    SupportViolationError,
    TooThinShellError,
)
from .geometry import (
    G_MIN,
    MIN_ACCEPT_RATE,
    default_delta,
    extract_levelset,
    fiber_integral_mesh,
    fiber_integral_shell,
    levelset_family,
    shell_scan,
    unit_density,
)
from .reporting import CheckReport
from .volume import volume_derivative, volume_derivatives


@dataclass
class GLIntegralResult:
    """Estimate of J_g(t) = int_{f=t} g / |grad f| dsigma."""

    level: float
    value: float
    error: float
    method: str                 # "mesh" or "shell_mc"
    density: str                # descriptor of g ("1" for the volume case)
    samples_or_facets: int


@dataclass
class MeanValueWitness:
    """A point xi on the fiber with |grad f(xi)| ~= A(t) / J_1(t).

    target_ratio is the measured A/J; residual is the achieved
    | |grad f(xi)| - target_ratio |, to be compared against
    tolerance = tol * target_ratio.
    """

    level: float
    xi: np.ndarray
    grad_norm_at_xi: float
    target_ratio: float
    residual: float
    tolerance: float
    method: str
    samples_or_facets: int
    degenerate: bool = False


def density_name(g):
    """Descriptor string for a density: "1" for None, else its label."""
    if g is None:
        return "1"
    return getattr(g, "descriptor", "custom")


# -- named densities ----------------------------------------------------------

def bump_density(field, t_lo, t_hi):
    """Smooth bump in the field value, supported on {t_lo <= f <= t_hi}.

    g(x) = exp(-1 / (1 - u^2)) with u = (f(x) - c) / w, c the slab center
    and w its half-width; identically zero outside the open slab.
    """
    if not 0 < t_lo < t_hi:
        raise ParameterError(f"need 0 < t_lo < t_hi, got {t_lo}, {t_hi}")
    c = 0.5 * (t_lo + t_hi)
    w = 0.5 * (t_hi - t_lo)

    def g(pts):
        u = (field.values(pts) - c) / w
        out = np.zeros(len(u))
        m = np.abs(u) < 1.0
        if m.any():
            out[m] = np.exp(-1.0 / (1.0 - u[m] ** 2))
        return out

    g.descriptor = f"bump({format_sig(t_lo)},{format_sig(t_hi)})"
    g.profile = lambda t: (np.exp(-1.0 / (1.0 - ((t - c) / w) ** 2))
                           if abs((t - c) / w) < 1.0 else 0.0)
    g.support = (t_lo, t_hi)
    return g


def plateau_density(field, t_lo, t_hi, ramp=0.25):
    """C^1 plateau in the field value: smoothstep up, flat 1, smoothstep down.

    ramp is the fraction of the slab width used by each ramp (0 < ramp <= 0.5).
    """
    if not 0 < t_lo < t_hi:
        raise ParameterError(f"need 0 < t_lo < t_hi, got {t_lo}, {t_hi}")
    if not 0 < ramp <= 0.5:
        raise ParameterError(f"ramp must be in (0, 0.5], got {ramp}")
    r = ramp * (t_hi - t_lo)

    def profile(t):
        t = np.asarray(t, dtype=float)
        y_up = np.clip((t - t_lo) / r, 0.0, 1.0)
        y_dn = np.clip((t_hi - t) / r, 0.0, 1.0)
        s = (y_up * y_up * (3 - 2 * y_up)) * (y_dn * y_dn * (3 - 2 * y_dn))
        return s * ((t > t_lo) & (t < t_hi))

    def g(pts):
        return profile(field.values(pts))

    g.descriptor = (f"plateau({format_sig(t_lo)},{format_sig(t_hi)},"
                    f"ramp={format_sig(ramp)})")
    g.profile = lambda t: float(profile(t))
    g.support = (t_lo, t_hi)
    return g


# -- J_g(t) -------------------------------------------------------------------

def gl_integral(field, t, g=None, method="auto", resolution=256,
                samples=100_000, seed=0, delta=None, mesh=None, threads=1):
    """Estimate J_g(t) = int_{f=t} g / |grad f| dsigma (g == 1 by default).

    mesh route: facet quadrature of g / |grad f| at centroids.  shell route:
    the gradient factor cancels against the coarea weight, leaving the plain
    slab average (1/2 delta) int_{|f-t|<delta} g dx.  Both routes refuse
    fibers that come within G_MIN of a critical point.
    """
    field.check_level(t)
    if method == "auto":
        method = "mesh" if field.dim <= 3 else "shell_mc"

    if method == "mesh":
        if mesh is None:
            mesh = extract_levelset(field, t, resolution, threads=threads)
        if mesh.critical_mask is not None and mesh.critical_mask.any():
            raise CriticalProximityError(
                f"fiber at t={t} has facets with |grad f| < {G_MIN:g}; "
                "J_g is not reliable there")

        def integrand(pts):
            norms = field.grad_norms(pts)
            gv = np.ones(len(pts)) if g is None else np.asarray(g(pts), dtype=float)
            return gv / norms

        est = fiber_integral_mesh(mesh, integrand)
        return GLIntegralResult(level=float(t), value=est.value, error=est.error,
                                method="mesh", density=density_name(g),
                                samples_or_facets=est.samples_or_facets)

    if method == "shell_mc":
        if delta is None:
            delta = default_delta(t)
        if samples < 10_000:
            raise ParameterError(f"samples must be >= 10^4, got {samples}")
        if t + delta >= field.eps or t - delta <= 0:
            raise ParameterError(
                f"shell [{t - delta}, {t + delta}] leaves (0, {field.eps})")
        scan = shell_scan(field, t, delta, samples, seed, h=g,
                          weight_grad=False, threads=threads)
        n = scan["n_total"]
        rate = scan["n_acc"] / n
        if rate < MIN_ACCEPT_RATE:
            raise TooThinShellError(
                f"acceptance rate {rate:.2e} < {MIN_ACCEPT_RATE:g}; "
                f"increase delta (now {delta:g}) or the sample count")
        if scan["min_norm"] < G_MIN:
            raise CriticalProximityError(
                f"shell at t={t} contains points with |grad f| < {G_MIN:g}")
        scale = scan["box_vol"] / (2.0 * delta)
        mean = scan["sum"] / n
        var = max(scan["sum2"] / n - mean * mean, 0.0)
        return GLIntegralResult(level=float(t), value=float(scale * mean),
                                error=float(1.96 * scale * np.sqrt(var / n)),
                                method="shell_mc", density=density_name(g),
                                samples_or_facets=n)

    raise ParameterError(f"unknown method {method!r}")


# -- mean-value point ---------------------------------------------------------

def _project_to_fiber(field, x, t, max_iter=50):
    """Newton-project x onto {f = t} along the gradient direction."""
    y = np.array(x, dtype=float)
    tol = 1e-13 * max(abs(t), 1.0)
    for _ in range(max_iter):
        r = float(field.values(y[None])[0]) - t
        if abs(r) <= tol:
            break
        gvec = field.gradients(y[None])[0]
        g2 = float(np.dot(gvec, gvec))
        if g2 < G_MIN ** 2:
            raise CriticalProximityError(
                f"projection to the fiber t={t} stalled near a critical point")
        y = y - r * gvec / g2
    return y


def find_mean_value_point(field, t, method="auto", resolution=256,
                          samples=200_000, seed=0, tol=1e-3, mesh=None,
                          subset=None, delta=None, threads=1):
    """Locate xi on {f = t} with |grad f(xi)| = A(t) / J_1(t) (up to tol).

    A and J are computed from the same facet set (or the same shell sample),
    so the target ratio is an area-weighted harmonic mean (resp. arithmetic
    mean) of the sampled gradient norms and is guaranteed to lie between
    their extremes.  The point is then found by bisection along the chord
    between the extreme-norm locations, with Newton projection back onto the
    fiber at every evaluation.  When the norms are constant to within tol,
    any fiber point works and the first one is returned with its honest
    residual.
    """
    field.check_level(t)
    if method == "auto":
        method = "mesh" if field.dim <= 3 else "shell_mc"

    if method == "mesh":
        if mesh is None:
            mesh = extract_levelset(field, t, resolution, threads=threads)
        if mesh.critical_mask is not None and mesh.critical_mask.any():
            raise CriticalProximityError(
                f"fiber at t={t} has facets with |grad f| < {G_MIN:g}")
        idx = np.arange(mesh.n_facets) if subset is None else np.asarray(subset)
        if len(idx) == 0:
            raise ParameterError("empty facet subset")
        pts = mesh.centroids[idx]
        weights = mesh.areas[idx]
        norms = field.grad_norms(pts)
        a_val = float(weights.sum())
        j_val = float((weights / norms).sum())
        n_used = len(idx)
    elif method == "shell_mc":
        if delta is None:
            delta = default_delta(t)
        scan = shell_scan(field, t, delta, samples, seed, keep_points=True,
                          threads=threads)
        if scan["n_acc"] / scan["n_total"] < MIN_ACCEPT_RATE:
            raise TooThinShellError(
                f"acceptance rate below {MIN_ACCEPT_RATE:g} at t={t}")
        pts = scan["points"]
        norms = scan["norms"]
        if norms.min() < G_MIN:
            raise CriticalProximityError(
                f"shell at t={t} contains points with |grad f| < {G_MIN:g}")
        weights = np.ones(len(pts))
        a_val = float(norms.sum())          # common scale factors cancel in A/J
        j_val = float(len(pts))
        n_used = len(pts)
    else:
        raise ParameterError(f"unknown method {method!r}")

    c_star = a_val / j_val
    lo_n, hi_n = float(norms.min()), float(norms.max())
    slack = 1e-9 * c_star
    if not (lo_n - slack <= c_star <= hi_n + slack):
        raise SandwichViolationError(
            f"A/J = {c_star} outside sampled norm range [{lo_n}, {hi_n}]")

    def witness(xi, gn, degenerate):
        return MeanValueWitness(
            level=float(t), xi=xi, grad_norm_at_xi=float(gn),
            target_ratio=float(c_star), residual=float(abs(gn - c_star)),
            tolerance=float(tol * c_star), method=method,
            samples_or_facets=n_used, degenerate=degenerate)

    if hi_n - lo_n <= tol * c_star:
        xi = _project_to_fiber(field, pts[0], t)
        gn = float(field.grad_norms(xi[None])[0])
        return witness(xi, gn, degenerate=True)

    x_lo = pts[int(np.argmin(norms))]
    x_hi = pts[int(np.argmax(norms))]

    def probe(s):
        y = _project_to_fiber(field, x_lo + s * (x_hi - x_lo), t)
        return y, float(field.grad_norms(y[None])[0])

    y0, g0 = probe(0.0)
    y1, g1 = probe(1.0)
    target = tol * c_star
    # converge to half the stated tolerance so the reported residual
    # clears the bound with margin rather than sitting on it
    stop = 0.5 * target
    best = min((abs(g0 - c_star), y0, g0), (abs(g1 - c_star), y1, g1),
               key=lambda b: b[0])
    if best[0] <= stop:
        return witness(best[1], best[2], degenerate=False)
    if not (g0 - c_star) * (g1 - c_star) < 0:
        raise MeanValueSearchError(
            f"no sign change along the search chord at t={t}: "
            f"norms {g0}, {g1} vs target {c_star}")

    s_lo, s_hi = 0.0, 1.0
    f_lo = g0 - c_star
    for _ in range(80):
        s_mid = 0.5 * (s_lo + s_hi)
        y, gn = probe(s_mid)
        err = abs(gn - c_star)
        if err < best[0]:
            best = (err, y, gn)
        if err <= stop:
            return witness(y, gn, degenerate=False)
        if (gn - c_star) * f_lo < 0:
            s_hi = s_mid
        else:
            s_lo, f_lo = s_mid, gn - c_star
    if best[0] <= target:
        return witness(best[1], best[2], degenerate=False)
    raise MeanValueSearchError(
        f"bisection stalled at t={t}: best residual {best[0]:.3e} "
        f"> tolerance {target:.3e}")


# -- identity checks ----------------------------------------------------------

def _derivatives_for_check(field, levels, method, resolution, samples, seed,
                           threads):
    """V'(t) per level: tight boxes where cheap, one shared grid in 3D.

    Planar grids are inexpensive, and a per-level box keeps the count
    jitter of thin difference shells far below tolerance; in 3D the shared
    evaluation keeps the runtime budget instead.
    """
    if method == "grid" and field.dim <= 2:
        pairs = [volume_derivative(field, float(t), method="grid",
                                   resolution=resolution, threads=threads)
                 for t in levels]
        return (np.array([p[0] for p in pairs]),
                np.array([p[1] for p in pairs]))
    return volume_derivatives(field, levels, method=method,
                              resolution=resolution, samples=samples,
                              seed=seed, threads=threads)


def check_v_prime_equals_j(field, levels, method="auto", resolution=256,
                           samples=1_000_000, seed=0, threads=1, tol=0.02):
    """Verify V'(t) = J_1(t) level by level, by independent estimators.

    V'(t) comes from differencing the volume estimator; J_1(t) from fiber
    quadrature (or the shell average).  Reports the maximum relative
    discrepancy over the levels.
    """
    levels = np.asarray(levels, dtype=float)
    if method == "auto":
        method = "grid" if field.dim <= 3 else "mc"
    j_method = "mesh" if method == "grid" else "shell_mc"

    vps, vp_errs = _derivatives_for_check(field, levels, method, resolution,
                                          samples, seed, threads)
    if j_method == "mesh":
        meshes = levelset_family(field, levels, resolution, threads=threads)
    else:
        meshes = [None] * len(levels)

    rows = []
    rels = []
    for t, vp, vp_err, mesh in zip(levels, vps, vp_errs, meshes):
        j = gl_integral(field, t, method=j_method, resolution=resolution,
                        samples=samples, seed=seed + 1, mesh=mesh,
                        threads=threads)
        rel = abs(vp - j.value) / abs(j.value)
        rels.append(rel)
        rows.append((float(t), float(vp), float(vp_err), j.value, j.error, rel))

    max_rel = float(max(rels))
    return CheckReport(
        name="v_prime_equals_j",
        columns=["t", "Vprime", "Vprime_err", "J", "J_err", "rel_discrepancy"],
        rows=rows,
        summary={
            "max_rel_discrepancy": max_rel,
            "levels": int(len(levels)),
            "budget": int(samples if method == "mc" else resolution),
            "seed": int(seed),
            "field": field.field_id,
            "method": method,
        },
        tolerance=float(tol),
        passed=bool(max_rel <= tol))


def check_main_theorem(field, levels, method="auto", resolution=256,
                       samples=1_000_000, seed=0, threads=1, tol=0.03,
                       witness_tol=1e-3):
    """Verify V'(t) * |grad f(xi)| = A(t) with xi a located mean-value point.

    Per level: V'(t) by differencing, A(t) and xi from one shared fiber
    discretization.  residual is |V' * |grad f(xi)| - A| / A; the check also
    requires every witness to satisfy its own residual bound
    | |grad f(xi)| - A/J | <= witness_tol * (A/J).
    """
    levels = np.asarray(levels, dtype=float)
    if method == "auto":
        method = "grid" if field.dim <= 3 else "mc"
    fiber_method = "mesh" if method == "grid" else "shell_mc"

    vps, _ = _derivatives_for_check(field, levels, method, resolution,
                                    samples, seed, threads)
    if fiber_method == "mesh":
        meshes = levelset_family(field, levels, resolution, threads=threads)
    else:
        meshes = [None] * len(levels)

    rows = []
    rels = []
    wit_rels = []
    for t, vp, mesh in zip(levels, vps, meshes):
        if fiber_method == "mesh":
            a_est = fiber_integral_mesh(mesh, unit_density)
            wit = find_mean_value_point(field, t, method="mesh", mesh=mesh,
                                        tol=witness_tol)
        else:
            a_est = fiber_integral_shell(field, t, unit_density,
                                         samples=samples, seed=seed + 1,
                                         threads=threads)
            wit = find_mean_value_point(field, t, method="shell_mc",
                                        samples=samples, seed=seed + 1,
                                        tol=witness_tol, threads=threads)
        rel = abs(vp * wit.grad_norm_at_xi - a_est.value) / abs(a_est.value)
        rels.append(rel)
        wit_rels.append(wit.residual / wit.target_ratio)
        rows.append((float(t), vp, a_est.value, wit.grad_norm_at_xi, rel))

    max_rel = float(max(rels))
    max_wit = float(max(wit_rels))
    return CheckReport(
        name="main_theorem",
        columns=["t", "Vprime", "A", "grad_norm_xi", "residual"],
        rows=rows,
        summary={
            "max_rel_discrepancy": max_rel,
            "max_witness_residual": max_wit,
            "levels": int(len(levels)),
            "budget": int(samples if method == "mc" else resolution),
            "seed": int(seed),
            "field": field.field_id,
            "method": method,
        },
        tolerance=float(tol),
        passed=bool(max_rel <= tol and max_wit <= witness_tol))


def check_coarea(field, g=None, t_lo=None, t_hi=None, n_levels=17,
                 samples=1_000_000, resolution=256, seed=0, threads=1,
                 tol=0.01, method="auto"):
    """Verify int g dx = int J_g(t) dt for a density supported in a slab.

    Left side: plain Monte Carlo of g over the sampling box, with a rejection
    of any sampled point where g != 0 but f(x) leaves [t_lo, t_hi] (support
    violation).  Right side: composite Simpson quadrature of t -> J_g(t)
    over [t_lo, t_hi] with n_levels nodes (odd), each node an independent
    fiber estimate.
    """
    if t_lo is None or t_hi is None:
        t_lo = 0.25 * field.eps if t_lo is None else t_lo
        t_hi = 0.75 * field.eps if t_hi is None else t_hi
    field.check_level(t_lo)
    field.check_level(t_hi)
    if g is None:
        g = bump_density(field, t_lo, t_hi)
    if n_levels < 3 or n_levels % 2 == 0:
        raise ParameterError(f"n_levels must be odd and >= 3, got {n_levels}")
    if samples < 10_000:
        raise ParameterError(f"samples must be >= 10^4, got {samples}")

    # -- left side: volume Monte Carlo of g over the box for t_hi
    lo, hi = field.box_for(t_hi)
    box_vol = float(np.prod(hi - lo))

    def one_block(args):
        rng, size = args
        pts = lo + (hi - lo) * rng.random((size, field.dim))
        fv = field.values(pts)
        gv = np.asarray(g(pts), dtype=float)
        if not np.all(np.isfinite(gv)):
            raise IntegrandError("density non-finite in the sampling box")
        bad = (gv != 0) & ((fv < t_lo) | (fv > t_hi))
        n_bad = int(bad.sum())
        return {"sum": float(gv.sum()), "sum2": float(np.dot(gv, gv)),
                "n_bad": n_bad}

    blocks = rng_blocks(seed, samples)
    results = parallel_map(one_block, blocks, threads=threads)
    n_bad = sum(r["n_bad"] for r in results)
    if n_bad:
        raise SupportViolationError(
            f"density is nonzero at {n_bad} sampled point(s) outside the slab "
            f"[{t_lo}, {t_hi}]")
    mean = sum(r["sum"] for r in results) / samples
    var = max(sum(r["sum2"] for r in results) / samples - mean * mean, 0.0)
    lhs = box_vol * mean
    lhs_err = 1.96 * box_vol * float(np.sqrt(var / samples))

    # -- right side: Simpson over per-level fiber estimates
    nodes = np.linspace(t_lo, t_hi, n_levels)
    if method == "auto":
        method = "mesh" if field.dim <= 3 else "shell_mc"
    ests = [gl_integral(field, float(t), g=g, method=method,
                        resolution=resolution, samples=max(samples // n_levels,
                                                           10_000),
                        seed=seed + 1 + i, threads=threads)
            for i, t in enumerate(nodes)]
    j_vals = np.array([e.value for e in ests])
    j_errs = np.array([e.error for e in ests])
    rhs = composite_simpson(j_vals, nodes)
    h = (t_hi - t_lo) / (n_levels - 1)
    simpson_w = np.ones(n_levels)
    simpson_w[1:-1:2] = 4.0
    simpson_w[2:-1:2] = 2.0
    rhs_err = float(np.dot(simpson_w, j_errs)) * h / 3.0

    disc = abs(lhs - rhs)
    rel = disc / abs(lhs) if lhs != 0 else np.inf
    rows = [(float(t), float(v), float(e))
            for t, v, e in zip(nodes, j_vals, j_errs)]
    return CheckReport(
        name="coarea",
        columns=["t", "J_g", "J_g_err"],
        rows=rows,
        summary={
            "lhs": float(lhs),
            "lhs_err": float(lhs_err),
            "rhs": float(rhs),
            "rhs_err": float(rhs_err),
            "max_rel_discrepancy": float(rel),
            "levels": int(n_levels),
            "budget": int(samples),
            "seed": int(seed),
            "field": field.field_id,
            "density": density_name(g),
            "slab": [float(t_lo), float(t_hi)],
        },
        tolerance=float(tol),
        passed=bool(rel <= tol))
