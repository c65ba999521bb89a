"""Small-level decay of the area-to-derivative ratio.

Near a minimum the gradient norm on the fiber behaves like c * t^nu
for some exponent nu in [0, 1), so the ratio

    r(t) = A(t) / V'(t)

decays like c * t^nu as t -> 0.  This module fits (nu, c) by log-log
regression over a decade of levels, certifies the pointwise bound
V'(t) * t^nu <= A(t) * (1 + slack) at every fit level, and derives a
constant C with V(t) <= C * t^(1 - nu) across the fit window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from ._util import format_sig
from .errors import DataError, ParameterError
from .geometry import fiber_integral_mesh, levelset_family, unit_density
from .reporting import CheckReport
from .volume import volume_derivative, volume_grid

# Multiplicative slack accepted by the certified pointwise bounds.
BOUND_SLACK = 0.05

# Exponents within this margin of {0, 1} trigger a fit-range warning: the
# decay model is degenerate there (gradient bounded below, or no decay).
NU_EDGE = 0.01


@dataclass
class ExponentFit:
    """Result of fitting r(t) = A(t)/V'(t) ~ c * t^nu over small levels.

    residual is the RMS misfit of log r against the fitted line;
    cert_ratio is max over fit levels of V'(t) * t^nu / A(t), certified
    when <= 1 + BOUND_SLACK; c_constant gives V(t) <= c_constant * t^(1-nu)
    across the fit window.
    """

    nu: float
    c_prefactor: float
    c_constant: float
    residual: float
    cert_ratio: float
    certified: bool
    levels_used: np.ndarray
    volumes: np.ndarray
    vprimes: np.ndarray
    areas: np.ndarray
    ratios: np.ndarray
    field_id: str
    budget: int
    seed: int
    oracle_nu: Optional[float] = None
    warnings: list = dc_field(default_factory=list)

    @property
    def tightness(self):
        """Per-level V / (c_constant * t^(1-nu)), <= 1 when the bound holds."""
        return self.volumes / (self.c_constant
                               * self.levels_used ** (1.0 - self.nu))

    def to_csv(self, path):
        """Columns t,V,Vprime,A,ratio — one row per fit level."""
        with open(path, "w") as fh:
            fh.write("t,V,Vprime,A,ratio\n")
            for i, t in enumerate(self.levels_used):
                fh.write(",".join(format_sig(v) for v in (
                    t, self.volumes[i], self.vprimes[i], self.areas[i],
                    self.ratios[i])) + "\n")

    def to_json(self, path):
        payload = {
            "nu": float(self.nu),
            "C": float(self.c_constant),
            "residual": float(self.residual),
            "oracle_nu": None if self.oracle_nu is None else float(self.oracle_nu),
            "levels": [float(t) for t in self.levels_used],
            "tightness": [float(q) for q in self.tightness],
            "c_prefactor": float(self.c_prefactor),
            "cert_ratio": float(self.cert_ratio),
            "certified": bool(self.certified),
            "budget": int(self.budget),
            "seed": int(self.seed),
            "field": self.field_id,
            "warnings": list(self.warnings),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_fit_levels(field, n_levels=15):
    """n log-spaced levels spanning the decade [eps/100, eps/10]."""
    return np.geomspace(field.eps / 100.0, field.eps / 10.0, n_levels)


def fit_exponent(field, levels=None, resolution=256, threads=1, seed=0,
                 oracle_nu=None):
    """Fit the decay exponent of r(t) = A(t)/V'(t) by log-log regression.

    Levels default to 15 log-spaced points over [eps/100, eps/10].  Every
    level gets a dedicated tight sampling box, so the fit is scale-free
    down to small t.  Raises DataError when a level yields a non-positive
    V' or A (no decay law can be fit through it).
    """
    if levels is None:
        levels = default_fit_levels(field)
    levels = np.asarray(levels, dtype=float)
    if len(levels) < 5:
        raise ParameterError(f"need >= 5 fit levels, got {len(levels)}")
    if np.any(np.diff(levels) <= 0):
        raise ParameterError("fit levels must be strictly increasing")
    for t in levels:
        field.check_level(t)

    vols = np.empty(len(levels))
    vprimes = np.empty(len(levels))
    areas = np.empty(len(levels))
    for i, t in enumerate(levels):
        t = float(t)
        vols[i], _ = volume_grid(field, t, resolution=resolution,
                                 threads=threads)
        vprimes[i], _ = volume_derivative(field, t, method="grid",
                                          resolution=resolution,
                                          threads=threads)
        mesh_t = levelset_family(field, [t], resolution, threads=threads)[0]
        # an empty fiber means A = 0; let the data check below report it
        areas[i] = (0.0 if mesh_t.n_facets == 0 else
                    fiber_integral_mesh(mesh_t, unit_density,
                                        with_error=False).value)

    bad = (vprimes <= 0) | (areas <= 0) | (vols <= 0)
    if bad.any():
        raise DataError(
            f"non-positive V, V' or A at level(s) {levels[bad].tolist()}; "
            "cannot fit a decay law")

    ratios = areas / vprimes
    logs_t = np.log(levels)
    logs_r = np.log(ratios)
    slope, intercept = np.polyfit(logs_t, logs_r, 1)
    nu = float(slope)
    c_pre = float(np.exp(intercept))
    fitted = intercept + slope * logs_t
    residual = float(np.max(np.abs(logs_r - fitted)))

    warnings = []
    if not NU_EDGE <= nu <= 1.0 - NU_EDGE:
        warnings.append(
            f"fit-range: fitted exponent {nu:.4f} at or beyond the edge of "
            "(0, 1); raw slope reported, the decay model may not apply")
    if np.any(np.diff(areas) <= 0):
        warnings.append(
            "area-not-monotone: A(t) does not decrease toward 0 along the "
            "fit grid; small-level estimates may be unreliable")

    cert = vprimes * levels ** nu / areas
    cert_ratio = float(cert.max())
    certified = bool(cert_ratio <= 1.0 + BOUND_SLACK)
    if not certified:
        warnings.append(
            f"bound-not-certified: max V'(t) t^nu / A(t) = {cert_ratio:.4f} "
            f"> {1.0 + BOUND_SLACK}")

    c_constant = float((1.0 + BOUND_SLACK)
                       * np.max(vols / levels ** (1.0 - nu)))

    return ExponentFit(nu=nu, c_prefactor=c_pre, c_constant=c_constant,
                       residual=residual, cert_ratio=cert_ratio,
                       certified=certified, levels_used=levels, volumes=vols,
                       vprimes=vprimes, areas=areas, ratios=ratios,
                       field_id=field.field_id, budget=int(resolution),
                       seed=int(seed), oracle_nu=oracle_nu, warnings=warnings)


def check_decay_bound(fit, levels=None):
    """Verify V(t) <= c_constant * t^(1 - nu) on the fit window.

    Uses the volumes stored in the fit, so explicit levels must be a subset
    of the fit levels.  Reports per-level tightness V / bound (at most 1
    when the bound holds; 1/(1 + BOUND_SLACK) at the binding level by
    construction of c_constant).
    """
    if levels is None:
        idx = np.arange(len(fit.levels_used))
    else:
        levels = np.asarray(levels, dtype=float)
        idx = []
        for t in levels:
            j = np.flatnonzero(np.isclose(fit.levels_used, t))
            if len(j) == 0:
                raise ParameterError(
                    f"level {t} is not one of the fit levels")
            idx.append(j[0])
        idx = np.asarray(idx)

    ts = fit.levels_used[idx]
    vols = fit.volumes[idx]
    bound = fit.c_constant * ts ** (1.0 - fit.nu)
    tightness = vols / bound
    rows = [(float(t), float(v), float(b), float(q))
            for t, v, b, q in zip(ts, vols, bound, tightness)]
    max_tight = float(tightness.max())
    return CheckReport(
        name="decay_bound",
        columns=["t", "V", "bound", "tightness"],
        rows=rows,
        summary={
            "max_rel_discrepancy": max_tight,
            "nu": float(fit.nu),
            "c_constant": float(fit.c_constant),
            "levels": int(len(ts)),
            "budget": int(fit.budget),
            "seed": int(fit.seed),
            "field": fit.field_id,
        },
        tolerance=1.0,
        passed=bool(max_tight <= 1.0 + 1e-12),
        warnings=list(fit.warnings))
