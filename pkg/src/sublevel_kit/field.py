"""Scalar fields on R^n with gradient access and closed-form test oracles.

A field f has an isolated minimum 0 at the origin, a declared regular level
range (0, eps) on which its fibers {f = t} are free of critical points, and
an axis-aligned domain box that contains every sublevel set E_t = {f <= t}
for t in that range.  The corpus bundles each field with whatever closed
forms exist for the sublevel volume V(t), the fiber area A(t), the gradient
norm on the fiber (when constant there), and the gradient-inequality decay
exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ellipe, gamma

from .errors import (
    DomainError,
    FieldIdError,
    LevelRangeError,
    NonDifferentiablePointError,
    ParameterError,
)

# Points closer than this to a smoothness interface are resampled by Monte
# Carlo samplers and rejected by the checked gradient operation.
INTERFACE_MARGIN = 1e-12

# Central-difference step as a fraction of the domain diameter.
FD_STEP_FACTOR = 1e-5


@dataclass
class FieldOracle:
    """Closed forms attached to a corpus field; any entry may be None.

    volume, area and grad_norm_on_fiber are callables of the level t.
    grad_norm_on_fiber is only set when the gradient norm is constant on
    each fiber.  loja_exponent is the exact decay exponent of the gradient
    norm as t -> 0 (0.0 marks the bounded-below edge case).
    """

    volume: Optional[Callable] = None
    area: Optional[Callable] = None
    grad_norm_on_fiber: Optional[Callable] = None
    loja_exponent: Optional[float] = None


@dataclass
class ScalarField:
    """A scalar field f: R^n -> R with vectorized evaluation.

    Parameters
    ----------
    name : str
        Registry name, e.g. ``"euclidean_norm"``.
    dim : int
        Ambient dimension n.
    f : callable
        Vectorized evaluation; maps an (m, n) array of points to (m,) values.
    grad : callable, optional
        Vectorized exact gradient, (m, n) -> (m, n).  When None, central
        finite differences are used.
    domain_lo, domain_hi : arrays of shape (n,)
        Axis-aligned box containing every E_t for t in (0, eps).
    eps : float
        Upper end of the regular level range (0, eps).
    smooth_components : int
        Declared number of smooth fiber components per level (1 for smooth
        fields, 2**n for coordinate-wise absolute-value fields).
    piece_id : callable, optional
        For piecewise fields: maps points (m, n) to integer labels of the
        smoothness piece (open orthant) containing each point.
    interface_distance : callable, optional
        For piecewise fields: distance from each point to the nearest
        smoothness interface.
    extent : callable, optional
        Tight per-axis half-widths of E_t, as a function of t.  Used to
        shrink sampling boxes at small levels; must upper-bound E_t.
    connected_fibers : bool
        Declared connectedness of the fibers (not computed).
    params : tuple
        Numeric parameters used to build the field (weights, coefficients).
    """

    name: str
    dim: int
    f: Callable
    grad: Optional[Callable]
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    eps: float
    smooth_components: int = 1
    piece_id: Optional[Callable] = None
    interface_distance: Optional[Callable] = None
    extent: Optional[Callable] = None
    connected_fibers: bool = True
    params: tuple = ()

    @property
    def t_range(self):
        return (0.0, self.eps)

    @property
    def field_id(self):
        # 17 significant digits so get_field(field.field_id) is lossless
        base = f"{self.name}:{self.dim}"
        if self.params:
            base += ":" + ",".join("%.17g" % p for p in self.params)
        return base

    @property
    def diameter(self):
        return float(np.linalg.norm(self.domain_hi - self.domain_lo))

    def values(self, pts):
        """f at an (m, n) array of points (no domain check)."""
        return np.asarray(self.f(np.asarray(pts, dtype=float)), dtype=float)

    def gradients(self, pts):
        """Gradient at an (m, n) array of points (no interface check).

        Exact when the field carries one, otherwise central differences
        with step FD_STEP_FACTOR * diameter.
        """
        pts = np.asarray(pts, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(pts), dtype=float)
        h = FD_STEP_FACTOR * self.diameter
        out = np.empty_like(pts)
        for j in range(self.dim):
            step = np.zeros(self.dim)
            step[j] = h
            out[:, j] = (self.values(pts + step) - self.values(pts - step)) / (2 * h)
        return out

    def grad_norms(self, pts):
        return np.linalg.norm(self.gradients(pts), axis=1)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= self.domain_lo) & (pts <= self.domain_hi), axis=1)

    def check_level(self, t):
        if not (0.0 < t < self.eps):
            raise LevelRangeError(
                f"level t={t} outside regular range (0, {self.eps})")

    def box_for(self, t, margin=0.10):
        """Sampling box for level t: tight extent box when known, else domain."""
        if self.extent is None:
            return self.domain_lo, self.domain_hi
        e = np.asarray(self.extent(t), dtype=float) * (1.0 + margin)
        return np.maximum(-e, self.domain_lo), np.minimum(e, self.domain_hi)


def evaluate(field, x):
    """f(x) for a single point, with domain checking."""
    x = np.asarray(x, dtype=float)
    if x.shape != (field.dim,):
        raise DomainError(f"expected a point in R^{field.dim}, got shape {x.shape}")
    if not field.contains(x[None, :])[0]:
        raise DomainError(f"point {x.tolist()} outside domain box")
    return float(field.values(x[None, :])[0])

def gradient(field, x):
    """Gradient of f at a single point, with domain and interface checking."""
    x = np.asarray(x, dtype=float)
    if not field.contains(x[None, :])[0]:
        raise DomainError(f"point {x.tolist()} outside domain box")
    if field.interface_distance is not None:
        if float(field.interface_distance(x[None, :])[0]) < INTERFACE_MARGIN:
            raise NonDifferentiablePointError(
                f"point {x.tolist()} lies on a smoothness interface")
    return field.gradients(x[None, :])[0]


def finite_difference_gradient(field, x, h=None):
    """Central-difference gradient for a single point, ignoring field.grad."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = FD_STEP_FACTOR * field.diameter
    out = np.empty(field.dim)
    for j in range(field.dim):
        step = np.zeros(field.dim)
        step[j] = h
        out[j] = (field.values((x + step)[None, :])[0]
                  - field.values((x - step)[None, :])[0]) / (2 * h)
    return out


def unit_ball_volume(n):
    """Lebesgue volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


# -- corpus builders ---------------------------------------------------------

_EPS = 2.0          # regular level range (0, 2) for every corpus entry
_BOX_MARGIN = 1.25  # domain half-width = extent(eps) * margin


def _box(extent_eps):
    e = np.asarray(extent_eps, dtype=float) * _BOX_MARGIN
    return -e, e


def make_euclidean_norm(dim):
    """f(x) = |x| (Euclidean).  Sublevel sets are balls of radius t."""
    def f(pts):
        return np.linalg.norm(pts, axis=1)

    def grad(pts):
        r = np.linalg.norm(pts, axis=1)
        return pts / r[:, None]

    lo, hi = _box(np.full(dim, _EPS))
    w = unit_ball_volume(dim)
    oracle = FieldOracle(
        volume=lambda t: w * t ** dim,
        area=lambda t: dim * w * t ** (dim - 1),
        grad_norm_on_fiber=lambda t: 1.0,
        loja_exponent=0.0,
    )
    fld = ScalarField(
        name="euclidean_norm", dim=dim, f=f, grad=grad,
        domain_lo=lo, domain_hi=hi, eps=_EPS,
        extent=lambda t: np.full(dim, t),
    )
    return fld, oracle


def make_squared_norm(dim):
    """f(x) = |x|^2.  Sublevel sets are balls of radius sqrt(t)."""
    def f(pts):
        return np.sum(pts * pts, axis=1)

    def grad(pts):
        return 2.0 * pts

    lo, hi = _box(np.full(dim, math.sqrt(_EPS)))
    w = unit_ball_volume(dim)
    oracle = FieldOracle(
        volume=lambda t: w * t ** (dim / 2.0),
        area=lambda t: dim * w * t ** ((dim - 1) / 2.0),
        grad_norm_on_fiber=lambda t: 2.0 * np.sqrt(t),
        loja_exponent=0.5,
    )
    fld = ScalarField(
        name="squared_norm", dim=dim, f=f, grad=grad,
        domain_lo=lo, domain_hi=hi, eps=_EPS,
        extent=lambda t: np.full(dim, math.sqrt(t)),
    )
    return fld, oracle


def make_quartic_norm(dim):
    """f(x) = |x|^4.  Sublevel sets are balls of radius t^(1/4)."""
    def f(pts):
        r2 = np.sum(pts * pts, axis=1)
        return r2 * r2

    def grad(pts):
        r2 = np.sum(pts * pts, axis=1)
        return 4.0 * r2[:, None] * pts

    lo, hi = _box(np.full(dim, _EPS ** 0.25))
    w = unit_ball_volume(dim)
    oracle = FieldOracle(
        volume=lambda t: w * t ** (dim / 4.0),
        area=lambda t: dim * w * t ** ((dim - 1) / 4.0),
        grad_norm_on_fiber=lambda t: 4.0 * t ** 0.75,
        loja_exponent=0.75,
    )
    fld = ScalarField(
        name="quartic_norm", dim=dim, f=f, grad=grad,
        domain_lo=lo, domain_hi=hi, eps=_EPS,
        extent=lambda t: np.full(dim, t ** 0.25),
    )
    return fld, oracle


def make_anisotropic_quadratic(dim, lambdas):
    """f(x) = sum_i lambda_i x_i^2 with all lambda_i > 0 (ellipsoid levels)."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (dim,) or np.any(lam <= 0):
        raise ParameterError(f"need {dim} positive coefficients, got {lambdas}")

    def f(pts):
        return np.sum(lam * pts * pts, axis=1)

    def grad(pts):
        return 2.0 * lam * pts

    lo, hi = _box(np.sqrt(_EPS / lam))
    w = unit_ball_volume(dim)
    det_root = float(np.sqrt(np.prod(lam)))

    def volume(t):
        return w * t ** (dim / 2.0) / det_root

    area = None
    if dim == 2:
        # Ellipse perimeter 4 a E(m), a >= b semi-axes, m = 1 - (b/a)^2.
        lam_min, lam_max = float(lam.min()), float(lam.max())

        def area(t):
            a = math.sqrt(t / lam_min)
            b = math.sqrt(t / lam_max)
            return 4.0 * a * ellipe(1.0 - (b / a) ** 2)

    oracle = FieldOracle(volume=volume, area=area, loja_exponent=0.5)
    fld = ScalarField(
        name="anisotropic_quadratic", dim=dim, f=f, grad=grad,
        domain_lo=lo, domain_hi=hi, eps=_EPS,
        extent=lambda t: np.sqrt(t / lam),
        params=tuple(lam),
    )
    return fld, oracle


def make_weighted_l1(dim, weights):
    """f(x) = sum_i a_i |x_i| with a_i > 0 (cross-polytope levels).

    Piecewise smooth: the coordinate hyperplanes are the smoothness
    interfaces, and each fiber splits into 2^n flat faces, one per open
    orthant, on which |grad f| = |a|.
    """
    a = np.asarray(weights, dtype=float)
    if a.shape != (dim,) or np.any(a <= 0):
        raise ParameterError(f"need {dim} positive weights, got {weights}")
    a_norm = float(np.linalg.norm(a))

    def f(pts):
        return np.sum(a * np.abs(pts), axis=1)

    def grad(pts):
        return a * np.sign(pts)

    def piece_id(pts):
        bits = (np.asarray(pts) >= 0).astype(np.int64)
        return bits @ (1 << np.arange(dim, dtype=np.int64))

    def interface_distance(pts):
        return np.min(np.abs(pts), axis=1)

    lo, hi = _box(_EPS / a)
    # Cross-polytope closed forms: V = 2^n t^n / (n! prod a_i), A = |a| V'.
    prod_a = float(np.prod(a))
    fact = math.factorial(dim)

    def volume(t):
        return (2.0 ** dim) * t ** dim / (fact * prod_a)

    def area(t):
        return a_norm * (2.0 ** dim) * dim * t ** (dim - 1) / (fact * prod_a)

    oracle = FieldOracle(
        volume=volume, area=area,
        grad_norm_on_fiber=lambda t: a_norm,
        loja_exponent=0.0,
    )
    fld = ScalarField(
        name="weighted_l1", dim=dim, f=f, grad=grad,
        domain_lo=lo, domain_hi=hi, eps=_EPS,
        smooth_components=2 ** dim,
        piece_id=piece_id,
        interface_distance=interface_distance,
        extent=lambda t: t / a,
        params=tuple(a),
    )
    return fld, oracle


_BUILDERS = {
    "euclidean_norm": lambda dim, params: make_euclidean_norm(dim),
    "squared_norm": lambda dim, params: make_squared_norm(dim),
    "quartic_norm": lambda dim, params: make_quartic_norm(dim),
    "anisotropic_quadratic": make_anisotropic_quadratic,
    "weighted_l1": make_weighted_l1,
}

_SQ2 = 1.0 / math.sqrt(2.0)
_SQ3 = 1.0 / math.sqrt(3.0)

_CORPUS_IDS = (
    "euclidean_norm:2",
    "euclidean_norm:3",
    "euclidean_norm:4",
    "squared_norm:2",
    "squared_norm:3",
    "quartic_norm:2",
    "anisotropic_quadratic:2:1,4",
    "anisotropic_quadratic:3:1,2,4",
    f"weighted_l1:2:{_SQ2:.17g},{_SQ2:.17g}",
    f"weighted_l1:3:{_SQ3:.17g},{_SQ3:.17g},{_SQ3:.17g}",
)


def corpus_ids():
    """Identifiers of the standard corpus, in fixed order."""
    return list(_CORPUS_IDS)


def parse_field_id(field_id):
    """Split "name:dim[:p1,p2,...]" into (name, dim, params)."""
    parts = field_id.split(":")
    if len(parts) not in (2, 3):
        raise FieldIdError(f"malformed field id {field_id!r}; expected name:dim[:params]")
    name, dim_s = parts[0], parts[1]
    try:
        dim = int(dim_s)
    except ValueError:
        raise FieldIdError(f"bad dimension {dim_s!r} in field id {field_id!r}") from None
    if dim < 1:
        raise FieldIdError(f"dimension must be positive in {field_id!r}")
    params = ()
    if len(parts) == 3:
        try:
            params = tuple(float(p) for p in parts[2].split(","))
        except ValueError:
            raise FieldIdError(f"bad parameter list in field id {field_id!r}") from None
    return name, dim, params


def get_field(field_id):
    """Resolve an identifier to a (ScalarField, FieldOracle) pair."""
    name, dim, params = parse_field_id(field_id)
    if name not in _BUILDERS:
        known = ", ".join(sorted(_BUILDERS))
        raise FieldIdError(f"unknown field {name!r}; known fields: {known}")
    if name in ("anisotropic_quadratic", "weighted_l1") and not params:
        defaults = {
            ("anisotropic_quadratic", 2): (1.0, 4.0),
            ("anisotropic_quadratic", 3): (1.0, 2.0, 4.0),
        }
        params = defaults.get((name, dim), tuple([1.0 / math.sqrt(dim)] * dim))
    try:
        return _BUILDERS[name](dim, params)
    except ParameterError as exc:
        raise FieldIdError(str(exc)) from exc


def corpus():
    """The standard analytic corpus as (ScalarField, FieldOracle) pairs."""
    return [get_field(fid) for fid in _CORPUS_IDS]
