"""Numerical certificates for the analytic ingredients of the lower bounds.

* the weighted integration-by-parts identity relating the quadratic form
  ``F(u_theta, u_z)`` to three entries of ``B^sym`` on a t-slice,
* the exponential-weight (Carleman) coercivity on hyperbolic patches,
* the harmonic-strip inequality on T = (0, h) x (0, p).

Every check can be serialized as a :class:`CheckRecord`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import CurvatureClass, gauss_codazzi_residual
from .kinematics import BoundaryError, TLinearField, check_dirichlet, frame_gradient
from .quadrature import QuadratureGrid, gauss_legendre

__all__ = [
    "CarlemanWeight",
    "CheckRecord",
    "HarmonicStripSample",
    "NonHarmonicError",
    "random_bump_field",
    "bump_corpus",
    "identity_sides",
    "key_identity_residual",
    "carleman_sides",
    "carleman_coercivity_margin",
    "calibrate_carleman_constant",
    "form_coefficients",
    "smallest_definite_lambda",
    "harmonic_strip_norms",
    "harmonic_strip_check",
    "harmonic_grid_check",
    "run_identity_suite",
]


# relative Laplacian residual tolerated by the finite-difference harmonicity test
HARMONIC_RTOL = 1e-5


class NonHarmonicError(ValueError):
    """Sample passed to the harmonic-strip check is not harmonic."""


@dataclass(frozen=True)
class CarlemanWeight:
    """Exponential weight exp(lam * z)."""

    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lambda must be finite and positive")

    def __call__(self, z):
        return np.exp(self.lam * np.asarray(z, dtype=float))


@dataclass
class CheckRecord:
    name: str
    inputs: dict
    lhs: float
    rhs: float
    residual: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# random Dirichlet fields
# ---------------------------------------------------------------------------

def _quintic(coef):
    """x^2 (1-x)^2 (c0 + c1 x) and its first derivative, vectorized over x."""
    c0, c1 = coef

    def value(x):
        q = x * x * (1 - x) ** 2
        return q * (c0 + c1 * x)

    def deriv(x):
        q = x * x * (1 - x) ** 2
        dq = 2 * x * (1 - x) ** 2 - 2 * x * x * (1 - x)
        return dq * (c0 + c1 * x) + q * c1

    return value, deriv


def random_bump_field(patch, rng: np.random.Generator, terms: int = 2, t_slope: float = 1.0,
                      amplitude: float = 1.0) -> TLinearField:
    """Sum of tensor products of quintic bumps vanishing with first derivatives on the thin edge.

    Each component is linear in t. Requires constant z-limits.
    """
    z1, z2 = patch.domain.z_range()
    width = z2 - z1
    # per component, per t-coefficient (u0, u1): list of (theta-bump, z-bump) pairs
    parts = []
    for _ in range(3):
        comp = []
        for scale in (1.0, t_slope):
            pairs = []
            for _ in range(terms):
                a = _quintic(rng.normal(size=2))
                b = _quintic(rng.normal(size=2))
                pairs.append((scale * amplitude * rng.normal(), a, b))
            comp.append(pairs)
        parts.append(comp)

    def terms_fn(theta, z):
        zeta = (z - z1) / width
        shape = np.broadcast_shapes(np.shape(theta), np.shape(z))
        out_u = np.zeros((2, 3) + shape)
        out_d = np.zeros((2, 3, 2) + shape)
        for c, comp in enumerate(parts):
            for k, pairs in enumerate(comp):
                for amp, (fa, da), (fb, db) in pairs:
                    ft, fz = fa(theta), fb(zeta)
                    out_u[k, c] += amp * ft * fz
                    out_d[k, c, 0] += amp * da(theta) * fz
                    out_d[k, c, 1] += amp * ft * db(zeta) / width
        return out_u[0], out_d[0], out_u[1], out_d[1]

    return TLinearField(terms_fn, dirichlet=True, theta_scale=1.0, z_scale=1.0, name="quintic_bump")


def bump_corpus(patch, n: int, seed: int, **kwargs) -> list:
    rng = np.random.default_rng(seed)
    return [random_bump_field(patch, rng, **kwargs) for _ in range(n)]


# ---------------------------------------------------------------------------
# weighted identity
# ---------------------------------------------------------------------------

def _slice_nodes(patch, grid: Optional[QuadratureGrid]):
    if grid is None:
        grid = QuadratureGrid((2, 12, 12), (1, 4, 4))
    return grid.surface_nodes(patch.domain)


def form_coefficients(v, z, lam: float, weighted: bool = True):
    """Pointwise coefficients (c_thth, c_zz, c_thz) of u_theta^2, u_z^2, u_theta*u_z in F.

    With ``weighted=False`` the common positive factor exp(lam z) is dropped.
    """
    e = np.exp(lam * z) if weighted else np.ones_like(z)
    d_z_kz_ath = e * (lam * v.k_z * v.a_th + v.k_z_dz * v.a_th + v.k_z * v.a_th_dz)
    d_z_ath_kth = e * (lam * v.a_th * v.k_th + v.a_th_dz * v.k_th + v.a_th * v.k_th_dz)
    d_th_az_kz = e * (v.a_z_dth * v.k_z + v.a_z * v.k_z_dth)
    c_thth = -(0.5 * d_z_kz_ath + e * v.k_z * v.a_th_dz)
    c_zz = e * v.a_th_dz * v.k_z + 0.5 * d_z_ath_kth
    c_thz = -(e * v.a_z_dth * (v.k_th + v.k_z) + d_th_az_kz)
    return c_thth, c_zz, c_thz


def identity_sides(shell, field, weight: CarlemanWeight, grid: Optional[QuadratureGrid] = None,
                   t: float = 0.0):
    """``(F, pairing)`` on the slice at ``t``; the two agree for thin-edge Dirichlet fields."""
    patch = shell.patch
    nodes = _slice_nodes(patch, grid)
    theta, z, w = nodes.theta, nodes.z, nodes.weight
    v = patch.data(theta, z)
    tt = np.full_like(theta, t)
    u, du = field.evaluate(tt, theta, z)
    B = frame_gradient(v, tt, u, du, shifted=False)
    bsym = 0.5 * (B + np.swapaxes(B, -1, -2))
    e = weight(z)
    u_th, u_z = u[1], u[2]
    metric = v.a_th * v.a_z
    pairing = np.dot(w * metric, bsym[:, 1, 1] * e * v.k_z * u_z
                     - bsym[:, 2, 2] * e * v.k_th * u_z
                     + 2 * bsym[:, 1, 2] * e * v.k_z * u_th)
    c_thth, c_zz, c_thz = form_coefficients(v, z, weight.lam)
    F = np.dot(w, c_thth * u_th ** 2 + c_zz * u_z ** 2 + c_thz * u_th * u_z)
    return float(F), float(pairing)


def key_identity_residual(shell, field, weight: CarlemanWeight, grid: Optional[QuadratureGrid] = None,
                          t: float = 0.0) -> float:
    """|F - pairing| / max(|F|, |pairing|); zero for the zero field."""
    if not field.dirichlet:
        raise BoundaryError("identity requires a thin-edge Dirichlet field")
    check_dirichlet(shell, field)
    F, pairing = identity_sides(shell, field, weight, grid, t)
    scale = max(abs(F), abs(pairing))
    return 0.0 if scale == 0.0 else abs(F - pairing) / scale


# ---------------------------------------------------------------------------
# exponential-weight coercivity
# ---------------------------------------------------------------------------

def carleman_sides(shell, field, weight: CarlemanWeight, grid: Optional[QuadratureGrid] = None,
                   t: float = 0.0):
    """``(||e^{lam z/2} u_theta|| + ||e^{lam z/2} u_z||, ||e^{lam z/2} B^sym||)`` on the slice."""
    patch = shell.patch
    nodes = _slice_nodes(patch, grid)
    theta, z, w = nodes.theta, nodes.z, nodes.weight
    v = patch.data(theta, z)
    tt = np.full_like(theta, t)
    u, du = field.evaluate(tt, theta, z)
    B = frame_gradient(v, tt, u, du, shifted=False)
    bsym = 0.5 * (B + np.swapaxes(B, -1, -2))
    # exponent shifted by z1 to keep magnitudes moderate; both sides share the factor
    z1 = float(np.min(z))
    ew = w * v.a_th * v.a_z * np.exp(weight.lam * (z - z1))
    lhs = math.sqrt(np.dot(ew, u[1] ** 2)) + math.sqrt(np.dot(ew, u[2] ** 2))
    bnorm = math.sqrt(np.dot(ew, np.sum(bsym ** 2, axis=(1, 2))))
    return lhs, bnorm


def calibrate_carleman_constant(shell, fields, lam: float, factor: float = 2.0,
                                grid: Optional[QuadratureGrid] = None) -> float:
    """``factor`` times the largest observed ``lam * lhs / ||e B^sym||`` over ``fields``."""
    worst = 0.0
    for f in fields:
        lhs, bnorm = carleman_sides(shell, f, CarlemanWeight(lam), grid)
        if bnorm > 0:
            worst = max(worst, lam * lhs / bnorm)
    return factor * worst


def carleman_coercivity_margin(shell, field, weight: CarlemanWeight, constant: float,
                               grid: Optional[QuadratureGrid] = None):
    """Return ``(lhs, rhs, holds)`` with ``rhs = constant / lam * ||e^{lam z/2} B^sym||``."""
    if shell.patch.curvature_class != CurvatureClass.HYPERBOLIC:
        raise ValueError("exponential-weight coercivity needs a hyperbolic patch")
    lhs, bnorm = carleman_sides(shell, field, weight, grid)
    rhs = constant / weight.lam * bnorm
    return lhs, rhs, bool(lhs <= rhs)


def smallest_definite_lambda(patch, lambdas=None, n: int = 60) -> Optional[float]:
    """Smallest sampled lambda making F pointwise definite on a grid over E, or None."""
    from .geometry import sample_grid

    if lambdas is None:
        lambdas = np.geomspace(1e-2, 1e4, 121)
    theta, z = sample_grid(patch.domain, n, n)
    v = patch.data(theta, z)
    for lam in lambdas:
        a, c, b = form_coefficients(v, z, float(lam), weighted=False)
        same_sign = np.all(a > 0) and np.all(c > 0) or np.all(a < 0) and np.all(c < 0)
        if same_sign and np.all(4 * a * c > b * b):
            return float(lam)
    return None


# ---------------------------------------------------------------------------
# harmonic strip
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicStripSample:
    """w(x, y) = sin(alpha y) (a e^{alpha x} + b e^{-alpha x}), alpha = k pi / p."""

    k: int
    a: float
    b: float

    def alpha(self, p: float) -> float:
        return self.k * math.pi / p

    def __call__(self, x, y, p: float):
        al = self.alpha(p)
        return np.sin(al * y) * (self.a * np.exp(al * x) + self.b * np.exp(-al * x))


def harmonic_strip_norms(h: float, p: float, sample: HarmonicStripSample):
    """Closed-form ``(||w||^2, ||w_x||^2, ||w_y||^2)`` on (0, h) x (0, p)."""
    al = sample.alpha(p)
    a, b = sample.a, sample.b
    if 2 * al * h > 700:
        raise ValueError("sample magnitude exceeds floating-point range (k pi h / p too large)")
    ea = math.expm1(2 * al * h) / (2 * al)
    eb = -math.expm1(-2 * al * h) / (2 * al)
    w2 = 0.5 * p * (a * a * ea + 2 * a * b * h + b * b * eb)
    wx2 = al * al * 0.5 * p * (a * a * ea - 2 * a * b * h + b * b * eb)
    return w2, wx2, al * al * w2


def _numeric_strip_norms(h, p, w: Callable, order: int = 40):
    x, wx = gauss_legendre(order, 0.0, h)
    y, wy = gauss_legendre(order, 0.0, p, panels=4)
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wy)
    step = 1e-5 * min(h, p)
    f = w(X, Y)
    fx = (w(X + step, Y) - w(X - step, Y)) / (2 * step)
    fy = (w(X, Y + step) - w(X, Y - step)) / (2 * step)
    d = 1e-3 * min(h, p)
    fxx = (w(X + d, Y) - 2 * f + w(X - d, Y)) / d ** 2
    fyy = (w(X, Y + d) - 2 * f + w(X, Y - d)) / d ** 2
    scale = max(float(np.max(np.abs(fxx))), float(np.max(np.abs(fyy))), 1e-300)
    if np.max(np.abs(fxx + fyy)) > HARMONIC_RTOL * scale and np.max(np.abs(f)) > 0:
        raise NonHarmonicError("sample is not harmonic")
    return float(np.sum(W * f * f)), float(np.sum(W * fx * fx)), float(np.sum(W * fy * fy))


def harmonic_strip_check(h: float, p: float, sample) -> tuple:
    """``(lhs, rhs)`` with lhs = ||w_y||^2, rhs = (2 sqrt(3)/h) ||w_x|| ||w|| + ||w_x||^2.

    ``sample`` is a :class:`HarmonicStripSample` (closed-form norms) or a
    callable ``w(x, y)`` that is checked for harmonicity and integrated numerically.
    """
    if not (h > 0 and p > 0):
        raise ValueError("h and p must be positive")
    if isinstance(sample, HarmonicStripSample):
        w2, wx2, wy2 = harmonic_strip_norms(h, p, sample)
    else:
        w2, wx2, wy2 = _numeric_strip_norms(h, p, sample)
    w2, wx2 = max(w2, 0.0), max(wx2, 0.0)
    rhs = 2 * math.sqrt(3) / h * math.sqrt(wx2) * math.sqrt(w2) + wx2
    return wy2, rhs


def harmonic_grid_check(hs=(0.01, 0.1, 1.0), ps=(0.5, 1.0, 2.0), ks=(1, 2, 3, 4, 5),
                        seed: int = 0, slack: float = 1e-9) -> list:
    """Check the strip inequality on a (h, p, k) grid with random (a, b)."""
    rng = np.random.default_rng(seed)
    records = []
    for h in hs:
        for p in ps:
            for k in ks:
                a, b = rng.normal(size=2)
                lhs, rhs = harmonic_strip_check(h, p, HarmonicStripSample(k, float(a), float(b)))
                margin = (rhs - lhs) / max(rhs, 1e-300)
                records.append(CheckRecord(
                    "harmonic_strip", {"h": h, "p": p, "k": k, "a": float(a), "b": float(b)},
                    lhs, rhs, margin, bool(lhs <= rhs + slack)))
    return records


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------

def run_identity_suite(shell, n_fields: int = 10, seed: int = 0, lambdas=None, tol: float = 1e-8,
                       grid: Optional[QuadratureGrid] = None) -> list:
    """Geometry consistency, weighted identity and strip checks as records."""
    patch = shell.patch
    records = []
    gc = gauss_codazzi_residual(patch)
    records.append(CheckRecord("gauss_codazzi", {"patch": patch.name}, gc, 0.0, gc, gc < 1e-8))
    if lambdas is None:
        lambdas = (1.0, 5.0, 1.0 / shell.epsilon)
    for i, f in enumerate(bump_corpus(patch, n_fields, seed)):
        for lam in lambdas:
            wgt = CarlemanWeight(float(lam))
            F, pairing = identity_sides(shell, f, wgt, grid)
            res = key_identity_residual(shell, f, wgt, grid)
            records.append(CheckRecord("key_identity", {"patch": patch.name, "field": i, "lambda": float(lam)},
                                       F, pairing, res, res < tol))
    records.extend(harmonic_grid_check(seed=seed))
    lam_min = smallest_definite_lambda(patch)
    records.append(CheckRecord("definite_lambda", {"patch": patch.name}, 0.0 if lam_min is None else lam_min,
                               0.0, 0.0, True, {"smallest_lambda": lam_min}))
    return records
