"""Mid-surfaces in principal-curvature coordinates.

A patch is described by the metric factors ``A_theta, A_z`` and principal
curvatures ``kappa_theta, kappa_z`` as functions of ``(theta, z)`` on

    E = {(theta, z) : 0 <= theta <= 1, z_lower(theta) <= z <= z_upper(theta)}

together with their partial derivatives, which constructors supply in closed
form. Normal orientation: ``dn/dtheta = kappa_theta * A_theta * e_theta`` and
``dn/dz = kappa_z * A_z * e_z``, so an outward normal gives positive
curvature on a cylinder or sphere.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

__all__ = [
    "CurvatureClass",
    "PatchDomain",
    "PrincipalValues",
    "PrincipalData",
    "SurfacePatch",
    "O1Parameters",
    "ShellDomain",
    "UnivariateFn",
    "DevelopableForm",
    "GeometryError",
    "make_cylinder",
    "make_torus_band",
    "make_developable",
    "make_constant_patch",
    "gauss_codazzi_residual",
    "o1_parameters",
    "classify_curvature",
    "sample_grid",
    "frame_derivatives",
]


class GeometryError(ValueError):
    """Inconsistent or invalid surface data."""


class CurvatureClass(str, enum.Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    MIXED = "mixed"


def _as_limit(value) -> Callable:
    if callable(value):
        return value
    v = float(value)
    return lambda theta: np.full(np.shape(theta), v)


@dataclass(frozen=True)
class PatchDomain:
    """Parameter set E with theta in [0, 1] and z between two barrier curves."""

    epsilon: float
    z_lower: Callable = 0.0
    z_upper: Optional[Callable] = None
    c3: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise GeometryError("epsilon must be positive")
        if self.c3 < 1:
            raise GeometryError("c3 must be >= 1")
        lower = self.z_lower
        upper = self.z_upper
        object.__setattr__(self, "_constant", not callable(lower) and (upper is None or not callable(upper)))
        if upper is None:
            z0 = float(lower) if not callable(lower) else None
            if z0 is None:
                raise GeometryError("z_upper is required when z_lower is a function")
            upper = z0 + self.epsilon
        object.__setattr__(self, "_lower", _as_limit(lower))
        object.__setattr__(self, "_upper", _as_limit(upper))
        theta = np.linspace(0.0, 1.0, 201)
        lo, hi = self._lower(theta), self._upper(theta)
        width = hi - lo
        tol = 1e-12 * max(1.0, self.epsilon)
        if np.any(lo < -tol):
            raise GeometryError("z_lower must be non-negative")
        if np.any(width < self.epsilon - tol) or np.any(width > self.c3 * self.epsilon + tol):
            raise GeometryError("patch width must satisfy eps <= z2 - z1 <= c3 * eps")

    @property
    def constant_limits(self) -> bool:
        return self._constant

    def limits(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._lower(theta), self._upper(theta)

    def z_range(self):
        """(z1, z2) for constant limits."""
        if not self.constant_limits:
            raise GeometryError("operation requires constant z-limits")
        lo, hi = self.limits(np.zeros(1))
        return float(lo[0]), float(hi[0])


class PrincipalValues(NamedTuple):
    """Metric factors, curvatures and partials at a batch of points.

    Suffix ``_dth`` is d/dtheta, ``_dz`` is d/dz. The two second derivatives
    ``a_th_dzz`` and ``a_z_dthth`` enter the Gauss equation.
    """

    a_th: np.ndarray
    a_z: np.ndarray
    k_th: np.ndarray
    k_z: np.ndarray
    a_th_dth: np.ndarray
    a_th_dz: np.ndarray
    a_z_dth: np.ndarray
    a_z_dz: np.ndarray
    k_th_dth: np.ndarray
    k_th_dz: np.ndarray
    k_z_dth: np.ndarray
    k_z_dz: np.ndarray
    a_th_dzz: np.ndarray
    a_z_dthth: np.ndarray


class PrincipalData:
    """Callable ``(theta, z) -> PrincipalValues``."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], PrincipalValues]):
        self._fn = fn

    def __call__(self, theta, z) -> PrincipalValues:
        theta, z = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(z, dtype=float))
        vals = self._fn(theta, z)
        return PrincipalValues(*(np.broadcast_to(np.asarray(v, dtype=float), theta.shape) for v in vals))

    def curvature_at(self, theta, z):
        v = self(theta, z)
        return v.k_th, v.k_z

    def metric_at(self, theta, z):
        v = self(theta, z)
        return v.a_th, v.a_z


class UnivariateFn:
    """Scalar function of one variable with analytic derivatives to any order."""

    def __init__(self, derivs: Callable[[np.ndarray, int], list], label: str = ""):
        self._derivs = derivs
        self.label = label

    def derivatives(self, x, order: int) -> list:
        return self._derivs(np.asarray(x, dtype=float), order)

    def __call__(self, x):
        return self.derivatives(x, 0)[0]

    @classmethod
    def coerce(cls, obj) -> "UnivariateFn":
        if isinstance(obj, UnivariateFn):
            return obj
        if isinstance(obj, (int, float)):
            return cls.polynomial([float(obj)])
        if isinstance(obj, Polynomial):
            return cls.polynomial(obj.coef)
        if isinstance(obj, (list, tuple)) and all(isinstance(c, (int, float)) for c in obj):
            return cls.polynomial(obj)
        if isinstance(obj, (list, tuple)) and all(callable(f) for f in obj):
            fns = list(obj)

            def derivs(x, order):
                if order >= len(fns):
                    raise GeometryError(f"only {len(fns) - 1} derivatives supplied")
                return [np.broadcast_to(np.asarray(f(x), dtype=float), x.shape) for f in fns[: order + 1]]

            return cls(derivs)
        raise TypeError(f"cannot interpret {obj!r} as a univariate function")

    @classmethod
    def polynomial(cls, coef) -> "UnivariateFn":
        p = Polynomial(np.asarray(coef, dtype=float))
        polys = [p]

        def derivs(x, order):
            while len(polys) <= order:
                polys.append(polys[-1].deriv())
            return [np.broadcast_to(polys[k](x), x.shape).astype(float) for k in range(order + 1)]

        return cls(derivs, label=f"poly{tuple(p.coef)}")


@dataclass(frozen=True)
class DevelopableForm:
    """Functions of the explicit developable solution.

    A_z = B'(z), A_theta = a(theta) B(z) + b(theta), kappa_theta = c(theta) / A_theta.
    """

    a: UnivariateFn
    b: UnivariateFn
    c: UnivariateFn
    B: UnivariateFn


Embedding = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class SurfacePatch:
    """Principal-coordinate patch with optional embedding.

    ``embedding(theta, z)`` returns ``(r, Q)`` with ``r[..., 3]`` the point and
    ``Q[..., 3, 3]`` whose columns are ``(n, e_theta, e_z)`` in Cartesian axes.
    """

    domain: PatchDomain
    data: PrincipalData
    curvature_class: CurvatureClass
    embedding: Optional[Embedding] = None
    name: str = "patch"
    params: dict = field(default_factory=dict)
    developable: Optional[DevelopableForm] = None

    @property
    def epsilon(self) -> float:
        return self.domain.epsilon

    def curvature_at(self, theta, z):
        return self.data.curvature_at(theta, z)

    def metric_at(self, theta, z):
        return self.data.metric_at(theta, z)

    def gaussian_curvature(self, theta, z):
        k1, k2 = self.curvature_at(theta, z)
        return k1 * k2


def sample_grid(domain: PatchDomain, n_theta: int = 200, n_z: int = 200, interior: bool = False):
    """Uniform (theta, z) grid over E, shape (n_theta, n_z)."""
    if n_theta < 1 or n_z < 1:
        raise GeometryError("empty sample grid")
    if interior:
        s = (np.arange(n_theta) + 0.5) / n_theta
        r = (np.arange(n_z) + 0.5) / n_z
    else:
        s = np.linspace(0.0, 1.0, n_theta)
        r = np.linspace(0.0, 1.0, n_z)
    theta = np.repeat(s[:, None], n_z, axis=1)
    lo, hi = domain.limits(s)
    z = lo[:, None] + (hi - lo)[:, None] * r[None, :]
    return theta, z


def classify_curvature(data: PrincipalData, domain: PatchDomain, n: int = 60, tol: float = 1e-12) -> CurvatureClass:
    theta, z = sample_grid(domain, n, n)
    v = data(theta, z)
    kg = v.k_th * v.k_z
    scale = max(1.0, float(np.max(np.abs(v.k_th))), float(np.max(np.abs(v.k_z)))) ** 2
    if np.all(kg > tol * scale):
        return CurvatureClass.ELLIPTIC
    if np.all(kg < -tol * scale):
        return CurvatureClass.HYPERBOLIC
    if np.all(np.abs(kg) <= tol * scale):
        if np.all(np.abs(v.k_z) <= tol) and np.all(np.abs(v.k_th) > tol):
            return CurvatureClass.PARABOLIC
        if np.all(np.abs(v.k_th) <= tol) and np.all(np.abs(v.k_z) > tol):
            return CurvatureClass.PARABOLIC
    return CurvatureClass.MIXED


def frame_derivatives(v: PrincipalValues, Q: np.ndarray):
    """d/dtheta and d/dz of the frame ``Q = [n | e_theta | e_z]`` (shape (..., 3, 3))."""
    n, et, ez = Q[..., 0], Q[..., 1], Q[..., 2]
    c_th = (v.a_th_dz / v.a_z)[..., None]
    c_z = (v.a_z_dth / v.a_th)[..., None]
    kt = (v.k_th * v.a_th)[..., None]
    kz = (v.k_z * v.a_z)[..., None]
    dQ_th = np.stack([kt * et, -kt * n - c_th * ez, c_th * et], axis=-1)
    dQ_z = np.stack([kz * ez, c_z * ez, -kz * n - c_z * et], axis=-1)
    return dQ_th, dQ_z


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _zeros_like(x):
    return np.zeros_like(x)


def make_cylinder(radius: float = 1.0, eps: float = 0.1) -> SurfacePatch:
    """Circular cylinder in arclength coordinates: theta along the circle, z along the axis."""
    if not radius > 0:
        raise GeometryError("radius must be positive")
    if not 0 < eps <= 1:
        raise GeometryError("eps must lie in (0, 1]")
    rho = float(radius)

    def fn(theta, z):
        one = np.ones_like(theta)
        zero = _zeros_like(theta)
        return PrincipalValues(one, one, one / rho, zero, zero, zero, zero, zero,
                               zero, zero, zero, zero, zero, zero)

    def embedding(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        phi = theta / rho
        c, s = np.cos(phi), np.sin(phi)
        zero, one = np.zeros_like(phi), np.ones_like(phi)
        r = np.stack([rho * c, rho * s, z], axis=-1)
        n = np.stack([c, s, zero], axis=-1)
        et = np.stack([-s, c, zero], axis=-1)
        ez = np.stack([zero, zero, one], axis=-1)
        return r, np.stack([n, et, ez], axis=-1)

    domain = PatchDomain(epsilon=eps, z_lower=0.0)
    return SurfacePatch(domain, PrincipalData(fn), CurvatureClass.PARABOLIC, embedding,
                        name="cylinder", params={"radius": rho, "eps": eps})


def make_torus_band(major: float = 2.0, minor: float = 1.0, band: str = "outer", eps: float = 0.2,
                    span: float = math.pi / 2) -> SurfacePatch:
    """Band of a torus around the outer (K_G > 0) or inner (K_G < 0) equator.

    theta runs along parallels over ``span`` radians of the toroidal angle; z is
    arclength along meridians, z in [0, eps], centred on the equator.
    """
    R, r = float(major), float(minor)
    if not (R > r > 0):
        raise GeometryError("need major > minor > 0")
    if not 0 < eps <= 1:
        raise GeometryError("eps must lie in (0, 1]")
    if not span > 0:
        raise GeometryError("span must be positive")
    band = str(band).lower()
    if band not in ("outer", "inner"):
        raise GeometryError("band must be 'outer' or 'inner'")
    phi_c = 0.0 if band == "outer" else math.pi
    half = 0.5 * eps / r
    # cos(phi) must keep its sign on the band
    if half >= math.pi / 2:
        raise GeometryError("band too wide: Gaussian curvature changes sign inside E")
    psi = float(span)

    def phi_of(z):
        return phi_c + (z - 0.5 * eps) / r

    def fn(theta, z):
        phi = phi_of(z)
        c, s = np.cos(phi), np.sin(phi)
        rho = R + r * c
        one = np.ones_like(phi)
        zero = _zeros_like(phi)
        a_th = psi * rho
        a_th_dz = -psi * s
        a_th_dzz = -psi * c / r
        k_th = c / rho
        k_th_dz = -R * s / (r * rho ** 2)
        return PrincipalValues(a_th, one, k_th, one / r, zero, a_th_dz, zero, zero,
                               zero, k_th_dz, zero, zero, a_th_dzz, zero)

    def embedding(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        phi = phi_of(z)
        ang = psi * theta
        cf, sf = np.cos(phi), np.sin(phi)
        ca, sa = np.cos(ang), np.sin(ang)
        rho = R + r * cf
        zero = np.zeros_like(phi)
        pos = np.stack([rho * ca, rho * sa, r * sf], axis=-1)
        n = np.stack([cf * ca, cf * sa, sf], axis=-1)
        et = np.stack([-sa, ca, zero], axis=-1)
        ez = np.stack([-sf * ca, -sf * sa, cf], axis=-1)
        return pos, np.stack([n, et, ez], axis=-1)

    domain = PatchDomain(epsilon=eps, z_lower=0.0)
    data = PrincipalData(fn)
    cls = CurvatureClass.ELLIPTIC if band == "outer" else CurvatureClass.HYPERBOLIC
    if classify_curvature(data, domain) != cls:
        raise GeometryError("band too wide: Gaussian curvature changes sign inside E")
    return SurfacePatch(domain, data, cls, embedding, name=f"torus_{band}",
                        params={"major": R, "minor": r, "band": band, "eps": eps, "span": psi})


def make_constant_patch(a_theta: float = 1.0, a_z: float = 1.0, k_theta: float = 0.0, k_z: float = 0.0,
                        eps: float = 0.1, curvature_class: Optional[CurvatureClass] = None) -> SurfacePatch:
    """Patch with constant metric factors and curvatures and no embedding.

    Only zero curvature is a consistent surface (the plane); other values
    are raw data for exercising pointwise formulas.
    """
    if not (a_theta > 0 and a_z > 0):
        raise GeometryError("metric factors must be positive")
    vals = (float(a_theta), float(a_z), float(k_theta), float(k_z))

    def fn(theta, z):
        zero = _zeros_like(theta)
        return PrincipalValues(*(zero + v for v in vals), *(zero for _ in range(10)))

    domain = PatchDomain(epsilon=eps, z_lower=0.0)
    data = PrincipalData(fn)
    cls = curvature_class or classify_curvature(data, domain)
    embedding = None
    if k_theta == 0.0 and k_z == 0.0:
        def embedding(theta, z):
            theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
            pos = np.stack([vals[0] * theta, vals[1] * z, np.zeros_like(theta)], axis=-1)
            Q = np.broadcast_to(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
                                theta.shape + (3, 3)).copy()
            return pos, Q
    return SurfacePatch(domain, data, cls, embedding, name="constant",
                        params={"a_theta": a_theta, "a_z": a_z, "k_theta": k_theta, "k_z": k_z, "eps": eps})


def _developable_embedding(form: DevelopableForm, domain: PatchDomain):
    """Canonical embedding of a developable patch.

    With kappa_z = 0 and A_{z,theta} = 0 the frame is constant along the
    rulings, so it solves an ODE in theta only; rulings are straight lines
    r(theta, z) = r(theta, z1) + (B(z) - B(z1)) e_z(theta).
    """
    z1, _ = domain.z_range()
    B1 = float(form.B(np.array(z1)))

    def rhs(theta, y):
        a = float(form.a(np.array(theta)))
        c = float(form.c(np.array(theta)))
        b = float(form.b(np.array(theta)))
        n, et, ez = y[0:3], y[3:6], y[6:9]
        a_th = a * B1 + b
        return np.concatenate([c * et, -c * n - a * ez, a * et, a_th * et])

    y0 = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=1e-12, atol=1e-13, dense_output=True)
    if not sol.success:
        raise GeometryError("frame integration failed: " + sol.message)

    def embedding(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        flat = sol.sol(np.clip(theta.ravel(), 0.0, 1.0))
        n = flat[0:3].T.reshape(theta.shape + (3,))
        et = flat[3:6].T.reshape(theta.shape + (3,))
        ez = flat[6:9].T.reshape(theta.shape + (3,))
        base = flat[9:12].T.reshape(theta.shape + (3,))
        pos = base + (form.B(z) - B1)[..., None] * ez
        return pos, np.stack([n, et, ez], axis=-1)

    return embedding


def make_developable(a_fn=0.0, b_fn=1.0, c_fn=1.0, B_fn=(0.0, 1.0), eps: float = 0.1,
                     z_lower: float = 0.0) -> SurfacePatch:
    """Developable patch from the explicit solution of the Gauss-Codazzi system.

    Each function may be a number, a coefficient list / ``numpy.polynomial.Polynomial``,
    a :class:`UnivariateFn`, or a tuple of callables ``(f, f', f'', ...)``.
    """
    if not 0 < eps <= 1:
        raise GeometryError("eps must lie in (0, 1]")
    form = DevelopableForm(*(UnivariateFn.coerce(f) for f in (a_fn, b_fn, c_fn, B_fn)))
    domain = PatchDomain(epsilon=eps, z_lower=z_lower)

    def fn(theta, z):
        a, da, dda = form.a.derivatives(theta, 2)
        b, db, ddb = form.b.derivatives(theta, 2)
        c, dc = form.c.derivatives(theta, 1)
        B, dB, ddB = form.B.derivatives(z, 2)
        zero = np.zeros(np.broadcast_shapes(np.shape(theta), np.shape(z)))
        a_th = a * B + b
        a_th_dth = da * B + db
        a_th_dz = a * dB
        a_th_dzz = a * ddB
        k_th = c / a_th
        k_th_dth = (dc * a_th - c * a_th_dth) / a_th ** 2
        k_th_dz = -c * a_th_dz / a_th ** 2
        return PrincipalValues(a_th, dB + zero, k_th, zero, a_th_dth, a_th_dz, zero, ddB + zero,
                               k_th_dth, k_th_dz, zero, zero, a_th_dzz, zero)

    data = PrincipalData(fn)
    theta, z = sample_grid(domain, 200, 200)
    v = data(theta, z)
    if np.any(v.a_th <= 0) or np.any(v.a_z <= 0):
        raise GeometryError("A_theta and A_z must be positive on E")
    if np.any(form.c(theta) <= 0):
        raise GeometryError("c(theta) must be positive on E")
    patch = SurfacePatch(domain, data, CurvatureClass.PARABOLIC, None, name="developable",
                         params={"eps": eps}, developable=form)
    return _with_embedding(patch)


def _with_embedding(patch: SurfacePatch) -> SurfacePatch:
    emb = _developable_embedding(patch.developable, patch.domain)
    return SurfacePatch(patch.domain, patch.data, patch.curvature_class, emb, patch.name,
                        patch.params, patch.developable)


# ---------------------------------------------------------------------------
# checks and parameters
# ---------------------------------------------------------------------------

def gauss_codazzi_residual(patch: SurfacePatch, grid=None) -> float:
    """Max absolute residual of the Codazzi (2) and Gauss (1) relations on a grid."""
    if grid is None:
        grid = sample_grid(patch.domain, 50, 50)
    elif isinstance(grid, int):
        grid = sample_grid(patch.domain, grid, grid)
    theta, z = grid
    v = patch.data(theta, z)
    r1 = v.k_z_dth - (v.k_th - v.k_z) * v.a_z_dth / v.a_z
    r2 = v.k_th_dz - (v.k_z - v.k_th) * v.a_th_dz / v.a_th
    d_z = v.a_th_dzz / v.a_z - v.a_th_dz * v.a_z_dz / v.a_z ** 2
    d_th = v.a_z_dthth / v.a_th - v.a_z_dth * v.a_th_dth / v.a_th ** 2
    r3 = d_z + d_th + v.a_z * v.a_th * v.k_z * v.k_th
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2)), np.max(np.abs(r3))))


@dataclass(frozen=True)
class O1Parameters:
    a: float
    A: float
    k: float
    K: float

    def __post_init__(self):
        if not self.a > 0:
            raise GeometryError("min metric factor must be positive")
        if not all(math.isfinite(x) for x in (self.a, self.A, self.k, self.K)):
            raise GeometryError("non-finite O(1) parameter")


def o1_parameters(patch: SurfacePatch, n: int = 200) -> O1Parameters:
    """Grid estimates of the thin-domain O(1) parameters a, A, k, K.

    Second derivatives of the metric factors not supplied analytically are
    taken by central differences of the analytic first derivatives.
    """
    if n < 2:
        raise GeometryError("empty sample grid")
    theta, z = sample_grid(patch.domain, n, n)
    v = patch.data(theta, z)
    a = float(min(v.a_th.min(), v.a_z.min()))

    step = 1e-6
    vp_t = patch.data(theta + step, z)
    vm_t = patch.data(theta - step, z)
    vp_z = patch.data(theta, z + step)
    vm_z = patch.data(theta, z - step)
    a_th_dthth = (vp_t.a_th_dth - vm_t.a_th_dth) / (2 * step)
    a_th_dthz = (vp_z.a_th_dth - vm_z.a_th_dth) / (2 * step)
    a_z_dzz = (vp_z.a_z_dz - vm_z.a_z_dz) / (2 * step)
    a_z_dthz = (vp_z.a_z_dth - vm_z.a_z_dth) / (2 * step)

    def sup(*arrs):
        return sum(float(np.max(np.abs(x))) for x in arrs)

    A = sup(v.a_th, v.a_th_dth, v.a_th_dz, a_th_dthth, a_th_dthz, v.a_th_dzz) + \
        sup(v.a_z, v.a_z_dth, v.a_z_dz, v.a_z_dthth, a_z_dthz, a_z_dzz)
    k = sup(v.k_th, v.k_th_dth, v.k_th_dz) + sup(v.k_z, v.k_z_dth, v.k_z_dz)
    if patch.curvature_class == CurvatureClass.PARABOLIC:
        nonzero = v.k_th if np.max(np.abs(v.k_th)) >= np.max(np.abs(v.k_z)) else v.k_z
        K = float(np.min(np.abs(nonzero)))
    else:
        K = float(np.min(np.minimum(np.abs(v.k_th), np.abs(v.k_z))))
    return O1Parameters(a=a, A=A, k=k, K=K)


def _as_barrier(g, h):
    if g is None:
        g = h
    if callable(g):
        return g
    val = float(g)
    return lambda theta, z: np.full(np.broadcast_shapes(np.shape(theta), np.shape(z)), val)


@dataclass(frozen=True)
class ShellDomain:
    """Thin domain {r + t n : (theta, z) in E, -g1 < t < g2}.

    With the default ``g1 = g2 = h`` this is the constant-thickness slab.
    """

    patch: SurfacePatch
    h: float
    g1: object = None
    g2: object = None
    c1: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        h = float(self.h)
        if not h > 0:
            raise GeometryError("thickness h must be positive")
        eps = self.patch.epsilon
        if eps < h * (1 - 1e-12):
            raise GeometryError("epsilon below thickness")
        if eps > 1:
            raise GeometryError("epsilon above 1")
        constant = not callable(self.g1) and not callable(self.g2)
        object.__setattr__(self, "_constant", constant)
        object.__setattr__(self, "_g1", _as_barrier(self.g1, h))
        object.__setattr__(self, "_g2", _as_barrier(self.g2, h))
        theta, z = sample_grid(self.patch.domain, 41, 41)
        c1 = max(self.c1, 1.0)
        for g in (self._g1, self._g2):
            vals = g(theta, z)
            if np.any(vals < h * (1 - 1e-12)) or np.any(vals > c1 * h * (1 + 1e-12)):
                raise GeometryError("barrier functions must satisfy h <= g <= c1 h")
        if not constant:
            step = 1e-6
            grad = 0.0
            for g in (self._g1, self._g2):
                gt = (g(theta + step, z) - g(theta - step, z)) / (2 * step)
                gz = (g(theta, z + step) - g(theta, z - step)) / (2 * step)
                grad = grad + np.hypot(gt, gz)
            if np.any(grad > self.c2 * h + 1e-9):
                raise GeometryError("barrier gradients exceed c2 h")

    @property
    def epsilon(self) -> float:
        return self.patch.epsilon

    @property
    def constant_thickness(self) -> bool:
        return self._constant

    def barriers(self, theta, z):
        return self._g1(theta, z), self._g2(theta, z)
