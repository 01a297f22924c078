"""Gradient and strain of displacement fields written in the shell frame.

A displacement is described by its components ``(u_t, u_theta, u_z)`` in the
moving frame ``(n, e_theta, e_z)`` as functions of ``(t, theta, z)``. Fields
expose ``evaluate(t, theta, z) -> (u, du)`` with ``u[c, k]`` the component
``c`` at point ``k`` and ``du[c, d, k]`` its partial along ``d`` in (t, theta, z).

Frame matrices are returned with shape (..., 3, 3): row = displacement
component, column = direction of differentiation, both in (n, e_theta, e_z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import PrincipalValues, frame_derivatives
from .quadrature import DEFAULT_CHUNK, QuadratureGrid

__all__ = [
    "BoundaryError",
    "DegenerateShiftError",
    "FrameMatrix",
    "DisplacementField",
    "TLinearField",
    "CallableField",
    "ZeroField",
    "cartesian_field",
    "rigid_motions",
    "frame_gradient",
    "gradient_at",
    "simplified_B_at",
    "strain_at",
    "ShellIntegrals",
    "shell_integrals",
    "shell_norms",
    "interpolation_gap",
    "check_dirichlet",
    "grid_for_field",
]


class BoundaryError(ValueError):
    """Field does not vanish on the thin edge."""


class DegenerateShiftError(ValueError):
    """A shift factor 1 + t*kappa vanished: h is too large for the curvature."""


class FrameMatrix:
    """Batch of 3x3 matrices in the shell frame."""

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    @property
    def sym(self) -> "FrameMatrix":
        v = self.values
        return FrameMatrix(0.5 * (v + np.swapaxes(v, -1, -2)))

    @property
    def skew(self) -> "FrameMatrix":
        v = self.values
        return FrameMatrix(0.5 * (v - np.swapaxes(v, -1, -2)))

    @property
    def T(self) -> "FrameMatrix":
        return FrameMatrix(np.swapaxes(self.values, -1, -2))

    def frobenius(self):
        return np.sqrt(np.sum(self.values ** 2, axis=(-1, -2)))

    def __getitem__(self, idx):
        return self.values[idx]

    def __sub__(self, other):
        return FrameMatrix(self.values - np.asarray(getattr(other, "values", other)))

    def __repr__(self):
        return f"FrameMatrix(shape={self.values.shape})"


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

class DisplacementField:
    """Base class for displacement fields.

    ``theta_scale`` and ``z_scale`` declare the number of oscillations per
    unit theta and across the z-width; quadrature grids are sized from them.
    ``theta_window``/``z_window`` bound the support (z as a fraction of the width).
    """

    dirichlet: bool = False
    theta_scale: float = 1.0
    z_scale: float = 1.0
    theta_window: tuple = (0.0, 1.0)
    z_window: tuple = (0.0, 1.0)

    def evaluate(self, t, theta, z):
        raise NotImplementedError

    def surface_terms(self, theta, z):
        """For fields linear in t: ``(u0, d0, u1, d1)`` with u = u0 + t*u1.

        ``d0[c, 0]`` / ``d0[c, 1]`` are theta / z partials. ``None`` otherwise.
        """
        return None

    def __add__(self, other):
        return _Combination([(1.0, self), (1.0, other)])

    def __mul__(self, scalar):
        return _Combination([(float(scalar), self)])

    __rmul__ = __mul__

    def __sub__(self, other):
        return _Combination([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return _Combination([(-1.0, self)])


def _t_linear_eval(terms, t):
    u0, d0, u1, d1 = terms
    t = np.asarray(t, dtype=float)
    u = u0 + t * u1
    du = np.empty((3, 3) + u.shape[1:])
    du[:, 0] = u1
    du[:, 1] = d0[:, 0] + t * d1[:, 0]
    du[:, 2] = d0[:, 1] + t * d1[:, 1]
    return u, du


class TLinearField(DisplacementField):
    """u = u0(theta, z) + t * u1(theta, z) from a callable returning ``(u0, d0, u1, d1)``."""

    def __init__(self, terms: Callable, dirichlet: bool = False, theta_scale: float = 1.0,
                 z_scale: float = 1.0, theta_window=(0.0, 1.0), z_window=(0.0, 1.0), name: str = ""):
        self._terms = terms
        self.dirichlet = dirichlet
        self.theta_scale = float(theta_scale)
        self.z_scale = float(z_scale)
        self.theta_window = tuple(theta_window)
        self.z_window = tuple(z_window)
        self.name = name

    def surface_terms(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = np.asarray(z, dtype=float)
        u0, d0, u1, d1 = self._terms(theta, z)
        shape = np.broadcast_shapes(theta.shape, z.shape)
        return (np.broadcast_to(u0, (3,) + shape), np.broadcast_to(d0, (3, 2) + shape),
                np.broadcast_to(u1, (3,) + shape), np.broadcast_to(d1, (3, 2) + shape))

    def evaluate(self, t, theta, z):
        return _t_linear_eval(self.surface_terms(theta, z), t)


class CallableField(DisplacementField):
    """Field given directly by ``fn(t, theta, z) -> (u, du)``."""

    def __init__(self, fn: Callable, dirichlet: bool = False, theta_scale: float = 1.0,
                 z_scale: float = 1.0, name: str = ""):
        self._fn = fn
        self.dirichlet = dirichlet
        self.theta_scale = float(theta_scale)
        self.z_scale = float(z_scale)
        self.name = name

    def evaluate(self, t, theta, z):
        t, theta, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, theta, z)))
        u, du = self._fn(t, theta, z)
        return np.asarray(u, dtype=float), np.asarray(du, dtype=float)


class ZeroField(TLinearField):
    def __init__(self):
        def terms(theta, z):
            shape = np.broadcast_shapes(np.shape(theta), np.shape(z))
            zu = np.zeros((3,) + shape)
            zd = np.zeros((3, 2) + shape)
            return zu, zd, zu, zd

        super().__init__(terms, dirichlet=True, name="zero")


class _Combination(DisplacementField):
    def __init__(self, parts):
        flat = []
        for coef, f in parts:
            if isinstance(f, _Combination):
                flat.extend((coef * c, g) for c, g in f.parts)
            else:
                flat.append((coef, f))
        self.parts = flat
        fields = [f for _, f in flat]
        self.dirichlet = all(f.dirichlet for f in fields)
        self.theta_scale = max(f.theta_scale for f in fields)
        self.z_scale = max(f.z_scale for f in fields)
        self.theta_window = (min(f.theta_window[0] for f in fields), max(f.theta_window[1] for f in fields))
        self.z_window = (min(f.z_window[0] for f in fields), max(f.z_window[1] for f in fields))

    def surface_terms(self, theta, z):
        acc = None
        for coef, f in self.parts:
            terms = f.surface_terms(theta, z)
            if terms is None:
                return None
            if acc is None:
                acc = [coef * np.asarray(x) for x in terms]
            else:
                acc = [a + coef * np.asarray(x) for a, x in zip(acc, terms)]
        return tuple(acc)

    def evaluate(self, t, theta, z):
        u = du = None
        for coef, f in self.parts:
            fu, fdu = f.evaluate(t, theta, z)
            if u is None:
                u, du = coef * fu, coef * fdu
            else:
                u, du = u + coef * fu, du + coef * fdu
        return u, du


def _require_embedding(patch):
    if patch.embedding is None:
        raise ValueError("operation requires an embedded patch")


def cartesian_field(patch, U: Callable, DU: Callable, name: str = "cartesian") -> CallableField:
    """Frame components of a Cartesian displacement ``U(x)`` with Jacobian ``DU(x)``.

    ``U`` maps points (N, 3) to (N, 3); ``DU`` maps to (N, 3, 3) with
    ``DU[k, i, j] = dU_i/dx_j``.
    """
    _require_embedding(patch)

    def fn(t, theta, z):
        shape = t.shape
        t, theta, z = t.ravel(), theta.ravel(), z.ravel()
        r, Q = patch.embedding(theta, z)
        v = patch.data(theta, z)
        dQ_th, dQ_z = frame_derivatives(v, Q)
        n, et, ez = Q[..., 0], Q[..., 1], Q[..., 2]
        x = r + t[:, None] * n
        Ux = np.asarray(U(x), dtype=float)
        J = np.asarray(DU(x), dtype=float)
        QT = np.swapaxes(Q, -1, -2)
        u = np.einsum("kij,kj->ki", QT, Ux)
        x_t = n
        x_th = (v.a_th * (1 + t * v.k_th))[:, None] * et
        x_z = (v.a_z * (1 + t * v.k_z))[:, None] * ez
        du = np.empty((t.size, 3, 3))
        du[:, :, 0] = np.einsum("kij,kjl,kl->ki", QT, J, x_t)
        du[:, :, 1] = np.einsum("kji,kj->ki", dQ_th, Ux) + np.einsum("kij,kjl,kl->ki", QT, J, x_th)
        du[:, :, 2] = np.einsum("kji,kj->ki", dQ_z, Ux) + np.einsum("kij,kjl,kl->ki", QT, J, x_z)
        return u.T.reshape((3,) + shape), np.moveaxis(du, 0, -1).reshape((3, 3) + shape)

    return CallableField(fn, name=name)


def _skew(omega):
    wx, wy, wz = omega
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def rigid_motions(patch) -> list:
    """The six rigid-motion generators (three translations, three rotations) in frame components."""
    fields = []
    for k in range(3):
        c = np.eye(3)[k]
        fields.append(cartesian_field(
            patch, lambda x, c=c: np.broadcast_to(c, x.shape),
            lambda x: np.zeros(x.shape + (3,)), name=f"translation_{'xyz'[k]}"))
    for k in range(3):
        S = _skew(np.eye(3)[k])
        fields.append(cartesian_field(
            patch, lambda x, S=S: x @ S.T,
            lambda x, S=S: np.broadcast_to(S, x.shape + (3,)), name=f"rotation_{'xyz'[k]}"))
    return fields


# ---------------------------------------------------------------------------
# pointwise operators
# ---------------------------------------------------------------------------

def frame_gradient(v: PrincipalValues, t, u, du, shifted: bool = True) -> np.ndarray:
    """Shell gradient (shifted) or the simplified matrix B (unshifted), shape (N, 3, 3).

    ``B`` drops the shift factors ``1/(1 + t kappa)`` from the theta and z columns.
    """
    ut, uth, uz = u
    d = du
    inv_th = 1.0 / v.a_th
    inv_z = 1.0 / v.a_z
    c_thz = v.a_th_dz * inv_th * inv_z
    c_zth = v.a_z_dth * inv_th * inv_z
    out = np.empty(np.shape(ut) + (3, 3))
    out[..., 0, 0] = d[0, 0]
    out[..., 0, 1] = d[0, 1] * inv_th - v.k_th * uth
    out[..., 0, 2] = d[0, 2] * inv_z - v.k_z * uz
    out[..., 1, 0] = d[1, 0]
    out[..., 1, 1] = d[1, 1] * inv_th + v.k_th * ut + c_thz * uz
    out[..., 1, 2] = d[1, 2] * inv_z - c_zth * uz
    out[..., 2, 0] = d[2, 0]
    out[..., 2, 1] = d[2, 1] * inv_th - c_thz * uth
    out[..., 2, 2] = d[2, 2] * inv_z + v.k_z * ut + c_zth * uth
    if shifted:
        s_th = 1.0 + t * v.k_th
        s_z = 1.0 + t * v.k_z
        if np.any(np.abs(s_th) < 1e-12) or np.any(np.abs(s_z) < 1e-12):
            raise DegenerateShiftError("shift factor 1 + t*kappa vanishes; h too large for curvature bound")
        out[..., :, 1] /= s_th[..., None]
        out[..., :, 2] /= s_z[..., None]
    return out


def _point_eval(shell, field, point):
    t, theta, z = (np.atleast_1d(np.asarray(p, dtype=float)) for p in point)
    t, theta, z = np.broadcast_arrays(t, theta, z)
    v = shell.patch.data(theta, z)
    u, du = field.evaluate(t, theta, z)
    return v, t, u, du


def gradient_at(shell, field, point) -> FrameMatrix:
    """Shell gradient at ``point = (t, theta, z)`` (scalars or arrays)."""
    v, t, u, du = _point_eval(shell, field, point)
    return FrameMatrix(frame_gradient(v, t, u, du, shifted=True))


def simplified_B_at(shell, field, point) -> FrameMatrix:
    v, t, u, du = _point_eval(shell, field, point)
    return FrameMatrix(frame_gradient(v, t, u, du, shifted=False))


def strain_at(shell, field, point) -> FrameMatrix:
    return gradient_at(shell, field, point).sym


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------

@dataclass
class ShellIntegrals:
    """Squared weighted L2 norms over the thin domain (weight A_theta * A_z)."""

    grad: float
    strain: float
    u: float
    ut: float
    B: float
    Bsym: float
    grad_minus_B: float
    strain_minus_Bsym: float
    grad_entries: np.ndarray
    strain_entries: np.ndarray

    def as_dict(self) -> dict:
        return {
            "grad": self.grad, "strain": self.strain, "u": self.u, "ut": self.ut,
            "B": self.B, "Bsym": self.Bsym, "grad_minus_B": self.grad_minus_B,
            "strain_minus_Bsym": self.strain_minus_Bsym,
        }


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def shell_integrals(shell, field, grid: QuadratureGrid, chunk: int = DEFAULT_CHUNK) -> ShellIntegrals:
    nodes = grid.surface_nodes(shell.patch.domain)
    acc = np.zeros(8)
    grad_e = np.zeros((3, 3))
    strain_e = np.zeros((3, 3))
    for start in range(0, len(nodes), chunk):
        sl = slice(start, start + chunk)
        theta, z, w2 = nodes.theta[sl], nodes.z[sl], nodes.weight[sl]
        v = shell.patch.data(theta, z)
        g1, g2 = shell.barriers(theta, z)
        t_all, wt_all = grid.t_nodes(g1, g2)
        base = w2 * v.a_th * v.a_z
        terms = field.surface_terms(theta, z)
        for k in range(t_all.shape[1]):
            t = t_all[:, k]
            if terms is not None:
                u, du = _t_linear_eval(terms, t)
            else:
                u, du = field.evaluate(t, theta, z)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
                raise ValueError("non-finite field value at a quadrature node")
            w = base * wt_all[:, k]
            G = frame_gradient(v, t, u, du, shifted=True)
            B = frame_gradient(v, t, u, du, shifted=False)
            E = _sym(G)
            Bs = _sym(B)
            G2 = np.einsum("k,kij->ij", w, G * G)
            E2 = np.einsum("k,kij->ij", w, E * E)
            grad_e += G2
            strain_e += E2
            acc += np.array([
                G2.sum(), E2.sum(), w @ np.sum(u * u, axis=0), w @ (u[0] * u[0]),
                w @ np.sum(B * B, axis=(1, 2)), w @ np.sum(Bs * Bs, axis=(1, 2)),
                w @ np.sum((G - B) ** 2, axis=(1, 2)), w @ np.sum((E - Bs) ** 2, axis=(1, 2)),
            ])
    return ShellIntegrals(*acc.tolist(), grad_entries=grad_e, strain_entries=strain_e)


def shell_norms(shell, field, grid: QuadratureGrid):
    """(||grad u||, ||e(u)||, ||u||, ||u_t||) in the weighted L2 norm."""
    s = shell_integrals(shell, field, grid)
    return tuple(math.sqrt(max(x, 0.0)) for x in (s.grad, s.strain, s.u, s.ut))


def check_dirichlet(shell, field, tol: float = 1e-12, n: int = 21) -> float:
    """Max |u| on the thin edge; raises :class:`BoundaryError` above ``tol``."""
    domain = shell.patch.domain
    s = np.linspace(0.0, 1.0, n)
    theta_edge = np.concatenate([np.zeros(n), np.ones(n)])
    lo0, hi0 = domain.limits(np.array([0.0]))
    lo1, hi1 = domain.limits(np.array([1.0]))
    z_edge = np.concatenate([lo0 + (hi0 - lo0) * s, lo1 + (hi1 - lo1) * s])
    lo, hi = domain.limits(s)
    theta_pts = np.concatenate([theta_edge, s, s])
    z_pts = np.concatenate([z_edge, lo, hi])
    g1, g2 = shell.barriers(theta_pts, z_pts)
    worst = 0.0
    for frac in (0.0, 0.5, 1.0):
        t = -g1 + frac * (g1 + g2)
        u, _ = field.evaluate(t, theta_pts, z_pts)
        worst = max(worst, float(np.max(np.abs(u))))
    if worst > tol:
        raise BoundaryError(f"field does not vanish on the thin edge (max |u| = {worst:.3e})")
    return worst


def interpolation_gap(shell, field, grid: QuadratureGrid):
    """Compare ||B||^2 with ||u_t|| ||B^sym|| / h + ||u||^2 + ||B^sym||^2.

    Returns ``(lhs, rhs_terms, ratio)``; the zero field gives ratio 0.
    """
    if not field.dirichlet:
        raise BoundaryError("interpolation inequality requires a thin-edge Dirichlet field")
    s = shell_integrals(shell, field, grid)
    rhs_terms = (math.sqrt(s.ut) * math.sqrt(s.Bsym) / shell.h, s.u, s.Bsym)
    total = sum(rhs_terms)
    if total == 0.0:
        if s.B == 0.0:
            return 0.0, rhs_terms, 0.0
        raise ValueError("zero right-hand side for a nonzero field")
    return s.B, rhs_terms, s.B / total


def grid_for_field(field, t_order: int = 4, order: int = 6, min_panels: int = 4,
                   extra: float = 1.0) -> QuadratureGrid:
    """Quadrature grid sized from the field's declared oscillation scales and support."""
    return QuadratureGrid.for_scales(
        theta_scale=extra * field.theta_scale, z_scale=extra * field.z_scale, t_order=t_order,
        order=order, theta_window=field.theta_window, z_window=field.z_window, min_panels=min_panels)
