"""Explicit near-extremal displacement fields and their Rayleigh ratios.

All constructions are Kirchhoff-type: linear in t with the normal row of the
strain vanishing on the mid-surface. Derivative chains are carried by
:class:`~kornshell._jet.Jet`, so the fields come with exact first partials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._jet import Jet
from .geometry import CurvatureClass, GeometryError, PrincipalValues
from .kinematics import TLinearField, grid_for_field, shell_integrals
from .quadrature import QuadratureGrid, ResolutionError, refinement_gate

__all__ = [
    "BumpProfile",
    "TransportPhase",
    "LinearPhase",
    "TransportError",
    "FactorizationError",
    "RegimeWarning",
    "AnsatzReport",
    "geometry_jets",
    "kirchhoff_lift",
    "regime1_field",
    "solve_transport",
    "transport_bracket",
    "hyperbolic_field",
    "developable_field_case1",
    "developable_field_case2",
    "case1_factorization",
    "developable_pde_residual",
    "ansatz_report",
]


class TransportError(RuntimeError):
    """Characteristic left the region where the transport coefficient is defined."""


class FactorizationError(ValueError):
    """A_z / A_theta does not split as H(theta) / G(z)."""


class RegimeWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpProfile:
    """Smooth bump on [0, 1], zero outside, equal to 1 at x = 1/2.

    ``kind='exp'`` is exp(4 - 1/(x(1-x))); ``kind='poly'`` is (4 x (1-x))^m.
    The exponential bump is cut to zero where x(1-x) <= ``cutoff``, where its
    value is below 1e-200.
    """

    kind: str = "exp"
    m: int = 6
    cutoff: float = 0.002

    def __post_init__(self):
        if self.kind not in ("exp", "poly"):
            raise ValueError("kind must be 'exp' or 'poly'")
        if self.kind == "poly" and self.m < 4:
            raise ValueError("polynomial bumps need m >= 4 for the required derivatives")

    def jet(self, x: Jet) -> Jet:
        q = x * (1.0 - x)
        inside = q.value > (self.cutoff if self.kind == "exp" else 0.0)
        safe = Jet(np.where(inside, q.c, Jet.constant(0.25, q.order, q.shape).c), q.order)
        if self.kind == "exp":
            out = (4.0 - safe.reciprocal()).exp()
        else:
            out = (safe * 4.0) ** self.m
        return out.masked(inside)

    def __call__(self, x):
        return self.jet(Jet.constant(x, 0)).value

    def surface(self, theta: Jet, zeta: Jet) -> Jet:
        """W(theta, zeta) = psi(theta) psi(zeta)."""
        return self.jet(theta) * self.jet(zeta)


def _fraction_jet(patch, theta, z, order):
    """zeta = (z - z1)/(z2 - z1) as a jet (constant z-limits)."""
    z1, z2 = patch.domain.z_range()
    zj = Jet.variable(z, 1, order)
    return (zj - z1) * (1.0 / (z2 - z1))


# ---------------------------------------------------------------------------
# geometry jets and the Kirchhoff lift
# ---------------------------------------------------------------------------

def geometry_jets(v: PrincipalValues):
    """First-order jets of (A_theta, A_z, kappa_theta, kappa_z)."""
    def j(val, dth, dz):
        return Jet.from_partials({(0, 0): val, (1, 0): dth, (0, 1): dz}, 1)

    return (j(v.a_th, v.a_th_dth, v.a_th_dz), j(v.a_z, v.a_z_dth, v.a_z_dz),
            j(v.k_th, v.k_th_dth, v.k_th_dz), j(v.k_z, v.k_z_dth, v.k_z_dz))


def _zero_jet(shape, order):
    return Jet.constant(0.0, order, shape)


def _lift_terms(v: PrincipalValues, w: Jet, vv: Optional[Jet], s: Optional[Jet]):
    if w.order < 2:
        raise ValueError("w needs second partials")
    shape = w.shape
    vv = vv if vv is not None else _zero_jet(shape, 1)
    s = s if s is not None else _zero_jet(shape, 1)
    if vv.order < 1 or s.order < 1:
        raise ValueError("v and s need first partials")
    a_th, a_z, k_th, k_z = geometry_jets(v)
    u1_th = -(w.partial(0) / a_th - k_th * vv)
    u1_z = -(w.partial(1) / a_z - k_z * s)
    u0 = [w, vv, s]
    u1 = [_zero_jet(shape, 1), u1_th, u1_z]
    return _stack_terms(u0, u1)


def _stack_terms(u0, u1):
    def vals(jets):
        return np.stack([j.value for j in jets])

    def ders(jets):
        return np.stack([np.stack([j.d(1, 0), j.d(0, 1)]) for j in jets])

    return vals(u0), ders(u0), vals(u1), ders(u1)


def kirchhoff_lift(shell, w: Callable, v: Optional[Callable] = None, s: Optional[Callable] = None,
                   dirichlet: bool = False, **field_kwargs) -> TLinearField:
    """Displacement u_t = w, u_theta = v - t(w_theta/A_theta - kappa_theta v), u_z = s - t(w_z/A_z - kappa_z s).

    ``w``, ``v``, ``s`` are callables ``(theta, z, order) -> Jet``; ``w``
    must be supplied to order 2 and ``v``, ``s`` to order 1. ``None``
    stands for zero.
    """
    patch = shell.patch if hasattr(shell, "patch") else shell

    def terms(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        geo = patch.data(theta, z)
        return _lift_terms(geo, w(theta, z, 2), None if v is None else v(theta, z, 1),
                           None if s is None else s(theta, z, 1))

    return TLinearField(terms, dirichlet=dirichlet, **field_kwargs)


# ---------------------------------------------------------------------------
# regime 1
# ---------------------------------------------------------------------------

def regime1_field(shell, profile: BumpProfile = BumpProfile()) -> TLinearField:
    """Kirchhoff lift of w = W(theta / sqrt(h), z), v = s = 0.

    W is the profile bump in both variables, so the field lives on
    theta in [0, sqrt(h)] and oscillates on the scale sqrt(h).
    """
    from .scaling import Regime, classify_regime

    h = shell.h
    if classify_regime(h, shell.epsilon) != Regime.REGIME1:
        warnings.warn("regime-1 field used with epsilon > sqrt(h)", RegimeWarning, stacklevel=2)
    patch = shell.patch
    root = math.sqrt(h)

    def w(theta, z, order):
        x = Jet.variable(theta, 0, order) * (1.0 / root)
        return profile.surface(x, _fraction_jet(patch, theta, z, order))

    return kirchhoff_lift(shell, w, dirichlet=True, theta_scale=1.0 / root, z_scale=1.0,
                          theta_window=(0.0, root), name="regime1")


# ---------------------------------------------------------------------------
# transport phase
# ---------------------------------------------------------------------------

def _mu_jet(v: PrincipalValues, sign: float = 1.0) -> Jet:
    a_th, a_z, k_th, k_z = geometry_jets(v)
    ratio = -(k_z / k_th)
    return (a_z / a_th) * ratio.sqrt() * sign


class TransportPhase:
    """Solution of kappa_theta f_z^2 / A_z^2 + kappa_z f_theta^2 / A_theta^2 = 0 with f(theta, z1) = theta.

    The chosen branch solves f_z = branch * mu f_theta with
    mu = (A_z / A_theta) sqrt(-kappa_z / kappa_theta). Values are computed by
    tracing characteristics back to z = z1; initial data f = theta is used
    on the whole line, so characteristics may leave [0, 1].
    """

    def __init__(self, patch, branch: int = 1, rtol: float = 1e-11, atol: float = 1e-12,
                 fd_step: float = 1e-5):
        if patch.curvature_class != CurvatureClass.HYPERBOLIC:
            raise GeometryError("transport phase requires negative Gaussian curvature")
        if branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        self.patch = patch
        self.branch = branch
        self.rtol = rtol
        self.atol = atol
        self.fd_step = fd_step
        self.z1, _ = patch.domain.z_range()

    def _mu_parts(self, theta, z):
        """mu, mu_theta, mu_z, mu_thetatheta at points."""
        mu = _mu_jet(self.patch.data(theta, z), self.branch)
        d = self.fd_step
        plus = _mu_jet(self.patch.data(theta + d, z), self.branch).d(1, 0)
        minus = _mu_jet(self.patch.data(theta - d, z), self.branch).d(1, 0)
        return mu.value, mu.d(1, 0), mu.d(0, 1), (plus - minus) / (2 * d)

    def evaluate(self, theta, z) -> dict:
        """f and its partials up to second order at flat arrays of points."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        z = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
        theta, z = np.broadcast_arrays(theta, z)
        n = theta.size
        L = z - self.z1

        def rhs(s, y):
            th, J, K = y[:n], y[n:2 * n], y[2 * n:]
            mu, mu_t, _, mu_tt = self._mu_parts(th, z - s * L)
            return np.concatenate([mu * L, mu_t * L * J, L * (mu_tt * J * J + mu_t * K)])

        y0 = np.concatenate([theta, np.ones(n), np.zeros(n)])
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=self.rtol, atol=self.atol)
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            bad = theta[~np.isfinite(sol.y[:n, -1])] if sol.y.size else theta
            where = f" (theta = {bad[0]:.4g})" if bad.size else ""
            raise TransportError("characteristic integration failed" + where + ": " + sol.message)
        foot, J, K = sol.y[:n, -1], sol.y[n:2 * n, -1], sol.y[2 * n:, -1]
        mu, mu_t, mu_z, _ = self._mu_parts(theta, z)
        if not np.all(np.isfinite(mu)):
            raise TransportError(f"transport coefficient undefined at theta = {theta[~np.isfinite(mu)][0]:.4g}")
        f_th = J
        f_z = mu * f_th
        f_thth = K
        f_thz = mu_t * f_th + mu * f_thth
        f_zz = mu_z * f_th + mu * f_thz
        return {"f": foot, "f_th": f_th, "f_z": f_z, "f_thth": f_thth, "f_thz": f_thz, "f_zz": f_zz}

    def jet(self, theta, z, order: int = 2) -> Jet:
        shape = np.broadcast_shapes(np.shape(theta), np.shape(z))
        vals = self.evaluate(np.broadcast_to(theta, shape), np.broadcast_to(z, shape))
        parts = {(0, 0): vals["f"], (1, 0): vals["f_th"], (0, 1): vals["f_z"],
                 (2, 0): vals["f_thth"], (1, 1): vals["f_thz"], (0, 2): vals["f_zz"]}
        if order > 2:
            raise ValueError("transport phase provides partials up to order 2")
        return Jet.from_partials({k: np.reshape(p, shape) for k, p in parts.items()}, order)

    def residual(self, theta, z) -> np.ndarray:
        """Pointwise kappa_theta f_z^2/A_z^2 + kappa_z f_theta^2/A_theta^2."""
        vals = self.evaluate(theta, z)
        v = self.patch.data(np.ravel(theta), np.ravel(z))
        return v.k_th * vals["f_z"] ** 2 / v.a_z ** 2 + v.k_z * vals["f_th"] ** 2 / v.a_th ** 2


class LinearPhase:
    """f = c_theta * theta + c_z * z, for comparisons with the transport phase."""

    def __init__(self, c_theta: float = 1.0, c_z: float = 1.0):
        self.c_theta = float(c_theta)
        self.c_z = float(c_z)

    def evaluate(self, theta, z) -> dict:
        theta = np.ravel(np.asarray(theta, dtype=float))
        z = np.ravel(np.asarray(z, dtype=float))
        zero = np.zeros(np.broadcast_shapes(theta.shape, z.shape))
        return {"f": self.c_theta * theta + self.c_z * z, "f_th": zero + self.c_theta, "f_z": zero + self.c_z,
                "f_thth": zero, "f_thz": zero, "f_zz": zero}

    def jet(self, theta, z, order: int = 2) -> Jet:
        return Jet.variable(theta, 0, order) * self.c_theta + Jet.variable(z, 1, order) * self.c_z


def solve_transport(patch, branch: int = 1, **kwargs) -> TransportPhase:
    return TransportPhase(patch, branch=branch, **kwargs)


def transport_bracket(patch, phase, theta, z) -> np.ndarray:
    """f_z^2 A_theta^2 kappa_theta + f_theta^2 A_z^2 kappa_z, the O(n) coefficient of e_23."""
    vals = phase.evaluate(theta, z)
    v = patch.data(np.ravel(theta), np.ravel(z))
    return vals["f_z"] ** 2 * v.a_th ** 2 * v.k_th + vals["f_th"] ** 2 * v.a_z ** 2 * v.k_z


# ---------------------------------------------------------------------------
# hyperbolic field
# ---------------------------------------------------------------------------

def hyperbolic_field(shell, profile: BumpProfile = BumpProfile(), phase=None,
                     frequency: Optional[float] = None) -> TLinearField:
    """Kirchhoff lift of w = nW sin(nf), v = A_th k_th W/f_th cos(nf), s = A_z k_z W/f_z cos(nf).

    ``n = (eps h)^(-1/3)`` unless ``frequency`` is given.
    """
    patch = shell.patch
    if patch.curvature_class != CurvatureClass.HYPERBOLIC:
        raise GeometryError("hyperbolic field requires negative Gaussian curvature")
    if phase is None:
        phase = solve_transport(patch)
    n = (shell.epsilon * shell.h) ** (-1.0 / 3.0) if frequency is None else float(frequency)

    def terms(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        geo = patch.data(theta, z)
        a_th, a_z, k_th, k_z = geometry_jets(geo)
        f = phase.jet(theta, z, 2)
        W = profile.surface(Jet.variable(theta, 0, 2), _fraction_jet(patch, theta, z, 2))
        arg = f * n
        w = W * arg.sin() * n
        W1, cos1 = W.truncate(1), arg.cos().truncate(1)
        v = a_th * k_th * W1 / f.partial(0) * cos1
        s = a_z * k_z * W1 / f.partial(1) * cos1
        return _lift_terms(geo, w, v, s)

    # declared scales from a coarse sample of the phase gradient
    th, zz = np.meshgrid(np.linspace(0.05, 0.95, 7), np.linspace(*_interior(patch), 7), indexing="ij")
    g = phase.evaluate(th.ravel(), zz.ravel())
    z1, z2 = patch.domain.z_range()
    theta_scale = n * float(np.max(np.abs(g["f_th"]))) / math.pi
    z_scale = n * float(np.max(np.abs(g["f_z"]))) * (z2 - z1) / math.pi
    field = TLinearField(terms, dirichlet=True, theta_scale=theta_scale, z_scale=z_scale, name="hyperbolic")
    field.frequency = n
    return field


def _interior(patch):
    z1, z2 = patch.domain.z_range()
    return z1 + 0.05 * (z2 - z1), z2 - 0.05 * (z2 - z1)


# ---------------------------------------------------------------------------
# developable fields
# ---------------------------------------------------------------------------

def _form_jets(form, theta, z, order):
    """Jets of a(theta), b(theta), c(theta), B(z)."""
    def uni(fn, x, axis):
        return Jet.univariate(fn.derivatives(x, order), axis, order)

    return uni(form.a, theta, 0), uni(form.b, theta, 0), uni(form.c, theta, 0), uni(form.B, z, 1)


def case1_factorization(form, n: int = 101, tol: float = 1e-10):
    """Detect b = lam0 * a or a = lam0 * b; returns ``(which, lam0)``.

    ``which`` is 'b' for b = lam0 a (H = 1/a, G = (B + lam0)/B') and 'a'
    for a = lam0 b (H = 1/b, G = (lam0 B + 1)/B').
    """
    theta = np.linspace(0.0, 1.0, n)
    a, b = form.a(theta), form.b(theta)
    for which, num, den in (("a", a, b), ("b", b, a)):
        if np.max(np.abs(den)) == 0:
            continue
        lam0 = float(np.dot(num, den) / np.dot(den, den))
        if np.max(np.abs(num - lam0 * den)) <= tol * max(1.0, np.max(np.abs(num))):
            return which, lam0
    raise FactorizationError("A_z / A_theta does not factor as H(theta)/G(z); use case 2")


def _phase_bump(profile, patch, theta, z, order, n, interval=(0.0, 1.0)):
    """phi = eta(theta, z) sin(2 pi n theta): eta a bump in theta over ``interval`` times a bump in z."""
    th = Jet.variable(theta, 0, order)
    lo, hi = interval
    eta = profile.jet((th - lo) * (1.0 / (hi - lo))) * profile.jet(_fraction_jet(patch, theta, z, order))
    return eta * (th * (2 * math.pi * n)).sin()


def _developable_lift(form, a_th: Jet, a_z: Jet, a_j: Jet, c_j: Jet, v_th: Jet, v_z: Jet):
    """Given in-plane v_theta, v_z, build u = v + t w."""
    v_t = -(v_th.partial(0) + a_j * v_z) / c_j
    w_th = (c_j * v_th - v_t.partial(0)) / a_th
    w_z = -(v_t.partial(1)) / a_z
    shape = v_t.shape
    return _stack_terms([v_t, v_th, v_z], [_zero_jet(shape, 1), w_th, w_z])


def _developable_default_frequency(shell):
    return shell.epsilon ** -0.5 * shell.h ** -0.25


def developable_field_case1(shell, profile: BumpProfile = BumpProfile(), frequency: Optional[float] = None,
                            return_inplane: bool = False):
    """Field for A_z/A_theta = H(theta)/G(z): v_z = A_th G H phi_z, v_th = -A_th H^2 phi_th.

    phi = psi(theta) psi(zeta) sin(2 pi n theta) with n = eps^(-1/2) h^(-1/4);
    the theta envelope makes the field vanish on theta = 0, 1.
    """
    patch = shell.patch
    form = patch.developable
    if form is None:
        raise GeometryError("developable field requires a developable patch")
    which, lam0 = case1_factorization(form)
    n = _developable_default_frequency(shell) if frequency is None else float(frequency)
    order = 4

    def inplane(theta, z):
        a_j, b_j, c_j, B_j = _form_jets(form, theta, z, order)
        dB = B_j.partial(1)
        a_th = a_j * B_j + b_j
        if which == "b":
            H = a_j.reciprocal()
            G = (B_j + lam0) / dB
        else:
            H = b_j.reciprocal()
            G = (B_j * lam0 + 1.0) / dB
        phi = _phase_bump(profile, patch, theta, z, order, n)
        v_z = a_th * G * H * phi.partial(1)
        v_th = -(a_th * H * H * phi.partial(0))
        return a_j, c_j, a_th, dB, v_th, v_z

    def terms(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        a_j, c_j, a_th, dB, v_th, v_z = inplane(theta, z)
        return _developable_lift(form, a_th, dB, a_j, c_j, v_th, v_z)

    field = TLinearField(terms, dirichlet=True, theta_scale=n, z_scale=1.0, name="developable_case1")
    field.frequency = n
    field.inplane = inplane
    return field


def developable_field_case2(shell, profile: BumpProfile = BumpProfile(), interval=(0.0, 1.0),
                            frequency: Optional[float] = None, cutoff_scale: float = 1.0):
    """Field for a != 0, rho = b/a with rho' != 0 on ``interval``.

    v_th = (1/a) d/dtheta(phi_th / rho'), v_z = [B' phi_th + rho' phi_z - (B + rho) phi_thz] / (B' rho')
    with phi = eta * sin(2 pi n theta), eta a bump supported over ``interval``.
    ``cutoff_scale = 0`` gives eta = 0.
    """
    patch = shell.patch
    form = patch.developable
    if form is None:
        raise GeometryError("developable field requires a developable patch")
    lo, hi = interval
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("interval must lie in [0, 1]")
    th = np.linspace(lo, hi, 201)
    a_s = form.a(th)
    if np.any(np.abs(a_s) < 1e-12):
        raise GeometryError("a vanishes inside the interval")
    d = form.a.derivatives(th, 1), form.b.derivatives(th, 1)
    rho_p = (d[1][1] * d[0][0] - d[1][0] * d[0][1]) / d[0][0] ** 2
    if np.any(np.abs(rho_p) < 1e-12) or np.any(np.sign(rho_p) != np.sign(rho_p[0])):
        raise GeometryError("rho' vanishes inside the interval")
    n = _developable_default_frequency(shell) if frequency is None else float(frequency)
    order = 5

    def inplane(theta, z):
        a_j, b_j, c_j, B_j = _form_jets(form, theta, z, order)
        dB = B_j.partial(1)
        a_th = a_j * B_j + b_j
        rho = b_j / a_j
        drho = rho.partial(0)
        phi = _phase_bump(profile, patch, theta, z, order, n, interval) * cutoff_scale
        p_th = phi.partial(0)
        v_th = (p_th / drho).partial(0) / a_j
        p_z = phi.partial(1)
        p_thz = p_th.partial(1)
        v_z = (dB * p_th + drho * p_z - (B_j + rho) * p_thz) / (dB * drho)
        return a_j, c_j, a_th, dB, v_th, v_z

    def terms(theta, z):
        theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
        a_j, c_j, a_th, dB, v_th, v_z = inplane(theta, z)
        return _developable_lift(form, a_th, dB, a_j, c_j, v_th, v_z)

    field = TLinearField(terms, dirichlet=True, theta_scale=n, z_scale=1.0,
                         theta_window=(lo, hi), name="developable_case2")
    field.frequency = n
    field.inplane = inplane
    return field


def developable_pde_residual(field, theta, z) -> float:
    """Max |-A_th v_th,z - A_z (v_z,th - a v_th)| for a developable field's in-plane part."""
    theta, z = np.broadcast_arrays(np.asarray(theta, float), np.asarray(z, float))
    a_j, _, a_th, a_z, v_th, v_z = field.inplane(theta, z)
    lhs = -a_th.value * v_th.d(0, 1)
    rhs = a_z.value * (v_z.d(1, 0) - a_j.value * v_th.value)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class AnsatzReport:
    norm_strain_sq: float
    norm_grad_sq: float
    ratio: float
    predicted_ratio_scale: float
    grid: QuadratureGrid
    refinement_change: float
    strain_entries: np.ndarray

    @property
    def C1_bound(self) -> float:
        """1 / ratio: a lower bound for the optimal constant."""
        return 1.0 / self.ratio


def ansatz_report(shell, field, grid: Optional[QuadratureGrid] = None, rtol: float = 1e-6,
                  max_doublings: int = 3) -> AnsatzReport:
    """Rayleigh ratio ||e(u)||^2 / ||grad u||^2 by gated quadrature.

    Without an explicit grid, one is sized from the field's declared scales
    and its panel counts are doubled until the refinement gate passes.
    """
    from .scaling import classify_regime, theory_exponents

    explicit = grid is not None
    grid = grid if explicit else grid_for_field(field)
    store = {}

    def evaluate(g):
        s = shell_integrals(shell, field, g)
        store[g] = s
        return {"strain": s.strain, "grad": s.grad}

    for attempt in range(max_doublings + 1):
        try:
            fine, change = refinement_gate(evaluate, grid, rtol=rtol)
            break
        except ResolutionError:
            if explicit or attempt == max_doublings:
                raise
            t, p_th, p_z = grid.panels
            grid = replace(grid, panels=(t, 2 * p_th, 2 * p_z))
    from .quadrature import refine

    s = store[refine(grid)]
    if s.grad == 0.0:
        raise ValueError("undefined ratio: zero field")
    exps = theory_exponents(shell.patch.curvature_class, classify_regime(shell.h, shell.epsilon))
    predicted = shell.h ** (-float(exps.d_log_h)) * shell.epsilon ** (-float(exps.d_log_eps))
    return AnsatzReport(s.strain, s.grad, s.strain / s.grad, predicted, grid, change, s.strain_entries)
