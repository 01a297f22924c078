"""Galerkin discretization of the thin-domain Korn quotient.

Displacements are expanded in Legendre polynomials of ``t / h`` times clamped
cubic B-splines in theta and z (one expansion per frame component). Both
quadratic forms use the measure ``A_theta A_z dt dtheta dz``. The optimal
constant is the largest eigenvalue ``mu`` of ``G x = mu S x``, equivalently
the reciprocal of the smallest Rayleigh quotient of ``(S, G)``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import legendre
from scipy.interpolate import BSpline
from sklearn.base import BaseEstimator

from .geometry import CurvatureClass, GeometryError
from .kinematics import _skew, frame_gradient, rigid_motions
from .quadrature import ResolutionError, gauss_legendre

BC_DIRICHLET = "dirichlet_thin_edge"
BC_FREE = "free"
BC_MODES = (BC_DIRICHLET, BC_FREE)

# Dense generalized eigensolver below this dimension, ARPACK shift-invert above.
DENSE_LIMIT = 1500


class SolverError(RuntimeError):
    pass


class IndefiniteFormError(SolverError):
    pass


class DeflationError(SolverError):
    pass


class ProjectionError(SolverError):
    pass


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------

def _clamped_knots(n: int, lo: float, hi: float, k: int = 3) -> np.ndarray:
    spans = n - k
    interior = np.linspace(lo, hi, spans + 1)
    return np.concatenate([np.full(k, lo), interior, np.full(k, hi)])


@dataclass(frozen=True)
class TensorBasis:
    """Legendre(t/h) x cubic spline(theta) x cubic spline(z), one copy per frame component.

    ``n_theta`` and ``n_z`` count spline functions before boundary functions
    are dropped; with ``dirichlet`` the first and last function on each axis
    (the only ones nonzero on the thin edge) are removed.
    """

    p_t: int = 2
    n_theta: int = 16
    n_z: int = 8
    dirichlet: bool = True

    def __post_init__(self):
        if self.p_t < 0:
            raise ValueError("p_t must be >= 0")
        minimum = 6 if self.dirichlet else 4
        if self.n_theta < minimum or self.n_z < minimum:
            raise ValueError(f"need at least {minimum} spline functions per axis")

    @property
    def kept_theta(self) -> np.ndarray:
        return self._kept(self.n_theta)

    @property
    def kept_z(self) -> np.ndarray:
        return self._kept(self.n_z)

    def _kept(self, n):
        return np.arange(1, n - 1) if self.dirichlet else np.arange(n)

    @property
    def scalar_dim(self) -> int:
        return (self.p_t + 1) * len(self.kept_theta) * len(self.kept_z)

    @property
    def dim(self) -> int:
        return 3 * self.scalar_dim

    def refined(self, theta: bool = True, z: bool = False, t: bool = False) -> "TensorBasis":
        """Nested enrichment: halve the spline spans and/or raise the t-degree."""
        return TensorBasis(self.p_t + int(t),
                           2 * self.n_theta - 3 if theta else self.n_theta,
                           2 * self.n_z - 3 if z else self.n_z, self.dirichlet)

    def index(self, component, degree, i_theta, i_z):
        """Global coefficient index of a basis function (spline indices before dropping)."""
        nt, nz = len(self.kept_theta), len(self.kept_z)
        off = 1 if self.dirichlet else 0
        it = np.asarray(i_theta) - off
        iz = np.asarray(i_z) - off
        valid = (it >= 0) & (it < nt) & (iz >= 0) & (iz < nz)
        idx = ((np.asarray(component) * (self.p_t + 1) + np.asarray(degree)) * nt + it) * nz + iz
        return np.where(valid, idx, -1)

    def spline_axis(self, n, lo, hi):
        knots = _clamped_knots(n, lo, hi)
        spl = BSpline(knots, np.eye(n), 3, extrapolate=False)
        return knots, spl, spl.derivative()

    def evaluate(self, coef, t, theta, z, shell):
        """Frame components (3, N) and partials (3, 3, N) of the expansion ``coef``."""
        t, theta, z = (np.atleast_1d(np.asarray(a, dtype=float)).ravel() for a in (t, theta, z))
        z1, z2 = shell.patch.domain.z_range()
        coef = np.asarray(coef, dtype=float)
        P, dP = _legendre_table(self.p_t, t / shell.h, shell.h)
        Bt, dBt = _spline_table(self, self.n_theta, 0.0, 1.0, theta)
        Bz, dBz = _spline_table(self, self.n_z, z1, z2, z)
        c = coef.reshape(3, self.p_t + 1, len(self.kept_theta), len(self.kept_z))
        u = np.einsum("capq,na,np,nq->cn", c, P, Bt, Bz)
        du = np.stack([
            np.einsum("capq,na,np,nq->cn", c, dP, Bt, Bz),
            np.einsum("capq,na,np,nq->cn", c, P, dBt, Bz),
            np.einsum("capq,na,np,nq->cn", c, P, Bt, dBz),
        ], axis=1)
        return u, du


def _legendre_table(p_t, s, h):
    vals = np.empty((s.size, p_t + 1))
    ders = np.empty((s.size, p_t + 1))
    for a in range(p_t + 1):
        e = np.zeros(a + 1)
        e[a] = 1.0
        vals[:, a] = legendre.legval(s, e)
        ders[:, a] = legendre.legval(s, legendre.legder(e)) / h if a else 0.0
    return vals, ders


def _spline_table(basis, n, lo, hi, x):
    _, spl, dspl = basis.spline_axis(n, lo, hi)
    x = np.clip(x, lo, hi)
    vals = np.nan_to_num(spl(x))
    ders = np.nan_to_num(dspl(x))
    kept = basis._kept(n)
    return vals[:, kept], ders[:, kept]


def required_theta_functions(h: float, epsilon: float, curvature_class) -> int:
    """Minimum n_theta of the resolution policy (4 functions per expected wavelength)."""
    cls = CurvatureClass(curvature_class)
    scales = {CurvatureClass.HYPERBOLIC: (epsilon * h) ** (1.0 / 3.0)}
    wavelength = math.sqrt(h)
    if cls is CurvatureClass.HYPERBOLIC:
        wavelength = scales[cls]
    elif cls is CurvatureClass.MIXED:
        wavelength = min(wavelength, (epsilon * h) ** (1.0 / 3.0))
    return math.ceil(4.0 / wavelength - 1e-9)


def default_basis(shell, p_t: int = 2, bc_mode: str = BC_DIRICHLET, n_z: Optional[int] = None) -> TensorBasis:
    n_theta = max(8, required_theta_functions(shell.h, shell.epsilon, shell.patch.curvature_class))
    if n_z is None:
        n_z = 12
        if shell.patch.curvature_class is CurvatureClass.HYPERBOLIC:
            n_z = max(n_z, math.ceil(n_theta * shell.epsilon))
    return TensorBasis(p_t, n_theta, n_z, bc_mode == BC_DIRICHLET)


def check_resolution(shell, basis: TensorBasis):
    need = required_theta_functions(shell.h, shell.epsilon, shell.patch.curvature_class)
    if basis.n_theta < need:
        raise ResolutionError(
            f"n_theta = {basis.n_theta} under-resolves the expected oscillation scale (need >= {need})")


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssemblyQuadrature:
    """Gauss nodes per spline span (theta, z) and across the thickness (t)."""

    t_order: int = 5
    theta_order: int = 5
    z_order: int = 5

    def refined(self) -> "AssemblyQuadrature":
        return AssemblyQuadrature(self.t_order + 2, self.theta_order + 2, self.z_order + 2)

    def as_dict(self) -> dict:
        return {"t_order": self.t_order, "theta_order": self.theta_order, "z_order": self.z_order}


@dataclass
class FreeModeDeflation:
    """Gram matrix ``gram`` of the constant skew generators and couplings ``coupling`` (3, dim)."""

    gram: np.ndarray
    coupling: np.ndarray

    def correction(self, x):
        """``b^T g^{-1} b x`` for a vector or a (dim, k) block."""
        return self.coupling.T @ np.linalg.solve(self.gram, self.coupling @ x)

    def dense(self) -> np.ndarray:
        return self.coupling.T @ np.linalg.solve(self.gram, self.coupling)


@dataclass
class AssembledForms:
    S: sp.csr_matrix
    G: sp.csr_matrix
    basis: Optional[TensorBasis] = None
    bc_mode: str = BC_DIRICHLET
    mass: Optional[sp.csr_matrix] = None
    deflation: Optional[FreeModeDeflation] = None
    quadrature: dict = field(default_factory=dict)
    h: float = float("nan")
    epsilon: float = float("nan")
    assembly_seconds: float = 0.0
    rigid: Optional[np.ndarray] = None

    @classmethod
    def from_matrices(cls, S, G, bc_mode: str = BC_DIRICHLET) -> "AssembledForms":
        return cls(sp.csr_matrix(np.asarray(S, dtype=float) if not sp.issparse(S) else S),
                   sp.csr_matrix(np.asarray(G, dtype=float) if not sp.issparse(G) else G), bc_mode=bc_mode)

    @property
    def dimension(self) -> int:
        return self.S.shape[0]

    def g_matvec(self, x):
        y = self.G @ x
        if self.deflation is not None:
            y = y - self.deflation.correction(x)
        return y

    def g_dense(self) -> np.ndarray:
        Gd = self.G.toarray()
        if self.deflation is not None:
            Gd = Gd - self.deflation.dense()
        return Gd

    def g_operator(self) -> spla.LinearOperator:
        n = self.dimension
        return spla.LinearOperator((n, n), matvec=self.g_matvec, matmat=self.g_matvec, dtype=float)

    @property
    def penalty(self) -> float:
        """Weight of the rigid-motion penalty added to S in free mode."""
        if self.rigid is None:
            return 0.0
        return float(self.S.diagonal().mean() / np.mean(np.sum(self.rigid ** 2, axis=1)))

    def s_matvec(self, x):
        """Strain form; in free mode penalized along the H1 duals of the rigid motions.

        Both forms are invariant under adding a rigid motion, so the penalty
        only selects the complement of the rigid motions and leaves the
        extremal quotient unchanged.
        """
        y = self.S @ x
        if self.rigid is not None:
            y = y + self.penalty * (self.rigid @ (self.rigid.T @ x))
        return y

    def s_dense(self) -> np.ndarray:
        Sd = self.S.toarray()
        if self.rigid is not None:
            Sd = Sd + self.penalty * (self.rigid @ self.rigid.T)
        return Sd

    def s_solver(self):
        """Callable applying the inverse of the (penalized) strain form."""
        if self.rigid is None:
            lu = spla.splu(self.S.tocsc())
            return lu.solve
        n, k = self.rigid.shape
        C = sp.csr_matrix(self.rigid)
        bordered = sp.bmat([[self.S, C], [C.T, -sp.identity(k) / self.penalty]], format="csc")
        lu = spla.splu(bordered)
        return lambda b: lu.solve(np.concatenate([b, np.zeros(k)]))[:n]

    def quotient(self, x) -> float:
        """``x^T G x / x^T S x`` (deflated G in free mode)."""
        return float(x @ self.g_matvec(x)) / float(x @ (self.S @ x))

    def metadata(self) -> dict:
        meta = {"dimension": self.dimension, "bc_mode": self.bc_mode, "nnz_S": int(self.S.nnz),
                "nnz_G": int(self.G.nnz), "quadrature": dict(self.quadrature),
                "assembly_seconds": self.assembly_seconds}
        if self.basis is not None:
            meta["basis"] = {"p_t": self.basis.p_t, "n_theta": self.basis.n_theta,
                             "n_z": self.basis.n_z, "dirichlet": self.basis.dirichlet}
        return meta


def _raw_operator(v, t):
    """Matrix (N, 9, 12) mapping (u, du) raw values to flattened shell-gradient entries."""
    n = t.size
    out = np.empty((n, 9, 12))
    for r in range(12):
        u = np.zeros((3, n))
        du = np.zeros((3, 3, n))
        if r < 3:
            u[r] = 1.0
        else:
            c, d = divmod(r - 3, 3)
            du[c, d] = 1.0
        out[:, :, r] = frame_gradient(v, t, u, du, shifted=True).reshape(n, 9)
    return out


def _axis_rule(basis, n, lo, hi, order):
    """Per-span Gauss nodes/weights and the four local spline values/derivatives."""
    knots, spl, dspl = basis.spline_axis(n, lo, hi)
    spans = n - 3
    x, w = gauss_legendre(order, lo, hi, panels=spans)
    x = x.reshape(spans, order)
    w = w.reshape(spans, order)
    vals = np.nan_to_num(spl(x.ravel())).reshape(spans, order, n)
    ders = np.nan_to_num(dspl(x.ravel())).reshape(spans, order, n)
    local = np.arange(spans)[:, None] + np.arange(4)[None, :]
    take = np.take_along_axis
    lv = take(vals, local[:, None, :].repeat(order, 1), axis=2)
    ld = take(ders, local[:, None, :].repeat(order, 1), axis=2)
    return x, w, lv, ld, local


def _skew_frames(patch, theta, z):
    """Constant Cartesian skew generators expressed in the local frame, (3, N, 3, 3)."""
    if patch.embedding is None:
        raise DeflationError("free mode requires an embedded patch")
    _, Q = patch.embedding(theta, z)
    gens = [_skew(np.eye(3)[k]) for k in range(3)]
    return np.stack([np.einsum("nji,jk,nkl->nil", Q, A, Q) for A in gens])


def assemble(shell, basis: TensorBasis, bc_mode: str = BC_DIRICHLET,
             quad: Optional[AssemblyQuadrature] = None, with_mass: bool = False,
             allow_unresolved: bool = False, gate: bool = False, gate_rtol: float = 1e-8) -> AssembledForms:
    """Stiffness pair (S for ||e(u)||^2, G for ||grad u||^2) on ``basis``.

    With ``gate`` the forms are reassembled with two extra nodes per axis and
    a ResolutionError is raised if either moves by more than ``gate_rtol``
    (relative Frobenius norm).
    """
    if bc_mode not in BC_MODES:
        raise ValueError(f"bc_mode must be one of {BC_MODES}")
    if basis.dirichlet != (bc_mode == BC_DIRICHLET):
        raise ValueError("basis boundary treatment does not match bc_mode")
    if not allow_unresolved:
        check_resolution(shell, basis)
    quad = quad or AssemblyQuadrature(t_order=basis.p_t + 3)
    start = time.perf_counter()
    forms = _assemble(shell, basis, bc_mode, quad, with_mass)
    if gate:
        fine = _assemble(shell, basis, bc_mode, quad.refined(), False)
        for name in ("S", "G"):
            a, b = getattr(forms, name), getattr(fine, name)
            change = spla.norm(a - b) / spla.norm(b)
            if change > gate_rtol:
                raise ResolutionError(f"assembly quadrature gate: {name} changed by {change:.2e}")
        forms.quadrature["gate_change"] = float(max(
            spla.norm(forms.S - fine.S) / spla.norm(fine.S), spla.norm(forms.G - fine.G) / spla.norm(fine.G)))
    forms.assembly_seconds = time.perf_counter() - start
    if bc_mode == BC_DIRICHLET:
        diag = forms.G.diagonal()
        if np.any(diag <= 0):
            raise IndefiniteFormError("gradient form has a non-positive diagonal (basis error)")
    return forms


def _assemble(shell, basis, bc_mode, quad, with_mass):
    patch = shell.patch
    if not patch.domain.constant_limits:
        raise GeometryError("the solver needs constant z-limits")
    z1, z2 = patch.domain.z_range()
    h = shell.h
    free = bc_mode == BC_FREE
    th_x, th_w, th_v, th_d, th_loc = _axis_rule(basis, basis.n_theta, 0.0, 1.0, quad.theta_order)
    z_x, z_w, z_v, z_d, z_loc = _axis_rule(basis, basis.n_z, z1, z2, quad.z_order)
    t_ref, t_wref = gauss_legendre(quad.t_order, 0.0, 1.0)
    n_zs = z_x.shape[0]
    q_th, q_z, q_t = quad.theta_order, quad.z_order, quad.t_order
    n_deg = basis.p_t + 1
    n_scalar = n_deg * 16
    n_local = 3 * n_scalar
    dim = basis.dim

    S = sp.csr_matrix((dim, dim))
    G = sp.csr_matrix((dim, dim))
    M = sp.csr_matrix((dim, dim)) if with_mass else None
    coupling = np.zeros((3, dim)) if free else None
    gram = np.zeros((3, 3)) if free else None

    # local dof layout: (component, degree, theta-local, z-local)
    comp, deg, a_loc, b_loc = np.meshgrid(np.arange(3), np.arange(n_deg), np.arange(4), np.arange(4), indexing="ij")
    comp, deg, a_loc, b_loc = (x.ravel() for x in (comp, deg, a_loc, b_loc))

    for e in range(th_x.shape[0]):
        # points ordered (z-span, theta node, z node, t node)
        theta = np.broadcast_to(th_x[e][None, :, None, None], (n_zs, q_th, q_z, q_t))
        zz = np.broadcast_to(z_x[:, None, :, None], (n_zs, q_th, q_z, q_t))
        theta_f, z_f = theta.ravel(), zz.ravel()
        v = patch.data(theta_f, z_f)
        g1, g2 = shell.barriers(theta_f, z_f)
        g1, g2 = np.asarray(g1, float), np.asarray(g2, float)
        span = g1 + g2
        tr = np.broadcast_to(t_ref[None, None, None, :], theta.shape).ravel()
        t = -g1 + span * tr
        w = (np.broadcast_to(th_w[e][None, :, None, None], theta.shape).ravel()
             * np.broadcast_to(z_w[:, None, :, None], theta.shape).ravel()
             * np.broadcast_to(t_wref[None, None, None, :], theta.shape).ravel()
             * span * v.a_th * v.a_z)
        P, dP = _legendre_table(basis.p_t, t / h, h)
        Bt = np.broadcast_to(th_v[e][None, :, None, None, :], theta.shape + (4,)).reshape(-1, 4)
        dBt = np.broadcast_to(th_d[e][None, :, None, None, :], theta.shape + (4,)).reshape(-1, 4)
        Bz = np.broadcast_to(z_v[:, None, :, None, :], theta.shape + (4,)).reshape(-1, 4)
        dBz = np.broadcast_to(z_d[:, None, :, None, :], theta.shape + (4,)).reshape(-1, 4)
        # scalar basis values per point: (N, n_deg, 4, 4) for value, d/dt, d/dtheta, d/dz
        phi = np.stack([
            np.einsum("na,ni,nj->naij", P, Bt, Bz),
            np.einsum("na,ni,nj->naij", dP, Bt, Bz),
            np.einsum("na,ni,nj->naij", P, dBt, Bz),
            np.einsum("na,ni,nj->naij", P, Bt, dBz),
        ], axis=-1).reshape(-1, n_scalar, 4)
        raw = _raw_operator(v, t).reshape(-1, 9, 12)
        # gradient of each local vector function: (N, 3, n_scalar, 9)
        grads = np.empty((t.size, 3, n_scalar, 9))
        for c in range(3):
            cols = [c, 3 + 3 * c, 4 + 3 * c, 5 + 3 * c]
            grads[:, c] = np.einsum("nkd,nsd->nsk", raw[:, :, cols], phi)
        grads = grads.reshape(t.size, n_local, 3, 3)
        strains = 0.5 * (grads + np.swapaxes(grads, -1, -2))
        npts = q_th * q_z * q_t
        sw = np.sqrt(w)
        Gl = (grads * sw[:, None, None, None]).reshape(n_zs, npts, n_local, 9)
        Gl = np.ascontiguousarray(np.swapaxes(Gl, 2, 3)).reshape(n_zs, npts * 9, n_local)
        El = (strains * sw[:, None, None, None]).reshape(n_zs, npts, n_local, 9)
        El = np.ascontiguousarray(np.swapaxes(El, 2, 3)).reshape(n_zs, npts * 9, n_local)
        K_g = np.matmul(np.swapaxes(Gl, 1, 2), Gl)
        K_s = np.matmul(np.swapaxes(El, 1, 2), El)

        gidx = basis.index(comp[None, :], deg[None, :], th_loc[e][a_loc][None, :], z_loc[:, b_loc])
        rows = np.broadcast_to(gidx[:, :, None], K_g.shape)
        cols = np.broadcast_to(gidx[:, None, :], K_g.shape)
        keep = (rows >= 0) & (cols >= 0)
        r, c_ = rows[keep], cols[keep]
        G = G + sp.csr_matrix((K_g[keep], (r, c_)), shape=(dim, dim))
        S = S + sp.csr_matrix((K_s[keep], (r, c_)), shape=(dim, dim))

        if with_mass:
            pv = (phi[:, :, 0] * sw[:, None]).reshape(n_zs, npts, n_scalar)
            Ml = np.matmul(np.swapaxes(pv, 1, 2), pv)
            Mfull = np.zeros((n_zs, n_local, n_local))
            for cc in range(3):
                sl = slice(cc * n_scalar, (cc + 1) * n_scalar)
                Mfull[:, sl, sl] = Ml
            M = M + sp.csr_matrix((Mfull[keep], (r, c_)), shape=(dim, dim))

        if free:
            skews = _skew_frames(patch, theta_f, z_f)  # (3, N, 3, 3)
            gram += np.einsum("n,knij,lnij->kl", w, skews, skews)
            wg = (grads * w[:, None, None, None]).reshape(n_zs, npts, n_local, 9)
            sk = skews.reshape(3, n_zs, npts, 9)
            bl = np.einsum("epsk,cepk->ecs", wg, sk)  # (n_zs, 3, n_local)
            valid = gidx >= 0
            for zs in range(n_zs):
                np.add.at(coupling, (slice(None), gidx[zs][valid[zs]]), bl[zs][:, valid[zs]])

    S = ((S + S.T) * 0.5).tocsr()
    G = ((G + G.T) * 0.5).tocsr()
    S.sort_indices()
    G.sort_indices()
    deflation = None
    if free:
        if np.linalg.cond(gram) > 1e12:
            raise DeflationError("singular Gram matrix of skew generators (degenerate patch)")
        deflation = FreeModeDeflation(gram, coupling)
    if M is not None:
        M = ((M + M.T) * 0.5).tocsr()
    forms = AssembledForms(S, G, basis, bc_mode, M, deflation, quad.as_dict(), h, shell.epsilon)
    if free:
        forms.rigid = np.column_stack([_field_inner_products(shell, basis, f, quad)[0]
                                       for f in rigid_motions(patch)])
    return forms


def free_mode_deflation(shell, basis: TensorBasis, quad: Optional[AssemblyQuadrature] = None) -> FreeModeDeflation:
    """Gram matrix of the three skew generators and their couplings to the basis."""
    if shell.patch.embedding is None:
        raise DeflationError("free mode requires an embedded patch")
    free_basis = basis if not basis.dirichlet else TensorBasis(basis.p_t, basis.n_theta, basis.n_z, False)
    forms = assemble(shell, free_basis, BC_FREE, quad, allow_unresolved=True)
    return forms.deflation


# ---------------------------------------------------------------------------
# eigensolve
# ---------------------------------------------------------------------------

@dataclass
class KornEstimate:
    h: float
    epsilon: float
    C1: float
    eigvec: np.ndarray
    residual: float
    iterations: int
    bc_mode: str
    converged: bool = True
    method: str = ""
    seconds: float = 0.0

    @property
    def lambda_min(self) -> float:
        return 1.0 / self.C1

    def as_dict(self) -> dict:
        return {"h": self.h, "epsilon": self.epsilon, "C1": self.C1, "lambda_min": self.lambda_min,
                "residual": self.residual, "iterations": self.iterations, "bc_mode": self.bc_mode,
                "converged": self.converged, "method": self.method, "seconds": self.seconds}


def _residual(forms, x, lam):
    gx = forms.g_matvec(x)
    return float(np.linalg.norm(forms.s_matvec(x) - lam * gx) / np.linalg.norm(gx))


def min_rayleigh(forms: AssembledForms, tol: float = 1e-10, max_iter: Optional[int] = None,
                 seed: int = 0, dense_limit: int = DENSE_LIMIT) -> KornEstimate:
    """Smallest Rayleigh quotient of (S, G); ``C1 = 1 / lambda_min``.

    Small problems use a dense generalized eigensolver. Larger ones use ARPACK
    in shift-invert mode about zero with a seeded start vector, so the output
    is deterministic for fixed ``seed`` and ``tol``. On non-convergence the
    best available iterate is returned with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    start = time.perf_counter()
    n = forms.dimension
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(n)
    if float(probe @ forms.g_matvec(probe)) <= 0:
        raise IndefiniteFormError("gradient form is not positive on a random probe")
    if n <= dense_limit:
        Gd = forms.g_dense()
        Sd = forms.s_dense()
        if forms.bc_mode == BC_DIRICHLET and np.linalg.eigvalsh(Gd)[0] <= 0:
            raise IndefiniteFormError("gradient form is not positive definite")
        try:
            mu, vec = scipy.linalg.eigh(Gd, Sd, subset_by_index=[n - 1, n - 1])
        except np.linalg.LinAlgError as exc:
            raise IndefiniteFormError(f"strain form is not positive definite: {exc}") from exc
        x = vec[:, 0]
        C1 = float(mu[0])
        iterations, converged, method = 1, True, "dense"
    else:
        counter = {"n": 0}
        solve = forms.s_solver()

        def op(y):
            counter["n"] += 1
            return solve(np.asarray(y, dtype=float))

        OPinv = spla.LinearOperator((n, n), matvec=op, dtype=float)
        converged, method = True, "arpack-shift-invert"
        try:
            S_op = spla.LinearOperator((n, n), matvec=forms.s_matvec, dtype=float)
            lam, vec = spla.eigsh(S_op, k=1, M=forms.g_operator(), sigma=0.0, which="LM",
                                  OPinv=OPinv, v0=probe, tol=tol, maxiter=max_iter)
        except spla.ArpackNoConvergence as exc:
            converged = False
            if exc.eigenvalues.size == 0:
                lam, vec = np.array([forms.S.diagonal().min()]), probe[:, None]
            else:
                lam, vec = exc.eigenvalues, exc.eigenvectors
        x = vec[:, 0]
        C1 = 1.0 / float(lam[0])
        iterations = counter["n"]
    x = x / math.sqrt(abs(float(x @ forms.g_matvec(x))))
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    if not (np.isfinite(C1) and C1 > 0):
        raise IndefiniteFormError(f"non-positive extremal quotient ({C1!r})")
    residual = _residual(forms, x, 1.0 / C1)
    return KornEstimate(forms.h, forms.epsilon, C1, x, residual, iterations, forms.bc_mode,
                        converged, method, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# projection of trial fields
# ---------------------------------------------------------------------------

def _field_inner_products(shell, basis, field, quad):
    """Right-hand side of the weighted-H1 projection and the H1 norm of ``field``."""
    patch = shell.patch
    z1, z2 = patch.domain.z_range()
    h = shell.h
    th, w_th = gauss_legendre(quad.theta_order, 0.0, 1.0, panels=basis.n_theta - 3)
    zz, w_z = gauss_legendre(quad.z_order, z1, z2, panels=basis.n_z - 3)
    t_ref, t_wref = gauss_legendre(quad.t_order, 0.0, 1.0)
    rhs = np.zeros(basis.dim)
    norm2 = 0.0
    for i in range(th.size):
        theta = np.full(zz.size * t_ref.size, th[i])
        z = np.repeat(zz, t_ref.size)
        v = patch.data(theta, z)
        g1, g2 = (np.asarray(g, float) for g in shell.barriers(theta, z))
        t = -g1 + (g1 + g2) * np.tile(t_ref, zz.size)
        w = w_th[i] * np.repeat(w_z, t_ref.size) * np.tile(t_wref, zz.size) * (g1 + g2) * v.a_th * v.a_z
        u, du = field.evaluate(t, theta, z)
        grad_u = frame_gradient(v, t, u, du, shifted=True)
        norm2 += float(w @ (np.sum(u * u, axis=0) + np.sum(grad_u * grad_u, axis=(1, 2))))
        P, dP = _legendre_table(basis.p_t, t / h, h)
        Bt, dBt = _spline_table(basis, basis.n_theta, 0.0, 1.0, theta)
        Bz, dBz = _spline_table(basis, basis.n_z, z1, z2, z)
        raw = _raw_operator(v, t)
        target = np.einsum("n,nk->nk", w, grad_u.reshape(-1, 9))
        # theta is constant in this slice, so the theta factor is a single row
        bt, dbt = Bt[0], dBt[0]
        block = np.empty((3, basis.p_t + 1, bt.size, Bz.shape[1]))
        for c in range(3):
            cols = [c, 3 + 3 * c, 4 + 3 * c, 5 + 3 * c]
            # <grad phi, grad u> + <phi, u>
            coeff = np.einsum("nk,nkd->nd", target, raw[:, :, cols])
            coeff[:, 0] += w * u[c]
            plain = ((P * coeff[:, :1]).T @ Bz + (dP * coeff[:, 1:2]).T @ Bz
                     + (P * coeff[:, 3:4]).T @ dBz)
            along = (P * coeff[:, 2:3]).T @ Bz
            block[c] = plain[:, None, :] * bt[None, :, None] + along[:, None, :] * dbt[None, :, None]
        rhs += block.ravel()
    return rhs, norm2


def project_field(shell, basis: TensorBasis, field, quad: Optional[AssemblyQuadrature] = None,
                  forms: Optional[AssembledForms] = None):
    """Weighted-H1 least-squares projection; returns (coefficients, relative H1 residual, forms)."""
    quad = quad or AssemblyQuadrature(t_order=basis.p_t + 3)
    bc = BC_DIRICHLET if basis.dirichlet else BC_FREE
    if forms is None or forms.mass is None:
        forms = assemble(shell, basis, bc, quad, with_mass=True, allow_unresolved=True)
    rhs, norm2 = _field_inner_products(shell, basis, field, quad)
    if norm2 <= 0 or not np.any(rhs):
        raise ProjectionError("degenerate projection: the field has zero H1 norm")
    H1 = (forms.G + forms.mass).tocsc()
    x = spla.spsolve(H1, rhs)
    proj2 = float(x @ (H1 @ x))
    # ||u - u_h||^2 = ||u||^2 - ||u_h||^2 for an orthogonal projection
    residual = math.sqrt(max(norm2 - proj2, 0.0) / norm2)
    return x, residual, forms


def trial_lower_bound(shell, basis: TensorBasis, field, quad: Optional[AssemblyQuadrature] = None,
                      forms: Optional[AssembledForms] = None, max_residual: float = 0.1) -> float:
    """Quotient ||grad u_h||^2 / ||e(u_h)||^2 of the projected field, a lower bound for the discrete C1."""
    x, residual, forms = project_field(shell, basis, field, quad, forms)
    if residual > max_residual:
        raise ProjectionError(
            f"basis cannot represent the field (H1 projection residual {residual:.1%} > {max_residual:.0%})")
    return forms.quotient(x)


# ---------------------------------------------------------------------------
# estimator and matrix dump
# ---------------------------------------------------------------------------

class KornConstantEstimator(BaseEstimator):
    """Discrete optimal Korn constant of a shell.

    ``fit(shell)`` assembles the forms and stores ``C1_``, ``estimate_`` and
    ``forms_``. Unset ``n_theta`` or ``n_z`` fall back to the resolution
    policy (see :func:`default_basis`).
    """

    def __init__(self, p_t: int = 2, n_theta: Optional[int] = None, n_z: Optional[int] = None,
                 bc_mode: str = BC_DIRICHLET, tol: float = 1e-10, max_iter: Optional[int] = None,
                 seed: int = 0, allow_unresolved: bool = False, quad_order: int = 5,
                 dense_limit: int = DENSE_LIMIT):
        self.p_t = p_t
        self.n_theta = n_theta
        self.n_z = n_z
        self.bc_mode = bc_mode
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed
        self.allow_unresolved = allow_unresolved
        self.quad_order = quad_order
        self.dense_limit = dense_limit

    def make_basis(self, shell) -> TensorBasis:
        base = default_basis(shell, self.p_t, self.bc_mode, self.n_z)
        return TensorBasis(self.p_t, self.n_theta or base.n_theta, base.n_z, base.dirichlet)

    def fit(self, shell, y=None):
        basis = self.make_basis(shell)
        quad = AssemblyQuadrature(self.p_t + 3, self.quad_order, self.quad_order)
        self.basis_ = basis
        self.forms_ = assemble(shell, basis, self.bc_mode, quad, allow_unresolved=self.allow_unresolved)
        self.estimate_ = min_rayleigh(self.forms_, self.tol, self.max_iter, self.seed, self.dense_limit)
        self.C1_ = self.estimate_.C1
        return self

    def lower_bound(self, shell, field) -> float:
        """Projected trial quotient on the fitted basis."""
        if not hasattr(self, "forms_"):
            raise SolverError("estimator is not fitted")
        return trial_lower_bound(shell, self.basis_, field, forms=self.forms_)


def dump_triplets(matrix, path) -> int:
    """Write ``row col value`` lines sorted row-major; returns the entry count."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
    return int(order.size)


def load_triplets(path, shape=None) -> sp.csr_matrix:
    text = Path(path).read_text()
    if not text.strip():
        return sp.csr_matrix(shape or (0, 0))
    data = np.loadtxt(io.StringIO(text), ndmin=2)
    if data.size == 0:
        return sp.csr_matrix(shape or (0, 0))
    rows, cols = data[:, 0].astype(int), data[:, 1].astype(int)
    if shape is None:
        shape = (rows.max() + 1, cols.max() + 1)
    return sp.csr_matrix((data[:, 2], (rows, cols)), shape=shape)
