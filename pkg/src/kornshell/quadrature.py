"""Composite Gauss-Legendre integration over the thin domain.

Nodes are tensor products in (t, theta, z). The theta axis is split into
uniform panels on a window of [0, 1]; z nodes are mapped affinely into
[z1(theta), z2(theta)] for every theta node, and t nodes into (-g1, g2) for
every surface node. The shell weight A_theta * A_z is applied by
:func:`integrate_shell`, not stored in the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

__all__ = [
    "QuadratureError",
    "ResolutionError",
    "QuadratureGrid",
    "SurfaceNodes",
    "gauss_legendre",
    "integrate_shell",
    "refine",
    "refinement_gate",
    "resolution_ok",
]

DEFAULT_CHUNK = 32768


class QuadratureError(ValueError):
    """Non-finite integrand or malformed grid."""


class ResolutionError(RuntimeError):
    """A refinement or resolution check failed."""


@lru_cache(maxsize=64)
def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int, a: float, b: float, panels: int = 1):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    if order < 1 or panels < 1:
        raise QuadratureError("order and panel count must be positive")
    x, w = _gl(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class SurfaceNodes:
    """Flattened (theta, z) nodes with area weights (without the metric factor)."""

    theta: np.ndarray
    z: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.theta.size


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Legendre grid.

    ``orders`` and ``panels`` are (t, theta, z). ``theta_window`` restricts
    the theta integration to a sub-interval of [0, 1]; ``z_window`` is a
    fractional sub-interval of [z1(theta), z2(theta)]. Windows are only valid
    for integrands that vanish outside them.
    """

    orders: tuple = (4, 8, 8)
    panels: tuple = (1, 1, 1)
    theta_window: tuple = (0.0, 1.0)
    z_window: tuple = (0.0, 1.0)

    def __post_init__(self):
        orders = tuple(int(q) for q in self.orders)
        panels = tuple(int(p) for p in self.panels)
        if len(orders) != 3 or len(panels) != 3:
            raise QuadratureError("orders and panels need one entry per axis (t, theta, z)")
        if min(orders) < 2:
            raise QuadratureError("node counts must be >= 2 per axis")
        if min(panels) < 1:
            raise QuadratureError("panel counts must be >= 1")
        for lo, hi in (self.theta_window, self.z_window):
            if not 0.0 <= lo < hi <= 1.0:
                raise QuadratureError("windows must be sub-intervals of [0, 1]")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "panels", panels)

    @classmethod
    def for_scales(cls, theta_scale: float = 1.0, z_scale: float = 1.0, t_order: int = 4,
                   order: int = 6, theta_window=(0.0, 1.0), z_window=(0.0, 1.0),
                   min_panels: int = 4) -> "QuadratureGrid":
        """Panels sized to ``ceil(4 * scale)`` per unit length, ``order`` nodes each.

        ``theta_scale`` counts oscillations per unit theta; ``z_scale``
        counts oscillations across the full z-width.
        """
        lt = theta_window[1] - theta_window[0]
        lz = z_window[1] - z_window[0]
        p_th = max(min_panels, math.ceil(4 * theta_scale * lt))
        p_z = max(min_panels, math.ceil(4 * z_scale * lz))
        return cls((t_order, order, order), (1, p_th, p_z), tuple(theta_window), tuple(z_window))

    @property
    def size(self) -> int:
        return int(np.prod([q * p for q, p in zip(self.orders, self.panels)]))

    def surface_nodes(self, domain) -> SurfaceNodes:
        _, q_th, q_z = self.orders
        _, p_th, p_z = self.panels
        th, w_th = gauss_legendre(q_th, *self.theta_window, panels=p_th)
        r, w_r = gauss_legendre(q_z, *self.z_window, panels=p_z)
        lo, hi = domain.limits(th)
        width = hi - lo
        theta = np.repeat(th, r.size)
        z = (lo[:, None] + width[:, None] * r[None, :]).ravel()
        weight = (w_th[:, None] * width[:, None] * w_r[None, :]).ravel()
        return SurfaceNodes(theta, z, weight)

    def t_nodes(self, g1, g2):
        """Nodes (n, q_t) and weights mapped to (-g1, g2) per surface node."""
        q_t = self.orders[0]
        p_t = self.panels[0]
        x, w = gauss_legendre(q_t, 0.0, 1.0, panels=p_t)
        g1 = np.asarray(g1, dtype=float)[..., None]
        g2 = np.asarray(g2, dtype=float)[..., None]
        span = g1 + g2
        return -g1 + span * x, span * w


def refine(grid: QuadratureGrid) -> QuadratureGrid:
    """Same panels with every order raised by two."""
    return replace(grid, orders=tuple(q + 2 for q in grid.orders))


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise QuadratureError("non-finite integrand value at a quadrature node")


def integrate_shell(shell, integrand: Callable, grid: QuadratureGrid, chunk: int = DEFAULT_CHUNK) -> float:
    """Approximate the integral of ``A_theta * A_z * integrand(t, theta, z)`` over the shell.

    The integrand receives flat arrays and must return an array of the same
    length. Summation runs in fixed node order.
    """
    nodes = grid.surface_nodes(shell.patch.domain)
    total = 0.0
    for start in range(0, len(nodes), chunk):
        sl = slice(start, start + chunk)
        theta, z, w2 = nodes.theta[sl], nodes.z[sl], nodes.weight[sl]
        a_th, a_z = shell.patch.metric_at(theta, z)
        g1, g2 = shell.barriers(theta, z)
        t, wt = grid.t_nodes(g1, g2)
        base = w2 * a_th * a_z
        for k in range(t.shape[1]):
            vals = np.asarray(integrand(t[:, k], theta, z), dtype=float)
            vals = np.broadcast_to(vals, theta.shape)
            _check_finite(vals)
            total += float(np.dot(base * wt[:, k], vals))
    return total


def refinement_gate(evaluate: Callable[[QuadratureGrid], object], grid: QuadratureGrid,
                    rtol: float = 1e-6, atol: float = 0.0):
    """Evaluate on ``grid`` and its refinement; raise if any output moves more than ``rtol``.

    ``evaluate`` may return a scalar, a sequence or a dict of scalars. The
    refined result is returned together with the largest relative change.
    """
    coarse = evaluate(grid)
    fine = evaluate(refine(grid))
    a, b = _flatten(coarse), _flatten(fine)
    scale = np.maximum(np.abs(b), atol)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, np.abs(a - b) / np.where(scale > 0, scale, 1.0), 0.0)
    worst = float(np.max(rel)) if rel.size else 0.0
    if worst > rtol:
        raise ResolutionError(f"quadrature refinement changed a result by {worst:.3e} (> {rtol:.1e})")
    return fine, worst


def _flatten(result) -> np.ndarray:
    if isinstance(result, dict):
        return np.concatenate([np.ravel(np.asarray(result[k], dtype=float)) for k in sorted(result)])
    return np.ravel(np.asarray(result, dtype=float))


def resolution_ok(grid: QuadratureGrid, theta_scale: float, points_per_period: int = 8,
                  window: Optional[tuple] = None) -> bool:
    """At least ``points_per_period`` theta nodes per oscillation period."""
    lo, hi = window or grid.theta_window
    nodes = grid.orders[1] * grid.panels[1]
    return nodes >= points_per_period * theta_scale * (hi - lo)
