import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kornshell._jet import Jet
from kornshell.ansatz import (BumpProfile, FactorizationError, LinearPhase, RegimeWarning, TransportError,
                              ansatz_report, case1_factorization, developable_field_case1,
                              developable_field_case2, developable_pde_residual, hyperbolic_field,
                              kirchhoff_lift, regime1_field, solve_transport, transport_bracket)
from kornshell.geometry import (CurvatureClass, GeometryError, ShellDomain, make_constant_patch, make_cylinder,
                                make_developable, make_torus_band)
from kornshell.kinematics import ZeroField, shell_integrals, strain_at
from kornshell.quadrature import QuadratureGrid

from conftest import embedded_patches


def bump_w(patch, scale=1.0):
    """w = psi(theta) psi(zeta) as a jet callable."""
    prof = BumpProfile()
    z1, z2 = patch.domain.z_range()

    def w(theta, z, order):
        th = Jet.variable(theta, 0, order)
        zeta = (Jet.variable(z, 1, order) - z1) * (1.0 / (z2 - z1))
        return prof.surface(th, zeta) * scale

    return w


def midsurface_points(patch, n, rng):
    z1, z2 = patch.domain.z_range()
    return np.zeros(n), rng.uniform(0, 1, n), rng.uniform(z1, z2, n)


class TestBumpProfile:
    @pytest.mark.parametrize("prof", [BumpProfile(), BumpProfile("poly", 4), BumpProfile("poly", 8)])
    def test_vanishes_at_ends_and_peaks_at_half(self, prof):
        assert prof(np.array([0.0, 1.0])) == pytest.approx([0.0, 0.0], abs=1e-14)
        assert prof(np.array([0.5]))[0] == pytest.approx(1.0)
        d = prof.jet(Jet.variable(np.array([0.0, 1.0]), 0, 2))
        assert np.max(np.abs(d.d(1, 0))) < 1e-14

    def test_z_derivative_scales_with_width(self):
        eps = 0.01
        patch = make_cylinder(1.0, eps)
        w = bump_w(patch)(np.array([0.5]), np.array([0.3 * eps]), 2)
        # |W_z| ~ 1/eps and |W_zz| ~ 1/eps^2 away from the centre
        assert 0.1 / eps < abs(w.d(0, 1)[0]) < 10 / eps
        assert 0.1 / eps ** 2 < abs(w.d(0, 2)[0]) < 100 / eps ** 2

    def test_invalid_profiles(self):
        with pytest.raises(ValueError):
            BumpProfile("gauss")
        with pytest.raises(ValueError):
            BumpProfile("poly", 2)


class TestKirchhoffLift:
    def test_zero_data(self, cylinder_shell, rng):
        f = kirchhoff_lift(cylinder_shell, bump_w(cylinder_shell.patch, 0.0))
        u, du = f.evaluate(*midsurface_points(cylinder_shell.patch, 20, rng))
        assert not np.any(u) and not np.any(du)

    def test_flat_constant_normal(self, rng):
        shell = ShellDomain(make_constant_patch(eps=0.2), 0.01)
        f = kirchhoff_lift(shell, lambda th, z, order: Jet.constant(np.ones(np.shape(th)), order))
        pts = midsurface_points(shell.patch, 20, rng)
        u, _ = f.evaluate(*pts)
        assert np.allclose(u[0], 1.0) and not np.any(u[1:])
        E = strain_at(shell, f, pts).values
        assert np.max(np.abs(E[:, 0, :])) == 0.0

    def test_cylinder_bump_normal_row_vanishes(self, rng):
        shell = ShellDomain(make_cylinder(1.0, 0.2), 1e-3)
        f = kirchhoff_lift(shell, bump_w(shell.patch))
        E = strain_at(shell, f, midsurface_points(shell.patch, 1000, rng)).values
        assert np.max(np.abs(E[:, 0, :])) < 1e-10

    @pytest.mark.parametrize("patch", embedded_patches(), ids=lambda p: p.name)
    def test_normal_row_vanishes_on_every_patch(self, patch, rng):
        shell = ShellDomain(patch, 0.01)

        def v(theta, z, order):
            return bump_w(patch)(theta, z, order) * 0.3

        f = kirchhoff_lift(shell, bump_w(patch), v, v)
        E = strain_at(shell, f, midsurface_points(patch, 1000, rng)).values
        assert np.max(np.abs(E[:, 0, :])) < 1e-10


class TestTransport:
    def test_constant_unit_data(self):
        patch = make_constant_patch(1.0, 1.0, 1.0, -1.0, eps=0.2)
        assert patch.curvature_class is CurvatureClass.HYPERBOLIC
        phase = solve_transport(patch)
        th, z = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 0.2, 5), indexing="ij")
        vals = phase.evaluate(th.ravel(), z.ravel())
        assert np.allclose(vals["f"], (th + z).ravel(), atol=1e-12)
        assert np.max(np.abs(phase.residual(th.ravel(), z.ravel()))) < 1e-12

    def test_constant_ratio(self):
        patch = make_constant_patch(2.0, 3.0, 1.0, -4.0, eps=0.2)
        mu = (3.0 / 2.0) * math.sqrt(4.0)
        phase = solve_transport(patch)
        th, z = np.linspace(0, 1, 9), np.linspace(0, 0.2, 9)
        assert np.allclose(phase.evaluate(th, z)["f"], th + mu * z, atol=1e-12)
        assert np.max(np.abs(phase.residual(th, z))) < 1e-12

    def test_negative_branch(self):
        patch = make_constant_patch(1.0, 1.0, 1.0, -1.0, eps=0.2)
        th, z = np.linspace(0, 1, 5), np.linspace(0, 0.2, 5)
        assert np.allclose(solve_transport(patch, branch=-1).evaluate(th, z)["f"], th - z, atol=1e-12)

    def test_torus_inner_residual_and_bracket(self, torus_inner):
        phase = solve_transport(torus_inner)
        th, z = np.meshgrid(np.linspace(0.0, 1.0, 100), np.linspace(0.0, 0.2, 100), indexing="ij")
        th, z = th.ravel(), z.ravel()
        assert np.max(np.abs(phase.residual(th, z))) < 1e-8
        assert np.max(np.abs(transport_bracket(torus_inner, phase, th, z))) < 1e-8
        assert np.min(np.abs(phase.evaluate(th, z)["f_th"])) > 0.1

    def test_second_derivatives_against_fd(self, torus_inner):
        phase = solve_transport(torus_inner)
        th, z = np.array([0.3, 0.7]), np.array([0.05, 0.15])
        d = 1e-4
        vals = phase.evaluate(th, z)
        fd_thth = (phase.evaluate(th + d, z)["f_th"] - phase.evaluate(th - d, z)["f_th"]) / (2 * d)
        fd_zz = (phase.evaluate(th, z + d)["f_z"] - phase.evaluate(th, z - d)["f_z"]) / (2 * d)
        assert np.allclose(vals["f_thth"], fd_thth, atol=1e-6)
        assert np.allclose(vals["f_zz"], fd_zz, atol=1e-6)

    def test_requires_hyperbolic(self, torus_outer):
        with pytest.raises(GeometryError):
            solve_transport(torus_outer)

    def test_naive_phase_leaves_bracket(self, torus_inner):
        th, z = np.linspace(0.1, 0.9, 20), np.linspace(0.02, 0.18, 20)
        assert np.max(np.abs(transport_bracket(torus_inner, LinearPhase(), th, z))) > 0.1


class TestRegime1:
    def test_warns_outside_regime(self):
        shell = ShellDomain(make_cylinder(1.0, 0.5), 1e-3)
        with pytest.warns(RegimeWarning):
            regime1_field(shell)

    def test_dirichlet_and_scale(self):
        h = 1e-3
        shell = ShellDomain(make_cylinder(1.0, h ** 0.75), h)
        f = regime1_field(shell)
        assert f.dirichlet and f.theta_scale == pytest.approx(1 / math.sqrt(h))

    def test_ratio_order_at_h_1e3(self):
        h = 1e-3
        eps = h ** 0.75
        shell = ShellDomain(make_cylinder(1.0, eps), h)
        rep = ansatz_report(shell, regime1_field(shell))
        assert rep.ratio <= 20 * h * h / eps ** 2
        assert rep.predicted_ratio_scale == pytest.approx(h ** 2 / eps ** 2)

    @pytest.mark.xfail(strict=False, reason="prefactor is about 8 on this family; only the order is guaranteed")
    def test_ratio_within_factor_4_at_h_2m10(self):
        h = 2.0 ** -10
        eps = h ** 0.75
        shell = ShellDomain(make_cylinder(1.0, eps), h)
        ratio = ansatz_report(shell, regime1_field(shell)).ratio
        assert 0.25 <= ratio / (h * h / eps ** 2) <= 4.0

    def test_norm_orders(self):
        # strain and gradient norms against their predicted orders on two thicknesses
        vals = []
        for h in (2.0 ** -8, 2.0 ** -12):
            eps = h ** 0.75
            shell = ShellDomain(make_cylinder(1.0, eps), h)
            s = ansatz_report(shell, regime1_field(shell))
            e_pred = max(math.sqrt(h * eps), (h / eps) ** 1.5, h / math.sqrt(eps))
            g_pred = max(math.sqrt(h / eps), math.sqrt(eps))
            vals.append((math.sqrt(s.norm_strain_sq) / e_pred, math.sqrt(s.norm_grad_sq) / g_pred))
        # the normalized norms stay O(1) as h shrinks 16-fold
        for (e0, g0), (e1, g1) in [vals]:
            assert 0.1 < e1 / e0 < 10 and 0.1 < g1 / g0 < 10

    def test_profile_robustness(self):
        factors = []
        for k in (6, 9, 12):
            h = 2.0 ** -k
            shell = ShellDomain(make_cylinder(1.0, h ** 0.75), h)
            a = ansatz_report(shell, regime1_field(shell, BumpProfile())).ratio
            b = ansatz_report(shell, regime1_field(shell, BumpProfile("poly", 4))).ratio
            factors.append(max(a / b, b / a))
        assert max(factors) < 10


class TestHyperbolic:
    def test_requires_hyperbolic(self, cylinder_shell):
        with pytest.raises(GeometryError):
            hyperbolic_field(cylinder_shell)

    def test_frequency_and_scale(self):
        h, eps = 2.0 ** -10, 0.2
        shell = ShellDomain(make_torus_band(2.0, 1.0, "inner", eps), h)
        f = hyperbolic_field(shell)
        assert f.frequency == pytest.approx((eps * h) ** (-1 / 3))
        assert f.theta_scale > f.frequency / 10

    def test_inflation_grows_with_frequency(self):
        # the naive phase leaves an O(n) term in e_23 that the transport phase removes,
        # so the inflation factor grows roughly linearly in n while h n^2 stays small
        shell = ShellDomain(make_torus_band(2.0, 1.0, "inner", 1.0), 2.0 ** -14)
        phase = solve_transport(shell.patch)
        inflation = []
        for n in (8.0, 32.0):
            good = ansatz_report(shell, hyperbolic_field(shell, phase=phase, frequency=n)).strain_entries[1, 2]
            naive = ansatz_report(shell, hyperbolic_field(shell, phase=LinearPhase(), frequency=n)).strain_entries[1, 2]
            inflation.append(math.sqrt(naive / good))
        assert inflation[0] > 1.0
        assert inflation[1] > 2.5 * inflation[0]

    def test_ratio_order(self):
        h = 2.0 ** -10
        shell = ShellDomain(make_torus_band(2.0, 1.0, "inner", 1.0), h)
        ratio = ansatz_report(shell, hyperbolic_field(shell)).ratio
        assert ratio < 100 * h ** (4 / 3)

    @pytest.mark.xfail(strict=False, reason="prefactor is about 56 on the inner band; only the order is guaranteed")
    def test_ratio_within_factor_4(self):
        h = 2.0 ** -10
        shell = ShellDomain(make_torus_band(2.0, 1.0, "inner", 1.0), h)
        ratio = ansatz_report(shell, hyperbolic_field(shell)).ratio
        assert 0.25 <= ratio / h ** (4 / 3) <= 4.0


class TestDevelopable:
    def test_cylinder_case1_pde(self):
        shell = ShellDomain(make_developable(0.0, 1.0, 1.0, (0.0, 1.0), 1.0), 2.0 ** -8)
        f = developable_field_case1(shell)
        th, z = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41), indexing="ij")
        assert developable_pde_residual(f, th, z) < 1e-12
        assert f.frequency == pytest.approx(shell.h ** -0.25)

    def test_case1_needs_factorization(self):
        patch = make_developable((0.0, 1.0), (1.0, 0.0, 1.0), 1.0, (0.0, 1.0), 1.0)
        with pytest.raises(FactorizationError):
            case1_factorization(patch.developable)
        with pytest.raises(FactorizationError):
            developable_field_case1(ShellDomain(patch, 0.01))

    def test_proportional_coefficients_factor(self):
        patch = make_developable((0.5, 0.5), (1.0, 1.0), 1.0, (0.0, 1.0), 1.0)
        which, lam0 = case1_factorization(patch.developable)
        assert which in ("a", "b")
        assert lam0 == pytest.approx(2.0 if which == "b" else 0.5)

    def test_case2_pde(self):
        patch = make_developable(1.0, (0.0, 1.0), 1.0, (0.0, 1.0), 1.0, z_lower=1.0)
        f = developable_field_case2(ShellDomain(patch, 2.0 ** -8))
        th, z = np.meshgrid(np.linspace(0, 1, 41), np.linspace(1, 2, 41), indexing="ij")
        assert developable_pde_residual(f, th, z) < 1e-10

    def test_case2_zero_cutoff_gives_zero_field(self):
        patch = make_developable(1.0, (0.0, 1.0), 1.0, (0.0, 1.0), 1.0, z_lower=1.0)
        shell = ShellDomain(patch, 2.0 ** -6)
        f = developable_field_case2(shell, cutoff_scale=0.0)
        u, du = f.evaluate(np.zeros(10), np.linspace(0, 1, 10), np.linspace(1, 2, 10))
        assert not np.any(u) and not np.any(du)
        with pytest.raises(ValueError, match="zero field"):
            ansatz_report(shell, f)

    def test_case2_rejects_constant_rho(self):
        patch = make_developable(1.0, 1.0, 1.0, (0.0, 1.0), 1.0)
        with pytest.raises(GeometryError):
            developable_field_case2(ShellDomain(patch, 0.01))

    def test_case1_ratio_order(self):
        h = 2.0 ** -10
        shell = ShellDomain(make_developable(0.0, 1.0, 1.0, (0.0, 1.0), 1.0), h)
        ratio = ansatz_report(shell, developable_field_case1(shell)).ratio
        assert ratio < 100 * h ** 1.5


def test_zero_field_report_is_an_error(cylinder_shell):
    with pytest.raises(ValueError, match="zero field"):
        ansatz_report(cylinder_shell, ZeroField(), grid=QuadratureGrid())


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), m=st.integers(4, 10))
def test_kirchhoff_normal_row_property(seed, m):
    rng = np.random.default_rng(seed)
    patch = make_torus_band(2.0, 1.0, "outer", 0.2)
    shell = ShellDomain(patch, 0.01)
    prof = BumpProfile("poly", m)
    amp = rng.normal(size=3)

    def make(k):
        def fn(theta, z, order):
            th = Jet.variable(theta, 0, order)
            zeta = Jet.variable(z, 1, order) * 5.0
            return prof.surface(th, zeta) * amp[k]
        return fn

    f = kirchhoff_lift(shell, make(0), make(1), make(2))
    E = strain_at(shell, f, midsurface_points(patch, 200, rng)).values
    assert np.max(np.abs(E[:, 0, :])) < 1e-10
