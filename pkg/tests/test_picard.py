"""Duhamel operator and Picard iteration tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gardnercert import (
    GridSpec,
    NonlinearOverflowError,
    PicardDivergenceError,
    QuadratureNodeError,
    RealGridFunction,
    SpectralFunction,
    StepPlan,
    TimeSlab,
    airy_propagator,
    choose_step,
    duhamel_integral,
    duhamel_operator,
    forward,
    free_slab,
    inverse,
    nonlinearity,
    picard_solve,
    required_iterations,
    sobolev_norm,
)
from gardnercert import profiles
from gardnercert.grid import _xi_cubed
from gardnercert.picard import quadrature_weights


def constant_slab(phi_hat, T, M):
    nodes = (T / M) * np.arange(M + 1)
    return TimeSlab(0.0, T, nodes, tuple(phi_hat for _ in range(M + 1)))


class TestQuadratureWeights:
    @pytest.mark.parametrize("m_total", [2, 4, 8, 16])
    def test_rows_integrate_constants(self, m_total):
        h = 0.05
        w = quadrature_weights(m_total, h)
        taus = h * np.arange(m_total + 1)
        assert np.allclose(w.sum(axis=1), taus, atol=1e-15)

    def test_rows_integrate_cubics(self):
        # every row except m=1 (quadratic-exact only) is exact on cubics
        h = 0.125
        w = quadrature_weights(8, h)
        taus = h * np.arange(9)
        got = w @ taus**3
        want = taus**4 / 4.0
        err = np.abs(got - want)
        assert err[0] == 0.0
        assert np.all(err[2:] < 1e-16)
        assert err[1] == pytest.approx(6.0 * h**4 / 24.0, rel=1e-10)

    def test_odd_panel_count_rejected(self):
        with pytest.raises(QuadratureNodeError):
            quadrature_weights(7, 0.1)


class TestNonlinearity:
    def test_zero(self):
        g = GridSpec(10.0, 64)
        out = nonlinearity(SpectralFunction(g, np.zeros(64, complex)))
        assert np.all(out.coeffs == 0)

    def test_constant_field(self):
        g = GridSpec(10.0, 64)
        out = nonlinearity(forward(RealGridFunction(g, np.full(64, 0.7))))
        assert np.abs(out.coeffs).max() < 1e-15

    def test_small_sine_against_closed_form(self):
        # u = eps sin(pi x / L): d/dx(u^2/2) = eps^2 (pi/L)/2 sin(2 pi x/L),
        # and the cubic part is O(eps^3) < 1e-9
        g = GridSpec(10.0, 128)
        eps = 1e-3
        k = np.pi / g.half_length
        u = RealGridFunction(g, eps * np.sin(k * g.x))
        out = nonlinearity(forward(u))
        closed = forward(RealGridFunction(g, 0.5 * eps**2 * k * np.sin(2.0 * k * g.x)))
        assert np.abs(out.coeffs - closed.coeffs).max() < 1e-9
        mags = np.abs(out.coeffs)
        lead = set(np.abs(g.mode_numbers[np.flatnonzero(mags > 0.5 * mags.max())]))
        assert lead == {2}

    def test_mass_flux_mode_zero_exact(self):
        g = GridSpec(10.0, 128)
        f = RealGridFunction(g, np.random.default_rng(7).standard_normal(128))
        out = nonlinearity(forward(f))
        assert abs(out.coeffs[0]) <= 1e-15

    def test_overflow_carries_magnitude(self):
        g = GridSpec(10.0, 64)
        big = SpectralFunction(g, forward(RealGridFunction(g, np.full(64, 1e140))).coeffs)
        with pytest.raises(NonlinearOverflowError) as exc:
            nonlinearity(big)
        assert exc.value.max_abs > 1e120


class TestDuhamelIntegral:
    def test_zero_slab(self):
        g = GridSpec(16.0, 64)
        slab = constant_slab(SpectralFunction(g, np.zeros(64, complex)), 0.1, 8)
        out = duhamel_integral(slab, 0.1)
        assert np.all(out.coeffs == 0)

    def test_constant_integrand_closed_form(self):
        # constant-in-time slab makes the nonlinearity constant, so the
        # integral has the closed form g * (exp(i xi^3 t) - 1) / (i xi^3)
        g = GridSpec(16.0, 64)
        w = profiles.gaussian(g, 0.5, 3.0)
        ghat = nonlinearity(forward(w)).coeffs
        T = 0.1
        slab = constant_slab(forward(w), T, 8)
        xi3 = _xi_cubed(g)
        for t in (T, 3 * T / 8, T / 8):
            out = duhamel_integral(slab, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                closed = np.where(xi3 != 0.0, ghat * (np.exp(1j * xi3 * t) - 1.0) / (1j * xi3), ghat * t)
            assert np.abs(out.coeffs - closed).max() < 1e-9

    def test_halving_nodes_is_fourth_order(self):
        g = GridSpec(16.0, 64)
        w = profiles.gaussian(g, 0.5, 3.0)
        ghat = nonlinearity(forward(w)).coeffs
        T = 0.1
        xi3 = _xi_cubed(g)
        with np.errstate(divide="ignore", invalid="ignore"):
            closed = np.where(xi3 != 0.0, ghat * (np.exp(1j * xi3 * T) - 1.0) / (1j * xi3), ghat * T)
        errs = []
        for m in (8, 16):
            out = duhamel_integral(constant_slab(forward(w), T, m), T)
            errs.append(np.abs(out.coeffs - closed).max())
        assert errs[0] / errs[1] >= 12.0

    def test_off_node_time_rejected(self):
        g = GridSpec(16.0, 64)
        slab = constant_slab(forward(profiles.gaussian(g, 0.1, 2.0)), 0.1, 8)
        with pytest.raises(QuadratureNodeError, match="not a quadrature node"):
            duhamel_integral(slab, 0.013)

    def test_odd_node_slab_rejected(self):
        g = GridSpec(16.0, 64)
        phi = forward(profiles.gaussian(g, 0.1, 2.0))
        nodes = (0.1 / 3) * np.arange(4)
        slab = TimeSlab(0.0, 0.1, nodes, tuple(phi for _ in range(4)))
        with pytest.raises(QuadratureNodeError, match="even"):
            duhamel_integral(slab, 0.1)


class TestDuhamelOperator:
    def test_zero_fixed_point(self):
        g = GridSpec(16.0, 64)
        zero = SpectralFunction(g, np.zeros(64, complex))
        slab = constant_slab(zero, 0.05, 8)
        out = duhamel_operator(slab, zero)
        for v in out.values:
            assert np.all(v.coeffs == 0)

    def test_zero_slab_gives_free_flow(self):
        g = GridSpec(16.0, 64)
        phi = forward(profiles.gaussian(g, 0.2, 2.0))
        zero = SpectralFunction(g, np.zeros(64, complex))
        slab = constant_slab(zero, 0.05, 8)
        out = duhamel_operator(slab, phi)
        for tau, v in zip(out.nodes, out.values):
            want = airy_propagator(phi, float(tau)).coeffs
            assert np.abs(v.coeffs - want).max() < 1e-14

    def test_second_sweep_within_geometric_bound(self):
        # two applications from the zero seed: sup-node difference obeys
        # (1/2) (3+T)^(1/2) ||phi||_3 when the plan is admissible
        g = GridSpec(30.0, 256)
        phi = profiles.scaled_to_norm(profiles.gaussian(g, 1.0, 2.0), 0.1, 3)
        phi_hat = forward(phi)
        r = sobolev_norm(phi_hat, 3)
        T = choose_step(3, r)
        zero = SpectralFunction(g, np.zeros(256, complex))
        first = duhamel_operator(constant_slab(zero, T, 8), phi_hat)
        second = duhamel_operator(first, phi_hat)
        worst = max(
            sobolev_norm(SpectralFunction(g, a.coeffs - b.coeffs), 3)
            for a, b in zip(second.values, first.values)
        )
        assert worst <= 0.5 * math.sqrt(3.0 + T) * r


class TestRequiredIterations:
    def test_zero_norm(self):
        assert required_iterations(0.0, 0.5, 1e-6) == 0

    def test_frozen_example(self):
        # 2^-8 sqrt(3) = 0.00677 <= 0.01 < 2^-7 sqrt(3)
        assert required_iterations(1.0, 1e-12, 0.01) == 8

    @settings(max_examples=50, deadline=None)
    @given(
        r=st.floats(0, 100),
        T=st.floats(1e-9, 2.0),
        eps=st.floats(1e-12, 1.0),
    )
    def test_definition_and_monotonicity(self, r, T, eps):
        j = required_iterations(r, T, eps)
        assert 0.5**j * math.sqrt(3.0 + T) * r <= eps
        if j > 0:
            assert 0.5 ** (j - 1) * math.sqrt(3.0 + T) * r > eps
        assert required_iterations(r, T, 2.0 * eps) <= j


class TestPicardSolve:
    def test_zero_data(self):
        g = GridSpec(16.0, 64)
        zero = SpectralFunction(g, np.zeros(64, complex))
        slab, report = picard_solve(zero, StepPlan(0.01, 2, 8, "certified"), 3)
        for v in slab.values:
            assert np.all(v.coeffs == 0)
        assert np.all(report.diffs == 0)

    def test_truncation_bound_by_construction(self):
        r, T, eps = 0.7, 1e-4, 1e-8
        j = required_iterations(r, T, eps)
        assert 0.5**j * math.sqrt(3.0 + T) * r <= eps

    def test_initial_node_is_exactly_phi(self):
        g = GridSpec(30.0, 256)
        phi_hat = forward(profiles.gaussian(g, 0.3, 2.0))
        T = choose_step(3, sobolev_norm(phi_hat, 3))
        slab, _ = picard_solve(phi_hat, StepPlan(T, 6, 8, "certified"), 3)
        assert np.array_equal(slab.values[0].coeffs, phi_hat.coeffs)

    def test_linear_limit_matches_airy(self):
        g = GridSpec(30.0, 256)
        phi_hat = forward(profiles.gaussian(g, 1e-4, 2.0))
        slab, _ = picard_solve(phi_hat, StepPlan(1e-3, 6, 8, "fast"), 3, stop_tol=1e-14)
        want = airy_propagator(phi_hat, 1e-3)
        err = np.abs(slab.end_value.coeffs - want.coeffs).max()
        assert err < 1e-7
        assert err > 0  # the quadratic correction is tiny but present

    def test_amplitude_scaling_is_quadratic(self):
        g = GridSpec(30.0, 256)
        devs = []
        for a in (2e-4, 1e-4):
            phi_hat = forward(profiles.gaussian(g, a, 2.0))
            slab, _ = picard_solve(phi_hat, StepPlan(1e-3, 8, 8, "fast"), 3, stop_tol=1e-16)
            want = airy_propagator(phi_hat, 1e-3)
            devs.append(np.abs(slab.end_value.coeffs - want.coeffs).max())
        assert devs[0] / devs[1] >= 3.5

    def test_hermitian_through_many_sweeps(self):
        g = GridSpec(30.0, 256)
        phi_hat = forward(profiles.scaled_to_norm(profiles.gaussian(g, 1.0, 2.0), 0.5, 3))
        T = choose_step(3, 0.5)
        slab, _ = picard_solve(phi_hat, StepPlan(T, 30, 8, "certified"), 3)
        assert max(v.hermitian_defect()[1] for v in slab.values) < 1e-10

    def test_certified_bound_and_measured_ratios(self):
        g = GridSpec(30.0, 512)
        phi = profiles.scaled_to_norm(profiles.gaussian(g, 1.0, 2.0), 0.5, 3)
        phi_hat = forward(phi)
        r = sobolev_norm(phi_hat, 3)
        T = choose_step(3, r)
        j = required_iterations(r, T, 1e-8)
        slab, report = picard_solve(phi_hat, StepPlan(T, j, 8, "certified"), 3)
        assert report.bound_satisfied
        assert np.all(report.diffs <= 1.25 * report.predicted_bound)
        meaningful = report.diffs[:-1] > 1e-13 * r
        assert np.all(report.ratios[meaningful[: len(report.ratios)]] <= 0.6)

    def test_divergence_raises(self):
        g = GridSpec(20.0, 256)
        phi_hat = forward(profiles.gaussian(g, 3.0, 1.5))
        with pytest.raises(PicardDivergenceError, match="smaller step"):
            picard_solve(phi_hat, StepPlan(0.5, 40, 8, "fast"), 3, stop_tol=1e-14)

    def test_fast_stop_honors_tolerance(self):
        g = GridSpec(30.0, 256)
        phi_hat = forward(profiles.gaussian(g, 0.05, 2.0))
        _, report = picard_solve(phi_hat, StepPlan(1e-3, 50, 8, "fast"), 3, stop_tol=1e-9)
        assert report.J_used < 50
        assert report.diffs[-1] <= 1e-9


class TestFreeSlab:
    def test_nodes_and_seed(self):
        g = GridSpec(16.0, 64)
        phi_hat = forward(profiles.gaussian(g, 0.2, 2.0))
        slab = free_slab(phi_hat, 0.0, 0.08, 8)
        assert len(slab.values) == 9
        assert slab.nodes[-1] == pytest.approx(0.08)
        want = airy_propagator(phi_hat, float(slab.nodes[3])).coeffs
        assert np.abs(slab.values[3].coeffs - want).max() < 1e-15
