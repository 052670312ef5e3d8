"""Energy functionals, balances, profiles, entropy, decay fits."""

import math

import numpy as np
import pytest

from vns2d.diagnostics import (
    DiagnosticsRow,
    ProfileAccumulator,
    balance_residuals,
    dissipation,
    entropy,
    entropy_bound,
    fit_decay,
    kinetic_energy,
    lambda0_scale,
    lyapunov_record,
    modulated_energy,
    trace_cubed_pressure_integral,
    u_infinity,
    u_infinity_inhomogeneous,
    uinfty_identity_residual,
    w1_upper_bound,
)
from vns2d.particles import ParticleEnsemble, deposit_moments, gather_velocity
from vns2d.spectral import ScalarField, TorusGrid, VectorField, phase_shift

from conftest import lowmode_scalar, lowmode_solenoidal, random_scalar


def zero_u(grid):
    return VectorField(grid, np.zeros((2, grid.n, grid.n)), div_free=True)


def single_particle(x, v, w=1.0):
    return ParticleEnsemble(np.array([x]), np.array([v]), np.array([w]))


def _row(t, E, D, H, mass=1.0, px=0.0, py=0.0, res=0.0):
    return DiagnosticsRow(
        t=t, E=E, D=D, H=H, mass=mass, px=px, py=py,
        mean_ux=0, mean_uy=0, uinf_x=0, uinf_y=0,
        energy_residual=0, modulated_residual=0,
        grad_u_L2=0, grad2_u_L2=0, grad_P_L2=0, udot_L2=0,
        nf_Linf=0, jf_Linf=0, ef_Linf=0, grad_u_Linf=0, lip_budget=0,
        entropy=0, w1_bound=0, nf_profile_Hm1=0, pressure_cross_term=0,
        uinftybis_residual=res,
    )


class TestEnergies:
    def test_particle_only_values(self, grid16):
        ens = single_particle([0.2, 0.3], [2.0, 0.0])
        assert kinetic_energy(zero_u(grid16), ens) == pytest.approx(2.0)
        assert dissipation(zero_u(grid16), ens) == pytest.approx(4.0)

    def test_monokinetic_consistent_state_has_zero_dissipation(self, grid16, rng):
        c = np.array([0.7, -0.4])
        ens = ParticleEnsemble(
            rng.random((100, 2)), np.tile(c, (100, 1)), np.full(100, 0.01)
        )
        u = VectorField.constant(grid16, c)
        assert dissipation(u, ens) == pytest.approx(0.0, abs=1e-26)

    def test_grid_and_parseval_quadratures_agree(self, grid32, rng):
        u = lowmode_solenoidal(grid32, rng)
        spectral = kinetic_energy(u, None)
        grid_quad = 0.5 * float((u.values**2).sum()) * grid32.cell_area
        assert abs(spectral - grid_quad) <= 1e-10 * max(grid_quad, 1e-300)


class TestModulatedEnergy:
    def test_equilibrium_is_zero(self, grid16, rng):
        c = np.array([0.5, 0.1])
        ens = ParticleEnsemble(
            rng.random((50, 2)), np.tile(c, (50, 1)), np.full(50, 0.02)
        )
        assert modulated_energy(VectorField.constant(grid16, c), ens) == pytest.approx(
            0.0, abs=1e-28
        )

    def test_coupling_term_arithmetic(self, grid16):
        # u = 0, all V = (1,0), unit mass on the unit torus:
        # H = 0 + 0 + (1/2) * (1/(1+1)) * 1 = 1/4
        ens = ParticleEnsemble(
            np.random.default_rng(0).random((4, 2)),
            np.tile([1.0, 0.0], (4, 1)),
            np.full(4, 0.25),
        )
        assert modulated_energy(zero_u(grid16), ens) == pytest.approx(0.25, rel=1e-14)

    def test_two_evaluations_agree(self, grid32, rng):
        # definition vs the re-expansion H = E - bulk terms + coupling
        u_fluct = lowmode_solenoidal(grid32, rng)
        u = VectorField(grid32, u_fluct.values + np.array([0.3, -0.2])[:, None, None])
        ens = ParticleEnsemble(
            rng.random((200, 2)), rng.standard_normal((200, 2)), rng.random(200) * 0.01
        )
        h = modulated_energy(u, ens)
        area = grid32.area
        mass = ens.total_mass()
        vbar = ens.mean_velocity()
        mean_u = u.mean()
        e = kinetic_energy(u, ens)
        mean_n = mass / area
        h_alt = (
            e
            - 0.5 * area * float(mean_u @ mean_u)
            - 0.5 * mass * float(vbar @ vbar)
            + 0.5 * (mass / (mean_n + 1.0)) * float((mean_u - vbar) @ (mean_u - vbar))
        )
        assert h == pytest.approx(h_alt, rel=1e-10)

    def test_never_exceeds_total_energy(self, grid16, rng):
        for _ in range(10):
            u_f = lowmode_solenoidal(grid16, rng)
            u = VectorField(
                grid16, u_f.values + rng.standard_normal(2)[:, None, None]
            )
            ens = ParticleEnsemble(
                rng.random((50, 2)), rng.standard_normal((50, 2)), rng.random(50)
            )
            assert modulated_energy(u, ens) <= kinetic_energy(u, ens) * (1 + 1e-12)

    def test_equals_energy_when_bulk_means_vanish(self, grid16, rng):
        u_raw = lowmode_solenoidal(grid16, rng)
        u = VectorField(
            grid16, u_raw.values - u_raw.mean()[:, None, None], div_free=True
        )
        v = rng.standard_normal((60, 2))
        v -= v.mean(axis=0)  # equal weights: mass-weighted mean vanishes
        ens = ParticleEnsemble(rng.random((60, 2)), v, np.full(60, 1.0 / 60))
        assert modulated_energy(u, ens) == pytest.approx(
            kinetic_energy(u, ens), rel=1e-12
        )

    def test_empty_ensemble_degenerates_to_fluid_fluctuation(self, grid16, rng):
        u_raw = lowmode_solenoidal(grid16, rng)
        u = VectorField(
            grid16, u_raw.values - u_raw.mean()[:, None, None], div_free=True
        )
        h = modulated_energy(u, None)
        assert h == pytest.approx(kinetic_energy(u, None), rel=1e-12)

    def test_inhomogeneous_equilibrium(self, grid16, rng):
        c = np.array([0.2, 0.0])
        rho = ScalarField(grid16, 1.0 + 0.5 * np.cos(2 * np.pi * grid16.x1))
        ens = ParticleEnsemble(
            rng.random((50, 2)), np.tile(c, (50, 1)), np.full(50, 0.02)
        )
        h = modulated_energy(VectorField.constant(grid16, c), ens, rho=rho)
        assert h == pytest.approx(0.0, abs=1e-28)


class TestUInfinity:
    def test_particle_free_limit(self):
        np.testing.assert_allclose(
            u_infinity(np.array([0.4, -0.1]), np.zeros(2), 0.0), [0.4, -0.1]
        )

    def test_arithmetic(self):
        np.testing.assert_allclose(
            u_infinity(np.array([0.1, 0.0]), np.array([0.1, 0.0]), 1.0), [0.1, 0.0]
        )

    def test_inhomogeneous_arithmetic(self):
        # rho0 = 2, <rho0 u0> = (0.4, 0), j = 0, n = 0 -> (0.2, 0)
        np.testing.assert_allclose(
            u_infinity_inhomogeneous(np.array([0.4, 0.0]), np.zeros(2), 0.0, 2.0),
            [0.2, 0.0],
        )

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            u_infinity(np.zeros(2), np.zeros(2), -1.0)

    def test_identity_residual_vanishes_under_conservation(self, rng):
        # any state sharing the initial totals satisfies the bulk identity
        mean_n = 0.7
        u_inf = u_infinity(np.array([0.3, 0.1]), np.array([0.2, -0.1]), mean_n)
        # pick <u> freely, set <j> by momentum conservation
        bulk_u = rng.standard_normal(2)
        mean_j = np.array([0.3 + 0.2, 0.1 - 0.1]) - bulk_u
        res = uinfty_identity_residual(bulk_u, mean_j, mean_n, u_inf)
        assert res < 1e-14


class TestBalanceResiduals:
    def test_equilibrium_rows(self):
        rows = [_row(0.0, 1.0, 0.0, 0.0), _row(1.0, 1.0, 0.0, 0.0)]
        out = balance_residuals(rows)
        assert out["max_energy_residual"] == 0.0
        assert out["max_modulated_residual"] == 0.0
        assert out["max_mass_drift"] == 0.0
        assert out["max_momentum_drift"] == 0.0

    def test_exact_trapezoid_on_linear_data(self):
        # D constant, E linear: trapezoid is exact
        d = 0.3
        rows = [_row(t, 1.0 - d * t, d, 0.5) for t in np.linspace(0, 2, 9)]
        out = balance_residuals(rows)
        assert out["max_energy_residual"] < 1e-14

    def test_requires_two_rows(self):
        with pytest.raises(ValueError):
            balance_residuals([_row(0.0, 1.0, 0.0, 0.0)])


class TestW1Surrogate:
    def test_matched_monokinetic_state_is_zero(self, grid16, rng):
        u_inf = np.array([0.3, 0.0])
        ens = ParticleEnsemble(
            rng.random((40, 2)), np.tile(u_inf, (40, 1)), np.full(40, 1 / 40)
        )
        base = ScalarField(grid16, np.ones((16, 16)))
        assert w1_upper_bound(ens, u_inf, base, base) == pytest.approx(0.0, abs=1e-13)

    def test_unit_velocity_offset(self, grid16, rng):
        u_inf = np.array([0.2, 0.1])
        v = np.tile(u_inf + np.array([1.0, 0.0]), (40, 1))
        ens = ParticleEnsemble(rng.random((40, 2)), v, np.full(40, 1 / 40))
        assert w1_upper_bound(ens, u_inf) == pytest.approx(1.0, rel=1e-12)


class TestProfileAccumulator:
    def test_equilibrium_returns_base_exactly(self, grid16, rng):
        base = ScalarField(grid16, 1.0 + 0.3 * np.cos(2 * np.pi * grid16.x1))
        acc = ProfileAccumulator(base=base, u_inf=np.array([0.25, 0.0]))
        zero_flux = VectorField(grid16, np.zeros((2, 16, 16)))
        for t in np.linspace(0.0, 2.0, 11):
            acc.accumulate(float(t), zero_flux)
        out = acc.finalize()
        np.testing.assert_array_equal(out.values, base.values)
        assert acc.t_truncation == 2.0

    def test_zero_drift_shift_is_plain_time_integral(self, grid16, rng):
        base = ScalarField(grid16, np.ones((16, 16)))
        acc = ProfileAccumulator(base=base, u_inf=np.zeros(2))
        flux = lowmode_solenoidal(grid16, rng)
        times = np.linspace(0.0, 1.0, 6)
        for t in times:
            acc.accumulate(float(t), flux)
        # constant integrand: integral = flux * (t_end - t_0)
        from vns2d.spectral import divergence

        out = acc.finalize()
        expected = base.values - divergence(flux).values * 1.0
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_finalize_before_accumulate_rejected(self, grid16):
        acc = ProfileAccumulator(
            base=ScalarField(grid16, np.ones((16, 16))), u_inf=np.zeros(2)
        )
        with pytest.raises(ValueError):
            acc.finalize()

    def test_mean_preserved(self, grid16, rng):
        base = ScalarField(grid16, 1.0 + 0.3 * np.cos(2 * np.pi * grid16.x1))
        acc = ProfileAccumulator(base=base, u_inf=np.array([0.1, 0.2]))
        for t in np.linspace(0.0, 1.0, 6):
            acc.accumulate(float(t), lowmode_solenoidal(grid16, rng))
        out = acc.finalize()
        assert out.mean() == pytest.approx(base.mean(), abs=1e-13)


class TestLyapunovRecord:
    def test_zero_velocity(self, grid16):
        p = ScalarField(grid16, np.zeros((16, 16)))
        out = lyapunov_record(zero_u(grid16), p, None, None, zero_u(grid16))
        for key in ("grad_u_sq", "grad2_u_sq", "grad_p_sq", "grad_u_sup",
                    "pressure_cross_term", "udot_sq"):
            assert out[key] == 0.0

    def test_stokes_eigenmode_gradient_norm(self, grid32):
        a = 0.7
        vals = np.zeros((2, 32, 32))
        vals[0] = a * np.sin(2 * np.pi * grid32.x2)
        u = VectorField(grid32, vals, div_free=True)
        p = ScalarField(grid32, np.zeros((32, 32)))
        out = lyapunov_record(u, p, None, None)
        u_l2_sq = 0.5 * a**2  # |T^2| = 1
        assert out["grad_u_sq"] == pytest.approx(4 * np.pi**2 * u_l2_sq, rel=1e-12)
        assert out["pressure_cross_term"] == 0.0

    def test_trace_cubed_identity_on_random_solenoidal_fields(self, grid32, rng):
        # pointwise Tr(A^3) = 0 for traceless A: the integral against any
        # pressure fluctuation sits at rounding level (50 draws).
        for _ in range(50):
            u = lowmode_solenoidal(grid32, rng, k_max=5)
            p = lowmode_scalar(grid32, rng, k_max=5)
            val = trace_cubed_pressure_integral(u, p)
            assert abs(val) <= 1e-10


class TestEntropy:
    def test_uniform_density(self, grid16):
        assert entropy(ScalarField(grid16, np.ones((16, 16)))) == pytest.approx(0.0)

    def test_half_torus_arithmetic(self, grid16):
        vals = np.where(grid16.x1 < 0.5, 2.0, 0.0)
        assert entropy(ScalarField(grid16, vals)) == pytest.approx(
            math.log(2.0), rel=1e-12
        )

    def test_zero_log_zero_convention(self, grid16):
        vals = np.zeros((16, 16))
        assert entropy(ScalarField(grid16, vals)) == 0.0

    def test_rejects_negative(self, grid16):
        with pytest.raises(ValueError):
            entropy(ScalarField(grid16, -np.ones((16, 16))))

    def test_affine_bound_shape(self):
        b0 = entropy_bound(0.0, 1.0, 2.0, 1.0, 0.5)
        b1 = entropy_bound(1.0, 1.0, 2.0, 1.0, 0.5)
        assert b1 - b0 == pytest.approx(2.0)  # slope = mass
        assert b0 == pytest.approx(1.0 + math.log(2 * math.pi) * 2.0 + 2 / math.e + 0.5)


class TestFitDecay:
    def test_exact_exponential(self):
        t = np.linspace(0, 10, 50)
        res = fit_decay(t, 2.0 * np.exp(-0.5 * t), "exponential")
        assert res.rate == pytest.approx(0.5, rel=1e-12)
        assert res.r_squared == pytest.approx(1.0, abs=1e-12)
        assert not res.floored

    def test_exact_power_law(self):
        t = np.linspace(0, 10, 50)
        res = fit_decay(t, (1 + t) ** -2.0, "algebraic")
        assert res.rate == pytest.approx(-2.0, rel=1e-12)
        assert res.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_window_selection(self):
        t = np.linspace(0, 10, 101)
        v = np.exp(-t) + 0.0
        v[t < 2] = 5.0  # garbage outside the window
        res = fit_decay(t, v, "exponential", window=(2.0, 10.0))
        assert res.rate == pytest.approx(1.0, rel=1e-10)

    def test_floor_flag_on_nonpositive(self):
        t = np.linspace(0, 1, 20)
        v = np.exp(-t)
        v[5] = 0.0
        res = fit_decay(t, v, "exponential")
        assert res.floored

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_decay([0, 1, 2], [1, 0.5, 0.25], "exponential")

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            fit_decay(np.arange(20.0), np.ones(20), "cubic")


def test_lambda0_scale():
    assert lambda0_scale(1.0, math.e - 1.0) == pytest.approx(0.5, rel=1e-12)
    assert lambda0_scale(1.0, math.inf) == 0.0


def test_dissipation_free_state_kills_first_two_terms(grid16, rng):
    # D = 0 (u constant on nodes and V = u(X)): the fluid-fluctuation and
    # particle-fluctuation parts of H vanish; only the coupling term can
    # survive when <u> differs from the particle mean... but V = u(X) = <u>
    # here, so H = 0 entirely.
    c = np.array([0.4, -0.6])
    u = VectorField.constant(grid16, c)
    ens = ParticleEnsemble(
        rng.random((30, 2)), np.tile(c, (30, 1)), np.full(30, 1 / 30)
    )
    assert dissipation(u, ens) == pytest.approx(0.0, abs=1e-28)
    assert modulated_energy(u, ens) == pytest.approx(0.0, abs=1e-28)
