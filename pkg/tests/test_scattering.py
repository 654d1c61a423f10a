"""Bloch dynamics, the RK4 integrator and the reflection formulas."""

import math

import numpy as np
import pytest

from mirroratom import (AtomState, DriveSettings, RateSet, bloch_steady_state,
                        integrate_bloch, reflection_full, reflection_power,
                        reflection_weak, steady_state_by_integration)
from mirroratom.constants import TWO_PI
from mirroratom.errors import DegenerateRates, StepUnderflow
from mirroratom.scattering import GROUND_STATE

MHZ = TWO_PI * 1e6


def rates_mhz(gamma1, gamma_phi):
    return RateSet(gamma1=gamma1 * MHZ, gamma_phi=gamma_phi * MHZ)


def drive_mhz(rabi, detuning):
    return DriveSettings(omega_p=0.0, rabi=rabi * MHZ, detuning=detuning * MHZ)


def random_rates_and_drive(rng, max_ratio=20.0):
    """Random parameter tuple with bounded dynamic range so fixed-step
    integration stays cheap."""
    gamma1 = rng.uniform(1.0, max_ratio)
    gamma_phi = rng.uniform(0.05, max_ratio / 4.0)
    rabi = rng.uniform(0.5, max_ratio)
    detuning = rng.uniform(-max_ratio, max_ratio)
    return rates_mhz(gamma1, gamma_phi), drive_mhz(rabi, detuning)


class TestTypes:
    def test_gamma_is_derived(self):
        r = rates_mhz(20.0, 1.0)
        assert r.gamma == pytest.approx(0.5 * r.gamma1 + r.gamma_phi, rel=1e-15)

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            RateSet(gamma1=-1.0, gamma_phi=0.0)

    def test_drive_for_atom_detuning_is_exact(self):
        d = DriveSettings.for_atom(omega_a=5.0, omega_p=3.0, rabi=1.0)
        assert d.detuning == 2.0

    def test_unphysical_state_rejected(self):
        with pytest.raises(ValueError):
            AtomState(sigma_minus=0.5 + 0j, sigma_z=0.9)
        with pytest.raises(ValueError):
            AtomState(sigma_minus=0j, sigma_z=1.5)


class TestSteadyState:
    def test_undriven_atom_relaxes_to_ground(self):
        state = bloch_steady_state(rates_mhz(20.0, 1.0), drive_mhz(0.0, 3.0))
        assert state.sigma_minus == 0j
        assert state.sigma_z == -1.0

    def test_saturation_limit(self):
        state = bloch_steady_state(rates_mhz(20.0, 1.0), drive_mhz(1e6, 0.0))
        assert abs(state.sigma_z) < 1e-6
        assert abs(state.sigma_minus) < 1e-2

    def test_resonant_closed_form(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 0.0)
        state = bloch_steady_state(r, d)
        expected_z = -r.gamma1 * r.gamma / (r.gamma1 * r.gamma + d.rabi ** 2)
        assert state.sigma_z == pytest.approx(expected_z, rel=1e-15)
        assert state.sigma_minus == pytest.approx(
            d.rabi * expected_z / (2.0 * r.gamma), rel=1e-15)

    def test_degenerate_rates(self):
        with pytest.raises(DegenerateRates):
            bloch_steady_state(RateSet(gamma1=0.0, gamma_phi=0.0),
                               drive_mhz(5.0, 0.0))

    def test_matches_time_domain_oracle(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 0.0)
        algebraic = bloch_steady_state(r, d)
        numeric = steady_state_by_integration(r, d)
        assert abs(algebraic.sigma_minus - numeric.sigma_minus) < 1e-8
        assert abs(algebraic.sigma_z - numeric.sigma_z) < 1e-8


class TestIntegrator:
    def test_ground_state_is_a_fixed_point(self):
        traj = integrate_bloch(rates_mhz(20.0, 1.0), drive_mhz(0.0, 0.0),
                               GROUND_STATE, duration=1e-7)
        assert np.all(np.abs(traj.sigma_minus) == 0.0)
        assert np.all(traj.sigma_z == -1.0)

    def test_free_decay_closed_form(self):
        # With no drive, <s_z>(t) = -1 + 2*exp(-Gamma_1 t) from the excited state
        r = rates_mhz(20.0, 1.0)
        excited = AtomState(sigma_minus=0j, sigma_z=1.0)
        traj = integrate_bloch(r, drive_mhz(0.0, 0.0), excited,
                               duration=3.0 / r.gamma1)
        expected = -1.0 + 2.0 * np.exp(-r.gamma1 * traj.times)
        assert np.max(np.abs(traj.sigma_z - expected)) < 1e-8

    def test_endpoint_reaches_fixed_point(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 3.0)
        traj = integrate_bloch(r, d, GROUND_STATE, duration=50.0 / r.gamma)
        fixed = bloch_steady_state(r, d)
        assert abs(traj.final.sigma_minus - fixed.sigma_minus) < 1e-8
        assert abs(traj.final.sigma_z - fixed.sigma_z) < 1e-8

    def test_physical_bound_along_trajectory(self, rng):
        for _ in range(10):
            r, d = random_rates_and_drive(rng)
            traj = integrate_bloch(r, d, GROUND_STATE, duration=10.0 / r.gamma)
            bound = 4.0 * np.abs(traj.sigma_minus) ** 2 + traj.sigma_z ** 2
            assert np.max(bound) <= 1.0 + 1e-9

    def test_sigma_plus_is_conjugate(self):
        traj = integrate_bloch(rates_mhz(20.0, 1.0), drive_mhz(5.0, 3.0),
                               GROUND_STATE, duration=1e-7)
        assert np.array_equal(traj.sigma_plus, np.conjugate(traj.sigma_minus))

    def test_step_halving_and_fourth_order_scaling(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 3.0)
        duration = 5.0 / r.gamma
        from mirroratom.scattering import default_step
        h = default_step(r, d)

        def endpoint(step):
            traj = integrate_bloch(r, d, GROUND_STATE, duration, step=step)
            return np.array([traj.final.sigma_minus, traj.final.sigma_z])

        y1, y2, y4 = endpoint(h), endpoint(h / 2.0), endpoint(h / 4.0)
        d12 = np.max(np.abs(y1 - y2))
        d24 = np.max(np.abs(y2 - y4))
        assert d12 < 1e-9
        if d24 > 1e-15:  # avoid ratio blow-up at rounding floor
            assert 10.0 < d12 / d24 < 25.0

    def test_step_underflow(self):
        r = RateSet(gamma1=1e17, gamma_phi=0.0)
        with pytest.raises(StepUnderflow):
            integrate_bloch(r, drive_mhz(0.0, 0.0),
                            AtomState(sigma_minus=0j, sigma_z=1.0), duration=1e-15)

    def test_duration_must_be_positive(self):
        with pytest.raises(ValueError):
            integrate_bloch(rates_mhz(1.0, 0.0), drive_mhz(0.0, 0.0),
                            GROUND_STATE, duration=0.0)


class TestReflectionWeak:
    def test_far_detuned_mirror_only(self):
        r = rates_mhz(20.0, 1.0)
        assert reflection_weak(r, 1e15) == pytest.approx(-1.0, abs=1e-6)
        assert reflection_weak(r, -1e15) == pytest.approx(-1.0, abs=1e-6)

    def test_resonant_value(self):
        # -1 + 20/11
        rp = reflection_weak(rates_mhz(20.0, 1.0), 0.0)
        assert rp == pytest.approx(0.8181818181818182 + 0j, rel=1e-12)

    def test_radiatively_limited_full_reflection(self):
        assert reflection_weak(rates_mhz(20.0, 0.0), 0.0) == pytest.approx(1.0 + 0j)

    def test_passivity(self, rng):
        for _ in range(100):
            r, _ = random_rates_and_drive(rng)
            delta = rng.uniform(-50.0, 50.0) * MHZ
            assert abs(reflection_weak(r, delta)) <= 1.0 + 1e-12

    def test_lorentzian_halfwidth_equals_gamma(self):
        r = rates_mhz(14.0, 2.5)
        delta = np.linspace(-10.0 * r.gamma, 10.0 * r.gamma, 4001)
        profile = np.abs(reflection_weak(r, delta)) ** 2 - 1.0
        dip = profile.min()
        half = 0.5 * dip
        below = np.where(profile <= half)[0]
        # linear interpolation of the two half-depth crossings
        i0, i1 = below[0], below[-1]
        x_left = np.interp(half, [profile[i0], profile[i0 - 1]],
                           [delta[i0], delta[i0 - 1]])
        x_right = np.interp(half, [profile[i1], profile[i1 + 1]],
                            [delta[i1], delta[i1 + 1]])
        hwhm = 0.5 * (x_right - x_left)
        assert hwhm == pytest.approx(r.gamma, rel=1e-3)


class TestReflectionPower:
    def test_zero_crossing_location(self):
        r = rates_mhz(20.0, 1.0)
        omega_zero = math.sqrt(r.gamma1 ** 2 - r.gamma1 * r.gamma)
        assert reflection_power(r, omega_zero) == pytest.approx(0.0, abs=1e-15)

    def test_weak_limit_matches_resonant_weak_probe(self):
        r = rates_mhz(20.0, 1.0)
        assert reflection_power(r, 0.0) == pytest.approx(
            reflection_weak(r, 0.0).real, rel=1e-15)

    def test_saturated_limit(self):
        assert reflection_power(rates_mhz(20.0, 1.0), 1e6 * MHZ) == pytest.approx(
            -1.0, abs=1e-6)


class TestReflectionFull:
    def test_saturated_atom_reflects_off_mirror_only(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 0.0)
        rp = reflection_full(r, d, AtomState(sigma_minus=0j, sigma_z=0.0))
        assert rp == pytest.approx(-1.0 + 0j)

    def test_weak_coherent_limit(self):
        r = rates_mhz(20.0, 0.0)
        d = drive_mhz(1e-4, 0.0)
        rp = reflection_full(r, d, bloch_steady_state(r, d))
        assert rp == pytest.approx(1.0 + 0j, abs=1e-6)

    def test_matches_resonant_closed_form(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 0.0)
        rp = reflection_full(r, d, bloch_steady_state(r, d))
        assert abs(rp - reflection_power(r, d.rabi)) < 1e-10

    def test_global_phase_flag(self):
        r, d = rates_mhz(20.0, 1.0), drive_mhz(5.0, 0.0)
        state = bloch_steady_state(r, d)
        bare = reflection_full(r, d, state)
        phased = reflection_full(r, d, state, l_over_lambda=0.3,
                                 include_global_phase=True)
        assert phased == pytest.approx(bare * np.exp(4j * math.pi * 0.3), rel=1e-12)
        assert abs(phased) == pytest.approx(abs(bare), rel=1e-12)

    def test_requires_finite_drive(self):
        with pytest.raises(ValueError):
            reflection_full(rates_mhz(20.0, 1.0), drive_mhz(0.0, 0.0), GROUND_STATE)


class TestOracleEquivalence:
    def test_steady_state_reflection_identities(self, rng):
        """Eq-level cross-checks over randomized parameters: the full
        reflection at the Bloch fixed point equals the resonant closed
        form at delta=0 and the weak-probe form as the drive vanishes."""
        for _ in range(200):
            r, d = random_rates_and_drive(rng)
            resonant = DriveSettings(omega_p=0.0, rabi=d.rabi, detuning=0.0)
            full = reflection_full(r, resonant, bloch_steady_state(r, resonant))
            assert abs(full - reflection_power(r, resonant.rabi)) < 1e-6

            weak_drive = DriveSettings(omega_p=0.0, rabi=1e-4 * r.gamma,
                                       detuning=d.detuning)
            full_weak = reflection_full(r, weak_drive,
                                        bloch_steady_state(r, weak_drive))
            assert abs(full_weak - reflection_weak(r, d.detuning)) < 1e-6
