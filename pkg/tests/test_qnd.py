import math
from unittest import TestCase

import numpy as np
import pytest

from pysqueeze.spin import new_css
from pysqueeze.qnd import (QndPulseSpec,
                           TradeoffModel,
                           measurement_strength,
                           optimal_gain,
                           conditional_variance,
                           predicted_conditional_db,
                           eta_from_photons,
                           sample_measurement,
                           measure_sequence,
                           xi_vs_eta,
                           find_optimal_eta,
                           xi_min_closed_form,
                           depth_scaling)

ATOMS = 1.2e5
PHOTONS = 1.464e7
# Gives kappa^2 = 3.2 for ATOMS and PHOTONS
COUPLING = math.sqrt(3.2 / (PHOTONS * ATOMS))


# CLOSED FORMS
# ============


class TestClosedForms(TestCase):

    def test_conditional_reduction_for_the_reference_strength(self):
        kappa2 = measurement_strength(PHOTONS, COUPLING, ATOMS)
        self.assertAlmostEqual(3.2, kappa2)
        self.assertAlmostEqual(-6.2, predicted_conditional_db(kappa2), delta=0.05)
        self.assertAlmostEqual(3.2 / 4.2, optimal_gain(kappa2))

    def test_conditional_variance(self):
        kappa2 = measurement_strength(PHOTONS, COUPLING, ATOMS)
        expected = 1 / PHOTONS + COUPLING ** 2 * ATOMS / (1 + kappa2)
        self.assertAlmostEqual(1.0, conditional_variance(PHOTONS, PHOTONS, COUPLING, ATOMS) / expected)

    def test_no_measurement_strength_without_atoms(self):
        self.assertEqual(0.0, measurement_strength(PHOTONS, COUPLING, 0.0))
        self.assertEqual(0.0, optimal_gain(0.0))
        with self.assertRaises(ValueError):
            measurement_strength(-1.0, COUPLING, ATOMS)
        with self.assertRaises(ValueError):
            conditional_variance(0.0, PHOTONS, COUPLING, ATOMS)

    def test_eta_scaling_from_the_spin_echo(self):
        self.assertAlmostEqual(0.11, eta_from_photons(7.4e6, 0.11, 7.4e6))
        self.assertAlmostEqual(1 - 0.89 ** 2, eta_from_photons(1.48e7, 0.11, 7.4e6))
        self.assertEqual(0.0, eta_from_photons(0.0, 0.11, 7.4e6))
        with self.assertRaises(ValueError):
            eta_from_photons(1e6, 1.0, 7.4e6)


# MEASUREMENT
# ===========


class TestSampleMeasurement(TestCase):

    def test_posterior_variance(self):
        rng = np.random.default_rng(1)
        state = new_css(ATOMS, (0, 1, 0))
        pulse = QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING, eta_per_pulse=0.05)
        outcome = sample_measurement(state, pulse, rng)

        self.assertAlmostEqual(1.0, outcome.posterior.variance('z') * 4.2 / (ATOMS / 4))
        self.assertAlmostEqual(ATOMS / 4, outcome.posterior.variance('x'))
        self.assertAlmostEqual(0.95, outcome.posterior.coherent_fraction)

    def test_posterior_variance_never_grows_without_partition_noise(self):
        rng = np.random.default_rng(2)
        state = new_css(ATOMS, (0, 1, 0))
        pulse = QndPulseSpec(photons_total=PHOTONS / 4, coupling=COUPLING)
        outcomes = measure_sequence(state, [pulse] * 8, rng)

        variances = [state.variance('z')] + [outcome.posterior.variance('z') for outcome in outcomes]
        self.assertTrue(all(b <= a for a, b in zip(variances, variances[1:])))
        # eight pulses of a quarter of the photons are two full measurements
        self.assertAlmostEqual(1.0, variances[-1] * (1 + 2 * 3.2) / (ATOMS / 4))

    def test_sequence_measures_one_latent_value(self):
        rng = np.random.default_rng(3)
        pulse = QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING)
        outcomes = measure_sequence(new_css(ATOMS, (0, 1, 0)), [pulse] * 5, rng, latent=42.0)
        self.assertEqual({42.0}, {outcome.latent for outcome in outcomes})

    def test_partition_and_stark_noise_inflate_the_variances(self):
        state = new_css(ATOMS, (0, 1, 0))
        clean = QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING)
        noisy = QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING, partition=0.1, stark=0.2)
        a = sample_measurement(state, clean, np.random.default_rng(4), latent=0.0)
        b = sample_measurement(state, noisy, np.random.default_rng(4), latent=0.0)

        self.assertAlmostEqual(0.1 * ATOMS / 4, b.posterior.variance('z') - a.posterior.variance('z'))
        self.assertAlmostEqual(0.2 * ATOMS / 4, b.posterior.variance('x') - a.posterior.variance('x'))
        self.assertNotEqual(0.0, b.latent)

    def test_invalid_pulse(self):
        with self.assertRaises(ValueError):
            QndPulseSpec(photons_total=0.0, coupling=COUPLING)
        with self.assertRaises(ValueError):
            QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING, eta_per_pulse=1.0)


def test_signal_variance_is_shot_noise_plus_projection_noise():
    rng = np.random.default_rng(20090101)
    state = new_css(ATOMS, (0, 1, 0))
    pulse = QndPulseSpec(photons_total=PHOTONS, coupling=COUPLING)
    phis = np.array([sample_measurement(state, pulse, rng).phi for _ in range(10000)])

    expected = 1 / PHOTONS + COUPLING ** 2 * ATOMS
    standard_error = expected * math.sqrt(2 / (len(phis) - 1))
    assert abs(np.var(phis, ddof=1) - expected) < 3 * standard_error


def test_conditional_variance_of_gaussian_samples():
    rng = np.random.default_rng(20090101)
    samples = 10 ** 6
    photons_second = PHOTONS / 2
    jz = rng.normal(0.0, math.sqrt(ATOMS / 4), size=samples)
    phi1 = 2 * COUPLING * jz + rng.normal(0.0, math.sqrt(1 / PHOTONS), size=samples)
    phi2 = 2 * COUPLING * jz + rng.normal(0.0, math.sqrt(1 / photons_second), size=samples)

    zeta = optimal_gain(measurement_strength(PHOTONS, COUPLING, ATOMS))
    expected = conditional_variance(PHOTONS, photons_second, COUPLING, ATOMS)
    assert np.var(phi2 - zeta * phi1, ddof=1) == pytest.approx(expected, rel=0.01)

    slope = np.cov(phi1, phi2)[0, 1] / np.var(phi1, ddof=1)
    standard_error = np.std(phi2 - slope * phi1, ddof=2) / (np.std(phi1, ddof=1) * math.sqrt(samples))
    assert abs(slope - zeta) < 3 * standard_error


# TRADE-OFF
# =========


def test_xi_vs_eta():
    model = TradeoffModel(optical_depth=16.0)
    assert xi_vs_eta(model, 0.0) == 1.0
    assert xi_vs_eta(model, np.array([0.0, 0.5])).shape == (2,)
    with pytest.raises(ValueError):
        xi_vs_eta(model, 1.0)


def test_optimum_for_large_optical_depth():
    eta, xi = find_optimal_eta(TradeoffModel(optical_depth=1e6))
    assert eta == pytest.approx(1 / 3, abs=1e-3)
    # xi_min = (9 / 4) / (1 + kappa^2) at the optimum
    assert xi * (1 + 1e6 * eta) == pytest.approx(9 / 4, abs=1e-3)


def test_optimum_matches_closed_form():
    model = TradeoffModel(optical_depth=16.0)
    eta, xi = find_optimal_eta(model)
    eta_closed, xi_closed = xi_min_closed_form(model)
    assert eta_closed == pytest.approx(14 / 48)
    assert eta == pytest.approx(eta_closed, abs=1e-6)
    assert xi == pytest.approx(xi_closed, rel=1e-9)


def test_no_gain_without_measurement_strength():
    model = TradeoffModel(optical_depth=16.0, kappa2_per_eta=0.0)
    eta, xi = find_optimal_eta(model)
    assert eta < 1e-4
    assert xi == pytest.approx(1.0, abs=1e-3)
    assert xi_min_closed_form(model) == (0.0, 1.0)


def test_squeezing_scales_with_inverse_optical_depth():
    scaling = depth_scaling(np.logspace(3, 6, 13))
    assert scaling.slope == pytest.approx(-1.0, abs=0.01)
    assert np.all(np.diff(scaling.xi_min) < 0)
