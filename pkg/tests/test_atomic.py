import math
from unittest import TestCase

import pytest

from pysqueeze.config import Config
from pysqueeze.exceptions import BracketError
from pysqueeze.atomic import (TransitionLine,
                              ProbeColor,
                              BeamGeometry,
                              compute_q,
                              balance_detuning,
                              coupling_constant,
                              total_photon_number,
                              fringe_amplitude,
                              phase_shift,
                              absorption,
                              absorption_css,
                              susceptibility,
                              column_density,
                              atom_number,
                              css_signal_variance,
                              predict_eta,
                              eta_exponent,
                              eta_closed_form)

WAVELENGTH = 852.347e-9


def probe_colors():
    config = Config().reset()
    return config.get_probe_colors()


def balanced_colors():
    up, down = probe_colors()
    return up, down.shifted(balance_detuning(up, down))


@pytest.fixture
def geometry():
    return BeamGeometry(waist=27e-6, detection_efficiency=0.63, interaction_length=1e-3)


# POLARIZABILITY
# ==============


class TestPolarizability(TestCase):

    def test_single_resonant_line_gives_resonant_cross_section(self):
        color = ProbeColor([TransitionLine(1.0, 0.0)], gamma=1.0, wavelength=WAVELENGTH,
                           photons_probe=0, photons_reference=0)
        q = compute_q(color)
        self.assertAlmostEqual(0.0, q.re / q.im)
        self.assertAlmostEqual(3 * WAVELENGTH ** 2 / (2 * math.pi), q.im, delta=1e-25)

    def test_up_color_of_the_template(self):
        up, _ = probe_colors()
        q = compute_q(up)
        self.assertAlmostEqual(-4.6996e-15, q.re, delta=0.001e-15)
        self.assertGreater(q.im, 0)

    def test_red_detuning_flips_the_sign_of_the_phase(self):
        blue = ProbeColor([TransitionLine(0.5, 100.0)], 5.234, WAVELENGTH, 0, 0)
        red = ProbeColor([TransitionLine(0.5, -100.0)], 5.234, WAVELENGTH, 0, 0)
        self.assertAlmostEqual(compute_q(blue).re, -compute_q(red).re, delta=1e-25)
        self.assertAlmostEqual(compute_q(blue).im, compute_q(red).im, delta=1e-25)

    def test_invalid_lines(self):
        with self.assertRaises(ValueError):
            TransitionLine(1.5, 10.0)
        with self.assertRaises(ValueError):
            ProbeColor([], 5.234, WAVELENGTH, 0, 0)


class TestBalancing(TestCase):

    def test_balancing_the_template_colors(self):
        up, down = probe_colors()
        offset = balance_detuning(up, down)
        self.assertAlmostEqual(-10.44, offset, delta=0.05)

        balanced = compute_q(down.shifted(offset))
        self.assertAlmostEqual(1.0, balanced.re / compute_q(up).re, delta=1e-9)

    def test_balanced_colors_need_no_offset(self):
        up, _ = probe_colors()
        self.assertEqual(0.0, balance_detuning(up, up))

    def test_no_crossing_within_window(self):
        up, down = probe_colors()
        with self.assertRaises(BracketError):
            balance_detuning(up, down, window=(20.0, 30.0))


# COUPLING AND OPTICS
# ===================


def test_coupling_constant_of_the_template(geometry):
    up, _ = probe_colors()
    k = coupling_constant(compute_q(up), geometry, 1.83e6, 2.0e7)
    assert k == pytest.approx(-2.329e-7, rel=1e-3)
    assert total_photon_number(geometry, 1.83e6, 2.0e7) == pytest.approx(4.2306e7, rel=1e-4)


def test_coupling_constant_needs_photons(geometry):
    up, _ = probe_colors()
    with pytest.raises(ValueError):
        coupling_constant(compute_q(up), geometry, 0, 0)


def test_signal_variance_is_projection_noise(geometry):
    up, _ = probe_colors()
    q = compute_q(up)
    atoms = 1.2e5
    photons = total_photon_number(geometry, 1.83e6, 2.0e7)
    fringe = fringe_amplitude(geometry, 1.83e6, 2.0e7)
    k = coupling_constant(q, geometry, 1.83e6, 2.0e7)

    variance = css_signal_variance(q, geometry, column_density(geometry, atoms), fringe)
    assert variance / photons ** 2 == pytest.approx(k ** 2 * atoms, rel=1e-12)


def test_phase_shift_of_the_atom_number_detection(geometry):
    up, _ = probe_colors()
    density = column_density(geometry, 1.8e5)
    assert abs(phase_shift(compute_q(up), density)) == pytest.approx(0.1847, abs=5e-4)
    assert atom_number(geometry, density) == pytest.approx(1.8e5, rel=1e-12)


def test_susceptibility_gives_phase_and_absorption(geometry):
    up, _ = probe_colors()
    q = compute_q(up)
    density = column_density(geometry, 1.2e5)
    chi = susceptibility(q, density, geometry.interaction_length, up.wavelength)

    # the field picks up exp(i pi chi L / lambda) over the interaction length
    optical_path = math.pi * geometry.interaction_length / up.wavelength
    assert chi.real * optical_path == pytest.approx(phase_shift(q, density), rel=1e-12)
    assert 2 * chi.imag * optical_path == pytest.approx(absorption(q, density), rel=1e-12)
    # chi is a bulk property, the shorter cloud of the same column density is denser
    shorter = susceptibility(q, density, geometry.interaction_length / 2, up.wavelength)
    assert shorter.real == pytest.approx(2 * chi.real, rel=1e-12)


def test_negative_column_density(geometry):
    up, down = probe_colors()
    with pytest.raises(ValueError):
        absorption_css(compute_q(up), compute_q(down), -1.0)


# DECOHERENCE
# ===========


def test_eta_prediction_for_the_spin_echo_pulses(geometry):
    colors = balanced_colors()
    assert predict_eta(colors, geometry, 7.4e6) == pytest.approx(0.17, abs=0.005)


def test_eta_quadrature_matches_closed_form(geometry):
    colors = balanced_colors()
    for photons in (1e6, 7.4e6, 5e7):
        exponent = eta_exponent(colors, geometry, photons)
        assert predict_eta(colors, geometry, photons) == pytest.approx(eta_closed_form(exponent), rel=1e-8)


def test_eta_is_monotone_and_bounded(geometry):
    colors = balanced_colors()
    etas = [predict_eta(colors, geometry, photons) for photons in (0, 1e6, 1e7, 1e8, 1e9)]
    assert etas[0] == 0.0
    assert all(a <= b for a, b in zip(etas, etas[1:]))
    assert all(0 <= eta < 1 for eta in etas)
