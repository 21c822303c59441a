import math
from unittest import TestCase

import numpy as np

from pysqueeze.spin import (CollectiveSpinState,
                            new_css,
                            rotate,
                            clock_sequence,
                            ramsey_sequence,
                            ramsey_fringe,
                            squeezing_parameter,
                            shrink_coherence,
                            uncertainty_product)

ATOMS = 1.2e5


def squeezed_state(atoms: float = ATOMS) -> CollectiveSpinState:
    # mean along y, J_z squeezed by a factor 4 and J_x anti squeezed
    return CollectiveSpinState(
        atom_count=atoms,
        mean=np.array([0.0, atoms / 2, 0.0]),
        cov=np.diag([atoms, 0.0, atoms / 16]),
    )


class TestCollectiveSpinState(TestCase):

    def test_coherent_spin_state(self):
        state = new_css(ATOMS, (0, 1, 0))
        self.assertAlmostEqual(ATOMS / 2, state.length)
        self.assertAlmostEqual(ATOMS / 4, state.variance('z'))
        self.assertAlmostEqual(ATOMS / 4, state.variance('x'))
        self.assertAlmostEqual(0.0, state.variance('y'))
        self.assertEqual(1.0, state.coherent_fraction)

    def test_direction_has_to_be_a_unit_vector(self):
        with self.assertRaises(ValueError):
            new_css(ATOMS, (0, 2, 0))
        with self.assertRaises(ValueError):
            new_css(ATOMS, (0, 0, 0))

    def test_invalid_covariance(self):
        with self.assertRaises(ValueError):
            CollectiveSpinState(ATOMS, np.zeros(3), np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
        with self.assertRaises(ValueError):
            CollectiveSpinState(ATOMS, np.zeros(3), np.diag([1.0, -5.0, 1.0]))

    def test_mean_cannot_be_longer_than_half_the_atom_number(self):
        with self.assertRaises(ValueError):
            CollectiveSpinState(ATOMS, np.array([0.0, ATOMS, 0.0]), np.zeros((3, 3)))

    def test_state_to_dict(self):
        state = shrink_coherence(squeezed_state(), 0.2)
        data = state.to_dict()
        self.assertEqual(ATOMS, data['atom_count'])
        self.assertAlmostEqual(0.8, data['coherent_fraction'])
        restored = CollectiveSpinState.from_dict(data)
        self.assertTrue(np.allclose(state.cov, restored.cov))


class TestRotations(TestCase):

    def test_rotation_preserves_length_and_total_variance(self):
        state = squeezed_state()
        for axis in ('x', 'y', 'z'):
            rotated = rotate(state, axis, 0.7)
            self.assertAlmostEqual(state.length, rotated.length, delta=1e-9 * ATOMS)
            self.assertAlmostEqual(np.trace(state.cov), np.trace(rotated.cov), delta=1e-9 * ATOMS)

    def test_positive_rotation_about_x_maps_y_onto_z(self):
        state = rotate(new_css(ATOMS, (0, 1, 0)), 'x', math.pi / 2)
        self.assertTrue(np.allclose(state.mean, [0, 0, ATOMS / 2], atol=1e-9 * ATOMS))

    def test_clock_sequence_keeps_the_squeezed_projection(self):
        state = clock_sequence(squeezed_state(), -math.pi / 2)
        self.assertAlmostEqual(ATOMS / 16, state.variance('z'), delta=1e-9 * ATOMS)
        self.assertTrue(np.allclose(state.mean, [ATOMS / 2, 0, 0], atol=1e-9 * ATOMS))

    def test_ramsey_sequence_from_the_south_pole(self):
        south = new_css(ATOMS, (0, 0, -1))
        self.assertTrue(np.allclose(ramsey_sequence(south, 0.0).mean, [0, 0, ATOMS / 2], atol=1e-9 * ATOMS))
        self.assertTrue(np.allclose(ramsey_sequence(south, math.pi / 2).mean, [-ATOMS / 2, 0, 0],
                                    atol=1e-9 * ATOMS))

    def test_ramsey_fringe_is_scaled_by_the_coherent_fraction(self):
        state = shrink_coherence(new_css(ATOMS, (0, 1, 0)), 0.2)
        self.assertAlmostEqual(0.8 * ATOMS / 2, ramsey_fringe(state, 0.0))
        self.assertAlmostEqual(0.0, ramsey_fringe(state, math.pi / 2), delta=1e-9 * ATOMS)


class TestSqueezing(TestCase):

    def test_coherent_state_is_not_squeezed(self):
        self.assertAlmostEqual(1.0, squeezing_parameter(new_css(ATOMS, (0, 1, 0))))

    def test_squeezed_state(self):
        self.assertAlmostEqual(0.25, squeezing_parameter(squeezed_state()))
        shrunk = shrink_coherence(squeezed_state(), 0.5)
        self.assertAlmostEqual(1.0, squeezing_parameter(shrunk))

    def test_shrinking_keeps_the_fluctuations(self):
        state = squeezed_state()
        shrunk = shrink_coherence(state, 0.1)
        self.assertIs(state.cov, shrunk.cov)
        self.assertAlmostEqual(0.9, shrunk.coherent_fraction)
        with self.assertRaises(ValueError):
            shrink_coherence(state, 1.5)

    def test_undefined_squeezing(self):
        with self.assertRaises(ValueError):
            squeezing_parameter(CollectiveSpinState(ATOMS, np.zeros(3), np.eye(3)))
        self.assertEqual(math.inf, squeezing_parameter(shrink_coherence(squeezed_state(), 1.0)))

    def test_heisenberg_bound(self):
        product, bound = uncertainty_product(new_css(ATOMS, (0, 1, 0)))
        self.assertAlmostEqual(1.0, product / bound)

        product, bound = uncertainty_product(squeezed_state())
        self.assertGreaterEqual(product, bound * (1 - 1e-12))


# CLOCK SEQUENCE ON RANDOM STATES
# ===============================


def random_state(rng: np.random.Generator) -> CollectiveSpinState:
    atoms = rng.uniform(1e3, 1e6)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    factor = rng.normal(size=(3, 3)) * math.sqrt(atoms) / 2
    return CollectiveSpinState(
        atom_count=atoms,
        mean=direction * rng.uniform(0, atoms / 2),
        cov=factor @ factor.T,
    )


def test_clock_sequence_on_random_states():
    rng = np.random.default_rng(20090101)
    for _ in range(1000):
        state = random_state(rng)
        tolerance = 1e-12 * state.atom_count

        clock = clock_sequence(state, -math.pi / 2)
        assert abs(clock.mean[2] - state.mean[2]) < tolerance
        assert abs(clock.variance('z') - state.variance('z')) < tolerance

        phi = rng.uniform(-math.pi, math.pi)
        expected = math.cos(phi) * state.mean[1] - math.sin(phi) * state.mean[2]
        assert abs(clock_sequence(state, phi).mean[2] - expected) < tolerance
