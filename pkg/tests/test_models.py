from unittest import TestCase

import numpy as np

from pysqueeze.models import (AbstractAtomNumberModel,
                              UniformAtomNumberModel,
                              FixedAtomNumberModel,
                              GaussianAtomNumberModel,
                              RandomWalkDrift,
                              NoDrift)


class TestAtomNumberModels(TestCase):

    def test_uniform_model_stays_within_its_range(self):
        model = UniformAtomNumberModel({'maximum': 1.2e5, 'minimum_fraction': 0.1})
        rng = np.random.default_rng(1)
        samples = np.array([model(rng) for _ in range(1000)])
        self.assertTrue(np.all(samples >= 1.2e4))
        self.assertTrue(np.all(samples <= 1.2e5))
        self.assertAlmostEqual(6.6e4, np.mean(samples), delta=3e3)

    def test_models_are_callables_returning_floats(self):
        model = FixedAtomNumberModel({'mean': 1e5})
        self.assertIsInstance(model, AbstractAtomNumberModel)
        self.assertIsInstance(model(np.random.default_rng(1)), float)
        self.assertEqual(1e5, model(np.random.default_rng(2)))

    def test_gaussian_model_is_truncated(self):
        model = GaussianAtomNumberModel({'mean': 10.0, 'spread': 100.0})
        rng = np.random.default_rng(3)
        self.assertGreaterEqual(min(model(rng) for _ in range(200)), 1.0)

    def test_invalid_parameters(self):
        with self.assertRaises(ValueError):
            UniformAtomNumberModel({'maximum': 1.2e5})
        with self.assertRaises(ValueError):
            UniformAtomNumberModel({'maximum': 1.2e5, 'minimum_fraction': 1.0})
        with self.assertRaises(ValueError):
            FixedAtomNumberModel({'mean': -1.0})


class TestDriftModels(TestCase):

    def test_random_walk_is_reproducible(self):
        model = RandomWalkDrift({'random_walk_step': 200.0})
        a = model(np.random.default_rng(5), 100)
        b = model(np.random.default_rng(5), 100)
        self.assertEqual((100,), a.shape)
        self.assertTrue(np.array_equal(a, b))
        self.assertAlmostEqual(200.0, np.std(np.diff(a)), delta=40.0)

    def test_no_drift(self):
        offsets = NoDrift({})(np.random.default_rng(5), 10)
        self.assertTrue(np.array_equal(np.zeros(10), offsets))

    def test_negative_step(self):
        with self.assertRaises(ValueError):
            RandomWalkDrift({'random_walk_step': -1.0})
