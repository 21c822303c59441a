import os
from unittest import TestCase

import pytest

from pysqueeze.config import Config
from pysqueeze.exceptions import ConfigError
from pysqueeze.models import UniformAtomNumberModel, RandomWalkDrift, NoDrift


class TestConfig(TestCase):

    def setUp(self):
        self.config = Config().reset()

    def test_config_is_singleton(self):
        self.assertIs(self.config, Config())

    def test_templates_are_loaded(self):
        self.assertIn('probe', self.config)
        self.assertIn('campaign', self.config)

        up, down = self.config.get_probe_colors()
        self.assertEqual(2, len(up.lines))
        self.assertAlmostEqual(5 / 9, up.lines[0].cg_weight)
        self.assertAlmostEqual(-340.5, down.lines[1].detuning)
        self.assertAlmostEqual(27e-6, self.config.get_geometry().waist)
        self.assertEqual((0.11, 7.4e6), self.config.get_decoherence_reference())

    def test_models_are_resolved_by_name(self):
        self.assertIs(UniformAtomNumberModel, self.config.get_atom_number_model_class())
        self.assertIsInstance(self.config.get_drift_model(), RandomWalkDrift)

        self.config.set_value('drift.model', 'NoDrift')
        self.assertIsInstance(self.config.get_drift_model(), NoDrift)

    def test_unknown_model(self):
        self.config.set_value('atoms.model', 'Config')
        with self.assertRaises(ConfigError) as context:
            self.config.get_atom_number_model()
        self.assertEqual('atoms.model', context.exception.field)

    def test_campaign_and_analysis(self):
        campaign = self.config.get_campaign_config()
        self.assertEqual(2000, campaign.runs)
        self.assertEqual(500, campaign.cycles)
        self.assertEqual(20090101, campaign.seed)

        settings = self.config.get_analysis_settings()
        self.assertEqual(4, settings.pulses_combined)
        self.assertEqual((5, 30), settings.bins_range)
        self.assertTrue(settings.differencing)
        self.assertTrue(settings.reference_anchor)

        self.config.set_value('analysis.reference_anchor', False)
        self.assertFalse(self.config.get_analysis_settings().reference_anchor)

    def test_coupling_tuning(self):
        self.assertEqual(3.2, self.config.get_coupling_tuning()['kappa2'])
        self.config.set_value('coupling.enabled', False)
        self.assertEqual({}, self.config.get_coupling_tuning())

    def test_missing_value_names_the_field(self):
        del self.config['geometry']['waist']
        with self.assertRaises(ConfigError) as context:
            self.config.get_geometry()
        self.assertEqual('geometry.waist', context.exception.field)
        self.assertEqual(2, context.exception.exit_code)

    def test_wrong_type_names_the_field(self):
        self.config.set_value('probe.up.gamma', 'fast')
        with self.assertRaises(ConfigError) as context:
            self.config.get_probe_colors()
        self.assertEqual('probe.up.gamma', context.exception.field)

        self.config.reset().set_value('campaign.runs', True)
        with self.assertRaises(ConfigError):
            self.config.get_campaign_config()

    def test_invalid_value_names_the_section(self):
        self.config.set_value('geometry.waist', -1.0)
        with self.assertRaises(ConfigError) as context:
            self.config.get_geometry()
        self.assertEqual('geometry', context.exception.field)

    def test_invalid_line(self):
        self.config['probe']['up']['lines'].append({'cg_weight': 0.5})
        with self.assertRaises(ConfigError) as context:
            self.config.get_probe_colors()
        self.assertEqual('probe.up.lines[2]', context.exception.field)


def test_merge_file_keeps_other_sections(tmp_path):
    path = os.path.join(str(tmp_path), 'physics.toml')
    with open(path, mode='w') as file:
        file.write('[geometry]\nwaist = 30e-6\n')

    config = Config().reset().merge_file(path)
    geometry = config.get_geometry()
    assert geometry.waist == pytest.approx(30e-6)
    assert geometry.detection_efficiency == pytest.approx(0.63)
    assert config.get_seed() == 20090101


def test_syntax_error_carries_the_line(tmp_path):
    path = os.path.join(str(tmp_path), 'broken.toml')
    with open(path, mode='w') as file:
        file.write('[geometry]\nwaist = 30e-6\nefficiency = = 1\n')

    with pytest.raises(ConfigError) as info:
        Config().reset().merge_file(path)
    assert info.value.line == 3


def test_missing_file():
    with pytest.raises(ConfigError):
        Config().reset().load_file('/does/not/exist.toml')
