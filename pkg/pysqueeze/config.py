import os
import copy
from pathlib import Path
from typing import Any, Dict, List, Tuple

import toml

import pysqueeze.models as models
from pysqueeze.exceptions import ConfigError
from pysqueeze.atomic import TransitionLine, ProbeColor, BeamGeometry
from pysqueeze.qnd import TradeoffModel
from pysqueeze.simulation import CampaignConfig, NoiseSpec
from pysqueeze.analysis import AnalysisSettings

PATH = Path(__file__).parent.absolute()
TEMPLATE_PATH = os.path.join(PATH, 'templates')
PHYSICS_TEMPLATE_PATH = os.path.join(TEMPLATE_PATH, 'physics.toml')
CAMPAIGN_TEMPLATE_PATH = os.path.join(TEMPLATE_PATH, 'campaign.toml')

# CONFIG CLASS
# ============


class Singleton(type):

    _instances = {}

    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[cls]


class Config(metaclass=Singleton):
    """
    This is a singleton class, which implements the access to the configuration of a squeezing experiment.

    **Background**

    The configuration is split into two files: The *physics* file describes the atoms and the light (transition
    tables, beam geometry, photon numbers, decoherence reference) and the *campaign* file describes how a
    measurement campaign is structured and analyzed (number of runs, noise terms, atom number model, binning).
    Both are TOML files. The package ships a template for each of them, which is loaded as soon as the singleton is
    created. Loading another file only replaces the sections which are present in that file.

    **Details**

    The raw data can be accessed like a dict. But the code is supposed to use the wrapper methods, which convert
    the raw sections into the domain objects of this package and validate them on the way. If a value is missing
    or has the wrong type, a ConfigError is raised, which names the dotted path of the offending field.

    **Example**

    .. code-block:: python

        from pysqueeze.config import Config

        config = Config().merge_file('my_physics.toml')
        up, down = config.get_probe_colors()
        geometry = config.get_geometry()

    """

    def __init__(self):
        self.data = {}
        self.reset()

    # IMPLEMENTING DICT FUNCTIONALITY
    # -------------------------------

    def __getitem__(self, item):
        return self.data[item]

    def __setitem__(self, key, value):
        self.data[key] = value

    def __contains__(self, item):
        return item in self.data.keys()

    def keys(self):
        return self.data.keys()

    def values(self):
        return self.data.values()

    def items(self):
        return self.data.items()

    # WRAPPER METHODS
    # ---------------

    def get_probe_colors(self) -> Tuple[ProbeColor, ProbeColor]:
        return self._probe_color('up'), self._probe_color('down')

    def get_balance_window(self) -> Tuple[float, float]:
        window = self._value('balance.window', list)
        if len(window) != 2:
            raise ConfigError('Balance window needs exactly two entries', field='balance.window')
        return float(window[0]), float(window[1])

    def is_balancing_enabled(self) -> bool:
        return self._value('balance.enabled', bool)

    def get_geometry(self) -> BeamGeometry:
        return self._construct(BeamGeometry, 'geometry', {
            'waist':                    self._number('geometry.waist'),
            'detection_efficiency':     self._number('geometry.detection_efficiency'),
            'interaction_length':       self._number('geometry.interaction_length'),
        })

    def get_decoherence_reference(self) -> Tuple[float, float]:
        return self._number('decoherence.eta'), self._number('decoherence.photons')

    def get_coupling_tuning(self) -> Dict[str, Any]:
        if not self._value('coupling.enabled', bool):
            return {}

        return {
            'kappa2':           self._number('coupling.kappa2'),
            'atom_number':      self._number('coupling.atom_number'),
            'pulses_combined':  self._value('coupling.pulses_combined', int),
        }

    def get_tradeoff_model(self) -> TradeoffModel:
        return self._construct(TradeoffModel, 'tradeoff', {
            'optical_depth':    self._number('tradeoff.optical_depth'),
            'kappa2_per_eta':   self._number('tradeoff.kappa2_per_eta'),
        })

    def get_seed(self) -> int:
        return self._value('campaign.seed', int)

    def get_noise_spec(self) -> NoiseSpec:
        return self._construct(NoiseSpec, 'noise', {
            'detector':             self._number('noise.detector'),
            'atom_signal':          self._number('noise.atom_signal'),
            'classical_quadratic':  self._number('noise.classical_quadratic'),
            'partition':            self._number('noise.partition'),
            'stark':                self._number('noise.stark'),
        })

    def get_atom_number_model_class(self) -> type:
        return self._model_class('atoms.model', models.AbstractAtomNumberModel)

    def get_atom_number_model(self) -> models.AbstractAtomNumberModel:
        model_class = self.get_atom_number_model_class()
        return self._construct(model_class, 'atoms', {'config': self._value('atoms', dict)})

    def get_drift_model_class(self) -> type:
        return self._model_class('drift.model', models.AbstractDriftModel)

    def get_drift_model(self) -> models.AbstractDriftModel:
        model_class = self.get_drift_model_class()
        return self._construct(model_class, 'drift', {'config': self._value('drift', dict)})

    def get_campaign_config(self) -> CampaignConfig:
        return self._construct(CampaignConfig, 'campaign', {
            'runs':                 self._value('campaign.runs', int),
            'pulses_per_run':       self._value('campaign.pulses_per_run', int),
            'photons_per_pulse':    self._number('campaign.photons_per_pulse'),
            'pulse_interval':       self._number('campaign.pulse_interval'),
            'pulse_duration':       self._number('campaign.pulse_duration'),
            'atoms_per_cycle':      self._value('campaign.atoms_per_cycle', int),
            'references_per_cycle': self._value('campaign.references_per_cycle', int),
            'seed':                 self.get_seed(),
            'noise':                self.get_noise_spec(),
            'atom_number_model':    self.get_atom_number_model(),
            'drift_model':          self.get_drift_model(),
        })

    def get_analysis_settings(self) -> AnalysisSettings:
        eta_reference, photons_reference = self.get_decoherence_reference()
        return self._construct(AnalysisSettings, 'analysis', {
            'pulses_combined':      self._value('analysis.pulses_combined', int),
            'bins':                 self._value('analysis.bins', int),
            'bins_range':           (self._value('analysis.bins_minimum', int),
                                     self._value('analysis.bins_maximum', int)),
            'differencing':         self._value('analysis.differencing', bool),
            'reference_anchor':     self._value('analysis.reference_anchor', bool),
            'photons_per_pulse':    self._number('campaign.photons_per_pulse'),
            'eta_reference':        eta_reference,
            'photons_reference':    photons_reference,
        })

    # HELPER FUNCTIONS
    # ----------------

    def reset(self):
        self.data = {}
        self.merge_file(PHYSICS_TEMPLATE_PATH)
        self.merge_file(CAMPAIGN_TEMPLATE_PATH)
        return self

    def load_dict(self, data: dict):
        self.data = data
        return self

    def load_file(self, file_path: str):
        data = self._read(file_path)
        return self.load_dict(data)

    def merge_dict(self, data: dict):
        for key, value in data.items():
            if isinstance(value, dict) and isinstance(self.data.get(key), dict):
                self.data[key] = _merge(self.data[key], value)
            else:
                self.data[key] = copy.deepcopy(value)
        return self

    def merge_file(self, file_path: str):
        data = self._read(file_path)
        return self.merge_dict(data)

    def set_value(self, path: str, value: Any):
        keys = path.split('.')
        section = self.data
        for key in keys[:-1]:
            section = section.setdefault(key, {})
        section[keys[-1]] = value
        return self

    def echo(self) -> Dict[str, Any]:
        return copy.deepcopy(self.data)

    # PROTECTED METHODS
    # -----------------

    @classmethod
    def _read(cls, file_path: str) -> dict:
        try:
            return toml.load(file_path)
        except toml.TomlDecodeError as e:
            raise ConfigError('Could not parse "{}": {}'.format(file_path, e.msg), line=e.lineno)
        except OSError as e:
            raise ConfigError('Could not read "{}": {}'.format(file_path, str(e)))

    def _value(self, path: str, expected: type) -> Any:
        value = self.data
        for key in path.split('.'):
            if not isinstance(value, dict) or key not in value:
                raise ConfigError('Missing configuration value', field=path)
            value = value[key]

        # bool is a subclass of int, so it has to be excluded explicitly when an integer is wanted
        if expected is int and isinstance(value, bool):
            raise ConfigError('Expected an integer', field=path)
        if expected is int and isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, expected):
            name = expected.__name__ if isinstance(expected, type) else 'number'
            raise ConfigError('Expected a value of type "{}"'.format(name), field=path)

        return value

    def _number(self, path: str) -> float:
        value = self._value(path, (int, float))
        if isinstance(value, bool):
            raise ConfigError('Expected a number', field=path)
        return float(value)

    def _probe_color(self, name: str) -> ProbeColor:
        prefix = 'probe.{}'.format(name)
        lines: List[TransitionLine] = []
        for index, line in enumerate(self._value(prefix + '.lines', list)):
            field = '{}.lines[{}]'.format(prefix, index)
            if not isinstance(line, dict) or 'cg_weight' not in line or 'detuning' not in line:
                raise ConfigError('A line needs "cg_weight" and "detuning"', field=field)
            lines.append(self._construct(TransitionLine, field, {
                'cg_weight':    float(line['cg_weight']),
                'detuning':     float(line['detuning']),
            }))

        return self._construct(ProbeColor, prefix, {
            'lines':                lines,
            'gamma':                self._number(prefix + '.gamma'),
            'wavelength':           self._number(prefix + '.wavelength'),
            'photons_probe':        self._number(prefix + '.photons_probe'),
            'photons_reference':    self._number(prefix + '.photons_reference'),
        })

    def _model_class(self, path: str, base: type) -> type:
        class_name = self._value(path, str)
        model_class = getattr(models, class_name, None)
        if not isinstance(model_class, type) or not issubclass(model_class, base):
            raise ConfigError('Unknown model "{}"'.format(class_name), field=path)
        return model_class

    @classmethod
    def _construct(cls, constructor: type, field: str, kwargs: Dict[str, Any]):
        # The domain classes validate their own invariants and raise ValueError, which is translated here so that
        # the user learns which part of the file is to blame
        try:
            return constructor(**kwargs)
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e), field=field)


def _merge(base: dict, update: dict) -> dict:
    result = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result
