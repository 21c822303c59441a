"""
This module contains the stochastic models for the parts of a campaign, which the source experiment does not pin
down: how the atom number varies from run to run and how the interferometer drifts from one MOT cycle to the next.

The campaign config selects the models by their class name, see :meth:`pysqueeze.config.Config.get_atom_number_model`.
"""
from typing import Any, Dict
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


# ATOM NUMBER MODELS
# ==================


class AbstractAtomNumberModel(ABC):
    """
    This is the abstract base class for any model of the atom number distribution of a campaign.

    **Background**

    The squeezing analysis bins the runs according to their atom number and fits the noise as a function of it. So a
    campaign has to cover a range of atom numbers. In the experiment the atom number was varied, but its distribution
    over the runs was not recorded. The models make that distribution a configurable part of the simulation.

    **Details**

    Each subclass is a callable, which receives the random generator of the current MOT cycle and returns the atom
    number for a single run. The parameters are read from the "atoms" section of the campaign config, which is passed
    to the constructor as a dict. Subclasses have to implement the "sample" method and should validate their
    parameters in the constructor, raising a ValueError for invalid ones.

    **Example**

    .. code-block:: python

        model = UniformAtomNumberModel({'maximum': 1.2e5, 'minimum_fraction': 0.1})
        rng = np.random.default_rng(1)
        atom_count = model(rng)

    """

    def __init__(self, config: Dict[str, Any]):
        self.config = config

    def __call__(self, rng: np.random.Generator) -> float:
        """
        Draws the atom number of a single run.

        :param rng: The random generator of the MOT cycle
        :return: A positive atom number
        """
        return float(self.sample(rng))

    # TO BE IMPLEMENTED
    # -----------------

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    # HELPER METHODS
    # --------------

    def _positive(self, key: str) -> float:
        if key not in self.config:
            raise ValueError('{} needs the parameter "{}"'.format(self.__class__.__name__, key))
        value = float(self.config[key])
        if not value > 0:
            raise ValueError('"{}" has to be positive'.format(key))
        return value


class UniformAtomNumberModel(AbstractAtomNumberModel):
    """
    Uniform distribution over [minimum_fraction, 1] * maximum. This is the default, because it spreads the runs evenly
    over the bins of the analysis.
    """

    def __init__(self, config: Dict[str, Any]):
        super(UniformAtomNumberModel, self).__init__(config)
        self.maximum = self._positive('maximum')
        self.minimum_fraction = self._positive('minimum_fraction')
        if self.minimum_fraction >= 1:
            raise ValueError('"minimum_fraction" has to be smaller than 1')

    def sample(self, rng: np.random.Generator) -> float:
        return rng.uniform(self.minimum_fraction * self.maximum, self.maximum)


class FixedAtomNumberModel(AbstractAtomNumberModel):

    def __init__(self, config: Dict[str, Any]):
        super(FixedAtomNumberModel, self).__init__(config)
        self.mean = self._positive('mean')

    def sample(self, rng: np.random.Generator) -> float:
        return self.mean


class GaussianAtomNumberModel(AbstractAtomNumberModel):
    """
    Gaussian fluctuations of the MOT loading around a mean atom number. Draws are truncated at a single atom.
    """

    def __init__(self, config: Dict[str, Any]):
        super(GaussianAtomNumberModel, self).__init__(config)
        self.mean = self._positive('mean')
        self.spread = self._positive('spread')

    def sample(self, rng: np.random.Generator) -> float:
        return max(rng.normal(self.mean, self.spread), 1.0)


# DRIFT MODELS
# ============


@dataclass(frozen=True)
class DriftSpec:
    random_walk_step: float = 0.0

    def __post_init__(self):
        if self.random_walk_step < 0:
            raise ValueError('random_walk_step must not be negative')


class AbstractDriftModel(ABC):
    """
    Base class for the slow drift of the interferometer signal.

    A drift model is called with the random generator, which is reserved for the drift, and the number of MOT cycles.
    It returns one offset per cycle, in units of the differential photon number. The offset is added to every pulse of
    every run of that cycle.
    """

    def __init__(self, config: Dict[str, Any]):
        self.config = config
        self.spec = DriftSpec(float(config.get('random_walk_step', 0.0)))

    def __call__(self, rng: np.random.Generator, cycles: int) -> np.ndarray:
        return np.asarray(self.offsets(rng, cycles), dtype=float)

    @abstractmethod
    def offsets(self, rng: np.random.Generator, cycles: int) -> np.ndarray:
        raise NotImplementedError


class RandomWalkDrift(AbstractDriftModel):

    def offsets(self, rng: np.random.Generator, cycles: int) -> np.ndarray:
        return np.cumsum(rng.normal(0.0, self.spec.random_walk_step, size=cycles))


class NoDrift(AbstractDriftModel):

    def offsets(self, rng: np.random.Generator, cycles: int) -> np.ndarray:
        return np.zeros(cycles)
