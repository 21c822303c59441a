"""
Synthetic measurement campaigns with the structure of the real experiment.

A campaign consists of MOT cycles. In each cycle a number of atomic ensembles (4 by default) is interrogated with a
train of dichromatic probe pulses (20 by default), followed by reference runs without atoms (3 by default). Every run
records the differential photon numbers p_1 .. p_M of all pulses and the signal of the atom number detection pulse.
"""
import os
import re
import math
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from pysqueeze.exceptions import DataError, MalformedRowError
from pysqueeze.models import AbstractAtomNumberModel, AbstractDriftModel, DriftSpec
from pysqueeze.qnd import QndPulseSpec, measure_sequence
from pysqueeze.spin import new_css
from pysqueeze.util import get_version

logger = logging.getLogger(__name__)

# The spin points along y when the QND probing starts
INITIAL_DIRECTION = (0.0, 1.0, 0.0)

__all__ = [
    'NoiseSpec', 'CampaignConfig', 'ChannelPhysics', 'RawRun', 'Campaign', 'DriftSpec',
    'simulate_run', 'simulate_campaign', 'write_campaign_csv', 'read_campaign_csv', 'sidecar_path'
]


# DOMAIN TYPES
# ============


@dataclass(frozen=True)
class NoiseSpec:
    """
    The technical noise terms of the simulation.

    :param detector: Variance of the detector noise of a single pulse signal p_i, in photons^2
    :param atom_signal: Standard deviation of the atom number detection signal, in the units of that signal
    :param classical_quadratic: Variance coefficient of the classical atom correlated noise. A run with N_A atoms gets
        a common offset on all its normalized pulse signals with the variance classical_quadratic * N_A^2.
    :param partition: Partition noise per pulse in units of N_A / 4
    :param stark: Differential Stark shift noise on J_x per pulse in units of N_A / 4
    """
    detector: float = 0.0
    atom_signal: float = 0.0
    classical_quadratic: float = 0.0
    partition: float = 0.0
    stark: float = 0.0

    def __post_init__(self):
        for name in ('detector', 'atom_signal', 'classical_quadratic', 'partition', 'stark'):
            if getattr(self, name) < 0:
                raise ValueError('noise term "{}" must not be negative'.format(name))


@dataclass(frozen=True)
class CampaignConfig:
    """
    Everything which defines a campaign, apart from the coupling physics.

    *runs* is the number of runs with atoms. The number of MOT cycles is chosen so that at least this many atom runs
    are simulated.
    """
    runs: int
    atom_number_model: AbstractAtomNumberModel
    drift_model: AbstractDriftModel
    pulses_per_run: int = 20
    photons_per_pulse: float = 1.83e6
    pulse_interval: float = 20e-6
    pulse_duration: float = 10e-6
    atoms_per_cycle: int = 4
    references_per_cycle: int = 3
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.runs <= 0 or self.pulses_per_run <= 0 or self.atoms_per_cycle <= 0:
            raise ValueError('runs, pulses_per_run and atoms_per_cycle have to be positive')
        if self.references_per_cycle < 0:
            raise ValueError('references_per_cycle must not be negative')
        if not self.photons_per_pulse > 0:
            raise ValueError('photons_per_pulse has to be positive')
        if not 0 < self.pulse_duration <= self.pulse_interval:
            raise ValueError('pulse_duration has to be positive and not longer than pulse_interval')
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError('seed has to be an unsigned 64 bit integer')

    @property
    def cycles(self) -> int:
        return math.ceil(self.runs / self.atoms_per_cycle)

    @property
    def slots_per_cycle(self) -> int:
        return self.atoms_per_cycle + self.references_per_cycle

    @property
    def photons_per_signal(self) -> float:
        """Photons of both colors in one pulse. The shot noise variance of a pulse signal p_i"""
        return 2 * self.photons_per_pulse


@dataclass(frozen=True)
class ChannelPhysics:
    """
    :param coupling: The coupling k in the normalization of the simulated signals, phi = p / (2 n_pulse)
    :param eta_per_pulse: The decoherence caused by a single pulse of both colors
    """
    coupling: float
    eta_per_pulse: float = 0.0


@dataclass(frozen=True, eq=False)
class RawRun:
    cycle_id: int
    slot: int
    is_reference: bool
    pulse_signals: np.ndarray
    atom_signal: float
    # ground truth of the simulation, never exported
    true_atom_count: Optional[float] = None
    latent_jz: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'pulse_signals', np.asarray(self.pulse_signals, dtype=float))
        if self.is_reference and self.true_atom_count not in (None, 0):
            raise ValueError('reference runs cannot contain atoms')


@dataclass(frozen=True, eq=False)
class Campaign:
    """
    The ordered list of runs of a campaign.

    *variance_scale* is the factor with which variances estimated from these runs have to be multiplied. It is 0.5 for
    a campaign, where the previous MOT cycle has been subtracted from every run.
    """
    runs: Tuple[RawRun, ...]
    seed: Optional[int] = None
    variance_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'runs', tuple(self.runs))

    def __len__(self) -> int:
        return len(self.runs)

    def __iter__(self) -> Iterator[RawRun]:
        return iter(self.runs)

    @property
    def pulses_per_run(self) -> int:
        return len(self.runs[0].pulse_signals) if self.runs else 0

    def atom_runs(self) -> List[RawRun]:
        return [run for run in self.runs if not run.is_reference]

    def reference_runs(self) -> List[RawRun]:
        return [run for run in self.runs if run.is_reference]

    def cycle_ids(self) -> List[int]:
        return sorted({run.cycle_id for run in self.runs})


# SIMULATION
# ==========


def simulate_run(config: CampaignConfig,
                 physics: ChannelPhysics,
                 rng: np.random.Generator,
                 cycle_id: int = 0,
                 slot: int = 0,
                 offset: float = 0.0) -> RawRun:
    """
    Simulates a single run of a MOT cycle.

    **Details**

    Slots below *atoms_per_cycle* contain atoms: the atom number is drawn from the atom number model, a coherent spin
    state along y is prepared and the pulse train is applied to it with :func:`pysqueeze.qnd.measure_sequence`, so
    that all pulses measure the same latent J_z. The remaining slots are reference runs without atoms, which only see
    the shot noise. The normalized results are then converted into differential photon numbers p_i = 2 n_pulse phi_i,
    and the detector noise and the drift *offset* of the cycle are added.

    :param config: The campaign config
    :param physics: The coupling and the decoherence per pulse
    :param rng: The random generator of the MOT cycle
    :param cycle_id: The index of the MOT cycle
    :param slot: The position of the run within the cycle
    :param offset: The drift offset of the cycle in photons
    :return: The simulated run
    """
    photons = config.photons_per_signal
    noise = config.noise
    reference = slot >= config.atoms_per_cycle

    if reference:
        atom_count = 0.0
        latent = None
        phis = rng.normal(0.0, math.sqrt(1 / photons), size=config.pulses_per_run)
    else:
        atom_count = config.atom_number_model(rng)
        pulse = QndPulseSpec(
            photons_total=photons,
            coupling=physics.coupling,
            eta_per_pulse=physics.eta_per_pulse,
            partition=noise.partition,
            stark=noise.stark,
        )
        state = new_css(atom_count, INITIAL_DIRECTION)
        latent = float(rng.normal(state.mean[2], math.sqrt(state.variance('z'))))
        outcomes = measure_sequence(state, [pulse] * config.pulses_per_run, rng, latent=latent)
        phis = np.array([outcome.phi for outcome in outcomes])
        phis = phis + rng.normal(0.0, math.sqrt(noise.classical_quadratic) * atom_count)

    signals = photons * phis + rng.normal(0.0, math.sqrt(noise.detector), size=config.pulses_per_run) + offset
    atom_signal = physics.coupling * atom_count + rng.normal(0.0, noise.atom_signal)

    return RawRun(
        cycle_id=cycle_id,
        slot=slot,
        is_reference=reference,
        pulse_signals=signals,
        atom_signal=float(atom_signal),
        true_atom_count=atom_count,
        latent_jz=latent,
    )


def simulate_campaign(config: CampaignConfig, physics: ChannelPhysics, threads: Optional[int] = None) -> Campaign:
    """
    Simulates a whole campaign.

    The seed of the config is spawned into one independent random stream per MOT cycle and one more stream for the
    drift process. This makes the result independent of the order in which the cycles are computed, so the cycles are
    distributed over a thread pool and merged in cycle order afterwards.

    :param config: The campaign config
    :param physics: The coupling and the decoherence per pulse
    :param threads: The maximum number of worker threads. None lets the pool decide.
    :return: The campaign
    """
    cycles = config.cycles
    streams = np.random.SeedSequence(config.seed).spawn(cycles + 1)
    offsets = config.drift_model(np.random.default_rng(streams[-1]), cycles)

    def simulate_cycle(cycle_id: int) -> List[RawRun]:
        rng = np.random.default_rng(streams[cycle_id])
        return [simulate_run(config, physics, rng, cycle_id, slot, offsets[cycle_id])
                for slot in range(config.slots_per_cycle)]

    logger.info('simulating %d MOT cycles with %d runs each', cycles, config.slots_per_cycle)
    if threads == 1:
        results = [simulate_cycle(cycle_id) for cycle_id in range(cycles)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(simulate_cycle, range(cycles)))

    runs = [run for cycle in results for run in cycle]
    return Campaign(runs=runs, seed=config.seed)


# EXPORT
# ======


def pulse_columns(pulses: int) -> List[str]:
    return ['p{}'.format(index + 1) for index in range(pulses)]


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + '.json'


def write_campaign_csv(campaign: Campaign, path: str, metadata: Optional[Dict[str, Any]] = None) -> str:
    """
    Writes the analysis facing part of the campaign to a CSV file with one row per run and a JSON sidecar file next to
    it. The hidden ground truth of the simulation is not exported.

    :param campaign: The campaign to be written
    :param path: The path of the CSV file
    :param metadata: Additional data for the sidecar file, usually the config echo
    :return: The path of the sidecar file
    """
    columns = pulse_columns(campaign.pulses_per_run)
    frame = pd.DataFrame({
        'cycle_id':     [run.cycle_id for run in campaign],
        'slot':         [run.slot for run in campaign],
        'is_reference': [int(run.is_reference) for run in campaign],
    })
    signals = np.array([run.pulse_signals for run in campaign]).reshape(len(campaign), len(columns))
    for index, column in enumerate(columns):
        frame[column] = signals[:, index]
    frame['atom_signal'] = [run.atom_signal for run in campaign]

    try:
        frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
        sidecar = sidecar_path(path)
        with open(sidecar, mode='w') as file:
            json.dump({
                'seed':             campaign.seed,
                'runs':             len(campaign),
                'pulses_per_run':   campaign.pulses_per_run,
                'version':          get_version(),
                'config':           metadata or {},
            }, file, indent=4, sort_keys=True)
    except OSError as e:
        raise DataError('Could not write the campaign to "{}": {}'.format(path, str(e)))

    return sidecar


def read_campaign_csv(path: str) -> Campaign:
    """
    Reads a campaign, which has been written by :func:`write_campaign_csv`.

    :raises MalformedRowError: if a row contains a missing or non numeric value. The row number counts the header as
        row 1, so it is the line number in the file.
    """
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise MalformedRowError(str(e), row=int(match.group(1)) if match else 0)
    except (OSError, pd.errors.EmptyDataError) as e:
        raise DataError('Could not read the campaign "{}": {}'.format(path, str(e)))

    pulses = len([column for column in frame.columns if re.fullmatch(r'p\d+', str(column))])
    expected = ['cycle_id', 'slot', 'is_reference'] + pulse_columns(pulses) + ['atom_signal']
    if pulses == 0 or list(frame.columns) != expected:
        raise MalformedRowError('expected the columns {}'.format(', '.join(expected)), row=1)

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    invalid = numeric.isna().any(axis=1).to_numpy()
    invalid |= ~np.isin(numeric['is_reference'].to_numpy(), [0, 1])
    for column in ('cycle_id', 'slot'):
        values = numeric[column].to_numpy()
        invalid |= ~np.isfinite(values) | (np.mod(np.nan_to_num(values), 1) != 0) | (values < 0)
    if invalid.any():
        index = int(np.argmax(invalid))
        raise MalformedRowError('missing or invalid value', row=index + 2)

    signals = numeric[pulse_columns(pulses)].to_numpy(dtype=float)
    runs = [
        RawRun(
            cycle_id=int(row.cycle_id),
            slot=int(row.slot),
            is_reference=bool(row.is_reference),
            pulse_signals=signals[index],
            atom_signal=float(row.atom_signal),
        )
        for index, row in enumerate(numeric.itertuples(index=False))
    ]

    seed = None
    sidecar = sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar, mode='r') as file:
            seed = json.load(file).get('seed')

    logger.debug('read %d runs from "%s"', len(runs), path)
    return Campaign(runs=runs, seed=seed)
