"""
The dichromatic QND measurement of J_z.

A single measurement gives the normalized differential signal phi = dn / n + 2 k J_z, where the optical shot noise
dn / n has the variance 1 / n. Because J_z is not disturbed by the measurement, repeating it gives correlated results
and the second result can be predicted from the first one. This module contains the closed form expressions for that
prediction (measurement strength, optimal gain, conditional variance), the stochastic sampling of single measurements
with a gaussian conditional update of the spin state and the trade-off between measurement strength and decoherence.
"""
import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from pysqueeze.spin import CollectiveSpinState, shrink_coherence

logger = logging.getLogger(__name__)

# Exponent of the best squeezing over the optical depth for single color probing with Raman cross pumping
SINGLE_COLOR_EXPONENT = -0.5


# DOMAIN TYPES
# ============


@dataclass(frozen=True)
class QndPulseSpec:
    """
    A single probe pulse of the dichromatic measurement.

    :param photons_total: The photon number n which sets the shot noise variance 1 / n of the normalized signal
    :param coupling: The coupling k between the normalized signal and J_z
    :param eta_per_pulse: The decoherence which is inflicted by this pulse
    :param partition: Inflation of var(J_z) by the pulse in units of N_A / 4. Models the partition noise of atoms
        which are scattered back into the clock states. Zero by default.
    :param stark: Inflation of var(J_x) by the pulse in units of N_A / 4, caused by a residual differential AC Stark
        shift. Zero by default.
    """
    photons_total: float
    coupling: float
    eta_per_pulse: float = 0.0
    partition: float = 0.0
    stark: float = 0.0

    def __post_init__(self):
        if not self.photons_total > 0:
            raise ValueError('photons_total has to be positive')
        if not 0 <= self.eta_per_pulse < 1:
            raise ValueError('eta_per_pulse has to be within [0, 1)')
        if self.partition < 0 or self.stark < 0:
            raise ValueError('noise inflation terms must not be negative')


@dataclass(frozen=True)
class MeasurementOutcome:
    phi: float
    posterior: CollectiveSpinState
    latent: float


@dataclass(frozen=True)
class TradeoffModel:
    """
    The trade-off between measurement strength and decoherence kappa^2 = C d eta for a given resonant optical depth d.
    """
    optical_depth: float
    kappa2_per_eta: float = 1.0

    def __post_init__(self):
        if not self.optical_depth > 0:
            raise ValueError('optical_depth has to be positive')
        if self.kappa2_per_eta < 0:
            raise ValueError('kappa2_per_eta must not be negative')

    @property
    def strength(self) -> float:
        return self.kappa2_per_eta * self.optical_depth


@dataclass(frozen=True)
class DepthScaling:
    """
    The best squeezing over the optical depth. *slope* is the fitted exponent of xi_min ~ d^slope, which is -1 for
    dichromatic probing, and *single_color_slope* the exponent of single color probing for comparison.
    """
    depths: np.ndarray
    xi_min: np.ndarray
    slope: float
    single_color_slope: float = SINGLE_COLOR_EXPONENT

    @property
    def gain_over_single_color(self) -> np.ndarray:
        """The factor by which xi_min beats the single color scaling d^-1/2, normalized at the smallest depth"""
        reference = self.xi_min[0] * (self.depths / self.depths[0]) ** self.single_color_slope
        return reference / self.xi_min


# CLOSED FORM PREDICTIONS
# =======================


def measurement_strength(photons: float, coupling: float, atom_count: float) -> float:
    if photons < 0 or atom_count < 0:
        raise ValueError('photon and atom numbers must not be negative')
    return photons * coupling ** 2 * atom_count


def optimal_gain(kappa2: float) -> float:
    if kappa2 < 0:
        raise ValueError('kappa2 must not be negative')
    return kappa2 / (1 + kappa2)


def conditional_variance(photons_first: float, photons_second: float, coupling: float, atom_count: float) -> float:
    """
    The variance var(phi_2 - zeta phi_1) = 1 / n_2 + k^2 N_A / (1 + kappa^2), kappa^2 = n_1 k^2 N_A.
    """
    if not (photons_first > 0 and photons_second > 0):
        raise ValueError('both photon numbers have to be positive')
    kappa2 = measurement_strength(photons_first, coupling, atom_count)
    return 1 / photons_second + coupling ** 2 * atom_count / (1 + kappa2)


def predicted_conditional_db(kappa2: float) -> float:
    """The reduction of the atomic noise by the conditioning, relative to projection noise, in dB"""
    return 10 * math.log10(1 / (1 + kappa2))


def eta_from_photons(photons: float, eta_reference: float, photons_reference: float) -> float:
    """
    Scales a measured decoherence *eta_reference* at *photons_reference* photons to another photon number, assuming
    that every photon scatters independently: eta = 1 - (1 - eta_ref)^(n / n_ref).
    """
    if photons < 0:
        raise ValueError('the photon number must not be negative')
    if not 0 <= eta_reference < 1:
        raise ValueError('eta_reference has to be within [0, 1)')
    if not photons_reference > 0:
        raise ValueError('photons_reference has to be positive')
    return 1 - (1 - eta_reference) ** (photons / photons_reference)


# MEASUREMENT
# ===========


def sample_measurement(state: CollectiveSpinState,
                       pulse: QndPulseSpec,
                       rng: np.random.Generator,
                       latent: Optional[float] = None) -> MeasurementOutcome:
    """
    Samples the outcome of a single QND probe pulse and conditions the spin state on it.

    **Details**

    The true value of J_z is a latent variable of the run. It is drawn from the state when *latent* is None, which is
    the case for the first pulse of a run. Afterwards it has to be passed in, so that all pulses of a run measure the
    same J_z. The measured signal is phi = 2 k j_z + shot noise. The posterior is the gaussian conditional of the
    state on phi, which reduces var(J_z) by the factor 1 + 4 n k^2 var(J_z). The optional partition and Stark terms
    inflate var(J_z) and var(J_x) afterwards, and the partition term also moves the latent J_z by the same amount.
    Finally the coherent fraction is reduced by *eta_per_pulse*.

    :param state: The prior state
    :param pulse: The probe pulse
    :param rng: The random generator of the run
    :param latent: The true J_z of the run, None for the first pulse
    :return: The measurement outcome, which holds the posterior state and the latent J_z for the next pulse
    """
    if latent is None:
        latent = rng.normal(state.mean[2], math.sqrt(state.variance('z')))
    latent = float(latent)

    shot_noise = 1 / pulse.photons_total
    signal_coupling = 2 * pulse.coupling
    phi = signal_coupling * latent + rng.normal(0.0, math.sqrt(shot_noise))

    cov = state.cov
    innovation_variance = signal_coupling ** 2 * cov[2, 2] + shot_noise
    cross = signal_coupling * cov[:, 2]
    gain = cross / innovation_variance
    mean = state.mean + gain * (phi - signal_coupling * state.mean[2])
    cov = cov - np.outer(gain, cross)
    cov = (cov + cov.T) / 2

    inflation = state.atom_count / 4
    if pulse.partition > 0:
        extra = pulse.partition * inflation
        cov[2, 2] += extra
        latent += rng.normal(0.0, math.sqrt(extra))
    if pulse.stark > 0:
        cov[0, 0] += pulse.stark * inflation

    posterior = CollectiveSpinState(
        atom_count=state.atom_count,
        mean=mean,
        cov=cov,
        coherent_fraction=state.coherent_fraction,
    )
    posterior = shrink_coherence(posterior, pulse.eta_per_pulse)
    return MeasurementOutcome(phi=float(phi), posterior=posterior, latent=latent)


def measure_sequence(state: CollectiveSpinState,
                     pulses: Sequence[QndPulseSpec],
                     rng: np.random.Generator,
                     latent: Optional[float] = None) -> List[MeasurementOutcome]:
    """
    Applies a train of pulses to the state. All of them measure the same latent J_z.
    """
    outcomes = []
    for pulse in pulses:
        outcome = sample_measurement(state, pulse, rng, latent=latent)
        state, latent = outcome.posterior, outcome.latent
        outcomes.append(outcome)

    return outcomes


# DECOHERENCE TRADE-OFF
# =====================


def xi_vs_eta(model: TradeoffModel, eta):
    """
    The squeezing parameter xi(eta) = 1 / (1 + C d eta) / (1 - eta)^2, which is reached when the measurement
    strength is bought with the decoherence eta. Works for scalars and numpy arrays.
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0) or np.any(eta >= 1):
        raise ValueError('eta has to be within [0, 1)')
    xi = 1 / (1 + model.strength * eta) / (1 - eta) ** 2
    return float(xi) if xi.ndim == 0 else xi


def find_optimal_eta(model: TradeoffModel) -> Tuple[float, float]:
    """
    Minimizes :func:`xi_vs_eta` over eta with a bounded scalar minimization.

    :return: The tuple (eta*, xi_min)
    """
    result = optimize.minimize_scalar(
        lambda eta: xi_vs_eta(model, eta),
        bounds=(0.0, 1.0 - 1e-9),
        method='bounded',
        options={'xatol': 1e-10},
    )
    eta = float(result.x)
    return eta, xi_vs_eta(model, eta)


def xi_min_closed_form(model: TradeoffModel) -> Tuple[float, float]:
    """
    The analytic optimum eta* = (C d - 2) / (3 C d), which exists for C d > 2. Below that, any measurement costs more
    coherence than it gains and the optimum is eta* = 0.
    """
    strength = model.strength
    if strength <= 2:
        return 0.0, 1.0
    eta = (strength - 2) / (3 * strength)
    return eta, xi_vs_eta(model, eta)


def depth_scaling(depths: Sequence[float], kappa2_per_eta: float = 1.0) -> DepthScaling:
    """
    Computes the best squeezing for every optical depth in *depths* and the slope of log(xi_min) over log(d).
    """
    depths = np.asarray(depths, dtype=float)
    xi_min = np.array([find_optimal_eta(TradeoffModel(depth, kappa2_per_eta))[1] for depth in depths])
    slope = float(np.polyfit(np.log(depths), np.log(xi_min), 1)[0]) if len(depths) > 1 else math.nan
    logger.debug('xi_min scales with the optical depth as d^%.4f', slope)
    return DepthScaling(depths=depths, xi_min=xi_min, slope=slope)
