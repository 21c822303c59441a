"""
The data analysis of a measurement campaign.

The pipeline follows the way the squeezing was extracted from the recorded pulse data:

1. The first and the second block of P pulses of every run are combined into the normalized results phi_1, phi_2.
2. Slow drifts are removed by subtracting the same slot of the previous MOT cycle.
3. The runs are sorted by their atom number and grouped into bins. Within each bin var(phi_1), var(phi_2) and
   cov(phi_1, phi_2) are estimated.
4. Quadratic functions V(N) and C(N) are fitted to the variances and covariances. Their coefficients give the noise
   budget: the constant part is light and detector noise, the linear part projection noise and the quadratic part
   classical noise. The reference runs enter the fits as an additional bin at zero atoms. V and C are fitted through
   the common part V + C and the difference part V - C, and higher terms, which are consistent with zero, are dropped.
5. The conditionally reduced variance R(N) = V(N) (1 - (C(N) / V(N))^2) is compared to the projection noise v_1 N at
   the atom number of the rightmost bin, with and without the penalty for the decoherence of the first measurement.
"""
import math
import logging
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pysqueeze.atomic import PolarizabilityQ
from pysqueeze.exceptions import (DataError,
                                  EmptyBinError,
                                  MissingPredecessorError,
                                  NumericalError,
                                  RankDeficiencyError)
from pysqueeze.qnd import TradeoffModel, eta_from_photons, xi_vs_eta
from pysqueeze.simulation import Campaign, RawRun

logger = logging.getLogger(__name__)

MIN_BINS = 5
MAX_BINS = 30
MAX_PULSES_COMBINED = 10
# Normal equations with a larger condition number are treated as rank deficient
MAX_CONDITION = 1e14
# Fit terms within this many standard errors of zero are dropped
SIGNIFICANCE = 3.0
MODEL_WEIGHT_ITERATIONS = 3


# DOMAIN TYPES
# ============


@dataclass(frozen=True)
class AnalysisSettings:
    """
    The settings of the analysis pipeline.

    :param pulses_combined: The number P of pulses, which are combined into one measurement
    :param bins: The number of atom number bins for the main report
    :param bins_range: The (lowest, highest) number of bins, over which the squeezing is averaged for its uncertainty
    :param differencing: Whether the previous MOT cycle is subtracted
    :param photons_per_pulse: Photons per color and pulse n_pulse
    :param eta_reference: The decoherence measured with the spin echo
    :param photons_reference: The photon number of the spin echo measurement
    :param atom_signal_per_atom: Calibration of the atom number detection signal. When given, the bins are in units
        of atoms, otherwise in units of the detection signal.
    :param detection_q: Polarizability of the atom number detection, used for the phase based atom number estimate
    :param waist: Probe beam waist, used for the phase based atom number estimate
    :param reference_anchor: Whether the reference runs are added to the noise fits as a bin at zero atoms
    """
    pulses_combined: int = 4
    bins: int = 10
    bins_range: Tuple[int, int] = (MIN_BINS, MAX_BINS)
    differencing: bool = True
    reference_anchor: bool = True
    photons_per_pulse: float = 1.83e6
    eta_reference: float = 0.11
    photons_reference: float = 7.4e6
    atom_signal_per_atom: Optional[float] = None
    detection_q: Optional[PolarizabilityQ] = None
    waist: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'bins_range', tuple(self.bins_range))
        _check_pulses_combined(self.pulses_combined)
        _check_bins(self.bins)
        lowest, highest = self.bins_range
        _check_bins(lowest)
        _check_bins(highest)
        if lowest > highest:
            raise ValueError('bins_range has to be ordered')
        if not self.photons_per_pulse > 0:
            raise ValueError('photons_per_pulse has to be positive')
        if self.atom_signal_per_atom is not None and self.atom_signal_per_atom <= 0:
            raise ValueError('atom_signal_per_atom has to be positive')

    def photons(self, pulses_combined: Optional[int] = None) -> float:
        """The photon number n = 2 P n_pulse of a combined measurement"""
        return 2 * (pulses_combined or self.pulses_combined) * self.photons_per_pulse


@dataclass(frozen=True)
class PulsePair:
    phi1: float
    phi2: float
    n: float
    atom_signal: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError('n has to be positive')


@dataclass(frozen=True)
class AtomNumberBin:
    atom_number: float
    atom_signal: float
    count: int
    var1: float
    var2: float
    cov: float
    se_var1: float
    se_var2: float
    se_cov: float
    zeta: float
    se_zeta: float
    conditional: float
    se_conditional: float

    @property
    def pooled(self) -> float:
        return (self.var1 + self.var2) / 2

    @property
    def se_pooled(self) -> float:
        return math.sqrt(self.se_var1 ** 2 + self.se_var2 ** 2) / 2

    @property
    def common(self) -> float:
        """Half the variance of phi_1 + phi_2, V + C"""
        return self.pooled + self.cov

    @property
    def difference(self) -> float:
        """Half the variance of phi_2 - phi_1, V - C. The projection noise cancels in it."""
        return self.pooled - self.cov


@dataclass(frozen=True, eq=False)
class QuadFit:
    """
    The result of a weighted quadratic fit y = a_0 + a_1 x + a_2 x^2.

    :param coeffs: The coefficients (a_0, a_1, a_2)
    :param covariance: The 3x3 covariance matrix of the coefficients
    :param rss: The weighted residual sum of squares (chi^2)
    :param dof: The degrees of freedom of the fit
    """
    coeffs: np.ndarray
    covariance: np.ndarray
    rss: float
    dof: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.coeffs)):
            raise NumericalError('the fit produced non finite coefficients')

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        value = self.coeffs[0] + self.coeffs[1] * x + self.coeffs[2] * x ** 2
        return float(value) if value.ndim == 0 else value

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'coeffs':       self.coeffs.tolist(),
            'errors':       self.errors.tolist(),
            'covariance':   self.covariance.tolist(),
            'rss':          float(self.rss),
            'dof':          int(self.dof),
        }


@dataclass(frozen=True)
class DetectorNoise:
    """
    The detector noise d_0 of a single pulse signal, estimated from the reference runs.

    :param signal_variance: d_0 in photons^2
    :param photons_per_signal: The shot noise variance of a single pulse signal
    """
    signal_variance: float
    photons_per_signal: float

    def phi_variance(self, pulses_combined: int) -> float:
        """d_0 in units of the normalized signal phi of P combined pulses"""
        return self.signal_variance / (pulses_combined * self.photons_per_signal ** 2)


@dataclass(frozen=True)
class NoiseBudget:
    detector: float
    light_shot: float
    projection_slope: float
    classical_quadratic: float
    uncertainty: Dict[str, float] = field(default_factory=dict)

    def inconsistencies(self) -> List[str]:
        """The names of all components, which are negative by more than three standard errors"""
        names = []
        for name in ('detector', 'light_shot', 'projection_slope', 'classical_quadratic'):
            value = getattr(self, name)
            if value < -3 * self.uncertainty.get(name, 0.0):
                names.append(name)
        return names


@dataclass(frozen=True)
class SqueezingReport:
    pulses_combined: int
    atom_number: float
    kappa2: float
    zeta: float
    conditional_db: float
    eta: float
    xi_db: float
    uncertainty: float = 0.0
    conditional_uncertainty: float = 0.0

    def __post_init__(self):
        # the coherence penalty can only make things worse
        if self.xi_db < self.conditional_db - 1e-12:
            raise NumericalError('the squeezing is better than the conditional reduction')


@dataclass(frozen=True)
class AtomNumberCheck:
    phi_max: float
    from_slope: Optional[float]
    from_phase: Optional[float]

    @property
    def relative_difference(self) -> Optional[float]:
        if self.from_slope is None or self.from_phase is None:
            return None
        return abs(self.from_slope - self.from_phase) / self.from_phase


@dataclass(frozen=True)
class SweepPoint:
    pulses_combined: int
    eta: float
    xi_db: float
    xi_db_std: float
    conditional_db: float
    conditional_db_std: float
    bin_counts: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    settings: AnalysisSettings
    budget: NoiseBudget
    squeezing: Optional[SqueezingReport]
    variance_fit: QuadFit
    covariance_fit: QuadFit
    bins: List[AtomNumberBin]
    detector: Optional[DetectorNoise]
    atom_number: Optional[AtomNumberCheck]
    runs_used: int
    reference_only: bool = False
    reference_bin: Optional[AtomNumberBin] = None
    unreduced_fit: Optional[QuadFit] = None

    def to_dict(self) -> Dict[str, Any]:
        settings = asdict(self.settings)
        settings['bins_range'] = list(self.settings.bins_range)
        return {
            'settings':         settings,
            'runs_used':        self.runs_used,
            'reference_only':   self.reference_only,
            'noise_budget':     dict(asdict(self.budget), inconsistent=self.budget.inconsistencies()),
            'squeezing':        asdict(self.squeezing) if self.squeezing else None,
            'variance_fit':     self.variance_fit.to_dict(),
            'covariance_fit':   self.covariance_fit.to_dict(),
            'unreduced_fit':    self.unreduced_fit.to_dict() if self.unreduced_fit else None,
            'reference_bin':    asdict(self.reference_bin) if self.reference_bin else None,
            'detector':         asdict(self.detector) if self.detector else None,
            'atom_number':      asdict(self.atom_number) if self.atom_number else None,
        }

    def plot_frame(self) -> pd.DataFrame:
        """
        The per bin data together with the fitted curves, for external plotting. The reference bin, if it was used,
        is the first row and is marked in the column 'reference'.
        """
        points = ([self.reference_bin] if self.reference_bin else []) + list(self.bins)
        frame = pd.DataFrame([asdict(item) for item in points])
        frame.insert(0, 'reference', [item is self.reference_bin for item in points])
        frame['pooled'] = [item.pooled for item in points]
        frame['se_pooled'] = [item.se_pooled for item in points]
        x = frame['atom_number'].to_numpy()
        frame['V'] = self.variance_fit(x)
        frame['C'] = self.covariance_fit(x)
        frame['R'] = conditional_reduced_curve(self.variance_fit, self.covariance_fit, x)
        return frame


# PULSE COMBINATION
# =================


def combine_pulses(run: RawRun, pulses_combined: int, photons_per_pulse: float) -> PulsePair:
    """
    Combines the first and the second block of *pulses_combined* pulses of a run into the normalized results
    phi_1 = (p_1 + .. + p_P) / n and phi_2 = (p_P+1 + .. + p_2P) / n with n = 2 P n_pulse.

    :raises ValueError: if P is not within 1..10 or the run has less than 2 P pulses
    """
    _check_pulses_combined(pulses_combined, len(run.pulse_signals))
    photons = 2 * pulses_combined * photons_per_pulse
    signals = run.pulse_signals
    return PulsePair(
        phi1=float(np.sum(signals[:pulses_combined]) / photons),
        phi2=float(np.sum(signals[pulses_combined:2 * pulses_combined]) / photons),
        n=photons,
        atom_signal=run.atom_signal,
    )


def subtract_previous_cycle(campaign: Campaign) -> Campaign:
    """
    Subtracts from every run the run in the same slot of the previous MOT cycle. The runs of the first cycle have no
    predecessor and are dropped.

    The difference of two runs has twice the white noise variance, so the *variance_scale* of the result is halved.
    The atom signal of a differenced run is the mean of both atom signals, which keeps the variance linear in it.

    :raises MissingPredecessorError: if a run of a later cycle has no run in the same slot of the previous cycle
    """
    lookup = {}
    for run in campaign:
        key = (run.cycle_id, run.slot)
        if key in lookup:
            raise DataError('the campaign contains slot {} of cycle {} twice'.format(run.slot, run.cycle_id))
        lookup[key] = run

    cycle_ids = campaign.cycle_ids()
    if not cycle_ids:
        return Campaign(runs=[], seed=campaign.seed, variance_scale=campaign.variance_scale / 2)

    first = cycle_ids[0]
    runs = []
    for run in campaign:
        if run.cycle_id == first:
            continue
        previous = lookup.get((run.cycle_id - 1, run.slot))
        if previous is None:
            raise MissingPredecessorError('slot {} of cycle {} has no predecessor'.format(run.slot, run.cycle_id))
        if previous.is_reference != run.is_reference:
            raise DataError('slot {} changes between reference and atoms in cycle {}'.format(run.slot, run.cycle_id))

        atom_count = None
        if run.true_atom_count is not None and previous.true_atom_count is not None:
            atom_count = (run.true_atom_count + previous.true_atom_count) / 2
        runs.append(RawRun(
            cycle_id=run.cycle_id,
            slot=run.slot,
            is_reference=run.is_reference,
            pulse_signals=run.pulse_signals - previous.pulse_signals,
            atom_signal=(run.atom_signal + previous.atom_signal) / 2,
            true_atom_count=atom_count,
        ))

    return Campaign(runs=runs, seed=campaign.seed, variance_scale=campaign.variance_scale / 2)


# BINNING
# =======


def bin_by_atom_number(pairs: Sequence[PulsePair],
                       n_bins: int,
                       variance_scale: float = 1.0,
                       atom_signal_per_atom: Optional[float] = None) -> List[AtomNumberBin]:
    """
    Sorts the pulse pairs by their atom signal and splits them into *n_bins* bins of equal population. For each bin
    the unbiased sample (co)variances of phi_1 and phi_2 are computed together with their gaussian standard errors.

    :param pairs: The pulse pairs
    :param n_bins: The number of bins, 5..30
    :param variance_scale: Factor for all variances, 0.5 for differenced data
    :param atom_signal_per_atom: Converts the atom signal into an atom number, if given
    :raises EmptyBinError: if a bin would contain less than 2 pairs
    :return: The bins in the order of increasing atom number
    """
    phi1 = np.array([pair.phi1 for pair in pairs], dtype=float)
    phi2 = np.array([pair.phi2 for pair in pairs], dtype=float)
    signal = np.array([pair.atom_signal for pair in pairs], dtype=float)
    return _bin_arrays(phi1, phi2, signal, n_bins, variance_scale, atom_signal_per_atom)


def _bin_arrays(phi1: np.ndarray,
                phi2: np.ndarray,
                signal: np.ndarray,
                n_bins: int,
                variance_scale: float,
                atom_signal_per_atom: Optional[float]) -> List[AtomNumberBin]:
    _check_bins(n_bins)
    if len(phi1) < 2 * n_bins:
        raise EmptyBinError('{} pairs are not enough for {} bins of at least 2 pairs'.format(len(phi1), n_bins))

    calibration = atom_signal_per_atom or 1.0
    order = np.argsort(signal, kind='stable')
    bins = []
    for indices in np.array_split(order, n_bins):
        atom_signal = float(np.mean(signal[indices]))
        bins.append(_make_bin(phi1[indices], phi2[indices], atom_signal, atom_signal / calibration, variance_scale))

    return bins


def reference_bin(runs: Sequence[RawRun],
                  pulses_combined: int,
                  photons_per_pulse: float,
                  variance_scale: float = 1.0) -> AtomNumberBin:
    """
    The (co)variances of the reference runs as a bin at zero atoms. It pins the light and detector noise floor of the
    noise fits, which the atom bins only reach by extrapolation.

    :raises EmptyBinError: if there are less than 3 reference runs
    """
    if len(runs) < 3:
        raise EmptyBinError('the reference bin needs at least 3 runs, got {}'.format(len(runs)))
    phi1, phi2, _ = pair_arrays(runs, pulses_combined, photons_per_pulse)
    return _make_bin(phi1, phi2, 0.0, 0.0, variance_scale)


def _make_bin(x1: np.ndarray,
              x2: np.ndarray,
              atom_signal: float,
              atom_number: float,
              variance_scale: float) -> AtomNumberBin:
    count = len(x1)
    var1 = float(np.var(x1, ddof=1)) * variance_scale
    var2 = float(np.var(x2, ddof=1)) * variance_scale
    cov = float(np.cov(x1, x2, ddof=1)[0, 1]) * variance_scale

    zeta = cov / var1 if var1 > 0 else 0.0
    conditional = max(var2 - zeta * cov, 0.0)
    if count > 2 and var1 > 0:
        se_zeta = math.sqrt(max(var2 / var1 - zeta ** 2, 0.0) / (count - 2))
    else:
        se_zeta = math.inf

    relative = math.sqrt(2 / (count - 1))
    return AtomNumberBin(
        atom_number=atom_number,
        atom_signal=atom_signal,
        count=count,
        var1=var1,
        var2=var2,
        cov=cov,
        se_var1=var1 * relative,
        se_var2=var2 * relative,
        se_cov=math.sqrt((var1 * var2 + cov ** 2) / (count - 1)),
        zeta=zeta,
        se_zeta=se_zeta,
        conditional=conditional,
        se_conditional=conditional * relative,
    )


# FITTING
# =======


def fit_quadratic(x: Sequence[float], y: Sequence[float], weights: Optional[Sequence[float]] = None) -> QuadFit:
    """
    Fits y = a_0 + a_1 x + a_2 x^2 by weighted least squares.

    **Details**

    The columns of the design matrix are scaled to a maximum of one before the normal equations are set up. If the
    scaled normal matrix is still badly conditioned, the fit is refused. The covariance of the coefficients is the
    inverse of the normal matrix, multiplied with the reduced chi^2 if there are more points than coefficients.

    :param x: The positions, at least 3 distinct values
    :param y: The values
    :param weights: Positive weights, usually 1 / standard error^2. Uniform if None.
    :raises RankDeficiencyError: if the coefficients are not determined by the data
    :return: The fit
    """
    return fit_polynomial(x, y, weights, degree=2)


def fit_polynomial(x: Sequence[float],
                   y: Sequence[float],
                   weights: Optional[Sequence[float]] = None,
                   degree: int = 2) -> QuadFit:
    """
    Like :func:`fit_quadratic`, but the terms above *degree* are fixed to zero. Their coefficients and covariances are
    zero in the returned fit.
    """
    if degree not in (0, 1, 2):
        raise ValueError('the degree has to be 0, 1 or 2')
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if not x.shape == y.shape == weights.shape or x.ndim != 1:
        raise ValueError('x, y and weights need the same one dimensional shape')
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError('weights have to be finite and positive')
    terms = degree + 1
    if len(np.unique(x)) < terms:
        raise RankDeficiencyError('a fit of degree {} needs at least {} distinct positions'.format(degree, terms))

    design = np.vander(x, terms, increasing=True)
    scale = np.max(np.abs(design), axis=0)
    scale[scale == 0] = 1.0
    scaled = design / scale

    normal = scaled.T @ (weights[:, None] * scaled)
    condition = np.linalg.cond(normal)
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise RankDeficiencyError('the normal equations are singular (condition number {:.3g})'.format(condition))

    solution = np.linalg.solve(normal, scaled.T @ (weights * y))
    coeffs = solution / scale
    residuals = y - design @ coeffs
    chi2 = float(np.sum(weights * residuals ** 2))
    dof = len(x) - terms

    covariance = np.linalg.inv(normal)
    if dof > 0:
        covariance = covariance * chi2 / dof
    covariance = covariance / np.outer(scale, scale)

    padded_coeffs = np.zeros(3)
    padded_coeffs[:terms] = coeffs
    padded_covariance = np.zeros((3, 3))
    padded_covariance[:terms, :terms] = covariance
    return QuadFit(coeffs=padded_coeffs, covariance=padded_covariance, rss=chi2, dof=dof)


def fit_noise_channel(x: Sequence[float],
                      values: Sequence[float],
                      counts: Sequence[int],
                      min_degree: int = 0,
                      significance: float = SIGNIFICANCE) -> QuadFit:
    """
    Fits sample variances over the atom number, starting with a quadratic and dropping the highest term as long as it
    is within *significance* standard errors of zero.

    **Details**

    The sample variance of *count* gaussian values has the standard error value * sqrt(2 / (count - 1)). The weights
    use the fitted curve instead of the sample values themselves, since the latter give too much weight to the bins
    which fluctuated low. The curve and the weights are iterated a few times.

    :param x: The atom numbers of the bins
    :param values: The sample variances
    :param counts: The number of samples behind every variance
    :param min_degree: The degree below which no term is dropped
    :param significance: The threshold in standard errors
    :raises EmptyBinError: if a variance is based on less than 2 samples
    :return: The fit with the selected degree
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 2):
        raise EmptyBinError('every variance needs at least 2 samples')

    for degree in range(2, min_degree - 1, -1):
        fit = _fit_with_model_weights(x, values, counts, degree)
        if degree == min_degree or abs(fit.coeffs[degree]) > significance * fit.errors[degree]:
            return fit
        logger.debug('dropping the term of degree %d: %.3g +- %.3g', degree, fit.coeffs[degree],
                     fit.errors[degree])
    raise ValueError('min_degree has to be 0, 1 or 2')


def _fit_with_model_weights(x: np.ndarray, values: np.ndarray, counts: np.ndarray, degree: int) -> QuadFit:
    fallback = float(np.mean(np.abs(values))) or 1.0
    expected = np.where(values > 0, values, fallback)
    fit = None
    for _ in range(MODEL_WEIGHT_ITERATIONS):
        fit = fit_polynomial(x, values, (counts - 1) / (2 * expected ** 2), degree)
        curve = np.asarray(fit(x), dtype=float).reshape(x.shape)
        if np.any(curve <= 0):
            break
        expected = curve
    return fit


def combine_fits(first: QuadFit, second: QuadFit, sign: float = 1.0) -> QuadFit:
    """(first + sign second) / 2 for two independent fits"""
    return QuadFit(
        coeffs=(first.coeffs + sign * second.coeffs) / 2,
        covariance=(first.covariance + second.covariance) / 4,
        rss=first.rss + second.rss,
        dof=first.dof + second.dof,
    )


def conditional_reduced_curve(variance: QuadFit, covariance: QuadFit, atom_number):
    """
    R(N) = V(N) (1 - (C(N) / V(N))^2), the variance of phi_2 after the prediction from phi_1 has been subtracted.

    :raises NumericalError: if V(N) is not positive
    """
    v = np.asarray(variance(atom_number), dtype=float)
    c = np.asarray(covariance(atom_number), dtype=float)
    if np.any(v <= 0):
        raise NumericalError('the fitted variance is not positive')
    result = v * (1 - (c / v) ** 2)
    return float(result) if result.ndim == 0 else result


def squeezing_metric(r_max: float,
                     r_zero: float,
                     v1: float,
                     atom_number: float,
                     photons_probe: float,
                     eta_reference: float,
                     photons_reference: float) -> float:
    """
    SQ = 10 log10((R(N_max) - R(0)) / (v_1 N_max) (1 - eta_se)^(-2 n_probe / n_se)) in dB.

    *photons_probe* is the number of photons of both colors in the probe arm, which the first measurement uses. The
    exponent applies the penalty (1 - eta)^-2 for the eta, which the first measurement causes.

    :raises NumericalError: if the argument of the logarithm is not positive
    """
    projection = v1 * atom_number
    if not projection > 0:
        raise NumericalError('the projection noise v1 N_max is not positive')
    ratio = (r_max - r_zero) / projection
    if not ratio > 0:
        raise NumericalError('the conditional atomic noise R(N_max) - R(0) is not positive')

    penalty = (1 - eta_reference) ** (-2 * photons_probe / photons_reference)
    return 10 * math.log10(ratio * penalty)


# ATOM NUMBER
# ===========


def atom_number_from_slope(var_slope: float, phi_max: float) -> float:
    """
    The atom number at the atom signal *phi_max*, from the slope of the projection noise variance over the signal.
    """
    if not var_slope > 0:
        raise ValueError('the slope of the projection noise has to be positive')
    return phi_max / var_slope


def atom_number_from_phase(phi_max: float, q: PolarizabilityQ, waist: float) -> float:
    """
    The atom number from the phase shift of the detection pulse, N = phi_max 2 pi w^2 / |Re Q|.
    """
    if q.re == 0:
        raise ValueError('the atom number is undefined for Re Q = 0')
    return phi_max * 2 * math.pi * waist ** 2 / abs(q.re)


def estimate_detector_noise(runs: Sequence[RawRun],
                            photons_per_pulse: float,
                            variance_scale: float = 1.0) -> DetectorNoise:
    """
    Estimates the detector noise d_0 from the reference runs. The variance of the pulse signals around the mean of
    their run is shot noise plus detector noise. Taking it within the runs removes drifts, which are common to all
    pulses of a run.

    :raises DataError: if there are no reference runs with at least two pulses
    """
    if not runs or len(runs[0].pulse_signals) < 2:
        raise DataError('the detector noise needs reference runs with at least two pulses')

    signals = np.array([run.pulse_signals for run in runs], dtype=float)
    photons = 2 * photons_per_pulse
    variance = float(np.mean(np.var(signals, axis=1, ddof=1))) * variance_scale
    return DetectorNoise(signal_variance=variance - photons, photons_per_signal=photons)


# PIPELINE
# ========


@dataclass(frozen=True, eq=False)
class _Evaluation:
    bins: List[AtomNumberBin]
    variance_fit: QuadFit
    covariance_fit: QuadFit
    atom_number: float
    kappa2: float
    zeta: float
    conditional_db: float
    eta: float
    xi_db: float


def pair_arrays(runs: Sequence[RawRun],
                pulses_combined: int,
                photons_per_pulse: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The (phi_1, phi_2, atom_signal) arrays of all runs, see :func:`combine_pulses`"""
    if not runs:
        raise DataError('there are no runs to analyze')
    signals = np.array([run.pulse_signals for run in runs], dtype=float)
    _check_pulses_combined(pulses_combined, signals.shape[1])
    photons = 2 * pulses_combined * photons_per_pulse
    phi1 = signals[:, :pulses_combined].sum(axis=1) / photons
    phi2 = signals[:, pulses_combined:2 * pulses_combined].sum(axis=1) / photons
    return phi1, phi2, np.array([run.atom_signal for run in runs], dtype=float)


def fit_noise(bins: Sequence[AtomNumberBin],
              anchor: Optional[AtomNumberBin] = None,
              reduce: bool = True) -> Tuple[QuadFit, QuadFit]:
    """
    Fits the quadratic noise curves V(N) and C(N) to the bins.

    **Details**

    V + C is half the variance of phi_1 + phi_2 and V - C half the variance of phi_2 - phi_1. Both are sample
    variances and statistically independent, so they are fitted separately by :func:`fit_noise_channel` and combined
    into V and C afterwards. If *reduce* is set, the quadratic terms of both parts and the linear term of V - C are
    dropped while they are consistent with zero. The linear term of V + C, which holds the projection noise, is kept.

    :param bins: The atom number bins
    :param anchor: An optional bin at zero atoms from the reference runs
    :param reduce: Whether insignificant terms are dropped
    :return: The tuple (V, C)
    """
    points = ([anchor] if anchor is not None else []) + list(bins)
    x = [item.atom_number for item in points]
    counts = [item.count for item in points]
    common = fit_noise_channel(x, [item.common for item in points], counts, min_degree=1 if reduce else 2)
    difference = fit_noise_channel(x, [item.difference for item in points], counts, min_degree=0 if reduce else 2)
    return combine_fits(common, difference, 1.0), combine_fits(common, difference, -1.0)


def _evaluate(arrays: Tuple[np.ndarray, np.ndarray, np.ndarray],
              n_bins: int,
              variance_scale: float,
              settings: AnalysisSettings,
              pulses_combined: int,
              anchor: Optional[AtomNumberBin] = None) -> _Evaluation:
    phi1, phi2, signal = arrays
    bins = _bin_arrays(phi1, phi2, signal, n_bins, variance_scale, settings.atom_signal_per_atom)
    variance_fit, covariance_fit = fit_noise(bins, anchor)

    atom_number = bins[-1].atom_number
    r_max = conditional_reduced_curve(variance_fit, covariance_fit, atom_number)
    r_zero = conditional_reduced_curve(variance_fit, covariance_fit, 0.0)
    v1 = float(variance_fit.coeffs[1])
    photons_probe = settings.photons(pulses_combined)

    conditional_db = squeezing_metric(r_max, r_zero, v1, atom_number, 0.0,
                                      settings.eta_reference, settings.photons_reference)
    xi_db = squeezing_metric(r_max, r_zero, v1, atom_number, photons_probe,
                             settings.eta_reference, settings.photons_reference)
    return _Evaluation(
        bins=bins,
        variance_fit=variance_fit,
        covariance_fit=covariance_fit,
        atom_number=atom_number,
        kappa2=settings.photons(pulses_combined) * v1 * atom_number,
        zeta=covariance_fit(atom_number) / variance_fit(atom_number),
        conditional_db=conditional_db,
        eta=eta_from_photons(photons_probe, settings.eta_reference, settings.photons_reference),
        xi_db=xi_db,
    )


def _evaluate_over_bins(arrays,
                        variance_scale: float,
                        settings: AnalysisSettings,
                        pulses_combined: int,
                        anchor: Optional[AtomNumberBin] = None):
    lowest, highest = settings.bins_range
    evaluations = []
    for n_bins in range(lowest, highest + 1):
        try:
            evaluation = _evaluate(arrays, n_bins, variance_scale, settings, pulses_combined, anchor)
            evaluations.append((n_bins, evaluation))
        except (DataError, NumericalError) as e:
            logger.warning('skipping %d bins for P = %d: %s', n_bins, pulses_combined, str(e))

    if not evaluations:
        raise NumericalError('the squeezing could not be evaluated for any bin count of P = {}'.format(
            pulses_combined))
    return evaluations


def _prepare(campaign: Campaign, settings: AnalysisSettings) -> Campaign:
    if settings.differencing:
        campaign = subtract_previous_cycle(campaign)
    if len(campaign) == 0:
        raise DataError('the campaign contains no runs to analyze')
    return campaign


def analyze(campaign: Campaign, settings: AnalysisSettings) -> AnalysisReport:
    """
    Runs the whole analysis pipeline on a campaign.

    **Details**

    The noise fits and the bins of the report are computed with *settings.bins* bins. The squeezing numbers are the
    mean over all bin counts in *settings.bins_range* and their standard deviation is reported as the uncertainty. If
    the campaign contains no runs with atoms, the reference runs are analyzed instead, which yields the noise budget
    without atoms but no squeezing.

    :param campaign: The campaign, as simulated or read from a CSV file
    :param settings: The analysis settings
    :return: The report
    """
    campaign = _prepare(campaign, settings)
    scale = campaign.variance_scale
    pulses_combined = settings.pulses_combined

    references = campaign.reference_runs()
    runs = campaign.atom_runs()
    reference_only = not runs
    if reference_only:
        logger.warning('the campaign contains no runs with atoms, analyzing the reference runs')
        runs = references

    detector = None
    if references:
        detector = estimate_detector_noise(references, settings.photons_per_pulse, scale)
    else:
        logger.warning('the campaign contains no reference runs, the detector noise is taken as zero')

    anchor = None
    if settings.reference_anchor and not reference_only:
        anchor = _anchor(references, pulses_combined, settings, scale)

    arrays = pair_arrays(runs, pulses_combined, settings.photons_per_pulse)
    bins = _bin_arrays(*arrays, settings.bins, scale, settings.atom_signal_per_atom)
    variance_fit, covariance_fit = fit_noise(bins, anchor)
    unreduced_fit, _ = fit_noise(bins, anchor, reduce=False)

    d0 = detector.phi_variance(pulses_combined) if detector else 0.0
    v0, v1, _ = variance_fit.coeffs
    c0 = covariance_fit.coeffs[0]
    v_errors, c_errors = variance_fit.errors, covariance_fit.errors
    budget = NoiseBudget(
        detector=d0,
        light_shot=float(v0 - abs(c0) - d0),
        projection_slope=float(v1),
        classical_quadratic=float(unreduced_fit.coeffs[2]),
        uncertainty={
            'light_shot':           float(math.hypot(v_errors[0], c_errors[0])),
            'projection_slope':     float(v_errors[1]),
            'classical_quadratic':  float(unreduced_fit.errors[2]),
        },
    )

    squeezing = None
    atom_number = None
    if not reference_only:
        evaluations = _evaluate_over_bins(arrays, scale, settings, pulses_combined, anchor)
        squeezing = _squeezing_report(evaluations, pulses_combined)
        atom_number = _atom_number_check(bins, variance_fit, settings)

    return AnalysisReport(
        settings=settings,
        budget=budget,
        squeezing=squeezing,
        variance_fit=variance_fit,
        covariance_fit=covariance_fit,
        bins=bins,
        detector=detector,
        atom_number=atom_number,
        runs_used=len(runs),
        reference_only=reference_only,
        reference_bin=anchor,
        unreduced_fit=unreduced_fit,
    )


def eta_sweep(campaign: Campaign,
              settings: AnalysisSettings,
              pulses_values: Sequence[int] = tuple(range(1, MAX_PULSES_COMBINED + 1))) -> List[SweepPoint]:
    """
    Evaluates the squeezing for every number of combined pulses in *pulses_values*. More combined pulses mean more
    photons and thus a stronger measurement, but also a larger decoherence eta.

    :return: One SweepPoint per value of P, in the given order
    """
    campaign = _prepare(campaign, settings)
    runs = campaign.atom_runs()
    if not runs:
        raise DataError('the eta sweep needs runs with atoms')

    points = []
    for pulses_combined in pulses_values:
        anchor = None
        if settings.reference_anchor:
            anchor = _anchor(campaign.reference_runs(), pulses_combined, settings, campaign.variance_scale)
        arrays = pair_arrays(runs, pulses_combined, settings.photons_per_pulse)
        evaluations = _evaluate_over_bins(arrays, campaign.variance_scale, settings, pulses_combined, anchor)
        xi = np.array([evaluation.xi_db for _, evaluation in evaluations])
        conditional = np.array([evaluation.conditional_db for _, evaluation in evaluations])
        points.append(SweepPoint(
            pulses_combined=pulses_combined,
            eta=evaluations[0][1].eta,
            xi_db=float(np.mean(xi)),
            xi_db_std=float(np.std(xi)),
            conditional_db=float(np.mean(conditional)),
            conditional_db_std=float(np.std(conditional)),
            bin_counts=tuple(n_bins for n_bins, _ in evaluations),
        ))
        logger.info('P = %d: eta = %.3f, xi = %.2f dB', pulses_combined, points[-1].eta, points[-1].xi_db)

    return points


def theory_curve(model: TradeoffModel, etas: Sequence[float]) -> List[Tuple[float, float]]:
    """The theoretical squeezing 10 log10(xi(eta)) for the given values of eta"""
    return [(float(eta), 10 * math.log10(xi_vs_eta(model, eta))) for eta in etas]


# HELPER FUNCTIONS
# ================


def _anchor(references: Sequence[RawRun],
            pulses_combined: int,
            settings: AnalysisSettings,
            variance_scale: float) -> Optional[AtomNumberBin]:
    try:
        return reference_bin(references, pulses_combined, settings.photons_per_pulse, variance_scale)
    except DataError as e:
        logger.warning('the noise fits are not anchored at zero atoms: %s', str(e))
        return None


def _squeezing_report(evaluations, pulses_combined: int) -> SqueezingReport:
    results = [evaluation for _, evaluation in evaluations]
    xi = np.array([evaluation.xi_db for evaluation in results])
    conditional = np.array([evaluation.conditional_db for evaluation in results])
    return SqueezingReport(
        pulses_combined=pulses_combined,
        atom_number=float(np.mean([evaluation.atom_number for evaluation in results])),
        kappa2=float(np.mean([evaluation.kappa2 for evaluation in results])),
        zeta=float(np.mean([evaluation.zeta for evaluation in results])),
        conditional_db=float(np.mean(conditional)),
        eta=results[0].eta,
        xi_db=float(np.mean(xi)),
        uncertainty=float(np.std(xi)),
        conditional_uncertainty=float(np.std(conditional)),
    )


def _atom_number_check(bins: List[AtomNumberBin],
                       variance_fit: QuadFit,
                       settings: AnalysisSettings) -> Optional[AtomNumberCheck]:
    phi_max = bins[-1].atom_signal
    calibration = settings.atom_signal_per_atom or 1.0
    try:
        from_slope = atom_number_from_slope(float(variance_fit.coeffs[1]) / calibration, phi_max)
    except ValueError as e:
        logger.warning('no atom number from the projection noise slope: %s', str(e))
        from_slope = None

    from_phase = None
    if settings.detection_q is not None and settings.waist is not None:
        from_phase = atom_number_from_phase(phi_max, settings.detection_q, settings.waist)

    return AtomNumberCheck(phi_max=phi_max, from_slope=from_slope, from_phase=from_phase)


def _check_pulses_combined(pulses_combined: int, pulses: int = 2 * MAX_PULSES_COMBINED):
    if not 1 <= pulses_combined <= MAX_PULSES_COMBINED or 2 * pulses_combined > pulses:
        raise ValueError('cannot combine {} pulses out of {}'.format(pulses_combined, pulses))


def _check_bins(n_bins: int):
    if not MIN_BINS <= n_bins <= MAX_BINS:
        raise ValueError('the number of bins has to be within {}..{}'.format(MIN_BINS, MAX_BINS))
