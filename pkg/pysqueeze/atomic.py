"""
This module contains the optical response of the atomic ensemble to the two probe colors.

Everything in here is a pure function of the transition table of a probe color and the geometry of the probe beam.
The complex polarizability Q of a color is the central quantity: Its real part determines the dispersive phase shift
and thus the coupling of the interferometer signal to the collective spin, its imaginary part determines the absorption
and thus the decoherence which is caused by spontaneously scattered probe photons.

Units: all lengths are in meters, detunings and linewidths share one frequency unit (MHz in the packaged config).
"""
import math
import logging
import dataclasses
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from pysqueeze.exceptions import BracketError

logger = logging.getLogger(__name__)

# Number of grid points, which are used to locate a sign change of the Re Q difference before the root is polished
BALANCE_GRID_POINTS = 2001


# DOMAIN TYPES
# ============


@dataclass(frozen=True)
class TransitionLine:
    cg_weight: float
    detuning: float

    def __post_init__(self):
        if not 0 <= self.cg_weight <= 1:
            raise ValueError('cg_weight has to be within [0, 1], got {}'.format(self.cg_weight))
        if not math.isfinite(self.detuning):
            raise ValueError('detuning has to be finite')


@dataclass(frozen=True)
class ProbeColor:
    """
    One of the two probe colors of the dichromatic measurement.

    **Details**

    A color is described by the list of hyperfine transitions it couples to, each with its Clebsch-Gordan weight and
    its detuning from the respective line center, the natural linewidth *gamma* in the same frequency unit as the
    detunings, the vacuum wavelength and the photon numbers per pulse in the probe arm and in the reference arm of the
    interferometer.

    :param lines: A sequence of TransitionLine objects. Lists are converted into tuples.
    :param gamma: The natural linewidth
    :param wavelength: The vacuum wavelength in meters
    :param photons_probe: The number of photons per pulse in the probe arm (n_P)
    :param photons_reference: The number of detected photons per pulse in the reference arm (n_R)
    """
    lines: Tuple[TransitionLine, ...]
    gamma: float
    wavelength: float
    photons_probe: float
    photons_reference: float

    def __post_init__(self):
        object.__setattr__(self, 'lines', tuple(self.lines))
        if len(self.lines) == 0:
            raise ValueError('a probe color needs at least one transition line')
        if self.gamma <= 0:
            raise ValueError('gamma has to be positive')
        if self.wavelength <= 0:
            raise ValueError('wavelength has to be positive')
        if self.photons_probe < 0 or self.photons_reference < 0:
            raise ValueError('photon numbers must not be negative')

    def shifted(self, offset: float) -> 'ProbeColor':
        """
        Returns a copy of the color, where the detunings of all lines are moved by *offset*. This corresponds to
        tuning the probe laser frequency, since the splittings between the lines stay the same.
        """
        lines = [dataclasses.replace(line, detuning=line.detuning + offset) for line in self.lines]
        return dataclasses.replace(self, lines=lines)


@dataclass(frozen=True)
class BeamGeometry:
    waist: float
    detection_efficiency: float
    interaction_length: float

    def __post_init__(self):
        if self.waist <= 0:
            raise ValueError('waist has to be positive')
        if not 0 < self.detection_efficiency <= 1:
            raise ValueError('detection_efficiency has to be within (0, 1]')
        if self.interaction_length <= 0:
            raise ValueError('interaction_length has to be positive')

    @property
    def area(self) -> float:
        return math.pi * self.waist ** 2

    @property
    def peak_intensity(self) -> float:
        """The peak of the normalized gaussian intensity profile I_P(0) = 2 / (pi w^2)"""
        return 2 / self.area

    def intensity(self, radius):
        return self.peak_intensity * np.exp(-2 * np.asarray(radius) ** 2 / self.waist ** 2)


@dataclass(frozen=True)
class PolarizabilityQ:
    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, value: complex) -> 'PolarizabilityQ':
        return cls(re=float(value.real), im=float(value.imag))


# POLARIZABILITY
# ==============


def compute_q(color: ProbeColor) -> PolarizabilityQ:
    """
    Computes the complex polarizability Q = -(3 lambda^2 / 4 pi) sum_l cg_l / (detuning_l / gamma + i/2) of the given
    probe color. The sum runs over all transition lines of the color.

    :param color: The probe color
    :return: The polarizability in units of an area
    """
    weights = np.array([line.cg_weight for line in color.lines], dtype=float)
    detunings = np.array([line.detuning for line in color.lines], dtype=float)
    total = np.sum(weights / (detunings / color.gamma + 0.5j))
    prefactor = -3 * color.wavelength ** 2 / (4 * math.pi)
    return PolarizabilityQ.from_complex(prefactor * total)


def balance_detuning(fixed: ProbeColor,
                     movable: ProbeColor,
                     window: Tuple[float, float] = (-50.0, 50.0)) -> float:
    """
    Finds the frequency offset for the *movable* color, which makes the real part of its polarizability equal to the
    one of the *fixed* color. With balanced colors the dichromatic signal of a coherent superposition has zero mean.

    **Details**

    The window is scanned on a grid to find the sign changes of Re Q_movable - Re Q_fixed. The bracket closest to an
    offset of zero is then polished with Brent's method.

    :param fixed: The color which is not changed
    :param movable: The color whose detunings are shifted
    :param window: The (lower, upper) bounds of the offset in the frequency unit of the detunings
    :raises BracketError: If there is no sign change within the window
    :return: The offset, which has to be added to all detunings of the movable color
    """
    target = compute_q(fixed).re

    def difference(offset: float) -> float:
        return compute_q(movable.shifted(offset)).re - target

    if abs(difference(0.0)) <= 1e-12 * abs(target):
        return 0.0

    lower, upper = window
    grid = np.linspace(lower, upper, BALANCE_GRID_POINTS)
    values = np.array([difference(offset) for offset in grid])
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]
    if len(changes) == 0:
        raise BracketError('Re Q of the movable color does not cross Re Q of the fixed color within the offset window '
                           '[{}, {}]'.format(lower, upper))

    index = min(changes, key=lambda i: abs(grid[i] + grid[i + 1]))
    if values[index] == 0:
        offset = float(grid[index])
    else:
        offset = optimize.brentq(difference, grid[index], grid[index + 1], xtol=1e-14, rtol=1e-14)
    logger.debug('balanced probe colors with a detuning offset of %.6g', offset)
    return float(offset)


# COUPLING
# ========


def fringe_amplitude(geometry: BeamGeometry, photons_probe: float, photons_reference: float) -> float:
    return math.sqrt(geometry.detection_efficiency * photons_reference * photons_probe)


def total_photon_number(geometry: BeamGeometry, photons_probe: float, photons_reference: float) -> float:
    """The photon number n = 2 (n_R + t n_P) which sets the shot noise of the normalized signal"""
    return 2 * (photons_reference + geometry.detection_efficiency * photons_probe)


def coupling_constant(q: PolarizabilityQ,
                      geometry: BeamGeometry,
                      photons_probe: float,
                      photons_reference: float) -> float:
    """
    Computes the coupling k = fringe Re Q / (n pi w^2) between the normalized interferometer signal and the
    collective spin. The sign of k follows the sign of Re Q.

    :raises ValueError: If the total photon number is zero
    """
    photons = total_photon_number(geometry, photons_probe, photons_reference)
    if photons <= 0:
        raise ValueError('the coupling constant is undefined for a total photon number of zero')

    fringe = fringe_amplitude(geometry, photons_probe, photons_reference)
    return fringe * q.re / (photons * geometry.area)


def phase_shift(q: PolarizabilityQ, column_density: float) -> float:
    _check_column_density(column_density)
    return 0.5 * column_density * q.re


def absorption(q: PolarizabilityQ, column_density: float) -> float:
    _check_column_density(column_density)
    return column_density * q.im


def absorption_css(q_up: PolarizabilityQ, q_down: PolarizabilityQ, column_density: float) -> float:
    """Absorption coefficient of a coherent spin state, where half of the atoms interact with each color"""
    _check_column_density(column_density)
    return column_density * (q_up.im + q_down.im) / 4


def susceptibility(q: PolarizabilityQ, column_density: float, length: float, wavelength: float) -> complex:
    _check_column_density(column_density)
    return (column_density / length) * (wavelength / (2 * math.pi)) * q.value


def css_signal_variance(q: PolarizabilityQ, geometry: BeamGeometry, column_density: float, fringe: float) -> float:
    """
    Computes the variance of the differential photon number caused by the projection noise of a coherent spin state.

    Dividing this by n^2 gives k^2 N_A with N_A = column_density * pi w^2.
    """
    _check_column_density(column_density)
    return fringe ** 2 * q.re ** 2 * column_density / geometry.area


def atom_number(geometry: BeamGeometry, column_density: float) -> float:
    return column_density * geometry.area


def column_density(geometry: BeamGeometry, atom_count: float) -> float:
    return atom_count / geometry.area


# DECOHERENCE
# ===========


def coherent_density_fraction(intensity, photons_probe: float, alpha_per_atom: float):
    """
    The fraction n_CSS / n_A of atoms which did not scatter a photon, after a probe pulse of *photons_probe* photons
    per color passed with the local (normalized) intensity *intensity*.
    """
    return np.exp(-2 * photons_probe * np.asarray(intensity) * alpha_per_atom)


def eta_closed_form(exponent: float) -> float:
    """
    The analytic value of the beam averaged decoherence 1 - (1 - exp(-s)) / s for the peak exponent s = a I_0.
    """
    if exponent == 0:
        return 0.0
    return 1.0 + math.expm1(-exponent) / exponent


def predict_eta(colors: Sequence[ProbeColor], geometry: BeamGeometry, total_photons: float) -> float:
    """
    Predicts the decoherence parameter eta, which is caused by probing the atoms with *total_photons* photons
    (both colors combined, 2 n_P).

    **Details**

    The loss of coherence is weighted with the intensity profile of the probe, because the probe beam also measures
    the atoms with that weight. With rho = r / w the area integral of the normalized gaussian profile becomes
    4 rho exp(-2 rho^2) d rho, which is integrated with adaptive Gauss-Kronrod quadrature. The column density cancels,
    since both the absorption and the atom number are proportional to it.

    :param colors: The (up, down) pair of probe colors
    :param geometry: The probe beam geometry
    :param total_photons: The number of probe photons of both colors
    :return: The value of eta within [0, 1)
    """
    if total_photons < 0:
        raise ValueError('the photon number must not be negative')

    q_up, q_down = [compute_q(color) for color in colors]
    alpha_per_atom = absorption_css(q_up, q_down, 1.0)
    photons_probe = total_photons / 2
    if photons_probe * alpha_per_atom == 0:
        return 0.0

    def integrand(rho: float) -> float:
        profile = math.exp(-2 * rho ** 2)
        intensity = geometry.peak_intensity * profile
        return 4 * rho * profile * coherent_density_fraction(intensity, photons_probe, alpha_per_atom)

    coherent, _ = integrate.quad(integrand, 0, 10, epsabs=0, epsrel=1e-11, limit=200)
    return 1 - coherent


def eta_exponent(colors: Sequence[ProbeColor], geometry: BeamGeometry, total_photons: float) -> float:
    """The exponent s = a I_0 at the beam center, which enters :func:`eta_closed_form`"""
    q_up, q_down = [compute_q(color) for color in colors]
    return total_photons * absorption_css(q_up, q_down, 1.0) * geometry.peak_intensity


# HELPER FUNCTIONS
# ================


def _check_column_density(value: float):
    if value < 0:
        raise ValueError('the column density must not be negative')
