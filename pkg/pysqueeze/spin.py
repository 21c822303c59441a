"""
Gaussian moment description of the collective pseudo spin of the atomic ensemble.

The state is given by the mean Bloch vector, the covariance of the fluctuations around it and the coherent fraction,
which tracks by how much spontaneous scattering has shortened the Bloch vector. Rotations act on the mean and the
covariance, decoherence only on the coherent fraction.

Rotation convention: all rotations are active and right handed, a rotation by +pi/2 about x maps y onto z.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

AXES = {
    'x': np.array([1.0, 0.0, 0.0]),
    'y': np.array([0.0, 1.0, 0.0]),
    'z': np.array([0.0, 0.0, 1.0]),
}
INDEX = {'x': 0, 'y': 1, 'z': 2}


# STATE
# =====


@dataclass(frozen=True, eq=False)
class CollectiveSpinState:
    """
    Gaussian state of the collective spin J = (J_x, J_y, J_z) of *atom_count* two level atoms.

    **Details**

    *mean* and *cov* are in units of atoms (atoms squared respectively). The *coherent_fraction* is 1 - eta, the
    factor by which the usable length of the Bloch vector has been reduced. It does not change the fluctuations.

    The mean is allowed to exceed N_A / 2 by the size of the fluctuations, because the measurement updates shift it in
    the flat tangent plane of the Bloch sphere.

    :param atom_count: The number of atoms N_A
    :param mean: The 3-vector of the expectation values
    :param cov: The symmetric positive semidefinite 3x3 covariance matrix
    :param coherent_fraction: 1 - eta, within [0, 1]
    """
    atom_count: float
    mean: np.ndarray
    cov: np.ndarray
    coherent_fraction: float = field(default=1.0)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)

        if self.atom_count <= 0:
            raise ValueError('atom_count has to be positive')
        if mean.shape != (3,) or cov.shape != (3, 3):
            raise ValueError('mean has to be a 3-vector and cov a 3x3 matrix')
        if not 0 <= self.coherent_fraction <= 1:
            raise ValueError('coherent_fraction has to be within [0, 1]')

        scale = max(1.0, float(np.max(np.abs(cov))))
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-9 * scale):
            raise ValueError('cov has to be symmetric')
        if np.min(np.linalg.eigvalsh(cov)) < -1e-9 * scale:
            raise ValueError('cov has to be positive semidefinite')

        spread = math.sqrt(max(float(np.trace(cov)), 0.0))
        if np.linalg.norm(mean) > self.atom_count / 2 * (1 + 1e-12) + 6 * spread:
            raise ValueError('the mean spin is longer than atom_count / 2')

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.mean))

    def variance(self, axis: str) -> float:
        index = INDEX[axis]
        return float(self.cov[index, index])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'atom_count':           float(self.atom_count),
            'mean':                 self.mean.tolist(),
            'cov':                  self.cov.tolist(),
            'coherent_fraction':    float(self.coherent_fraction),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CollectiveSpinState':
        return cls(
            atom_count=data['atom_count'],
            mean=np.array(data['mean'], dtype=float),
            cov=np.array(data['cov'], dtype=float),
            coherent_fraction=data.get('coherent_fraction', 1.0),
        )


def new_css(atom_count: float, direction: Sequence[float]) -> CollectiveSpinState:
    """
    Creates a coherent spin state of *atom_count* atoms, whose Bloch vector points along *direction*.

    The variance is N_A / 4 for both directions orthogonal to the Bloch vector and zero along it.

    :raises ValueError: if the direction is not a unit vector
    """
    if atom_count <= 0:
        raise ValueError('atom_count has to be positive')
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (3,) or abs(np.linalg.norm(direction) - 1) > 1e-12:
        raise ValueError('direction has to be a unit 3-vector')

    transverse = np.eye(3) - np.outer(direction, direction)
    return CollectiveSpinState(
        atom_count=atom_count,
        mean=atom_count / 2 * direction,
        cov=atom_count / 4 * transverse,
        coherent_fraction=1.0,
    )


# ROTATIONS
# =========


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    return Rotation.from_rotvec(angle * AXES[axis]).as_matrix()


def rotate(state: CollectiveSpinState, axis: str, angle: float) -> CollectiveSpinState:
    matrix = rotation_matrix(axis, angle)
    cov = matrix @ state.cov @ matrix.T
    return CollectiveSpinState(
        atom_count=state.atom_count,
        mean=matrix @ state.mean,
        # the conjugation is symmetric only up to rounding
        cov=(cov + cov.T) / 2,
        coherent_fraction=state.coherent_fraction,
    )


def clock_sequence(state: CollectiveSpinState, phi: float) -> CollectiveSpinState:
    """
    Applies the clock sequence, which maps the initial J_z onto cos(phi) J_y - sin(phi) J_z.

    The sequence is a -pi/2 rotation about y, a rotation by phi about z and a pi/2 rotation about x. For phi = -pi/2
    the J_z projection is left unchanged, which is what allows a squeezed J_z to be carried through the clock.
    """
    state = rotate(state, 'y', -math.pi / 2)
    state = rotate(state, 'z', phi)
    return rotate(state, 'x', math.pi / 2)


def ramsey_sequence(state: CollectiveSpinState, phi: float) -> CollectiveSpinState:
    """The conventional Ramsey sequence: pi/2 about x, free evolution phase phi about z, pi/2 about x"""
    state = rotate(state, 'x', math.pi / 2)
    state = rotate(state, 'z', phi)
    return rotate(state, 'x', math.pi / 2)


def ramsey_fringe(state: CollectiveSpinState, phi: float) -> float:
    return state.coherent_fraction * math.cos(phi) * float(state.mean[1])


# SQUEEZING
# =========


def squeezing_parameter(state: CollectiveSpinState) -> float:
    """
    Computes xi = var(J_z) N_A / |<J>|^2, where the length of the mean spin is reduced by the coherent fraction.

    :raises ValueError: if the mean spin vector is zero
    """
    length = state.length
    if length == 0:
        raise ValueError('the squeezing parameter is undefined for a zero mean spin')
    if state.coherent_fraction == 0:
        return math.inf

    effective = state.coherent_fraction * length
    return state.variance('z') * state.atom_count / effective ** 2


def shrink_coherence(state: CollectiveSpinState, eta_increment: float) -> CollectiveSpinState:
    if not 0 <= eta_increment <= 1:
        raise ValueError('eta_increment has to be within [0, 1]')
    return CollectiveSpinState(
        atom_count=state.atom_count,
        mean=state.mean,
        cov=state.cov,
        coherent_fraction=state.coherent_fraction * (1 - eta_increment),
    )


def uncertainty_product(state: CollectiveSpinState) -> Tuple[float, float]:
    """
    Returns the product var(J_z) var(J_x) together with its Heisenberg lower bound <J_y>^2 / 4.
    """
    product = state.variance('z') * state.variance('x')
    bound = float(state.mean[1]) ** 2 / 4
    return product, bound
