"""Tx beam steering phases and Capon (MVDR) receive beamforming.

Angles are degrees at the API surface (matching the steering plans and
the AoA grid); wavelengths and spacings are meters.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSnapshots, SingularCovariance

DEFAULT_STEERING_ANGLES = tuple(range(-10, 11, 2))  # iota = 11
DEFAULT_AOA_GRID = tuple(range(-20, 21, 2))

CAPON_LOADING = 1e-3
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SteeringPlan:
    """Tx steering angles and the per-angle phase offsets."""

    angles: tuple  # degrees
    phase_offsets: tuple  # one tuple of radians per angle, phi[0] == 0

    @staticmethod
    def make(angles, tx_spacings, lam):
        angles = tuple(float(a) for a in angles)
        offs = tuple(tuple(tx_phase_offsets(a, tx_spacings, lam)) for a in angles)
        return SteeringPlan(angles=angles, phase_offsets=offs)

    @property
    def iota(self):
        return len(self.angles)


@dataclass(frozen=True)
class AoaSpectrum:
    """Capon pseudo-spectrum over the AoA grid."""

    grid: tuple  # degrees
    power: tuple
    aoa: float  # degrees, argmax bin (ties toward boresight)


def tx_phase_offsets(eta, tx_spacings, lam):
    """Per-Tx phase offsets steering the transmit lobe to eta degrees.

    phi_m = 2 pi (s_m / lambda) sin(eta); spacings[0] must be 0 so the
    first element is the phase reference.
    """
    if tx_spacings[0] != 0:
        raise ValueError("tx_spacings[0] must be 0 (phase reference element)")
    s = np.asarray(tx_spacings, dtype=float)
    return 2.0 * np.pi * (s / lam) * np.sin(np.radians(eta))


def steering_vector(xi, kappa, s, lam):
    """Rx array response for a wavefront from xi degrees.

    Element k is exp(j 2 pi/lambda sin(xi) k s), k = 0..kappa-1.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    k = np.arange(kappa)
    return np.exp(2j * np.pi / lam * np.sin(np.radians(xi)) * k * s)


def capon_weights(R, a):
    """Distortionless minimum-variance weights w = R^-1 a / (a^H R^-1 a).

    R must be Hermitian and already diagonally loaded (see aoa_estimate);
    raises SingularCovariance if it is still too ill-conditioned to trust.
    """
    R = np.asarray(R)
    a = np.asarray(a)
    if np.linalg.cond(R) > _MAX_CONDITION:
        raise SingularCovariance(f"covariance condition number {np.linalg.cond(R):.2e}")
    try:
        Ria = np.linalg.solve(R, a)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc
    denom = np.vdot(a, Ria)
    return Ria / denom


def _pick_peak(grid, power):
    # argmax with exact ties broken toward boresight (smaller |xi|,
    # then the smaller signed angle)
    best = None
    best_key = None
    for xi, p in zip(grid, power):
        key = (-p, abs(xi), xi)
        if best_key is None or key < best_key:
            best_key = key
            best = xi
    return float(best)


def capon_spectrum(R, grid, kappa, s, lam):
    """Capon pseudo-spectrum power(xi) = 1 / (a^H R^-1 a) over the grid."""
    Ri = np.linalg.inv(R)
    power = []
    for xi in grid:
        a = steering_vector(xi, kappa, s, lam)
        power.append(float(1.0 / np.real(np.vdot(a, Ri @ a))))
    return power


def aoa_estimate(snapshots, grid=DEFAULT_AOA_GRID, s=None, lam=None):
    """Capon AoA estimate from array snapshots.

    Args:
        snapshots: complex array [kappa, N], N >= kappa (e.g. the 32
            chirps of the selected range bin).
        grid: candidate angles in degrees.
        s: element spacing in m (default lambda/2).
        lam: wavelength in m (default 1.0 with s = lambda/2, in which
            case only the ratio matters).

    Returns:
        AoaSpectrum; aoa is the argmax bin with ties broken toward
        smaller |xi|.

    Raises:
        InsufficientSnapshots: fewer snapshots than array elements.
    """
    X = np.asarray(snapshots)
    kappa, n = X.shape
    if n < kappa:
        raise InsufficientSnapshots(f"{n} snapshots for {kappa} elements")
    if lam is None:
        lam = 1.0
    if s is None:
        s = lam / 2.0
    R = (X @ X.conj().T) / n
    delta = CAPON_LOADING * np.real(np.trace(R)) / kappa
    R = R + delta * np.eye(kappa)
    power = capon_spectrum(R, grid, kappa, s, lam)
    if not np.all(np.isfinite(power)):
        raise SingularCovariance("non-finite Capon spectrum")
    return AoaSpectrum(grid=tuple(float(g) for g in grid),
                       power=tuple(power),
                       aoa=_pick_peak(grid, power))
