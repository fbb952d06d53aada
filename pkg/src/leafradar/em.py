"""Electromagnetic primitives: permittivity, refraction, Fresnel reflection.

Conventions used throughout the package:

* Complex permittivity is stored as (real_part, imag_part) with the loss
  component kept non-negative, i.e. eps = eps' + j*eps'' with eps'' >= 0.
* Complex refractive indices are the principal square root of eps, which
  for this sign convention places the imaginary part in the upper half
  plane (decaying wave in a passive medium).
* The scalar refractive index follows n = sqrt((|eps| + eps') / 2).  This
  parenthesization is the standard lossy-medium form: it reduces to
  n = sqrt(eps') for lossless media and gives exactly 1 in vacuum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, TotalInternalReflection

# Single-Debye parameters for liquid water at 20 degrees C.
WATER_EPS_STATIC = 80.1
WATER_EPS_INF = 5.27
WATER_TAU_S = 9.4e-12

# Dry leaf matter (cellulose and air matrix), treated as frequency-flat
# over the supported band.
EPS_DRY = (2.5, 0.2)

DEBYE_FREQ_MIN_HZ = 1e9
DEBYE_FREQ_MAX_HZ = 300e9

TE = "TE"
TM = "TM"


@dataclass(frozen=True)
class ComplexPermittivity:
    """Relative complex permittivity of a material layer.

    Attributes:
        real_part: eps', dimensionless, >= 1 for the media simulated here.
        imag_part: eps'', dielectric loss, stored >= 0.
    """

    real_part: float
    imag_part: float

    def __post_init__(self):
        if self.imag_part < 0:
            raise ValueError(f"loss component must be >= 0, got {self.imag_part}")

    @property
    def as_complex(self) -> complex:
        return complex(self.real_part, self.imag_part)

    @property
    def magnitude(self) -> float:
        return abs(self.as_complex)


@dataclass(frozen=True)
class RefractiveIndex:
    """Refractive index in both the scalar and the complex convention.

    Attributes:
        real_scalar: n = sqrt((|eps| + eps')/2), used by the normal-incidence
            reflection formula.
        complex_value: principal square root of eps (Im >= 0), used for
            oblique incidence and multilayer propagation.
    """

    real_scalar: float
    complex_value: complex


def refractive_index_real(eps: ComplexPermittivity) -> float:
    """Scalar refractive index of a lossy medium.

    Args:
        eps: relative complex permittivity.

    Returns:
        n = sqrt((sqrt(eps'^2 + eps''^2) + eps') / 2).  Vacuum gives 1,
        lossless media give sqrt(eps').
    """
    return math.sqrt((eps.magnitude + eps.real_part) / 2.0)


def refractive_index(eps: ComplexPermittivity) -> RefractiveIndex:
    """Both index conventions for one permittivity value."""
    nc = np.sqrt(complex(eps.real_part, eps.imag_part))
    if nc.imag < 0:
        nc = -nc
    return RefractiveIndex(real_scalar=refractive_index_real(eps), complex_value=nc)


def fresnel_normal(n: float) -> float:
    """Normal-incidence amplitude reflection coefficient at an air interface.

    Args:
        n: scalar refractive index of the medium, >= 1.

    Returns:
        r = (n - 1) / (n + 1), in [0, 1).
    """
    if n < 1:
        raise ValueError(f"refractive index must be >= 1, got {n}")
    return (n - 1.0) / (n + 1.0)


def snell_refract(n_i: float, n_t: float, theta_i: float) -> float:
    """Refraction angle across an interface.

    Args:
        n_i: refractive index on the incident side, >= 1.
        n_t: refractive index on the transmitted side, >= 1.
        theta_i: incidence angle in radians, 0 <= theta_i < pi/2.

    Returns:
        theta_t = arcsin(n_i * sin(theta_i) / n_t) in radians.

    Raises:
        TotalInternalReflection: when n_i * sin(theta_i) / n_t > 1.
    """
    if not 0 <= theta_i < math.pi / 2:
        raise ValueError(f"incidence angle out of range: {theta_i}")
    ratio = n_i * math.sin(theta_i) / n_t
    if ratio > 1.0:
        raise TotalInternalReflection(
            f"n_i*sin(theta_i)/n_t = {ratio:.6f} > 1 (n_i={n_i}, n_t={n_t})"
        )
    return math.asin(ratio)


def _transverse_interface_reflection(n1, nz1, n2, nz2, pol):
    # Reflection from medium 1 into medium 2 written in terms of the
    # z-components of the (complex) index; valid for lossy media where a
    # real refraction angle does not exist.
    if pol == TE:
        return (nz1 - nz2) / (nz1 + nz2)
    if pol == TM:
        return (n2 * n2 * nz1 - n1 * n1 * nz2) / (n2 * n2 * nz1 + n1 * n1 * nz2)
    raise ValueError(f"polarization must be 'TE' or 'TM', got {pol!r}")


def fresnel_oblique(n1: complex, n2: complex, theta_i: float, pol: str = TE) -> complex:
    """Oblique-incidence amplitude reflection coefficient.

    Sign convention: at theta 0 the magnitude equals fresnel_normal for
    real indices (TE and TM differ by an overall sign there, as usual).
    The energy bound |r| <= 1 holds whenever the incident medium is
    lossless (the only configuration used in this package); with a lossy
    incident medium the coefficient describes inhomogeneous waves and can
    legitimately exceed 1.

    Args:
        n1: (complex) refractive index of the incident medium.
        n2: (complex) refractive index of the transmitting medium.
        theta_i: incidence angle in radians, in [0, pi/2).
        pol: "TE" (E-field transverse) or "TM".

    Returns:
        Complex reflection coefficient r with |r| <= 1 for passive media.
    """
    if not 0 <= theta_i < math.pi / 2:
        raise ValueError(f"incidence angle out of range: {theta_i}")
    n1 = complex(n1)
    n2 = complex(n2)
    kx = n1 * math.sin(theta_i)  # transverse invariant (Snell)
    nz1 = np.sqrt(n1 * n1 - kx * kx)
    nz2 = np.sqrt(n2 * n2 - kx * kx)
    return complex(_transverse_interface_reflection(n1, nz1, n2, nz2, pol))


def _debye_eval(freq: float) -> tuple[float, float]:
    # Closed form without the domain check; the public op validates.
    wt = 2.0 * math.pi * freq * WATER_TAU_S
    delta = WATER_EPS_STATIC - WATER_EPS_INF
    return WATER_EPS_INF + delta / (1.0 + wt * wt), delta * wt / (1.0 + wt * wt)


def debye_water_permittivity(freq: float, temp: float = 20.0) -> ComplexPermittivity:
    """Single-Debye permittivity of liquid water.

    eps(w) = eps_inf + (eps_s - eps_inf) / (1 + j*w*tau) with eps_s = 80.1,
    eps_inf = 5.27, tau = 9.4 ps.  Only the 20 degree C constants are
    shipped; the temperature argument is accepted for interface stability
    but does not select a different fit.

    Args:
        freq: frequency in Hz, within [1 GHz, 300 GHz].
        temp: temperature in degrees C (constants are for 20 C).

    Returns:
        ComplexPermittivity with the loss stored as a positive number.

    Raises:
        OutOfRange: frequency outside the supported band.
    """
    if not DEBYE_FREQ_MIN_HZ <= freq <= DEBYE_FREQ_MAX_HZ:
        raise OutOfRange(
            f"frequency {freq:.3e} Hz outside [{DEBYE_FREQ_MIN_HZ:.0e}, {DEBYE_FREQ_MAX_HZ:.0e}]"
        )
    real, imag = _debye_eval(freq)
    return ComplexPermittivity(real, imag)


def mix_permittivity(water_fraction: float, freq: float) -> ComplexPermittivity:
    """Linear volumetric mixing of water and dry leaf matter.

    Args:
        water_fraction: volumetric water fraction in [0, 1].
        freq: frequency in Hz (forwarded to the water model).

    Returns:
        eps = w * eps_water + (1 - w) * eps_dry; monotone in w.
    """
    if not 0.0 <= water_fraction <= 1.0:
        raise ValueError(f"water fraction out of [0,1]: {water_fraction}")
    water = debye_water_permittivity(freq)
    w = water_fraction
    return ComplexPermittivity(
        w * water.real_part + (1.0 - w) * EPS_DRY[0],
        w * water.imag_part + (1.0 - w) * EPS_DRY[1],
    )
