"""Two-layer leaf backscatter model.

The leaf is a thin dielectric slab in air: a palisade layer on top of a
spongy layer.  Backscatter is decomposed into

* a surface term: Fresnel reflection off the air-palisade interface,
  attenuated by the coherent roughness factor, and
* a volumetric term: the single-bounce returns from inside the slab, i.e.
  the palisade-spongy interface path plus the spongy-air back-face path,
  each carrying two-way transmission, propagation phase and absorption.

Multiple internal bounces are dropped: every extra bounce costs two more
lossy transits of a layer and is negligible at these water contents.
Diffuse (incoherent) roughness scattering is not modeled here; the radar
simulator adds it as a sub-scatterer ensemble so this module stays
deterministic.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import em

C_M_S = 299792458.0

RCS_FLOOR_DBSM = -300.0


@dataclass(frozen=True)
class LeafSpec:
    """Geometry and surface statistics of one leaf.

    Attributes:
        length: m, along the scan (azimuth) direction.
        width: m, across it.
        total_thickness: m, palisade plus spongy.
        palisade_fraction: fraction of the thickness taken by the palisade.
        roughness_sigma: m, RMS surface height.
        correlation_length: m, lateral correlation of the surface heights.
            The slab reflection model depends only on roughness_sigma;
            the radar patch ensemble uses the correlation length to set
            how many independent height facets a patch averages over.
        turgid_water_fraction_palisade: palisade volumetric water fraction
            at full turgor (rwc=100).
        curvature_radius: m, radius of the gentle bow of the blade along
            its length (math.inf for a perfectly flat leaf).  Defocuses
            the specular lobe in the radar simulation; the slab
            reflection model is curvature-free.
    """

    length: float = 0.10
    width: float = 0.06
    total_thickness: float = 0.3e-3
    palisade_fraction: float = 0.4
    roughness_sigma: float = 0.42e-3
    correlation_length: float = 5e-3
    turgid_water_fraction_palisade: float = 0.8
    curvature_radius: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.palisade_fraction < 1.0:
            raise ValueError(f"palisade_fraction out of (0,1): {self.palisade_fraction}")
        if self.roughness_sigma < 0:
            raise ValueError("roughness_sigma must be >= 0")
        for name in ("length", "width", "total_thickness", "correlation_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.turgid_water_fraction_palisade <= 1.0:
            raise ValueError("turgid_water_fraction_palisade out of [0,1]")
        if self.curvature_radius <= 0:
            raise ValueError("curvature_radius must be positive (inf for flat)")


@dataclass(frozen=True)
class LeafState:
    """A leaf at one moisture level."""

    spec: LeafSpec
    rwc: float
    water_fraction_palisade: float
    water_fraction_spongy: float


@dataclass(frozen=True)
class ScatterResult:
    """Coherent backscatter decomposition at one incidence angle.

    total_amplitude is exactly surface + volumetric; volumetric is the sum
    of the internal-interface path and the back-face path.  RCS values are
    monostatic, in dBsm, including the flat-plate directivity factor.
    """

    surface_amplitude: complex
    volumetric_amplitude: complex
    total_amplitude: complex
    rcs_surface: float
    rcs_volumetric: float
    rcs_total: float
    # Sub-paths of the volumetric term (volumetric = interface + backface)
    # and the surface term before roughness attenuation, kept for
    # diagnostics and tests of the attenuation itself.
    interface_amplitude: complex = 0j
    backface_amplitude: complex = 0j
    surface_raw_amplitude: complex = 0j


def layer_water_fractions(rwc: float, spec: LeafSpec) -> tuple[float, float]:
    """Volumetric water fractions of the two layers at a given RWC.

    At full turgor the palisade holds 4x the spongy water fraction; as the
    leaf dries the ratio shrinks linearly and reaches 1 at rwc=50 (the
    palisade has dried down to the spongy level, a single effective
    layer).  Both fractions also scale proportionally with rwc.

    Args:
        rwc: relative water content in percent, [0, 100].
        spec: leaf describing the turgid palisade fraction.

    Returns:
        (palisade_fraction, spongy_fraction), both in [0, 1].
    """
    if not 0.0 <= rwc <= 100.0:
        raise ValueError(f"rwc out of [0,100]: {rwc}")
    spongy_turgid = spec.turgid_water_fraction_palisade / 4.0
    spongy = spongy_turgid * (rwc / 100.0)
    ratio = 1.0 + 3.0 * max(rwc - 50.0, 0.0) / 50.0  # 4 at rwc=100, 1 at rwc<=50
    palisade = min(ratio * spongy, 1.0)
    return palisade, spongy


def leaf_state(spec: LeafSpec, rwc: float) -> LeafState:
    """Construct a LeafState with layer fractions derived from rwc."""
    pal, spo = layer_water_fractions(rwc, spec)
    return LeafState(spec=spec, rwc=rwc,
                     water_fraction_palisade=pal, water_fraction_spongy=spo)


def roughness_factor(sigma: float, theta_i: float, lam: float) -> float:
    """Coherent (specular) attenuation of a rough interface.

    Args:
        sigma: RMS surface height in m, >= 0.
        theta_i: incidence angle in radians.
        lam: wavelength in m.

    Returns:
        exp(-(4 pi sigma cos(theta)/lambda)^2 / 2), in (0, 1]; 1 for a
        smooth surface and in the grazing limit.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    g = 4.0 * math.pi * sigma * math.cos(theta_i) / lam
    return math.exp(-(g * g) / 2.0)


def _dbsm(power_m2: float) -> float:
    if power_m2 <= 0:
        return RCS_FLOOR_DBSM
    return max(10.0 * math.log10(power_m2), RCS_FLOOR_DBSM)


def plate_directivity(spec: LeafSpec, theta: float, lam: float) -> float:
    """Physical-optics flat-plate RCS factor (unit reflection), in m^2.

    sigma(theta) = 4 pi (L W / lambda)^2 cos^2(theta) sinc^2(2 L sin(theta)/lambda)
    """
    x = 2.0 * spec.length * math.sin(theta) / lam
    s = np.sinc(x)  # sin(pi x)/(pi x)
    return 4.0 * math.pi * (spec.length * spec.width / lam) ** 2 * (math.cos(theta) * s) ** 2


def multilayer_reflection(state: LeafState, theta_i: float, freq: float,
                          pol: str = em.TE) -> ScatterResult:
    """Coherent backscatter amplitudes of the two-layer slab.

    Args:
        state: leaf at some moisture level.
        theta_i: incidence angle in radians, within [0, 60 degrees].
        freq: radar frequency in Hz.
        pol: "TE" or "TM".

    Returns:
        ScatterResult with the surface/volumetric decomposition and the
        corresponding monostatic RCS values.
    """
    if not 0.0 <= theta_i <= math.radians(60.0) + 1e-12:
        raise ValueError(f"theta_i out of [0, 60 deg]: {theta_i}")
    lam = C_M_S / freq
    k0 = 2.0 * math.pi / lam

    n1 = em.refractive_index(em.mix_permittivity(state.water_fraction_palisade, freq)).complex_value
    n2 = em.refractive_index(em.mix_permittivity(state.water_fraction_spongy, freq)).complex_value
    n0 = 1.0 + 0.0j

    kx = math.sin(theta_i)  # transverse invariant across the stack
    nz0 = np.sqrt(n0 * n0 - kx * kx)
    nz1 = np.sqrt(n1 * n1 - kx * kx)
    nz2 = np.sqrt(n2 * n2 - kx * kx)

    r01 = em._transverse_interface_reflection(n0, nz0, n1, nz1, pol)
    r12 = em._transverse_interface_reflection(n1, nz1, n2, nz2, pol)
    r23 = em._transverse_interface_reflection(n2, nz2, n0, nz0, pol)

    d1 = state.spec.palisade_fraction * state.spec.total_thickness
    d2 = (1.0 - state.spec.palisade_fraction) * state.spec.total_thickness
    ph1 = np.exp(2j * k0 * d1 * nz1)  # two-way phase+absorption, palisade
    ph2 = np.exp(2j * k0 * d2 * nz2)  # two-way phase+absorption, spongy

    surface_raw = r01
    surface = surface_raw * roughness_factor(state.spec.roughness_sigma, theta_i, lam)
    # Single-bounce internal paths; t_ij * t_ji = 1 - r_ij^2 (Stokes).
    interface = (1.0 - r01 * r01) * r12 * ph1
    backface = (1.0 - r01 * r01) * (1.0 - r12 * r12) * r23 * ph1 * ph2
    volumetric = interface + backface
    total = surface + volumetric

    po = plate_directivity(state.spec, theta_i, lam)
    return ScatterResult(
        surface_amplitude=complex(surface),
        volumetric_amplitude=complex(volumetric),
        total_amplitude=complex(total),
        rcs_surface=_dbsm(po * abs(surface) ** 2),
        rcs_volumetric=_dbsm(po * abs(volumetric) ** 2),
        rcs_total=_dbsm(po * abs(total) ** 2),
        interface_amplitude=complex(interface),
        backface_amplitude=complex(backface),
        surface_raw_amplitude=complex(surface_raw),
    )


def rcs(state: LeafState, theta: float, freq: float, pol: str = em.TE) -> ScatterResult:
    """Monostatic RCS of the leaf at incidence theta (co-located Tx/Rx).

    Identical decomposition to multilayer_reflection; the dBsm fields are
    the flat-plate physical-optics conversion of the amplitudes.
    """
    return multilayer_reflection(state, theta, freq, pol)
