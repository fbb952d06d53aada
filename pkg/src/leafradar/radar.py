"""Monostatic FMCW radar front-end simulation.

Synthesizes dechirped ADC cubes for a leaf scene and runs the standard
range processing chain.  A frame is built from three echo families:

  * the leaf, modeled as a line of sub-scatterer patches along the blade
    so that blade curvature defocuses the specular lobe and surface
    roughness dephases the top-face return (volumetric paths emerge from
    inside the tissue and stay coherent);
  * optional background point reflectors (range, RCS) on boresight;
  * circular white receiver noise scaled to the scene SNR, referenced to
    a unit-reflection echo from the leaf range.

Each echo is a beat-frequency tone from the round trip delay, weighted
by the transmit-array steering factor and a per-Rx phase progression
for its azimuth.  Cubes are quantized to int16 I/Q (as a capture board
would) and dequantized back, so a dumped raw file reproduces the
in-memory samples bit for bit.  Range processing is Hann window, FFT
per chirp, coherent mean over chirps, and dBFS conversion against a
full scale of adc_samples/2.
"""

import cmath
import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import em, leaf
from .errors import ConfigMismatch, EdgeBin, ShapeMismatch
from .seeding import substream

DBFS_FLOOR = -200.0

# Patches in the leaf sub-scatterer ensemble; the smallest count that
# gives stable per-placement speckle statistics at 77 GHz.
SUB_SCATTERERS = 32


@dataclass(frozen=True)
class ChirpConfig:
    """FMCW chirp and antenna-array parameters.

    Defaults mirror a 77 GHz automotive-style evaluation module: 3.75 GHz
    sweep, 1024 ADC samples at 5 Msps, 32 chirps per frame, 3 Tx with
    spacings (0, lambda, 2 lambda) and 4 Rx at half-wavelength pitch.
    Gains and the transmit amplitude are linear (amplitude) factors.
    """

    f_start: float = 77e9
    bandwidth: float = 3.75e9
    slope: float = 18.32e12
    idle_time: float = 7e-6
    ramp_start: float = 7e-6
    ramp_end: float = 212.8e-6
    adc_samples: int = 1024
    sample_rate: float = 5e6
    n_chirps: int = 32
    chirp_time: float = 10e-6
    frame_length: float = 0.350
    tx_count: int = 3
    rx_count: int = 4
    rx_spacing: float = None
    tx_spacings: tuple = None
    tx_gain: float = 1.0
    rx_gain: float = 1.0
    tx_amplitude: float = 1.0

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.adc_samples < 2 or self.adc_samples & (self.adc_samples - 1):
            raise ValueError(f"adc_samples must be a power of two: {self.adc_samples}")
        if self.rx_count < 2:
            raise ValueError("rx_count must be >= 2")
        if self.sample_rate <= 0 or self.slope <= 0 or self.f_start <= 0:
            raise ValueError("sample_rate, slope and f_start must be positive")
        if self.n_chirps < 1 or self.tx_count < 1:
            raise ValueError("n_chirps and tx_count must be >= 1")
        lam = leaf.C_M_S / self.f_start
        if self.rx_spacing is None:
            object.__setattr__(self, "rx_spacing", lam / 2.0)
        if self.tx_spacings is None:
            object.__setattr__(self, "tx_spacings",
                               tuple(m * lam for m in range(self.tx_count)))
        else:
            object.__setattr__(self, "tx_spacings",
                               tuple(float(s) for s in self.tx_spacings))
        if len(self.tx_spacings) != self.tx_count:
            raise ValueError("tx_spacings length must equal tx_count")
        if self.tx_spacings[0] != 0:
            raise ValueError("tx_spacings[0] must be 0 (phase reference)")
        if self.rx_spacing <= 0:
            raise ValueError("rx_spacing must be positive")

    @property
    def wavelength(self):
        return leaf.C_M_S / self.f_start

    @property
    def n_bins(self):
        return self.adc_samples // 2

    @property
    def unambiguous_range(self):
        # beat frequency must stay below Nyquist: 2 S d / c < fs / 2
        return leaf.C_M_S * self.sample_rate / (4.0 * self.slope)

    def digest(self) -> bytes:
        """8-byte stable digest of all fields (raw-file header token)."""
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).digest()[:8]


@dataclass(frozen=True)
class Scene:
    """One physical capture setup: a leaf placement plus surroundings.

    Attributes:
        leaf: leaf under observation, or None for an empty (noise-only)
            scene.
        distance: m from the radar to the leaf center, [0.2, 2.0].
        azimuth_offset: degrees off boresight of the leaf center, <= 10.
        aspect_angle: degrees the blade normal is pitched away from the
            line of sight.
        background_reflectors: tuple of (range_m, rcs_dbsm) point
            scatterers on boresight (mounting foam, stand, wall).
        snr: dB ratio of a unit-reflection echo from the leaf range to
            the receiver noise floor; math.inf disables noise.
        pol: incident polarization, "TE" or "TM".
        speckle_seed: seed for the frozen surface-height realization of
            this placement; defaults to the frame seed.  Keeping it
            fixed while varying moisture reproduces re-measuring the
            same physical leaf as it dries.
    """

    leaf: leaf.LeafState
    distance: float
    azimuth_offset: float = 0.0
    aspect_angle: float = 0.0
    background_reflectors: tuple = ()
    snr: float = 30.0
    pol: str = em.TE
    speckle_seed: int = None

    def __post_init__(self):
        if not 0.2 <= self.distance <= 2.0:
            raise ValueError(f"distance out of [0.2, 2.0] m: {self.distance}")
        if abs(self.azimuth_offset) > 10.0:
            raise ValueError(f"|azimuth_offset| > 10 deg: {self.azimuth_offset}")
        if abs(self.aspect_angle) > 30.0:
            raise ValueError(f"|aspect_angle| > 30 deg: {self.aspect_angle}")
        object.__setattr__(self, "background_reflectors",
                           tuple((float(r), float(s))
                                 for r, s in self.background_reflectors))


@dataclass(frozen=True, eq=False)
class RadarFrame:
    """One captured frame: the dequantized cube plus its raw int16 form.

    cube is complex128 [n_chirps, rx_count, adc_samples] and is exactly
    (iq[..., 0] + 1j iq[..., 1]) * scale, so any consumer of the raw
    int16 samples reconstructs these values bit for bit.
    """

    cube: np.ndarray
    steering_angle: float
    seed: int
    iq: np.ndarray      # int16 [n_chirps, rx_count, adc_samples, 2]
    scale: float        # float32 quantization step


@dataclass(frozen=True, eq=False)
class RangeProfile:
    """Chirp-averaged range spectrum per Rx antenna."""

    bins: np.ndarray         # complex [rx_count, n_bins]
    bin_width: float         # m
    power_dbfs: np.ndarray   # [rx_count, n_bins], clamped at DBFS_FLOOR


def range_resolution(cfg: ChirpConfig) -> float:
    """Range bin width c / (2 BW) in meters."""
    return leaf.C_M_S / (2.0 * cfg.bandwidth)


def friis_amplitude(a_o, g_t, g_r, lam, d_t, r):
    """Echo amplitude of a mirror-like reflector at range d_t.

    A_d = A_o g_t g_r lambda / (4 pi (2 d_t)) * r, the one-way transmission
    formula over the folded round-trip distance 2 d_t, scaled by the
    (possibly complex) reflection coefficient r.
    """
    if d_t <= 0:
        raise ValueError("d_t must be positive")
    return a_o * g_t * g_r * lam / (4.0 * math.pi * 2.0 * d_t) * r


def _quantize(cube):
    """int16 I/Q quantization with a single per-frame float32 scale."""
    peak = max(np.abs(cube.real).max(), np.abs(cube.imag).max(), 0.0)
    scale = np.float32(peak / 32766.0) if peak > 0 else np.float32(1.0)
    iq = np.empty(cube.shape + (2,), dtype=np.int16)
    iq[..., 0] = np.round(cube.real / float(scale))
    iq[..., 1] = np.round(cube.imag / float(scale))
    return iq, scale


def dequantize(iq, scale):
    """Rebuild the complex cube from raw int16 I/Q samples."""
    return (iq[..., 0].astype(np.float64)
            + 1j * iq[..., 1].astype(np.float64)) * float(np.float32(scale))


def _tx_array_factor(cfg, eta, az_deg):
    """Normalized transmit-array response toward az for steering eta."""
    s = np.asarray(cfg.tx_spacings)
    applied = 2.0 * np.pi * (s / cfg.wavelength) * math.sin(math.radians(eta))
    geom = 2.0 * np.pi * (s[None, :] / cfg.wavelength) \
        * np.sin(np.radians(np.atleast_1d(az_deg)))[:, None]
    return np.exp(1j * (geom - applied[None, :])).mean(axis=1)


def _leaf_patches(cfg, scene, rng):
    """Per-patch (amplitude, range, azimuth) for both scatter families.

    The blade is split into SUB_SCATTERERS patches along its length.
    Patch positions include the curvature sag.  Each patch carries a
    roughness factor built from a frozen seed-driven height draw: the
    phasor exp(j 4 pi sigma h cos(theta) / lambda) a bump of height h
    stamps on the echo.  The surface bump that advances the top-face
    echo also shifts the entry point of the transmitted wave, so both
    families share the factor.

    A geometric patch is far wider than the lateral correlation length
    of the surface heights, so its net factor is a facet-ensemble mean:
    the coherent part exp(-chi^2/2) survives in full while the random
    residue averages down by the square root of the facet count.  A
    rough leaf therefore keeps a weak but stable echo instead of a
    fully developed speckle draw; a smooth leaf's factor is
    indistinguishable from one.

    Height dispersion also redirects quasi-specular surface energy out
    of the backscatter direction, which the ensemble factor alone
    cannot express, so each patch draws the roughness-attenuated
    surface amplitude.  The volumetric term has no such attenuation:
    it emerges from the interior and stays the rough leaf's dominant
    return.
    """
    state = scene.leaf
    sp = state.spec
    k = SUB_SCATTERERS
    x = ((np.arange(k) + 0.5) / k - 0.5) * sp.length
    heights = rng.standard_normal(k)
    m_facet = max((sp.length / k) * sp.width / sp.correlation_length ** 2, 1.0)

    az0 = math.radians(scene.azimuth_offset)
    asp = math.radians(scene.aspect_angle)
    # radar at the origin; +z down-range, +x cross-range
    center = np.array([scene.distance * math.sin(az0),
                       scene.distance * math.cos(az0)])
    along = np.array([math.cos(az0 + asp), -math.sin(az0 + asp)])
    sag = x * x / (2.0 * sp.curvature_radius)
    pos = center[None, :] + x[:, None] * along[None, :] \
        + sag[:, None] * np.array([math.sin(az0), math.cos(az0)])[None, :]
    az = np.degrees(np.arctan2(pos[:, 0], pos[:, 1]))
    # plane-wave (far-field) path lengths: aspect tilts the blade into a
    # linear path gradient, curvature adds the quadratic sag; keeps the
    # echo on the 1/(2 d_t) distance law at any range
    d_geo = scene.distance - x * math.sin(asp) + sag

    tilt = np.degrees(x / sp.curvature_radius)
    theta = np.clip(np.abs(scene.aspect_angle + tilt + (scene.azimuth_offset - az)),
                    0.0, 60.0)

    lam = cfg.wavelength
    surf = np.empty(k, complex)
    vol = np.empty(k, complex)
    for i in range(k):
        th = math.radians(theta[i])
        sc = leaf.rcs(state, th, cfg.f_start, scene.pol)
        # patch-level physical-optics taper (full-blade pattern emerges
        # from the coherent patch sum)
        pat = math.cos(th) \
            * np.sinc(2.0 * (sp.length / k) * math.sin(th) / lam)
        rf = leaf.roughness_factor(sp.roughness_sigma, th, lam)
        jit = cmath.exp(4j * math.pi * sp.roughness_sigma * heights[i]
                        * math.cos(th) / lam)
        ens = rf + (jit - rf) / math.sqrt(m_facet)
        surf[i] = sc.surface_amplitude * ens * pat / k
        vol[i] = sc.volumetric_amplitude * ens * pat / k

    amps = np.concatenate([
        friis_amplitude(cfg.tx_amplitude, cfg.tx_gain, cfg.rx_gain, lam,
                        scene.distance, 1.0) * surf,
        friis_amplitude(cfg.tx_amplitude, cfg.tx_gain, cfg.rx_gain, lam,
                        scene.distance, 1.0) * vol,
    ])
    return amps, np.concatenate([d_geo, d_geo]), np.concatenate([az, az])


def synth_frame(cfg: ChirpConfig, scene: Scene, eta: float, seed: int) -> RadarFrame:
    """Synthesize one dechirped frame for a steering angle.

    Pure function of (cfg, scene, eta, seed): the same arguments give a
    bit-identical cube.  Raises ConfigMismatch if any reflector sits
    beyond the unambiguous range of the chirp.
    """
    ranges = [scene.distance] + [r for r, _ in scene.background_reflectors]
    if max(ranges) >= cfg.unambiguous_range:
        raise ConfigMismatch(
            f"scene range {max(ranges):.3f} m >= unambiguous range "
            f"{cfg.unambiguous_range:.3f} m")

    lam = cfg.wavelength
    amps = []
    dists = []
    azs = []
    if scene.leaf is not None:
        sseed = scene.speckle_seed if scene.speckle_seed is not None else seed
        a, d, z = _leaf_patches(cfg, scene, substream(sseed, "speckle"))
        amps.append(a)
        dists.append(d)
        azs.append(z)
    for rng_m, rcs_dbsm in scene.background_reflectors:
        # point reflectors follow the same folded-path distance law as
        # the leaf, with sqrt(RCS) standing in as the reflection factor
        refl = math.sqrt(10.0 ** (rcs_dbsm / 10.0))
        amps.append(np.array([friis_amplitude(
            cfg.tx_amplitude, cfg.tx_gain, cfg.rx_gain, lam, rng_m, refl)],
            complex))
        dists.append(np.array([rng_m]))
        azs.append(np.array([0.0]))

    t = np.arange(cfg.adc_samples) / cfg.sample_rate
    sig = np.zeros((cfg.rx_count, cfg.adc_samples), complex)
    if amps:
        amps = np.concatenate(amps)
        dists = np.concatenate(dists)
        azs = np.concatenate(azs)
        f_beat = 2.0 * cfg.slope * dists / leaf.C_M_S
        tone = np.exp(1j * (2.0 * np.pi * f_beat[:, None] * t[None, :]
                            + 4.0 * np.pi * dists[:, None] / lam))
        rxv = np.exp(2j * np.pi * (cfg.rx_spacing / lam)
                     * np.sin(np.radians(azs))[:, None] * np.arange(cfg.rx_count)[None, :])
        af = _tx_array_factor(cfg, eta, azs)
        sig = np.einsum("r,rk,rn->kn", amps * af, rxv, tone)

    cube = np.broadcast_to(sig, (cfg.n_chirps,) + sig.shape).copy()
    if not math.isinf(scene.snr):
        a_ref = abs(friis_amplitude(cfg.tx_amplitude, cfg.tx_gain, cfg.rx_gain,
                                    lam, scene.distance, 1.0))
        sigma_n = a_ref * 10.0 ** (-scene.snr / 20.0)
        rng_n = substream(seed, "noise")
        cube = cube + sigma_n / math.sqrt(2.0) * (
            rng_n.standard_normal(cube.shape) + 1j * rng_n.standard_normal(cube.shape))

    iq, scale = _quantize(cube)
    frame = RadarFrame(cube=dequantize(iq, scale), steering_angle=float(eta),
                       seed=int(seed), iq=iq, scale=float(scale))
    if not np.isfinite(frame.cube).all():
        raise ValueError("non-finite samples in synthesized cube")
    return frame


def chirp_range_fft(frame: RadarFrame, cfg: ChirpConfig) -> np.ndarray:
    """Hann-windowed range FFT per chirp: complex [n_chirps, rx, n_bins]."""
    expect = (cfg.n_chirps, cfg.rx_count, cfg.adc_samples)
    if frame.cube.shape != expect:
        raise ShapeMismatch(f"cube shape {frame.cube.shape}, config implies {expect}")
    window = np.hanning(cfg.adc_samples)
    spec = np.fft.fft(frame.cube * window[None, None, :], axis=-1)
    return spec[..., :cfg.n_bins]


def range_fft(frame: RadarFrame, cfg: ChirpConfig) -> RangeProfile:
    """Coherent chirp-mean range profile with dBFS powers.

    dBFS reference is adc_samples/2 (a unit-amplitude tone at a bin
    center reads ~0 dBFS after the Hann window); silent bins clamp to
    DBFS_FLOOR.
    """
    bins = chirp_range_fft(frame, cfg).mean(axis=0)
    mag = np.abs(bins) / (cfg.adc_samples / 2.0)
    with np.errstate(divide="ignore"):
        dbfs = np.maximum(20.0 * np.log10(np.maximum(mag, 0.0)), DBFS_FLOOR)
    return RangeProfile(bins=bins, bin_width=range_resolution(cfg),
                        power_dbfs=dbfs)


def leaf_zone(profile: RangeProfile, d_t: float) -> tuple:
    """Three range bins (t-1, t, t+1) holding the leaf echo.

    t is the argmax of Rx-summed power within +-2 bins of the nominal
    bin round(d_t / d_res).  Raises EdgeBin when the zone would run off
    either end of the profile.
    """
    n = profile.bins.shape[1]
    nominal = int(round(d_t / profile.bin_width))
    if not 0 <= nominal < n:
        raise ValueError(f"d_t {d_t} m outside the profile span")
    lo = max(nominal - 2, 0)
    hi = min(nominal + 2, n - 1)
    power = np.sum(np.abs(profile.bins[:, lo:hi + 1]) ** 2, axis=0)
    t = lo + int(np.argmax(power))
    if t == 0 or t == n - 1:
        raise EdgeBin(f"leaf bin {t} touches the profile edge")
    return t - 1, t, t + 1
