"""Feature tensors, normalization and cross-validation splits.

One measurement = one leaf placement scanned over iota steering angles.
Each angle contributes a Location row (eta, the three per-bin AoA
estimates, d_t) and an RSS block (kappa antennas x 3 zone bins, dBFS),
giving tensors of iota x 5 and iota x kappa x 3.  Tensors are float32:
the dataset container stores 32-bit floats, and keeping the in-memory
path at the same precision makes a dump/load round trip bit-exact.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .errors import InvalidWeight, MissingAngle, TooFewSamples
from .seeding import substream

log = logging.getLogger(__name__)

LOCATION_WIDTH = 5


@dataclass(frozen=True, eq=False)
class AngleCapture:
    """Measurements extracted from the frame at one steering angle."""

    eta: float
    aoa: tuple          # AoA estimate (degrees) at bins t-1, t, t+1
    rss: np.ndarray     # [kappa, 3] dBFS


@dataclass(frozen=True, eq=False)
class FeatureSample:
    """Model inputs and target for one measurement."""

    location: np.ndarray  # float32 [iota, 5]
    rss: np.ndarray       # float32 [iota, kappa, 3]
    rwc: float
    group: str = ""
    uid: str = ""

    @property
    def iota(self):
        return self.location.shape[0]


@dataclass(frozen=True)
class DatasetManifest:
    """Summary of how a synthetic dataset was generated."""

    samples: int
    leaf_type: str
    rwc_levels: tuple
    placements_per_level: int
    distances: tuple
    iota: int
    seed: int


def rwc_from_weights(f_w: float, t_w: float) -> float:
    """Relative water content from fresh and turgid weights, percent."""
    if t_w <= 0:
        raise InvalidWeight(f"turgid weight must be positive: {t_w}")
    if not 0 <= f_w <= t_w:
        raise InvalidWeight(f"fresh weight {f_w} outside [0, {t_w}]")
    return f_w / t_w * 100.0


def build_sample(captures, d_t, rwc, group="", uid="", angles=None) -> FeatureSample:
    """Assemble a FeatureSample from per-angle captures.

    Captures may arrive in any order; rows are sorted by steering angle.
    When the expected angle set is given, any absent angle raises
    MissingAngle.
    """
    captures = sorted(captures, key=lambda c: c.eta)
    etas = [c.eta for c in captures]
    if len(set(etas)) != len(etas):
        raise MissingAngle(f"duplicate steering angles in captures: {etas}")
    if angles is not None:
        expect = sorted(float(a) for a in angles)
        if [float(e) for e in etas] != expect:
            missing = sorted(set(expect) - set(float(e) for e in etas))
            raise MissingAngle(f"missing captures for angles {missing}")
    if not captures:
        raise MissingAngle("no captures given")

    loc = np.empty((len(captures), LOCATION_WIDTH), dtype=np.float32)
    rss = np.empty((len(captures),) + np.shape(captures[0].rss), dtype=np.float32)
    for i, cap in enumerate(captures):
        if len(cap.aoa) != 3:
            raise ValueError(f"aoa triple expected, got {cap.aoa}")
        loc[i] = (cap.eta, cap.aoa[0], cap.aoa[1], cap.aoa[2], d_t)
        rss[i] = cap.rss
    if not np.isfinite(rss).all() or not np.isfinite(loc).all():
        raise ValueError("non-finite feature values")
    return FeatureSample(location=loc, rss=rss, rwc=float(rwc),
                         group=group, uid=uid)


def stack_batch(samples):
    """Stack samples into (location [B,i,5], rss [B,i,k,3], rwc [B]) float64."""
    loc = np.stack([s.location for s in samples]).astype(np.float64)
    rss = np.stack([s.rss for s in samples]).astype(np.float64)
    y = np.array([s.rwc for s in samples], dtype=np.float64)
    return loc, rss, y


@dataclass(frozen=True)
class Scaler:
    """Per-feature z-score statistics fitted on a training split.

    Location statistics pool over samples and steering angles per column
    (eta, three AoA bins, d_t); RSS statistics pool per (antenna, bin)
    cell.  Zero-variance features pass through unscaled and are listed
    in degenerate_location / degenerate_rss.  fitted_on records the uids
    of the training samples, so split hygiene is checkable after the
    fact.  Scaled samples are float64 working copies for the trainer;
    only raw (unscaled) samples are stored on disk.
    """

    location_mean: np.ndarray
    location_std: np.ndarray
    rss_mean: np.ndarray
    rss_std: np.ndarray
    degenerate_location: tuple = ()
    degenerate_rss: tuple = ()
    fitted_on: tuple = field(default=(), repr=False)

    def apply(self, sample: FeatureSample) -> FeatureSample:
        loc = (sample.location.astype(np.float64) - self.location_mean) / self.location_std
        rss = (sample.rss.astype(np.float64) - self.rss_mean) / self.rss_std
        return FeatureSample(location=loc, rss=rss, rwc=sample.rwc,
                             group=sample.group, uid=sample.uid)


def fit_scaler(samples) -> Scaler:
    """Fit per-feature z-score statistics (training split only)."""
    samples = list(samples)
    if len(samples) < 2:
        raise TooFewSamples(f"scaler needs >= 2 samples, got {len(samples)}")
    loc = np.concatenate([s.location for s in samples]).astype(np.float64)
    rss = np.stack([s.rss for s in samples]).astype(np.float64)

    loc_mean = loc.mean(axis=0)
    loc_std = loc.std(axis=0)
    rss_mean = rss.mean(axis=(0, 1))
    rss_std = rss.std(axis=(0, 1))

    degenerate_loc = tuple(int(i) for i in np.flatnonzero(loc_std < 1e-12))
    degenerate_rss = tuple(map(tuple, np.argwhere(rss_std < 1e-12).tolist()))
    for i in degenerate_loc:
        loc_mean[i], loc_std[i] = 0.0, 1.0
    for i, j in degenerate_rss:
        rss_mean[i, j], rss_std[i, j] = 0.0, 1.0
    if degenerate_loc or degenerate_rss:
        log.warning("degenerate features passed through unscaled: "
                    "location %s, rss %s", degenerate_loc, degenerate_rss)

    return Scaler(location_mean=loc_mean, location_std=loc_std,
                  rss_mean=rss_mean, rss_std=rss_std,
                  degenerate_location=degenerate_loc,
                  degenerate_rss=degenerate_rss,
                  fitted_on=tuple(s.uid for s in samples))


TARGET_TRANSFORMS = ("none", "power")


@dataclass(frozen=True)
class TargetTransform:
    """Invertible map applied to regression targets before training.

    kind "none" is the identity.  kind "power" is a Yeo-Johnson map with
    the exponent fitted by maximum likelihood on the training targets,
    followed by standardization; predictions pass through invert() to
    come back in raw percent.  invert(apply(y)) returns y to float64
    round-off for any real y.
    """

    kind: str = "none"
    exponent: float = 1.0
    mean: float = 0.0
    scale: float = 1.0

    def apply(self, y):
        if self.kind == "none":
            return np.asarray(y, dtype=np.float64)
        return (_yeo_johnson(np.asarray(y, dtype=np.float64), self.exponent)
                - self.mean) / self.scale

    def invert(self, z):
        if self.kind == "none":
            return np.asarray(z, dtype=np.float64)
        return _yeo_johnson_inverse(
            np.asarray(z, dtype=np.float64) * self.scale + self.mean,
            self.exponent)


def _yeo_johnson(y, lam):
    out = np.empty_like(y)
    pos = y >= 0
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(y[pos])
    else:
        out[pos] = (np.power(y[pos] + 1.0, lam) - 1.0) / lam
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.log1p(-y[~pos])
    else:
        out[~pos] = -(np.power(1.0 - y[~pos], 2.0 - lam) - 1.0) / (2.0 - lam)
    return out


def _yeo_johnson_inverse(z, lam):
    out = np.empty_like(z)
    pos = z >= 0
    if abs(lam) < 1e-12:
        out[pos] = np.expm1(z[pos])
    else:
        out[pos] = np.power(z[pos] * lam + 1.0, 1.0 / lam) - 1.0
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.expm1(-z[~pos])
    else:
        out[~pos] = 1.0 - np.power(1.0 - (2.0 - lam) * z[~pos], 1.0 / (2.0 - lam))
    return out


def fit_target_transform(targets, kind="none") -> TargetTransform:
    """Fit the target map on training targets only."""
    if kind not in TARGET_TRANSFORMS:
        raise ValueError(f"target transform must be one of {TARGET_TRANSFORMS}, "
                         f"got {kind!r}")
    if kind == "none":
        return TargetTransform()
    y = np.asarray(list(targets), dtype=np.float64)
    if y.size < 2:
        raise TooFewSamples(f"power transform needs >= 2 targets, got {y.size}")
    lam = float(scipy.stats.yeojohnson(y)[1])
    mapped = _yeo_johnson(y, lam)
    scale = float(mapped.std())
    return TargetTransform(kind="power", exponent=lam,
                           mean=float(mapped.mean()),
                           scale=scale if scale > 1e-12 else 1.0)


def _rwc_bucket(rwc):
    return int(round(rwc))


def kfold_split(samples, k=10, seed=0):
    """Stratified k-fold indices: list of (train, test) index arrays.

    Samples are bucketed by RWC level, each bucket is shuffled under a
    seed-derived substream, and buckets are dealt round-robin so every
    fold's level histogram is within one sample of proportional.
    """
    n = len(samples)
    if k < 2 or k > n:
        raise TooFewSamples(f"k={k} out of range for {n} samples")
    folds = [[] for _ in range(k)]
    buckets = {}
    for i, s in enumerate(samples):
        buckets.setdefault(_rwc_bucket(s.rwc), []).append(i)
    offset = 0
    for level in sorted(buckets):
        idx = np.array(buckets[level])
        idx = idx[substream(seed, "kfold", level).permutation(len(idx))]
        for j, i in enumerate(idx):
            folds[(j + offset) % k].append(int(i))
        offset += len(idx)  # spread remainders across folds
    out = []
    everything = set(range(n))
    for f in folds:
        test = np.array(sorted(f), dtype=int)
        train = np.array(sorted(everything - set(f)), dtype=int)
        out.append((train, test))
    return out


def logo_split(samples, labels=None):
    """Leave-one-group-out indices: one (train, test) pair per label."""
    if labels is None:
        labels = [s.group for s in samples]
    labels = list(labels)
    if len(labels) != len(samples):
        raise ValueError("labels length must match samples")
    uniq = sorted(set(labels))
    if len(uniq) < 2:
        raise TooFewSamples(f"leave-one-group-out needs >= 2 groups, got {uniq}")
    out = []
    for g in uniq:
        test = np.array([i for i, l in enumerate(labels) if l == g], dtype=int)
        train = np.array([i for i, l in enumerate(labels) if l != g], dtype=int)
        out.append((train, test))
    return out
