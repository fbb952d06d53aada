"""Experiment harness: dataset synthesis, cross-validated training, ablations.

The pipeline is simulate -> features -> train -> metrics:

    synth_dataset   builds FeatureSamples by sweeping steering angles over
                    jittered leaf placements at each moisture level
    cmd_train       k-fold or leave-one-distance-out cross-validation for
                    one or more model variants, MAE metrics per fold and
                    per 10%-RWC bucket
    cmd_angle_sweep retrains on centered symmetric steering-angle subsets
                    and reports MAE versus angle count
    cmd_ingest      replays raw capture files through the identical
                    feature pipeline used on in-memory frames

Every random draw comes from a named substream of the experiment seed,
so reruns are byte-identical and any stage can be reproduced alone.
Reports are plain dicts serialized as canonical JSON (sorted keys, no
timestamps); per-sample predictions export as CSV for plotting.
"""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import beam, dataset, features, leaf, net, radar, rawio
from .errors import ConfigError, EmptyInput, ShapeMismatch
from .seeding import substream, substream_seed
from .train import TrainConfig, train as fit

log = logging.getLogger(__name__)

DEFAULT_CHIRP = radar.ChirpConfig()

# Surface roughness above wavelength/32 (0.12 mm at 77 GHz) reads as rough.
# Sigmas are calibrated once against the scattering-trend tests and frozen.
LEAF_PRESETS = {
    "avocado": leaf.LeafSpec(length=0.14, width=0.08, total_thickness=0.40e-3,
                             roughness_sigma=0.03e-3, correlation_length=8e-3),
    "rubra": leaf.LeafSpec(length=0.10, width=0.05, total_thickness=0.25e-3,
                           roughness_sigma=0.03e-3, correlation_length=6e-3),
    # millimeter-scale papillae texture: the short correlation length
    # gives each radar patch a large facet count, so the rough echo is
    # weak but stable rather than fully developed speckle
    "bullbay": leaf.LeafSpec(length=0.14, width=0.09, total_thickness=0.45e-3,
                             roughness_sigma=0.5e-3, correlation_length=2e-3),
}

RWC_BUCKETS = ((50, 60), (60, 70), (70, 80), (80, 90), (90, 100))

SPLITS = ("kfold10", "logo_distance")


@dataclass(frozen=True)
class ExperimentConfig:
    """Dataset-synthesis recipe: which leaf, where, and how often."""

    leaf_type: str = "avocado"
    rwc_levels: tuple = (50.0, 60.0, 70.0, 80.0, 90.0, 100.0)
    placements_per_level: int = 20
    # a dense range grid keeps distance a continuous, learnable input;
    # two or three training ranges leave the regressor unconstrained
    # between them and unseen-distance transfer collapses
    distances: tuple = (0.4, 0.5, 0.6, 0.7, 0.8)
    steering_angles: tuple = beam.DEFAULT_STEERING_ANGLES
    snr_db: float = 30.0
    jitter_azimuth_deg: float = 5.0
    # placement tolerance: blade pitch is the one nuisance a steering
    # sweep cannot separate from moisture (both scale the echo level),
    # so its default stays near the bench placement tolerance
    jitter_aspect_deg: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "rwc_levels",
                           tuple(float(x) for x in self.rwc_levels))
        object.__setattr__(self, "distances",
                           tuple(float(x) for x in self.distances))
        object.__setattr__(self, "steering_angles",
                           tuple(float(x) for x in self.steering_angles))
        if self.leaf_type not in LEAF_PRESETS:
            raise ConfigError(f"unknown leaf_type {self.leaf_type!r}; "
                              f"presets: {sorted(LEAF_PRESETS)}")
        if not self.rwc_levels or any(not 0 <= x <= 100 for x in self.rwc_levels):
            raise ConfigError("rwc_levels must be nonempty, within [0, 100]")
        if self.placements_per_level < 1:
            raise ConfigError("placements_per_level must be >= 1")
        if not self.distances or any(not 0.2 <= d <= 2.0 for d in self.distances):
            raise ConfigError("distances must be nonempty, within [0.2, 2.0] m")
        if not self.steering_angles or any(abs(a) > 20 for a in self.steering_angles):
            raise ConfigError("steering_angles must be nonempty, within +-20 deg")
        if len(set(self.steering_angles)) != len(self.steering_angles):
            raise ConfigError("steering_angles must be unique")
        if not 0 <= self.jitter_azimuth_deg <= 10 or not 0 <= self.jitter_aspect_deg <= 10:
            raise ConfigError("jitter ranges must be within [0, 10] deg")
        if not (self.snr_db > 0 or math.isinf(self.snr_db)):
            raise ConfigError("snr_db must be positive (inf disables noise)")

    @property
    def leaf_spec(self):
        return LEAF_PRESETS[self.leaf_type]


def config_from_dict(raw):
    """(ExperimentConfig, TrainConfig) from a parsed config JSON object."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    raw = dict(raw)
    train_raw = raw.pop("train", {})
    exp_fields = ExperimentConfig.__dataclass_fields__
    train_fields = TrainConfig.__dataclass_fields__
    bad = set(raw) - set(exp_fields)
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    bad = set(train_raw) - set(train_fields)
    if bad:
        raise ConfigError(f"unknown train config keys: {sorted(bad)}")
    try:
        return ExperimentConfig(**raw), TrainConfig(**train_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def capture_angle(frame, d_t, cfg=DEFAULT_CHIRP):
    """Features from one frame: AoA triple and RSS over the leaf zone.

    This single function serves both the simulator and raw-file ingest,
    which is what makes the two paths bit-identical.
    """
    profile = radar.range_fft(frame, cfg)
    zone = radar.leaf_zone(profile, d_t)
    per_chirp = radar.chirp_range_fft(frame, cfg)
    aoa = tuple(
        float(beam.aoa_estimate(per_chirp[:, :, b].T,
                                s=cfg.rx_spacing, lam=cfg.wavelength).aoa)
        for b in zone)
    rss = profile.power_dbfs[:, list(zone)]
    return features.AngleCapture(eta=float(frame.steering_angle), aoa=aoa, rss=rss)


def synth_dataset(config, seed, dump_records=None, chirp=DEFAULT_CHIRP):
    """Simulate the full capture protocol: (samples, manifest).

    One sample per (RWC level, placement, distance): the leaf is posed
    with a seeded random azimuth/aspect jitter, then every steering
    angle is swept.  Placement geometry and surface-height realizations
    are keyed by (placement, distance) only, so successive moisture
    levels re-measure the same physical pose; receiver noise redraws per
    frame.  When dump_records is a list, every synthesized frame is
    appended as a FrameRecord for raw-capture export.
    """
    spec = config.leaf_spec
    samples = []
    sample_index = 0
    for li, level in enumerate(config.rwc_levels):
        state = leaf.leaf_state(spec, level)
        for p in range(config.placements_per_level):
            for di, dist in enumerate(config.distances):
                pose = substream(seed, "pose", p, di)
                azimuth = config.jitter_azimuth_deg * pose.uniform(-1, 1)
                aspect = config.jitter_aspect_deg * pose.uniform(-1, 1)
                scene = radar.Scene(
                    leaf=state, distance=dist, azimuth_offset=azimuth,
                    aspect_angle=aspect, snr=config.snr_db,
                    speckle_seed=substream_seed(seed, "speckle", p, di))
                group = f"{dist:.3f}"
                captures = []
                for ei, eta in enumerate(config.steering_angles):
                    frame = radar.synth_frame(
                        chirp, scene, eta,
                        seed=substream_seed(seed, "noise", li, p, di, ei))
                    captures.append(capture_angle(frame, dist, chirp))
                    if dump_records is not None:
                        dump_records.append(rawio.FrameRecord(
                            frame=frame, d_t=dist, rwc=level, group=group,
                            sample_index=sample_index))
                samples.append(features.build_sample(
                    captures, d_t=dist, rwc=level, group=group,
                    uid=f"L{li}P{p}D{di}", angles=config.steering_angles))
                sample_index += 1
        log.info("synthesized rwc=%g: %d samples so far", level, len(samples))
    manifest = features.DatasetManifest(
        samples=len(samples), leaf_type=config.leaf_type,
        rwc_levels=config.rwc_levels,
        placements_per_level=config.placements_per_level,
        distances=config.distances,
        iota=len(config.steering_angles), seed=seed)
    return samples, manifest


def cmd_simulate(config, seed, out_path, raw_path=None, chirp=DEFAULT_CHIRP):
    """Synthesize a dataset file (and optionally a raw capture dump)."""
    records = [] if raw_path is not None else None
    samples, manifest = synth_dataset(config, seed, records, chirp)
    dataset.save_dataset(out_path, samples, manifest)
    if raw_path is not None:
        rawio.dump_frames(raw_path, chirp, records)
    return manifest


def cmd_ingest(raw_path, out_path=None, chirp=DEFAULT_CHIRP):
    """Rebuild feature samples from a raw capture file.

    Frames sharing a sample_index form one measurement; each runs the
    same range-FFT -> AoA -> RSS pipeline as the simulator.
    """
    by_sample = {}
    for rec in rawio.ingest_frames(raw_path, chirp):
        by_sample.setdefault(rec.sample_index, []).append(rec)
    samples = []
    for idx in sorted(by_sample):
        recs = by_sample[idx]
        captures = [capture_angle(r.frame, r.d_t, chirp) for r in recs]
        samples.append(features.build_sample(
            captures, d_t=recs[0].d_t, rwc=recs[0].rwc,
            group=recs[0].group, uid=f"S{idx}"))
    if not samples:
        raise EmptyInput(f"{raw_path} holds no frames")
    manifest = features.DatasetManifest(
        samples=len(samples), leaf_type="ingested",
        rwc_levels=tuple(sorted({s.rwc for s in samples})),
        placements_per_level=0,
        distances=tuple(sorted({float(s.location[0, 4]) for s in samples})),
        iota=samples[0].iota, seed=-1)
    if out_path is not None:
        dataset.save_dataset(out_path, samples, manifest)
    return samples, manifest


def mae(pred, target):
    """Mean absolute error, percent RWC."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        raise EmptyInput("mae of zero samples")
    return float(np.mean(np.abs(pred - target)))


def bucket_table(preds, targets):
    """Per-bucket MAE rows over the fixed 10%-RWC buckets spanning [50, 100].

    Targets outside the span clamp into the end buckets.  Weighted by
    count, the rows aggregate exactly to the overall MAE.
    """
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    idx = np.clip(((targets - 50.0) // 10).astype(int), 0, len(RWC_BUCKETS) - 1)
    rows = []
    for b, (lo, hi) in enumerate(RWC_BUCKETS):
        mask = idx == b
        count = int(mask.sum())
        rows.append({
            "bucket": f"{lo}-{hi}",
            "count": count,
            "mae": mae(preds[mask], targets[mask]) if count else None,
        })
    return rows


def _scaler_to_meta(scaler):
    return {
        "location_mean": scaler.location_mean.tolist(),
        "location_std": scaler.location_std.tolist(),
        "rss_mean": scaler.rss_mean.tolist(),
        "rss_std": scaler.rss_std.tolist(),
        "degenerate_location": [list(t) if isinstance(t, (list, tuple)) else t
                                for t in scaler.degenerate_location],
        "degenerate_rss": [list(t) for t in scaler.degenerate_rss],
    }


def _scaler_from_meta(meta):
    return features.Scaler(
        location_mean=np.asarray(meta["location_mean"], dtype=np.float64),
        location_std=np.asarray(meta["location_std"], dtype=np.float64),
        rss_mean=np.asarray(meta["rss_mean"], dtype=np.float64),
        rss_std=np.asarray(meta["rss_std"], dtype=np.float64),
        degenerate_location=tuple(meta["degenerate_location"]),
        degenerate_rss=tuple(tuple(t) for t in meta["degenerate_rss"]))


def _fit_fold(samples, train_idx, test_idx, variant, tcfg, seed, tag):
    """Train one fold; returns (uids, targets, preds, fitted model parts)."""
    train_samples = [samples[i] for i in train_idx]
    scaler = features.fit_scaler(train_samples)
    scaled = [scaler.apply(s) for s in train_samples]
    target_map = features.fit_target_transform(
        [s.rwc for s in train_samples], tcfg.target_transform)

    # hold out a stratified fifth of the training fold for early stopping
    inner_k = min(5, len(scaled))
    inner_tr, inner_va = features.kfold_split(
        scaled, k=inner_k, seed=substream_seed(seed, "inner", variant, tag))[0]

    def mapped_batch(idx):
        loc, rss, y = features.stack_batch([scaled[i] for i in idx])
        return loc, rss, target_map.apply(y)

    iota = samples[0].iota
    kappa = samples[0].rss.shape[1]
    params, state = net.init_params(
        iota, kappa, seed=substream_seed(seed, "init", variant, tag))
    params, frozen = net.apply_variant(params, variant)
    params, state, report = fit(
        params, state, mapped_batch(inner_tr), mapped_batch(inner_va), tcfg,
        seed=substream_seed(seed, "fit", variant, tag), frozen=frozen)

    test_samples = [samples[i] for i in test_idx]
    loc, rss, y = features.stack_batch([scaler.apply(s) for s in test_samples])
    preds = _predict(params, state, loc, rss, target_map)
    uids = [s.uid for s in test_samples]
    return uids, y, preds, report, (params, state, scaler, target_map)


def _predict(params, state, loc, rss, target_map):
    """Eval-mode predictions clamped to the physical water-content range.

    RWC is a percentage of turgid weight, so values outside [0, 100]
    are impossible; the regressor is unbounded and can stray far out of
    range on inputs beyond its training hull (unseen distances).
    """
    raw = net.forward(params, state, loc, rss, training=False)[0]
    return np.clip(target_map.invert(raw), 0.0, 100.0)


def make_folds(samples, split, seed, k=10):
    if split == "kfold10":
        return features.kfold_split(samples, k=k, seed=substream_seed(seed, "folds"))
    if split == "logo_distance":
        return features.logo_split(samples)
    raise ConfigError(f"unknown split {split!r}; expected one of {SPLITS}")


def cmd_train(samples, manifest, split="kfold10", variants=("Full",),
              tcfg=TrainConfig(), seed=0, k=10, checkpoint_dir=None):
    """Cross-validated training; returns (report dict, prediction rows).

    Every sample is predicted exactly once (by the fold that holds it
    out), so the overall MAE is a plain mean over the dataset.  With
    several variants the report carries an ablation table; the primary
    metrics quoted at the top level are the Full variant's when present,
    otherwise the first variant's.
    """
    samples = list(samples)
    for v in variants:
        if v not in net.VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; expected {net.VARIANTS}")
    folds = make_folds(samples, split, seed, k)
    log.info("training %d variant(s) x %d folds on %d samples",
             len(variants), len(folds), len(samples))

    results = {}
    rows = []
    for variant in variants:
        targets, preds, fold_maes, best_epochs = [], [], [], []
        for f, (train_idx, test_idx) in enumerate(folds):
            uids, y, p, rep, model = _fit_fold(
                samples, train_idx, test_idx, variant, tcfg, seed, f)
            fold_maes.append(mae(p, y))
            best_epochs.append(rep.best_epoch)
            targets.extend(y)
            preds.extend(p)
            rows.extend({"variant": variant, "fold": f, "uid": u,
                         "rwc": float(t), "pred": float(q)}
                        for u, t, q in zip(uids, y, p))
            if checkpoint_dir is not None:
                params, state, scaler, target_map = model
                meta = {"iota": samples[0].iota,
                        "kappa": samples[0].rss.shape[1],
                        "variant": variant, "scaler": _scaler_to_meta(scaler),
                        "target_transform": {
                            "kind": target_map.kind,
                            "exponent": target_map.exponent,
                            "mean": target_map.mean,
                            "scale": target_map.scale}}
                net.save_checkpoint(
                    f"{checkpoint_dir}/{variant}_fold{f:02d}.lfnn",
                    params, state, meta)
            log.info("%s fold %d: mae %.3f", variant, f, fold_maes[-1])
        results[variant] = {
            "overall_mae": mae(preds, targets),
            "fold_maes": fold_maes,
            "best_epochs": best_epochs,
            "bucket_maes": bucket_table(preds, targets),
        }

    primary = "Full" if "Full" in results else variants[0]
    report = {
        "split": split,
        "folds": len(folds),
        "samples": len(samples),
        "leaf_type": manifest.leaf_type,
        "seed": seed,
        "variant": primary,
        "overall_mae": results[primary]["overall_mae"],
        "fold_maes": results[primary]["fold_maes"],
        "bucket_maes": results[primary]["bucket_maes"],
        "ablation": {v: results[v]["overall_mae"] for v in variants},
        "variants": results,
        "angle_curve": None,
    }
    return report, rows


def subset_angles(samples, count):
    """Restrict samples to the `count` steering angles nearest boresight.

    The kept subset is symmetric about 0 for symmetric angle plans
    (|eta| decides, ties broken toward the negative angle first, and the
    result stays in ascending order).
    """
    samples = list(samples)
    etas = samples[0].location[:, 0].astype(np.float64)
    if not 1 <= count <= etas.size:
        raise ConfigError(f"count {count} outside [1, {etas.size}]")
    order = np.lexsort((etas, np.abs(etas)))[:count]
    keep = np.sort(order)
    out = []
    for s in samples:
        out.append(features.FeatureSample(
            location=s.location[keep], rss=s.rss[keep],
            rwc=s.rwc, group=s.group, uid=s.uid))
    return out


def cmd_angle_sweep(samples, manifest, counts, tcfg=TrainConfig(), seed=0, k=10):
    """Retrain (Full variant, k-fold) on angle subsets: MAE versus count."""
    counts = sorted(set(int(c) for c in counts))
    curve = []
    details = {}
    for count in counts:
        sub = subset_angles(samples, count)
        report, _ = cmd_train(sub, manifest, split="kfold10",
                              variants=("Full",), tcfg=tcfg, seed=seed, k=k)
        curve.append({"count": count, "overall_mae": report["overall_mae"]})
        details[str(count)] = {
            "overall_mae": report["overall_mae"],
            "fold_maes": report["fold_maes"],
        }
        log.info("angle count %d: mae %.3f", count, report["overall_mae"])
    report = {
        "split": "kfold10",
        "folds": k,
        "samples": len(list(samples)),
        "leaf_type": manifest.leaf_type,
        "seed": seed,
        "angle_curve": curve,
        "angle_details": details,
    }
    return report


def cmd_eval(samples, checkpoint_path):
    """Evaluate a saved checkpoint on a dataset; returns a report dict."""
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to evaluate")
    params, state, meta, _ = net.load_checkpoint(checkpoint_path)
    scaler = _scaler_from_meta(meta["scaler"])
    tt_meta = meta.get("target_transform", {"kind": "none"})
    target_map = features.TargetTransform(
        kind=tt_meta["kind"], exponent=tt_meta.get("exponent", 1.0),
        mean=tt_meta.get("mean", 0.0), scale=tt_meta.get("scale", 1.0))
    loc, rss, y = features.stack_batch([scaler.apply(s) for s in samples])
    preds = _predict(params, state, loc, rss, target_map)
    return {
        "samples": len(samples),
        "variant": meta.get("variant"),
        "overall_mae": mae(preds, y),
        "bucket_maes": bucket_table(preds, y),
    }


def report_json(report) -> bytes:
    """Canonical JSON bytes: sorted keys, no whitespace drift, newline end."""
    return (json.dumps(report, sort_keys=True, separators=(",", ":"),
                       allow_nan=False) + "\n").encode()


def predictions_csv(rows) -> bytes:
    """Stable CSV bytes for per-sample predictions."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["variant", "fold", "uid", "rwc", "pred"])
    for r in rows:
        writer.writerow([r["variant"], r["fold"], r["uid"],
                         repr(r["rwc"]), repr(r["pred"])])
    return buf.getvalue().encode()
