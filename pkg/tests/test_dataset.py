"""LFDS container round-trip, stability and corruption tests."""

import numpy as np
import pytest

from leafradar import dataset, features
from leafradar.errors import BadMagic, IoError, TruncatedFrame

ANGLES = tuple(float(a) for a in range(-10, 11, 2))


def make_samples(n=6):
    out = []
    for i in range(n):
        rng = np.random.default_rng(i)
        caps = [features.AngleCapture(
            eta=a, aoa=(a, rng.uniform(-2, 2), -a),
            rss=rng.normal(-60, 3, (4, 3))) for a in ANGLES]
        out.append(features.build_sample(
            caps, d_t=0.6, rwc=50.0 + (i % 6) * 10, group=f"p{i}@0.6",
            uid=f"u{i:03d}", angles=ANGLES))
    return out


def make_manifest(n):
    return features.DatasetManifest(
        samples=n, leaf_type="Avocado", rwc_levels=(50, 60, 70, 80, 90, 100),
        placements_per_level=1, distances=(0.6,), iota=11, seed=42)


def test_round_trip_exact(tmp_path):
    samples = make_samples()
    man = make_manifest(len(samples))
    path = tmp_path / "d.lfds"
    dataset.save_dataset(path, samples, man)
    back, man2 = dataset.load_dataset(path)
    assert man2 == man
    assert len(back) == len(samples)
    for a, b in zip(samples, back):
        assert np.array_equal(a.location, b.location)  # float32 both sides
        assert np.array_equal(a.rss, b.rss)
        assert (a.rwc, a.group, a.uid) == (b.rwc, b.group, b.uid)


def test_byte_stable_and_mirror(tmp_path):
    samples = make_samples()
    man = make_manifest(len(samples))
    p1, p2 = tmp_path / "a.lfds", tmp_path / "b.lfds"
    dataset.save_dataset(p1, samples, man)
    dataset.save_dataset(p2, samples, man)
    assert p1.read_bytes() == p2.read_bytes()
    mirror = (str(p1) + ".json")
    with open(mirror) as fh:
        assert fh.read().strip() == dataset.manifest_json(man)


def test_bad_magic_and_truncation(tmp_path):
    samples = make_samples(3)
    path = tmp_path / "d.lfds"
    dataset.save_dataset(path, samples, make_manifest(3))
    blob = path.read_bytes()

    junk = tmp_path / "junk.lfds"
    junk.write_bytes(b"WHAT" + blob[4:])
    with pytest.raises(BadMagic):
        dataset.load_dataset(junk)

    cut = tmp_path / "cut.lfds"
    cut.write_bytes(blob[:-8])
    with pytest.raises(TruncatedFrame) as exc:
        dataset.load_dataset(cut)
    assert exc.value.frame_index == 2

    with pytest.raises(IoError):
        dataset.load_dataset(tmp_path / "absent.lfds")


def test_label_length_guard(tmp_path):
    samples = make_samples(1)
    long = features.FeatureSample(location=samples[0].location,
                                  rss=samples[0].rss, rwc=70.0,
                                  group="g" * 40, uid="u")
    with pytest.raises(ValueError):
        dataset.save_dataset(tmp_path / "d.lfds", [long], make_manifest(1))


def test_csv_export(tmp_path):
    samples = make_samples(4)
    path = tmp_path / "d.csv"
    dataset.export_csv(path, samples)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 5
    header = lines[0].split(",")
    assert header[:3] == ["uid", "group", "rwc"]
    assert len(header) == 3 + 187
    # byte-stable
    p2 = tmp_path / "e.csv"
    dataset.export_csv(p2, samples)
    assert path.read_bytes() == p2.read_bytes()
    row = lines[1].split(",")
    assert row[0] == "u000" and float(row[2]) == 50.0
