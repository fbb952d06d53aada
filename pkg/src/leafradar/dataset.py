"""Feature dataset container (magic "LFDS").

Self-describing binary layout, all little-endian:

    offset  size  field
    0       4     magic "LFDS"
    4       2     format version (1)
    6       2     header size (24)
    8       4     sample count
    12      2     iota (steering angles per sample)
    14      2     kappa (rx antennas)
    16      2     location width (5)
    18      2     reserved (0)
    20      4     manifest length M
    24      M     manifest JSON (canonical: sorted keys, compact)

followed per sample by:

    0       4     rwc, float32 percent
    4       32    group label, UTF-8, zero padded
    36      32    uid, UTF-8, zero padded
    68      ...   location tensor, float32 [iota, 5]
    ...     ...   rss tensor, float32 [iota, kappa, 3]

Serialization is pure (no timestamps, no platform fields), so one
logical dataset is one byte sequence.  A JSON mirror of the manifest is
written next to the binary for quick inspection.
"""

import json
import struct
from dataclasses import asdict

import numpy as np

from .errors import BadMagic, IoError, TruncatedFrame
from .features import LOCATION_WIDTH, DatasetManifest, FeatureSample

MAGIC = b"LFDS"
VERSION = 1

_HEADER = struct.Struct("<4sHHIHHHHI")
assert _HEADER.size == 24

_LABEL_BYTES = 32


def _pack_label(text, what):
    raw = text.encode()
    if len(raw) > _LABEL_BYTES:
        raise ValueError(f"{what} longer than {_LABEL_BYTES} bytes: {text!r}")
    return raw.ljust(_LABEL_BYTES, b"\x00")


def manifest_json(manifest: DatasetManifest) -> str:
    """Canonical JSON form of a manifest (byte-stable)."""
    return json.dumps(asdict(manifest), sort_keys=True, separators=(",", ":"))


def save_dataset(path, samples, manifest: DatasetManifest, mirror=True) -> None:
    """Write samples + manifest to an LFDS file (and a JSON mirror)."""
    samples = list(samples)
    if any(s.location.shape != (manifest.iota, LOCATION_WIDTH) for s in samples):
        raise ValueError("sample location shape disagrees with manifest iota")
    kappa = samples[0].rss.shape[1] if samples else 0
    blob = manifest_json(manifest).encode()
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, _HEADER.size, len(samples),
                                  manifest.iota, kappa, LOCATION_WIDTH, 0,
                                  len(blob)))
            fh.write(blob)
            for s in samples:
                fh.write(struct.pack("<f", s.rwc))
                fh.write(_pack_label(s.group, "group"))
                fh.write(_pack_label(s.uid, "uid"))
                fh.write(np.ascontiguousarray(s.location, dtype="<f4").tobytes())
                fh.write(np.ascontiguousarray(s.rss, dtype="<f4").tobytes())
        if mirror:
            with open(str(path) + ".json", "w") as fh:
                fh.write(manifest_json(manifest))
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"writing {path}: {exc}") from exc


def load_dataset(path):
    """Read an LFDS file back: (samples, manifest)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"reading {path}: {exc}") from exc

    if len(blob) < _HEADER.size or blob[:4] != MAGIC:
        raise BadMagic(f"{path} is not an LFDS dataset")
    magic, version, hsize, count, iota, kappa, width, _, mlen = \
        _HEADER.unpack_from(blob, 0)
    if version != VERSION or hsize != _HEADER.size or width != LOCATION_WIDTH:
        raise BadMagic(f"unsupported LFDS layout (version {version})")
    offset = _HEADER.size
    if offset + mlen > len(blob):
        raise TruncatedFrame(-1, "manifest extends past end of file")
    manifest = DatasetManifest(**{
        k: tuple(v) if isinstance(v, list) else v
        for k, v in json.loads(blob[offset:offset + mlen]).items()})
    offset += mlen

    loc_n = iota * LOCATION_WIDTH
    rss_n = iota * kappa * 3
    stride = 4 + 2 * _LABEL_BYTES + 4 * (loc_n + rss_n)
    samples = []
    for index in range(count):
        if offset + stride > len(blob):
            raise TruncatedFrame(index)
        (rwc,) = struct.unpack_from("<f", blob, offset)
        group = blob[offset + 4:offset + 4 + _LABEL_BYTES].rstrip(b"\x00").decode()
        uid = blob[offset + 36:offset + 36 + _LABEL_BYTES].rstrip(b"\x00").decode()
        base = offset + 4 + 2 * _LABEL_BYTES
        loc = np.frombuffer(blob, dtype="<f4", count=loc_n, offset=base)
        rss = np.frombuffer(blob, dtype="<f4", count=rss_n, offset=base + 4 * loc_n)
        samples.append(FeatureSample(
            location=loc.reshape(iota, LOCATION_WIDTH).copy(),
            rss=rss.reshape(iota, kappa, 3).copy(),
            rwc=float(np.float32(rwc)), group=group, uid=uid))
        offset += stride
    return samples, manifest


def export_csv(path, samples) -> None:
    """Write features and targets as one flat CSV row per sample."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to export")
    iota, kappa = samples[0].rss.shape[0], samples[0].rss.shape[1]
    cols = ["uid", "group", "rwc"]
    cols += [f"loc_{i}_{j}" for i in range(iota) for j in range(LOCATION_WIDTH)]
    cols += [f"rss_{i}_{k}_{b}" for i in range(iota)
             for k in range(kappa) for b in range(3)]
    try:
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for s in samples:
                row = [s.uid, s.group, repr(float(np.float32(s.rwc)))]
                row += [repr(float(v)) for v in s.location.reshape(-1)]
                row += [repr(float(v)) for v in s.rss.reshape(-1)]
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise IoError(f"writing {path}: {exc}") from exc
