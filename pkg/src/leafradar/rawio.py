"""Raw ADC capture files (magic "LFRD").

Byte-exact container for int16 I/Q radar frames, so synthetic dumps and
real capture-board recordings share one ingest path.  All integers and
floats are little-endian.

File header, 64 bytes:

    offset  size  field
    0       4     magic "LFRD"
    4       2     format version (1)
    6       2     header size (64)
    8       4     frame count
    12      2     chirps per frame
    14      2     rx antennas
    16      4     ADC samples per chirp
    20      8     chirp-config digest (ChirpConfig.digest())
    28      8     sample rate, float64 sps
    36      8     chirp slope, float64 Hz/s
    44      20    reserved (zeros)

Each frame is a 48-byte header followed by the payload:

    0       4     steering angle eta, float32 degrees
    4       4     leaf distance d_t, float32 m
    8       4     target rwc, float32 percent
    12      4     quantization scale, float32
    16      4     sample index (which dataset sample the frame belongs to)
    20      28    group label, UTF-8, zero padded

    payload: int16 interleaved I/Q, C-order [chirp][rx][sample][i,q] —
    I/Q pairs vary fastest, then ADC sample, then Rx, then chirp.

Dequantizing payload * scale reproduces the in-memory cube samples bit
for bit (synthesis quantizes through the same int16 representation).
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (BadMagic, ConfigDigestMismatch, IoError, ShapeMismatch,
                     TruncatedFrame)
from .radar import ChirpConfig, RadarFrame, dequantize

MAGIC = b"LFRD"
VERSION = 1

_FILE_HEADER = struct.Struct("<4sHHIHHI8sdd20x")
_FRAME_HEADER = struct.Struct("<ffffI28s")

assert _FILE_HEADER.size == 64
assert _FRAME_HEADER.size == 48


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """One captured frame plus the capture annotations."""

    frame: RadarFrame
    d_t: float
    rwc: float
    group: str
    sample_index: int


def dump_frames(path, cfg: ChirpConfig, records) -> None:
    """Write FrameRecords to an LFRD file."""
    records = list(records)
    for rec in records:
        if rec.frame.iq.shape != (cfg.n_chirps, cfg.rx_count, cfg.adc_samples, 2):
            raise ShapeMismatch(
                f"frame iq shape {rec.frame.iq.shape} does not match config")
    header = _FILE_HEADER.pack(MAGIC, VERSION, _FILE_HEADER.size, len(records),
                               cfg.n_chirps, cfg.rx_count, cfg.adc_samples,
                               cfg.digest(), cfg.sample_rate, cfg.slope)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            for rec in records:
                fh.write(_FRAME_HEADER.pack(
                    rec.frame.steering_angle, rec.d_t, rec.rwc,
                    rec.frame.scale, rec.sample_index,
                    rec.group.encode()))
                fh.write(np.ascontiguousarray(
                    rec.frame.iq, dtype="<i2").tobytes())
    except OSError as exc:
        raise IoError(f"writing {path}: {exc}") from exc


def ingest_frames(path, cfg: ChirpConfig):
    """Read an LFRD file back into FrameRecords.

    The chirp-config digest in the header must match cfg; the caller
    supplies the config it intends to process with, and a recording
    made under different chirp parameters is rejected rather than
    silently misinterpreted.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"reading {path}: {exc}") from exc

    if len(blob) < _FILE_HEADER.size or blob[:4] != MAGIC:
        raise BadMagic(f"{path} is not an LFRD capture")
    magic, version, hsize, n_frames, n_chirps, rx, adc, digest, _, _ = \
        _FILE_HEADER.unpack_from(blob, 0)
    if version != VERSION or hsize != _FILE_HEADER.size:
        raise BadMagic(f"unsupported LFRD version {version}")
    if digest != cfg.digest():
        raise ConfigDigestMismatch(
            f"capture digest {digest.hex()} != config digest {cfg.digest().hex()}")
    if (n_chirps, rx, adc) != (cfg.n_chirps, cfg.rx_count, cfg.adc_samples):
        raise ConfigDigestMismatch("frame dimensions disagree with config")

    payload_bytes = n_chirps * rx * adc * 2 * 2
    records = []
    offset = _FILE_HEADER.size
    for index in range(n_frames):
        if offset + _FRAME_HEADER.size + payload_bytes > len(blob):
            raise TruncatedFrame(index)
        eta, d_t, rwc, scale, sample_index, group = \
            _FRAME_HEADER.unpack_from(blob, offset)
        offset += _FRAME_HEADER.size
        iq = np.frombuffer(blob, dtype="<i2", count=payload_bytes // 2,
                           offset=offset).reshape(n_chirps, rx, adc, 2)
        offset += payload_bytes
        frame = RadarFrame(cube=dequantize(iq, scale), steering_angle=eta,
                           seed=-1, iq=iq, scale=float(np.float32(scale)))
        records.append(FrameRecord(frame=frame, d_t=d_t, rwc=rwc,
                                   group=group.rstrip(b"\x00").decode(),
                                   sample_index=sample_index))
    return records
