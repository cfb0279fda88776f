"""ARF bitstream: binary wire format for :class:`~adaradar.codec.EncodedFrame`.

Layout (all integers little-endian)::

    "ARF1"
    u16 version, u16 M, u8 s, u16 channels, u32 H, u32 W, f32 r, u64 frame_id
    channels * B records, channel-major then block row-major:
        f32 scale
        M^2-bit kept-coefficient bitmap, MSB first, padded to a byte
        kept codes, s-bit two's complement, MSB first, padded to a byte
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .codec import MAX_BITS, MIN_BITS, EncodedFrame, max_code
from .errors import CorruptPayloadError, FormatError, TruncatedPayloadError

ARF_MAGIC = b"ARF1"
ARF_VERSION = 1
_HEADER = struct.Struct("<4sHHBHIIfQ")


def _pack_codes(codes: np.ndarray, s: int) -> bytes:
    if codes.size == 0:
        return b""
    u = codes.astype(np.int64) & ((1 << s) - 1)
    shifts = np.arange(s - 1, -1, -1)
    bits = ((u[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.ravel()).tobytes()


def _unpack_codes(buf: bytes, n: int, s: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8))[: n * s].reshape(n, s)
    weights = 1 << np.arange(s - 1, -1, -1, dtype=np.int64)
    u = bits.astype(np.int64) @ weights
    return np.where(u >= 1 << (s - 1), u - (1 << s), u)


def serialize_frame(f: EncodedFrame) -> bytes:
    out = [_HEADER.pack(ARF_MAGIC, ARF_VERSION, f.M, f.s, f.channels, f.height, f.width,
                        f.r, f.frame_id)]
    n = f.M * f.M
    masks = f.mask.reshape(-1, n)
    codes = f.codes.reshape(-1, n)
    scales = f.scales.reshape(-1).astype("<f4")
    bitmaps = np.packbits(masks, axis=-1)
    for rec in range(masks.shape[0]):
        out.append(scales[rec].tobytes())
        out.append(bitmaps[rec].tobytes())
        out.append(_pack_codes(codes[rec][masks[rec]], f.s))
    return b"".join(out)


def parse_frame(buf: bytes) -> EncodedFrame:
    if len(buf) < 4 or buf[:4] != ARF_MAGIC:
        raise FormatError("not an ARF frame (bad magic)")
    if len(buf) < _HEADER.size:
        raise TruncatedPayloadError("ARF header truncated")
    _, version, M, s, channels, H, W, r, frame_id = _HEADER.unpack_from(buf, 0)
    if version != ARF_VERSION:
        raise FormatError(f"unsupported ARF version {version}")
    if not (MIN_BITS <= s <= MAX_BITS):
        raise CorruptPayloadError(f"bit width {s} out of range")
    if M < 1 or H % M or W % M or channels < 2 or channels % 2:
        raise CorruptPayloadError(f"inconsistent dims M={M}, channels={channels}, H={H}, W={W}")
    n = M * M
    nrec = channels * (H // M) * (W // M)
    bitmap_bytes = (n + 7) // 8
    S = max_code(s)

    scales = np.zeros(nrec, dtype=np.float32)
    mask = np.zeros((nrec, n), dtype=bool)
    codes = np.zeros((nrec, n), dtype=np.int32)
    pos = _HEADER.size
    for rec in range(nrec):
        if len(buf) < pos + 4 + bitmap_bytes:
            raise TruncatedPayloadError(f"record {rec} of {nrec} truncated")
        (scale,) = struct.unpack_from("<f", buf, pos)
        pos += 4
        bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8, count=bitmap_bytes, offset=pos))
        pos += bitmap_bytes
        if bits[n:].any():
            raise CorruptPayloadError(f"record {rec}: coefficient index >= M^2 = {n}")
        if not np.isfinite(scale) or scale < 0:
            raise CorruptPayloadError(f"record {rec}: invalid scale {scale}")
        kept = bits[:n].astype(bool)
        k = int(kept.sum())
        nbytes = (k * s + 7) // 8
        if len(buf) < pos + nbytes:
            raise TruncatedPayloadError(f"record {rec} of {nrec}: codes truncated")
        vals = _unpack_codes(buf[pos:pos + nbytes], k, s)
        pos += nbytes
        if k and np.abs(vals).max() > S:
            raise CorruptPayloadError(f"record {rec}: code outside [-{S}, {S}]")
        scales[rec] = scale
        mask[rec] = kept
        codes[rec, kept] = vals
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after the last record")
    B = nrec // channels
    return EncodedFrame(M, s, channels, H, W, float(r), frame_id, scales.reshape(channels, B),
                        mask.reshape(channels, B, n), codes.reshape(channels, B, n))


def write_arf(f: EncodedFrame, path) -> None:
    Path(path).write_bytes(serialize_frame(f))


def read_arf(path) -> EncodedFrame:
    return parse_frame(Path(path).read_bytes())
