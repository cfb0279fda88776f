"""Spectral codec: block DCT, top-k pruning, scaled quantization and frames.

Pipeline per frame::

    blockize -> dct -> prune(r) -> quantize(s) -> EncodedFrame
    EncodedFrame -> dequantize -> idct -> merge

Bit-rate figures come in two flavours. ``value_bpp`` counts only the ``s``
bits of each kept code per real sample, which is the convention the bit-rate
columns of published radar compression tables follow. ``nominal_bpp`` adds
the 32-bit scale of every block and ``wire_bpp`` is the exact size of the
serialized ARF frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CorruptPayloadError, ShapeError
from .tensor import BlockGrid, RadarTensor, blockize, check_divisible, merge_array
from .transform import forward_blocks, get_basis, inverse_blocks

SCALE_BITS = 32
BASELINE_BPP = 32.0
MIN_BITS = 2
MAX_BITS = 16


def max_code(s: int) -> int:
    """Largest positive code of an ``s``-bit signed symmetric quantizer."""
    return 2 ** (s - 1) - 1


def kept_count(M: int, r: float) -> int:
    """Number of coefficients kept per block, ``floor(M^2 / r)``."""
    check_ratio(r, M)
    return max(1, min(M * M, math.floor(M * M / r)))


def check_ratio(r: float, M: int) -> None:
    if not (1.0 <= r <= M * M) or not math.isfinite(r):
        raise ValueError(f"pruning ratio {r} outside [1, {M * M}]")


def check_bits(s: int) -> None:
    if int(s) != s or not (MIN_BITS <= s <= MAX_BITS):
        raise ValueError(f"bit width {s} outside [{MIN_BITS}, {MAX_BITS}]")


def top_k_mask(values: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the ``k`` largest entries along the last axis.

    Ties are broken in favour of the lowest index.
    """
    n = values.shape[-1]
    if k >= n:
        return np.ones(values.shape, dtype=bool)
    order = np.argsort(-values, axis=-1, kind="stable")
    mask = np.zeros(values.shape, dtype=bool)
    np.put_along_axis(mask, order[..., :k], True, axis=-1)
    return mask


@dataclass(frozen=True)
class PrunedGrid:
    coeffs: BlockGrid  # zeros at pruned positions
    mask: np.ndarray   # (channels, B, M^2) kept positions
    k: int
    kappa: np.ndarray  # (channels, B) k-th largest magnitude


@dataclass(frozen=True)
class QuantizedGrid:
    codes: np.ndarray   # (channels, B, M^2) int32, zero off the mask
    mask: np.ndarray    # (channels, B, M^2) bool
    scales: np.ndarray  # (channels, B) float32
    s: int
    M: int
    height: int
    width: int

    @property
    def peak_code(self) -> int:
        return max_code(self.s)


def prune(z: BlockGrid, r: float) -> PrunedGrid:
    """Keep the ``floor(M^2 / r)`` largest-magnitude coefficients per block."""
    k = kept_count(z.M, r)
    mag = np.abs(z.data)
    mask = top_k_mask(mag, k)
    kappa = np.where(mask, mag, np.inf).min(axis=-1)
    return PrunedGrid(z.with_data(np.where(mask, z.data, 0.0)), mask, k, kappa)


def quantize(p: PrunedGrid, s: int) -> QuantizedGrid:
    """Per-block scaled quantization with ``Delta = Q / S``.

    Codes are ``round_half_even(z * S / Q)``. Blocks whose peak is zero emit
    no codes and a zero scale.
    """
    check_bits(s)
    S = max_code(s)
    z = p.coeffs.data
    peak = np.abs(z).max(axis=-1)
    live = peak > 0
    safe = np.where(live, peak, 1.0)
    codes = np.rint(z * (S / safe)[..., None])
    codes = np.clip(codes, -S, S).astype(np.int32)
    mask = p.mask & live[..., None]
    codes = np.where(mask, codes, 0).astype(np.int32)
    scales = np.where(live, peak / S, 0.0).astype(np.float32)
    return QuantizedGrid(codes, mask, scales, s, p.coeffs.M, p.coeffs.height, p.coeffs.width)


def dequantize(q: QuantizedGrid) -> PrunedGrid:
    scales = q.scales.astype(np.float64)
    z = q.codes.astype(np.float64) * scales[..., None]
    grid = BlockGrid(z, q.M, q.height, q.width)
    k = int(q.mask.sum(axis=-1).max(initial=0))
    kappa = np.where(q.mask, np.abs(z), np.inf).min(axis=-1)
    return PrunedGrid(grid, q.mask, k, kappa)


@dataclass(frozen=True, eq=False)
class EncodedFrame:
    """Sparse quantized frame with its header."""

    M: int
    s: int
    channels: int
    height: int
    width: int
    r: float
    frame_id: int
    scales: np.ndarray  # (channels, B) float32
    mask: np.ndarray    # (channels, B, M^2) bool
    codes: np.ndarray   # (channels, B, M^2) int32

    @property
    def blocks(self) -> int:
        return (self.height // self.M) * (self.width // self.M)

    @property
    def kept_counts(self) -> np.ndarray:
        return self.mask.sum(axis=-1)

    @property
    def total_kept(self) -> int:
        return int(self.mask.sum())

    @property
    def n_samples(self) -> int:
        return self.channels * self.height * self.width

    @property
    def nominal_bits(self) -> int:
        return self.channels * self.blocks * SCALE_BITS + self.s * self.total_kept

    @property
    def value_bits(self) -> int:
        return self.s * self.total_kept

    @property
    def wire_bits(self) -> int:
        return 8 * len(self.to_bytes())

    def quantized(self) -> QuantizedGrid:
        return QuantizedGrid(self.codes, self.mask, self.scales, self.s, self.M, self.height, self.width)

    def to_bytes(self) -> bytes:
        from .bitstream import serialize_frame
        return serialize_frame(self)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "EncodedFrame":
        from .bitstream import parse_frame
        return parse_frame(buf)

    def __eq__(self, other):
        if not isinstance(other, EncodedFrame):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    __hash__ = None


def encode_frame(x: RadarTensor, r: float, s: int, M: int, frame_id: int = 0) -> EncodedFrame:
    check_divisible(x.height, x.width, M)
    check_bits(s)
    # the header carries r as float32; use that value so k is reproducible
    r = float(np.float32(r))
    check_ratio(r, M)
    grid = blockize(x, M)
    z = forward_blocks(grid.data, get_basis(M))
    scales, mask, codes = _quantize_then_select(z, kept_count(M, r), s)
    return EncodedFrame(M, s, x.channels, x.height, x.width, r, frame_id, scales, mask, codes)


def _quantize_then_select(z: np.ndarray, k: int, s: int):
    # Rank on the block's code grid rather than on raw magnitudes so that
    # reprune(), which only sees codes, selects exactly the same top-k sets.
    S = max_code(s)
    peak = np.abs(z).max(axis=-1)
    live = peak > 0
    safe = np.where(live, peak, 1.0)
    full = np.clip(np.rint(z * (S / safe)[..., None]), -S, S).astype(np.int32)
    mask = top_k_mask(np.abs(full), k) & live[..., None]
    codes = np.where(mask, full, 0).astype(np.int32)
    scales = np.where(live, peak / S, 0.0).astype(np.float32)
    return scales, mask, codes


def validate_frame(f: EncodedFrame) -> None:
    """Raise :class:`CorruptPayloadError` if ``f`` cannot be decoded."""
    n = f.M * f.M
    shape = (f.channels, f.blocks, n)
    if f.mask.shape[-1] > n or f.codes.shape[-1] > n:
        raise CorruptPayloadError(f"coefficient index >= M^2 = {n}")
    if f.mask.shape != shape or f.codes.shape != shape or f.scales.shape != shape[:2]:
        raise CorruptPayloadError(f"frame arrays do not match header dims {shape}")
    S = max_code(f.s)
    if np.any(np.abs(f.codes) > S):
        raise CorruptPayloadError(f"code outside [-{S}, {S}]")
    if np.any(f.codes[~f.mask]):
        raise CorruptPayloadError("nonzero code at a pruned position")
    if not np.all(np.isfinite(f.scales)) or np.any(f.scales < 0):
        raise CorruptPayloadError("invalid scale factor")


def reconstruct(f: EncodedFrame) -> np.ndarray:
    """Decode to a float64 array without the final float32 rounding."""
    validate_frame(f)
    zhat = dequantize(f.quantized()).coeffs
    return merge_array(zhat.with_data(inverse_blocks(zhat.data, get_basis(f.M))))


def decode_frame(f: EncodedFrame) -> RadarTensor:
    return RadarTensor(reconstruct(f).astype(np.float32))


def reprune(f: EncodedFrame, r_new: float) -> EncodedFrame:
    """Prune an encoded frame further, to ratio ``r_new >= f.r``.

    Ranks kept codes by magnitude with the codec's tie rule. Scales are left
    untouched, so the result matches a fresh encode at ``r_new`` whenever
    quantization preserves the magnitude order of the kept coefficients.
    """
    r_new = float(np.float32(r_new))
    if r_new < f.r:
        raise ValueError(f"reprune ratio {r_new} is below the frame ratio {f.r}")
    k = kept_count(f.M, r_new)
    mag = np.where(f.mask, np.abs(f.codes), -1)
    mask = top_k_mask(mag, k) & f.mask
    codes = np.where(mask, f.codes, 0).astype(np.int32)
    return replace(f, r=r_new, mask=mask, codes=codes)


@dataclass(frozen=True)
class BitRate:
    value_bpp: float
    nominal_bpp: float
    wire_bpp: float
    compression_ratio: float
    prune_ratio_effective: float


def value_bpp(s: int, r: float) -> float:
    """Value-only bit rate ``s / r``."""
    return s / r


def scale_overhead(s: int, M: int) -> float:
    """Scale-factor overhead relative to the code payload, ``32 / (s M^2)``."""
    return SCALE_BITS / (s * M * M)


def bit_rate(f: EncodedFrame) -> BitRate:
    n = f.n_samples
    kept = f.total_kept
    r_eff = n / kept if kept else math.inf
    vb = f.value_bits / n
    return BitRate(
        value_bpp=vb,
        nominal_bpp=f.nominal_bits / n,
        wire_bpp=f.wire_bits / n,
        compression_ratio=BASELINE_BPP / vb if vb else math.inf,
        prune_ratio_effective=r_eff,
    )


def coefficient_error_energy(x: RadarTensor, f: EncodedFrame) -> float:
    """Discarded plus quantization-residual coefficient energy of ``f`` against ``x``."""
    if (x.channels, x.height, x.width) != (f.channels, f.height, f.width):
        raise ShapeError("frame and tensor dimensions differ")
    g = blockize(x, f.M)
    z = forward_blocks(g.data, get_basis(f.M))
    zhat = f.codes.astype(np.float64) * f.scales.astype(np.float64)[..., None]
    discarded = np.where(f.mask, 0.0, z)
    residual = np.where(f.mask, z - zhat, 0.0)
    return float(np.sum(discarded ** 2) + np.sum(residual ** 2))
