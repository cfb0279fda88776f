"""Non-spectral comparison compressors: spatial index-value top-K and CA-CFAR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import top_k_mask
from .errors import ShapeError
from .tensor import BlockGrid, RadarTensor, blockize, merge_array

VALUE_BITS = 32


@dataclass(frozen=True, eq=False)
class IndexValueFrame:
    """Per (channel, block): the K largest-magnitude samples and their indices."""

    M: int
    K: int
    channels: int
    height: int
    width: int
    indices: np.ndarray  # (channels, B, K) ascending
    values: np.ndarray   # (channels, B, K) float32

    @property
    def value_bpp(self) -> float:
        return VALUE_BITS * self.K / (self.M * self.M)

    @property
    def compression_ratio(self) -> float:
        return VALUE_BITS / self.value_bpp


def iv_value_bpp(r: float) -> float:
    """Index-value bit rate at prune ratio ``r``: 32-bit values only."""
    return VALUE_BITS / r


def iv_encode(x: RadarTensor, M: int, K: int) -> IndexValueFrame:
    if not (1 <= K <= M * M):
        raise ValueError(f"K={K} outside [1, {M * M}]")
    g = blockize(x, M)
    mask = top_k_mask(np.abs(g.data), K)
    # nonzero() walks positions in ascending order inside each block
    idx = np.nonzero(mask)[2].reshape(g.channels, g.blocks, K)
    vals = np.take_along_axis(g.data, idx, axis=-1).astype(np.float32)
    return IndexValueFrame(M, K, x.channels, x.height, x.width, idx.astype(np.int32), vals)


def iv_decode(f: IndexValueFrame) -> RadarTensor:
    n = f.M * f.M
    if f.indices.size and (f.indices.min() < 0 or f.indices.max() >= n):
        raise ValueError(f"index outside [0, {n})")
    B = (f.height // f.M) * (f.width // f.M)
    data = np.zeros((f.channels, B, n), dtype=np.float32)
    np.put_along_axis(data, f.indices.astype(np.int64), f.values, axis=-1)
    return RadarTensor(merge_array(BlockGrid(data, f.M, f.height, f.width)))


@dataclass(frozen=True)
class CfarConfig:
    """Square-ring CA-CFAR: ``window`` and ``guard`` are half-widths in cells."""

    window: int = 9
    guard: int = 3
    thd: float = 10 ** 0.5

    def __post_init__(self):
        if not (self.window > self.guard >= 0):
            raise ValueError(f"need window > guard >= 0, got ({self.window}, {self.guard})")
        if self.thd <= 0:
            raise ValueError("thd must be positive")


def _box_sums(a: np.ndarray, half: int) -> np.ndarray:
    """Sum of ``a`` over the clipped ``(2 half + 1)^2`` box around every cell."""
    H, W = a.shape
    sat = np.zeros((H + 1, W + 1))
    sat[1:, 1:] = a.cumsum(0).cumsum(1)
    i = np.arange(H)
    j = np.arange(W)
    i0, i1 = np.clip(i - half, 0, H), np.clip(i + half + 1, 0, H)
    j0, j1 = np.clip(j - half, 0, W), np.clip(j + half + 1, 0, W)
    return (sat[i1][:, j1] - sat[i0][:, j1] - sat[i1][:, j0] + sat[i0][:, j0])


def ring_mean(power: np.ndarray, window: int, guard: int) -> np.ndarray:
    """Mean of the training ring around every cell, clipped to the map."""
    p = np.asarray(power, dtype=np.float64)
    ones = np.ones_like(p)
    total = _box_sums(p, window) - _box_sums(p, guard)
    count = _box_sums(ones, window) - _box_sums(ones, guard)
    return total / count


def cfar_detect(power_map: np.ndarray, cfg: CfarConfig | None = None) -> np.ndarray:
    """Boolean mask of cells whose power exceeds ``thd`` times the ring mean."""
    cfg = cfg or CfarConfig()
    p = np.asarray(power_map, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeError(f"power map must be 2-D, got shape {p.shape}")
    side = 2 * cfg.window + 1
    if side > p.shape[0] or side > p.shape[1]:
        raise ShapeError(f"CFAR window {side}x{side} exceeds map {p.shape}")
    return p > cfg.thd * ring_mean(p, cfg.window, cfg.guard)


@dataclass(frozen=True, eq=False)
class CfarFrame:
    """All channel samples at CFAR-flagged (range, Doppler) cells."""

    mask: np.ndarray    # (H, W) bool
    values: np.ndarray  # (channels, n_flagged) float32
    channels: int

    @property
    def flagged_fraction(self) -> float:
        return float(self.mask.mean())

    @property
    def value_bpp(self) -> float:
        return VALUE_BITS * self.flagged_fraction

    @property
    def compression_ratio(self) -> float:
        vb = self.value_bpp
        return VALUE_BITS / vb if vb else math.inf


def cfar_encode(x: RadarTensor, cfg: CfarConfig | None = None) -> CfarFrame:
    mask = cfar_detect(x.power(), cfg)
    return CfarFrame(mask, x.data[:, mask].astype(np.float32), x.channels)


def cfar_decode(f: CfarFrame) -> RadarTensor:
    H, W = f.mask.shape
    out = np.zeros((f.channels, H, W), dtype=np.float32)
    out[:, f.mask] = f.values
    return RadarTensor(out)
