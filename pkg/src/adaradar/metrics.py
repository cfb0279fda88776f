"""Reconstruction fidelity and link cost metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .codec import EncodedFrame, bit_rate
from .errors import ShapeError
from .tensor import RadarTensor

RAE_FLOOR = 1e-12


def _arrays(x, xhat) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x.data if isinstance(x, RadarTensor) else x, dtype=np.float64)
    b = np.asarray(xhat.data if isinstance(xhat, RadarTensor) else xhat, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def snr_db(x, xhat) -> float:
    """``10 log10(|x|^2 / |x - xhat|^2)``; ``inf`` for an exact reconstruction."""
    a, b = _arrays(x, xhat)
    err = float(np.sum((a - b) ** 2))
    if err == 0.0:
        return math.inf
    sig = float(np.sum(a ** 2))
    if sig == 0.0:
        return -math.inf
    return 10.0 * math.log10(sig / err)


def rae(x, xhat) -> tuple[float, float]:
    """Mean and max relative absolute error between channel-summed power maps.

    Pixels whose original power is below ``RAE_FLOOR`` are excluded.
    """
    a, b = _arrays(x, xhat)
    if a.ndim == 3:
        pa = np.einsum("chw,chw->hw", a, a)
        pb = np.einsum("chw,chw->hw", b, b)
    else:
        pa, pb = a ** 2, b ** 2
    keep = pa >= RAE_FLOOR
    if not keep.any():
        raise ValueError("every pixel is below the RAE power floor")
    rel = np.abs(pa[keep] - pb[keep]) / pa[keep]
    return float(rel.mean()), float(rel.max())


def gini(values) -> float:
    """Gini coefficient of the magnitudes in ``values`` (0 = uniform)."""
    v = np.sort(np.abs(np.asarray(values, dtype=np.float64)).ravel())
    n = v.size
    total = v.sum()
    if n == 0 or total == 0:
        return 0.0
    i = np.arange(1, n + 1)
    return float(2.0 * np.sum(i * v) / (n * total) - (n + 1) / n)


def link_latency(bits: float, bandwidth_bps: float, dct: float = 0.0, thd: float = 0.0, q: float = 0.0,
                 dq: float = 0.0, idct: float = 0.0) -> float:
    """End-to-end latency: coder stages + transfer + decoder stages, in seconds."""
    if bandwidth_bps <= 0:
        raise ValueError("bandwidth must be positive")
    return dct + thd + q + bits / bandwidth_bps + dq + idct


@dataclass(frozen=True)
class FidelityReport:
    snr_db: float
    rae_mean: float
    rae_max: float
    value_bpp: float
    wire_bpp: float
    compression_ratio: float
    prune_ratio_effective: float

    def to_dict(self) -> dict:
        return asdict(self)


def fidelity_report(x: RadarTensor, xhat: RadarTensor, frame: EncodedFrame) -> FidelityReport:
    br = bit_rate(frame)
    m, mx = rae(x, xhat)
    return FidelityReport(snr_db(x, xhat), m, mx, br.value_bpp, br.wire_bpp,
                          br.compression_ratio, br.prune_ratio_effective)
