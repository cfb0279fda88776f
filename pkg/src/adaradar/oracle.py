"""Task-confidence oracles that stand in for a perception network.

The detection oracle thresholds a calibrated per-pixel SNR map, keeps local
maxima and applies greedy non-maximum suppression. Its maximum proposal
confidence falls as reconstruction fidelity drops, which is the only
property the rate controller relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.special import expit

from .tensor import RadarTensor, Target


@dataclass(frozen=True)
class Proposal:
    range_bin: int
    doppler_bin: int
    extent: tuple[int, int]
    confidence: float


@dataclass(frozen=True)
class OracleConfig:
    """Detection oracle settings.

    ``mu_db`` and ``beta_db`` map pixel SNR (dB) to confidence through a
    logistic. The noise floor is estimated from the map itself unless
    ``reference_floor`` (expected noise power per pixel) is given; it is
    never allowed below ``max(power) * 10**(-dynamic_range_db / 10)``.
    """

    detection_threshold: float = 0.5
    nms_radius: int = 3
    mu_db: float = 10.0
    beta_db: float = 3.0
    noise_floor_estimator: str = "median"
    reference_floor: float | None = None
    dynamic_range_db: float = 60.0

    def __post_init__(self):
        if self.nms_radius < 1:
            raise ValueError("nms_radius must be >= 1")
        if self.beta_db <= 0:
            raise ValueError("beta_db must be > 0")
        if self.noise_floor_estimator not in ("median", "mean"):
            raise ValueError(f"unknown noise floor estimator {self.noise_floor_estimator!r}")


def noise_floor(power: np.ndarray, cfg: OracleConfig) -> float:
    if cfg.reference_floor is not None:
        est = float(cfg.reference_floor)
    elif cfg.noise_floor_estimator == "median":
        est = float(np.median(power))
    else:
        est = float(np.mean(power))
    return max(est, float(power.max()) * 10.0 ** (-cfg.dynamic_range_db / 10.0))


def confidence_map(power: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """Per-pixel confidence ``logistic((SNR_dB - mu) / beta)``."""
    floor = noise_floor(power, cfg)
    if floor <= 0:
        return np.zeros_like(power)
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(power / floor)
    return expit((snr - cfg.mu_db) / cfg.beta_db)


def _extent(power: np.ndarray, i: int, j: int) -> tuple[int, int]:
    half = power[i, j] / 2.0
    col, row = power[:, j] >= half, power[i, :] >= half

    def run(line, c):
        lo = c
        while lo > 0 and line[lo - 1]:
            lo -= 1
        hi = c
        while hi < len(line) - 1 and line[hi + 1]:
            hi += 1
        return hi - lo + 1

    return run(col, i), run(row, j)


def detect(x: RadarTensor, cfg: OracleConfig | None = None) -> list[Proposal]:
    """Confidence-thresholded local maxima after greedy NMS, best first."""
    cfg = cfg or OracleConfig()
    power = x.power()
    if not power.any():
        return []
    conf = confidence_map(power, cfg)
    peaks = (power == maximum_filter(power, size=3, mode="nearest")) & (power > 0)
    peaks &= conf >= cfg.detection_threshold
    ii, jj = np.nonzero(peaks)
    order = sorted(range(len(ii)), key=lambda n: (-conf[ii[n], jj[n]], -power[ii[n], jj[n]], ii[n], jj[n]))
    kept: list[Proposal] = []
    for n in order:
        i, j = int(ii[n]), int(jj[n])
        if any(max(abs(i - p.range_bin), abs(j - p.doppler_bin)) <= cfg.nms_radius for p in kept):
            continue
        kept.append(Proposal(i, j, _extent(power, i, j), float(conf[i, j])))
    return kept


def confidence(proposals: Sequence[Proposal | float]) -> float:
    """Maximum proposal confidence, 0 when there are none."""
    vals = [p.confidence if isinstance(p, Proposal) else float(p) for p in proposals]
    return max(vals, default=0.0)


def seg_entropy(prob_map: np.ndarray, atol: float = 1e-6) -> tuple[float, float]:
    """Mean per-pixel Shannon entropy (nats) and the surrogate ``1 - H / ln C``."""
    p = np.asarray(prob_map, dtype=np.float64)
    if p.ndim != 3:
        raise ValueError(f"probability map must be C x H x W, got shape {p.shape}")
    if np.any(p < -atol) or not np.allclose(p.sum(axis=0), 1.0, atol=atol):
        raise ValueError("probability map is not normalised per pixel")
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    H = float(-plogp.sum(axis=0).mean())
    C = p.shape[0]
    surrogate = 1.0 - H / math.log(C) if C > 1 else 1.0
    return H, surrogate


def score(proposals: Sequence[Proposal], truth: Sequence[Target], match_radius: float = 3.0):
    """Greedy one-to-one matching by distance; returns (precision, recall, f1).

    With no proposals precision is reported as 1; with no targets recall is 1.
    """
    if match_radius < 0:
        raise ValueError("match_radius must be >= 0")
    pairs = []
    for a, p in enumerate(proposals):
        for b, t in enumerate(truth):
            d = math.hypot(p.range_bin - t.range_bin, p.doppler_bin - t.doppler_bin)
            if d <= match_radius:
                pairs.append((d, a, b))
    pairs.sort()
    used_p, used_t = set(), set()
    for _, a, b in pairs:
        if a not in used_p and b not in used_t:
            used_p.add(a)
            used_t.add(b)
    tp = len(used_p)
    precision = tp / len(proposals) if proposals else 1.0
    recall = tp / len(truth) if truth else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


class DetectionOracle:
    """Callable wrapper: ``oracle(x) -> list[Proposal]``."""

    def __init__(self, cfg: OracleConfig | None = None):
        self.cfg = cfg or OracleConfig()

    def __call__(self, x: RadarTensor) -> list[Proposal]:
        return detect(x, self.cfg)


class SegmentationOracle:
    """Two-class (target / background) segmentation surrogate.

    Class probabilities come from the per-pixel confidence map; the returned
    confidence is ``1 - H / ln 2`` of the mean pixel entropy.
    """

    def __init__(self, cfg: OracleConfig | None = None):
        self.cfg = cfg or OracleConfig()

    def prob_map(self, x: RadarTensor) -> np.ndarray:
        fg = confidence_map(x.power(), self.cfg)
        return np.stack([fg, 1.0 - fg])

    def __call__(self, x: RadarTensor) -> float:
        return seg_entropy(self.prob_map(x))[1]
