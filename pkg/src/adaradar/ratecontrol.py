"""Closed-loop pruning-ratio control from zeroth-order confidence gradients.

Per frame the controller encodes at ``r_t``, decodes, and queries the task
oracle for a confidence ``p``. If the frame passes the confidence gate, the
encoded frame is pruned further to ``r_t + eps`` and queried again for
``p_minus``. The finite difference ``g = (p - p_minus) / eps`` measures how
much confidence is lost per unit of extra pruning and is clipped to
``[-grad_clip, grad_clip]``.

The update ascends ``J(r) = h(r) - lambda * B(r)`` with ``B(r) = s / r``::

    penalized:         dJ = -g + lambda * s / r**2
    constraint_aware:  dJ = (p - p_min) - g * (r - r_min + lambda)
    r <- clip(r + eta * dJ, r_min, r_max)

``g`` is the negated slope ``dh/dr``, so both variants lower ``r`` when
extra pruning costs confidence and raise it otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .codec import bit_rate, decode_frame, encode_frame, reprune
from .oracle import Proposal, confidence
from .tensor import RadarTensor

PENALIZED = "penalized"
CONSTRAINT_AWARE = "constraint_aware"
TRACE_COLUMNS = ("t", "r", "value_bpp", "p", "p_minus", "g_hat", "grad_J", "skipped")


@dataclass(frozen=True)
class ControlParams:
    r_init: float = 12.0
    r_min: float = 1.0
    r_max: float = 4096.0
    eta: float = 1.0
    epsilon: float = 0.05
    lam: float = 1.0
    p_threshold: float = 0.8
    grad_clip: float = 1.0
    p_min: float = 0.9
    objective: str = PENALIZED
    s: int = 4
    M: int = 64

    def __post_init__(self):
        if self.r_min < 1 or self.r_max > self.M * self.M or self.r_min > self.r_max:
            raise ValueError(f"ratio bounds [{self.r_min}, {self.r_max}] must lie in [1, {self.M * self.M}]")
        if not (self.r_min <= self.r_init <= self.r_max):
            raise ValueError(f"r_init {self.r_init} outside [{self.r_min}, {self.r_max}]")
        if self.eta <= 0 or self.epsilon <= 0 or self.grad_clip <= 0:
            raise ValueError("eta, epsilon and grad_clip must be positive")
        if not (0 <= self.p_threshold <= 1 and 0 <= self.p_min <= 1):
            raise ValueError("p_threshold and p_min must lie in [0, 1]")
        if self.objective not in (PENALIZED, CONSTRAINT_AWARE):
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass
class RateState:
    r: float
    t: int = 0
    last_p: float = math.nan
    last_gradient: float = math.nan


@dataclass(frozen=True)
class TraceRecord:
    t: int
    r: float
    value_bpp: float
    p: float
    p_minus: float
    g_hat: float
    grad_J: float
    skipped: bool


@dataclass
class AdaptTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def ratios(self) -> list[float]:
        return [rec.r for rec in self.records]

    def mean_r(self) -> float:
        return sum(self.ratios) / len(self.records)

    def mean_bpp(self) -> float:
        return sum(rec.value_bpp for rec in self.records) / len(self.records)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for rec in self.records:
                w.writerow([rec.t] + [repr(float(v)) for v in (rec.r, rec.value_bpp, rec.p, rec.p_minus,
                                                                rec.g_hat, rec.grad_J)] + [int(rec.skipped)])


def bpp_of(r: float, params: ControlParams) -> float:
    """Value bit rate ``B(r) = s / r``."""
    if not (params.r_min <= r <= params.r_max):
        raise ValueError(f"ratio {r} outside [{params.r_min}, {params.r_max}]")
    return params.s / r


def bpp_slope(r: float, params: ControlParams) -> float:
    """``B'(r) = -s / r^2``."""
    return -params.s / (r * r)


def proxy_gradient(p: float, p_perturbed: float, epsilon: float, grad_clip: float = math.inf) -> float:
    g = (p - p_perturbed) / epsilon
    return min(max(g, -grad_clip), grad_clip)


def objective_gradient(g_hat: float, r: float, p: float, params: ControlParams) -> float:
    if params.objective == PENALIZED:
        return -g_hat - params.lam * bpp_slope(r, params)
    return (p - params.p_min) - g_hat * (r - params.r_min + params.lam)


def step(state: RateState, grad_J: float, params: ControlParams) -> RateState:
    r = min(max(state.r + params.eta * grad_J, params.r_min), params.r_max)
    return replace(state, r=r, t=state.t + 1, last_gradient=grad_J)


Oracle = Callable[[RadarTensor], "Sequence[Proposal] | float"]


def evaluate_oracle(oracle: Oracle, x: RadarTensor) -> tuple[float, int]:
    """Return ``(p, number_of_detections)`` for any supported oracle output."""
    out = oracle(x)
    if isinstance(out, (int, float)):
        return float(out), 1
    out = list(out)
    return confidence(out), len(out)


def run_adaptive(frames: Iterable[RadarTensor], oracle: Oracle, params: ControlParams | None = None,
                 perturb: str = "reprune") -> AdaptTrace:
    """Run the controller over ``frames``.

    ``perturb="encode"`` replaces the reprune of the transmitted frame by an
    independent encode at ``r_t + eps``; it exists to cross-check the
    estimator and is not what a deployed receiver would do.
    """
    params = params or ControlParams()
    if perturb not in ("reprune", "encode"):
        raise ValueError(f"unknown perturbation path {perturb!r}")
    state = RateState(params.r_init)
    trace = AdaptTrace()
    r_cap = float(params.M * params.M)
    seen = False
    for t, x in enumerate(frames):
        seen = True
        try:
            frame = encode_frame(x, state.r, params.s, params.M, frame_id=t)
            p, k = evaluate_oracle(oracle, decode_frame(frame))
            vbpp = bit_rate(frame).value_bpp
            if k == 0 or p < params.p_threshold:
                trace.records.append(TraceRecord(t, state.r, vbpp, p, math.nan, math.nan, math.nan, True))
                state = replace(state, t=state.t + 1, last_p=p)
                continue
            r_plus = min(frame.r + params.epsilon, r_cap)
            if perturb == "reprune":
                perturbed = reprune(frame, r_plus)
            else:
                perturbed = encode_frame(x, r_plus, params.s, params.M, frame_id=t)
            p_minus, _ = evaluate_oracle(oracle, decode_frame(perturbed))
        except Exception as exc:
            raise RuntimeError(f"adaptation failed at frame {t}: {exc}") from exc
        g = proxy_gradient(p, p_minus, params.epsilon, params.grad_clip)
        grad = objective_gradient(g, state.r, p, params)
        trace.records.append(TraceRecord(t, state.r, vbpp, p, p_minus, g, grad, False))
        state = replace(step(state, grad, params), last_p=p)
    if not seen:
        raise ValueError("empty frame sequence")
    return trace


def params_dict(params: ControlParams) -> dict:
    return asdict(params)
