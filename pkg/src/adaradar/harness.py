"""Batch experiments: static rate sweeps, baseline comparisons and lambda sweeps.

A sweep evaluates the cross product of scenes, codecs and codec parameters.
Every cell is cached on disk under a hash of its inputs, so interrupted or
extended sweeps only compute the missing cells. The CSV table is the single
source of truth; figures are rendered from it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import CfarConfig, cfar_decode, cfar_encode, iv_decode, iv_encode
from .codec import bit_rate, decode_frame, encode_frame, kept_count
from .metrics import rae, snr_db
from .oracle import DetectionOracle, OracleConfig, detect, score
from .plotting import emit_plots
from .ratecontrol import ControlParams, run_adaptive
from .tensor import Target, generate_scene, random_scene_spec, read_rdt_sequence, scene_sequence

log = logging.getLogger(__name__)

CODECS = ("spectral", "index_value", "cfar")
SWEEP_COLUMNS = ("codec", "seed", "M", "s", "r", "thd", "K", "value_bpp", "wire_bpp", "compression_ratio",
                 "snr_db", "rae_mean", "rae_max", "precision", "recall", "f1", "error")
LAMBDA_COLUMNS = ("lam", "mean_r", "mean_bpp", "mean_f1", "skipped_fraction")


@dataclass
class SweepSpec:
    output: str = "results"
    input: str | None = None
    generator: dict = field(default_factory=lambda: {"dims": [2, 64, 64], "n_targets": 4,
                                                     "amplitude": [10.0, 100.0], "noise_sigma": 1.0})
    seeds: list = field(default_factory=lambda: [0])
    codecs: list = field(default_factory=lambda: ["spectral"])
    r: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    s: list = field(default_factory=lambda: [8])
    M: list = field(default_factory=lambda: [32])
    thd: list = field(default_factory=lambda: [10 ** 0.05, 10 ** 0.2, 10 ** 0.5])
    lam: list = field(default_factory=list)
    cfar: dict = field(default_factory=lambda: {"window": 9, "guard": 3})
    oracle: dict = field(default_factory=dict)
    controller: dict = field(default_factory=dict)
    n_frames: int = 200
    match_radius: float = 3.0
    workers: int = 1

    def __post_init__(self):
        bad = set(self.codecs) - set(CODECS)
        if bad:
            raise ValueError(f"unknown codec(s) {sorted(bad)}")
        if not self.codecs or not self.seeds:
            raise ValueError("sweep grid is empty")
        if "spectral" in self.codecs and not (self.r and self.s and self.M):
            raise ValueError("spectral sweep needs non-empty r, s and M grids")

    @classmethod
    def from_json(cls, src) -> "SweepSpec":
        if isinstance(src, dict):
            data = src
        else:
            data = json.loads(Path(src).read_text())
        return cls(**data)


# --------------------------------------------------------------------------
# scenes


@lru_cache(maxsize=4)
def _file_frames(path: str):
    return read_rdt_sequence(path)


def _scene(spec: SweepSpec, seed: int):
    """Return ``(x, truth_or_None)`` for one scene index."""
    if spec.input:
        frames = _file_frames(spec.input)
        return frames[seed % len(frames)], None
    return generate_scene(_generator_spec(spec.generator, seed))


def _generator_spec(g: dict, seed: int):
    return random_scene_spec(seed, dims=tuple(g["dims"]), n_targets=g.get("n_targets", 4),
                             amplitude=tuple(g.get("amplitude", (10.0, 100.0))),
                             noise_sigma=g.get("noise_sigma", 1.0), clutter=g.get("clutter", 0.0),
                             clutter_length=g.get("clutter_length", 6.0))


def oracle_config(spec: SweepSpec) -> OracleConfig:
    """Oracle settings; with a noisy generator the sensor noise power is the floor."""
    kw = dict(spec.oracle)
    sigma = spec.generator.get("noise_sigma", 0.0) if not spec.input else 0.0
    if "reference_floor" not in kw and sigma > 0:
        kw["reference_floor"] = 2 * spec.generator["dims"][0] * sigma ** 2
    return OracleConfig(**kw)


def _input_digest(spec: SweepSpec) -> str:
    if spec.input:
        return hashlib.sha256(Path(spec.input).read_bytes()).hexdigest()
    return json.dumps(spec.generator, sort_keys=True)


# --------------------------------------------------------------------------
# cells


def _cells(spec: SweepSpec) -> list[dict]:
    cells = []
    for seed in spec.seeds:
        for codec in spec.codecs:
            if codec == "spectral":
                for M in spec.M:
                    for s in spec.s:
                        for r in spec.r:
                            cells.append({"codec": codec, "seed": seed, "M": M, "s": s, "r": r})
            elif codec == "index_value":
                for M in spec.M:
                    for r in spec.r:
                        cells.append({"codec": codec, "seed": seed, "M": M, "r": r})
            else:
                for thd in spec.thd:
                    cells.append({"codec": codec, "seed": seed, "thd": thd})
    return cells


def cell_key(spec: SweepSpec, cell: dict, digest: str) -> str:
    payload = {"version": __version__, "input": digest, "cell": cell, "oracle": asdict(oracle_config(spec)),
               "cfar": spec.cfar, "match_radius": spec.match_radius}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:24]


def evaluate_cell(spec: SweepSpec, cell: dict) -> dict:
    row = {c: "" for c in SWEEP_COLUMNS}
    row.update(cell)
    try:
        x, truth = _scene(spec, cell["seed"])
        cfg = oracle_config(spec)
        if cell["codec"] == "spectral":
            frame = encode_frame(x, cell["r"], cell["s"], cell["M"], frame_id=cell["seed"])
            xhat = decode_frame(frame)
            br = bit_rate(frame)
            row.update(K=kept_count(cell["M"], cell["r"]), value_bpp=br.value_bpp, wire_bpp=br.wire_bpp,
                       compression_ratio=br.compression_ratio)
        elif cell["codec"] == "index_value":
            K = kept_count(cell["M"], cell["r"])
            f = iv_encode(x, cell["M"], K)
            xhat = iv_decode(f)
            # wire cost adds a bitmap of kept positions per block
            row.update(K=K, s=32, value_bpp=f.value_bpp, wire_bpp=f.value_bpp + 1.0,
                       compression_ratio=f.compression_ratio)
        else:
            f = cfar_encode(x, CfarConfig(thd=cell["thd"], **spec.cfar))
            xhat = cfar_decode(f)
            row.update(s=32, value_bpp=f.value_bpp, wire_bpp=f.value_bpp + 1.0 / x.channels,
                       compression_ratio=f.compression_ratio)
        if truth is None:
            truth = [_as_target(p) for p in detect(x, cfg)]
        props = detect(xhat, cfg)
        try:
            rm, rx = rae(x, xhat)
        except ValueError:
            rm = rx = math.nan
        p, rcl, f1 = score(props, truth, spec.match_radius)
        row.update(snr_db=snr_db(x, xhat), rae_mean=rm, rae_max=rx, precision=p, recall=rcl, f1=f1)
    except Exception as exc:  # recorded per cell, the sweep continues
        log.warning("cell %s failed: %s", cell, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _as_target(p):
    return Target(p.range_bin, p.doppler_bin, 1.0)


def _sort_key(row):
    def n(v):
        return -math.inf if v == "" else float(v)
    return (row["codec"], n(row["M"]), n(row["s"]), n(row["r"]), n(row["thd"]), n(row["seed"]))


@dataclass
class SweepResult:
    rows: list
    computed: int
    cached: int
    table: Path | None = None


def sweep(spec: SweepSpec, use_cache: bool = True) -> SweepResult:
    out = Path(spec.output)
    cache_dir = out / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    digest = _input_digest(spec)
    cells = _cells(spec)
    rows, todo = [], []
    for cell in cells:
        path = cache_dir / f"{cell_key(spec, cell, digest)}.json"
        if use_cache and path.exists():
            rows.append(json.loads(path.read_text()))
        else:
            todo.append((cell, path))
    if spec.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            fresh = list(pool.map(evaluate_cell, [spec] * len(todo), [c for c, _ in todo]))
    else:
        fresh = [evaluate_cell(spec, c) for c, _ in todo]
    for (cell, path), row in zip(todo, fresh):
        if not row["error"]:
            path.write_text(json.dumps(row, sort_keys=True))
        rows.append(row)
    rows.sort(key=_sort_key)
    table = out / "table.csv"
    write_table(rows, table, SWEEP_COLUMNS)
    return SweepResult(rows, len(todo), len(cells) - len(todo), table)


def _fmt(v):
    # shortest round-tripping text; numpy scalars would otherwise print their type
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_table(rows, path, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in columns})


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# controller


def sequence_for(spec: SweepSpec):
    """Frames and per-frame ground truth for controller experiments."""
    if spec.input:
        frames = _file_frames(spec.input)
        return list(frames), [None] * len(frames)
    base = _generator_spec(spec.generator, spec.seeds[0])
    scenes = [generate_scene(s) for s in scene_sequence(base, spec.n_frames)]
    return [x for x, _ in scenes], [t for _, t in scenes]


def lambda_sweep(spec: SweepSpec, frames=None, truths=None) -> list[dict]:
    """Run the controller once per lambda; report sequence means."""
    if not spec.lam:
        raise ValueError("lambda grid is empty")
    if frames is None:
        frames, truths = sequence_for(spec)
    cfg = oracle_config(spec)
    oracle = DetectionOracle(cfg)
    rows = []
    for lam in spec.lam:
        params = ControlParams(**{**spec.controller, "lam": lam})
        trace = run_adaptive(frames, oracle, params)
        f1s = []
        for rec, x, truth in zip(trace.records, frames, truths):
            xhat = decode_frame(encode_frame(x, rec.r, params.s, params.M))
            if truth is None:
                truth = [_as_target(p) for p in detect(x, cfg)]
            f1s.append(score(detect(xhat, cfg), truth, spec.match_radius)[2])
        rows.append({"lam": lam, "mean_r": trace.mean_r(), "mean_bpp": trace.mean_bpp(),
                     "mean_f1": float(np.mean(f1s)),
                     "skipped_fraction": sum(r.skipped for r in trace.records) / len(trace)})
    return rows


def run(spec: SweepSpec) -> dict:
    """Sweep, lambda sweep (when configured) and figures; returns written paths."""
    out = Path(spec.output)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    res = sweep(spec)
    written["table"] = res.table
    log.info("sweep: %d cells computed, %d from cache", res.computed, res.cached)
    ok = [r for r in res.rows if not r["error"]]
    if ok:
        written["rate_snr"] = emit_plots(ok, "rate_snr", out / "rate_snr.svg", res.table)
        written["rate_f1"] = emit_plots(ok, "rate_f1", out / "rate_f1.svg", res.table)
    if spec.lam:
        rows = lambda_sweep(spec)
        lt = out / "lambda.csv"
        write_table(rows, lt, LAMBDA_COLUMNS)
        written["lambda_table"] = lt
        written["lambda"] = emit_plots(rows, "lambda", out / "lambda.svg", lt)
    return written
