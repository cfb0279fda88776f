"""Command-line interface: ``adaradar <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .baselines import CfarConfig, cfar_decode, cfar_encode, iv_decode, iv_encode
from .bitstream import read_arf, write_arf
from .codec import bit_rate, decode_frame, encode_frame, kept_count
from .errors import AdaRadarError
from .harness import SweepSpec, read_table, run
from .metrics import fidelity_report, rae, snr_db
from .oracle import DetectionOracle, OracleConfig, detect
from .plotting import PLOT_KINDS, emit_plots
from .ratecontrol import CONSTRAINT_AWARE, PENALIZED, ControlParams, run_adaptive
from .tensor import (SceneSpec, Target, generate_scene, random_scene_spec, read_rdt, read_rdt_sequence,
                     scene_sequence, write_rdt, write_rdt_sequence)

log = logging.getLogger("adaradar")

_OBJECTIVES = {"penalized": PENALIZED, "constraint_aware": CONSTRAINT_AWARE}
_OBJECTIVE_ALIASES = {"eqS5": CONSTRAINT_AWARE}


def _objective(text: str) -> str:
    try:
        return {**_OBJECTIVES, **_OBJECTIVE_ALIASES}[text]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown objective {text!r}; choose from {sorted(_OBJECTIVES)}")


def _parse_targets(text: str) -> tuple[Target, ...]:
    """``"r,d,amp[,slope];..."`` into targets."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(";"))):
        parts = [float(v) for v in item.split(",")]
        if len(parts) not in (3, 4):
            raise argparse.ArgumentTypeError(f"target {item!r}: expected range,doppler,amplitude[,slope]")
        out.append(Target(int(parts[0]), int(parts[1]), parts[2], parts[3] if len(parts) == 4 else 0.0))
    return tuple(out)


def cmd_gen(a):
    if a.targets is not None:
        spec = SceneSpec(_parse_targets(a.targets), a.noise, tuple(a.dims), a.seed, a.clutter)
    else:
        spec = random_scene_spec(a.seed, tuple(a.dims), a.n_targets, tuple(a.amplitude), a.noise,
                                 clutter=a.clutter)
    if a.frames > 1 or a.output.endswith(".rdtseq"):
        frames = [generate_scene(s)[0] for s in scene_sequence(spec, a.frames)]
        write_rdt_sequence(frames, a.output)
    else:
        write_rdt(generate_scene(spec)[0], a.output)
    if a.truth:
        with open(a.truth, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["range_bin", "doppler_bin", "amplitude", "phase_slope"])
            for t in spec.targets:
                w.writerow([t.range_bin, t.doppler_bin, t.amplitude, t.phase_slope])
    return 0


def cmd_encode(a):
    frame = encode_frame(read_rdt(a.input), a.ratio, a.bits, a.block)
    write_arf(frame, a.output)
    br = bit_rate(frame)
    print(json.dumps({"value_bpp": br.value_bpp, "wire_bpp": br.wire_bpp,
                      "compression_ratio": br.compression_ratio, "kept_per_block": kept_count(a.block, frame.r)}))
    return 0


def cmd_decode(a):
    write_rdt(decode_frame(read_arf(a.input)), a.output)
    return 0


def _oracle_cfg(a) -> OracleConfig:
    return OracleConfig(detection_threshold=a.thresh, nms_radius=a.nms, reference_floor=a.floor)


def cmd_detect(a):
    props = detect(read_rdt(a.input), _oracle_cfg(a))
    with open(a.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["range_bin", "doppler_bin", "extent_range", "extent_doppler", "confidence"])
        for p in props:
            w.writerow([p.range_bin, p.doppler_bin, p.extent[0], p.extent[1], repr(p.confidence)])
    return 0


def cmd_adapt(a):
    frames = read_rdt_sequence(a.input)
    params = ControlParams(r_init=a.r_init, r_min=a.r_min, r_max=a.r_max if a.r_max else a.block ** 2,
                           eta=a.eta, epsilon=a.eps, lam=a.lam, p_threshold=a.p_thresh, grad_clip=a.clip,
                           p_min=a.p_min, objective=a.objective, s=a.bits, M=a.block)
    trace = run_adaptive(frames, DetectionOracle(_oracle_cfg(a)), params)
    trace.write_csv(a.output)
    if a.plot:
        emit_plots(read_table(a.output), "trace", a.plot, a.output)
    print(json.dumps({"frames": len(trace), "mean_r": trace.mean_r(), "mean_bpp": trace.mean_bpp()}))
    return 0


def cmd_baseline(a):
    x = read_rdt(a.input)
    if a.kind == "iv":
        f = iv_encode(x, a.block, kept_count(a.block, a.ratio))
        xhat = iv_decode(f)
    else:
        f = cfar_encode(x, CfarConfig(a.window, a.guard, a.thd))
        xhat = cfar_decode(f)
    if a.output:
        write_rdt(xhat, a.output)
    print(json.dumps({"value_bpp": f.value_bpp, "compression_ratio": f.compression_ratio,
                      "snr_db": snr_db(x, xhat)}))
    return 0


def cmd_report(a):
    x, xhat = read_rdt(a.original), read_rdt(a.recon)
    if a.frame:
        out = fidelity_report(x, xhat, read_arf(a.frame)).to_dict()
    else:
        m, mx = rae(x, xhat)
        out = {"snr_db": snr_db(x, xhat), "rae_mean": m, "rae_max": mx}
    text = json.dumps(out, indent=2)
    if a.output:
        Path(a.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_sweep(a):
    spec = SweepSpec.from_json(a.config)
    if a.output:
        spec.output = a.output
    if a.workers:
        spec.workers = a.workers
    written = run(spec)
    print(json.dumps({k: str(v) for k, v in written.items()}))
    return 0


def cmd_plot(a):
    emit_plots(read_table(a.input), a.kind, a.output, a.input)
    return 0


def _add_oracle(p):
    p.add_argument("--thresh", type=float, default=0.5, help="detection confidence threshold")
    p.add_argument("--nms", type=int, default=3, help="NMS radius in cells")
    p.add_argument("--floor", type=float, default=None, help="reference noise power per cell")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaradar", description=__doc__)
    ap.add_argument("--version", action="version", version=f"adaradar {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a scene (.rdt) or sequence (.rdtseq)")
    p.add_argument("--targets", help='explicit targets "r,d,amp[,slope];..."')
    p.add_argument("--n-targets", type=int, default=4)
    p.add_argument("--amplitude", type=float, nargs=2, default=(10.0, 100.0), metavar=("LO", "HI"))
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--clutter", type=float, default=0.0, help="RMS of a smooth background")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=int, nargs=3, default=(1, 64, 64), metavar=("C", "H", "W"))
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--truth", help="write the target list to this CSV")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", help="compress an .rdt frame to .arf")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-r", "--ratio", type=float, required=True)
    p.add_argument("-s", "--bits", type=int, default=8)
    p.add_argument("-M", "--block", type=int, default=64)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct an .arf frame to .rdt")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("detect", help="run the detection oracle, write proposals CSV")
    p.add_argument("-i", "--input", required=True)
    _add_oracle(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("adapt", help="run the rate controller over a sequence")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--objective", type=_objective, default=PENALIZED, metavar="{penalized,constraint_aware}")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--r-init", type=float, default=12.0)
    p.add_argument("--r-min", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--p-thresh", type=float, default=0.8)
    p.add_argument("--p-min", type=float, default=0.9)
    p.add_argument("--clip", type=float, default=1.0)
    p.add_argument("-s", "--bits", type=int, default=4)
    p.add_argument("-M", "--block", type=int, default=64)
    _add_oracle(p)
    p.add_argument("--plot", help="also render the trace to this SVG")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("baseline", help="index-value or CA-CFAR compression")
    p.add_argument("kind", choices=("iv", "cfar"))
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-r", "--ratio", type=float, default=12.0)
    p.add_argument("-M", "--block", type=int, default=64)
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--guard", type=int, default=3)
    p.add_argument("--thd", type=float, default=10 ** 0.5)
    p.add_argument("-o", "--output", help="write the reconstruction (.rdt)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="fidelity metrics between two tensors")
    p.add_argument("-a", "--original", required=True)
    p.add_argument("-b", "--recon", required=True)
    p.add_argument("--frame", help="encoded .arf for bit-rate fields")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", help="run a JSON-configured sweep")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("-j", "--workers", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a results CSV to SVG")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--kind", choices=PLOT_KINDS, default="rate_snr")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AdaRadarError, ValueError, OSError, RuntimeError) as exc:
        print(f"adaradar {args.command}: error: {exc}", file=sys.stderr)
        return 1
