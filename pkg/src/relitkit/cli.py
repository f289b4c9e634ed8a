"""Command-line entry point.

Commands cover the processing chain (smooth, fuse, pipeline), measurement
(eval, sweep-tau, spectrum, hist), and fixture generation (synth). Exit
codes: 0 success, 1 usage, 2 I/O, 3 validation; every failure prints one
``error[CODE]: message`` line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import synth
from .core import (
    Spectrum,
    high_freq_energy_ratio,
    magnitude_spectrum,
    to_grayscale,
)
from .fusion import fuse_sequence
from .io import (
    ConfigError,
    RunConfig,
    UsageError,
    apply_overrides,
    build_config,
    load_config_data,
    load_sequence,
    save_sequence,
)
from .metrics import (
    DEFAULT_TAU_SWEEP,
    brightness_histogram,
    eval_report_dict,
    light_stability_score,
    ssim_video,
    tau_sweep_table,
    write_signals_csv,
)
from .pipeline import run_pipeline, scaled_sigma
from .temporal import smooth_sequence


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse hook
        raise UsageError(message)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (dotted names for grouped keys)",
    )
    parser.add_argument("--tau", type=float, help="bright-region threshold override")
    parser.add_argument("--beta", type=float, help="detail-transfer strength override")
    parser.add_argument("--alpha", type=float, help="temporal blend base override")
    parser.add_argument("--threads", type=int, help="worker threads (0 = auto)")


def _add_report_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    parser.add_argument("--csv", metavar="PATH", help="also write per-frame signals as CSV")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        data = load_config_data(args.config)
    data = apply_overrides(data, getattr(args, "overrides", []))
    for key, attr in (
        ("tau", "tau"),
        ("beta", "beta"),
        ("alpha_base", "alpha"),
        ("threads", "threads"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = value
    return build_config(data)


def _print_value(label: str, value: float) -> None:
    print(f"{label}: {float(value)!r}")


def _grays(frames) -> list[np.ndarray]:
    return [to_grayscale(f) for f in frames]


def _emit_report(report: dict, args: argparse.Namespace) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if getattr(args, "json", None):
        Path(args.json).write_text(text + "\n")


def cmd_smooth(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    frames, manifest = load_sequence(args.input)
    before = light_stability_score(_grays(frames), cfg.stability)
    smoothed = smooth_sequence(
        frames, flow_params=cfg.flow, cfg=cfg.smoother, bilateral=cfg.bilateral
    )
    after = light_stability_score(_grays(smoothed), cfg.stability)
    save_sequence(smoothed, args.output, fps=manifest.fps)
    _print_value("s_ls_before", before.s_ls)
    _print_value("s_ls_after", after.s_ls)
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    original, manifest = load_sequence(args.input)
    relit, _ = load_sequence(args.relit)
    fuse_cfg = replace(
        cfg.lab_fuse,
        sigma_illum=scaled_sigma(cfg.lab_fuse.sigma_illum, original[0].shape[0]),
    )
    fused = fuse_sequence(original, relit, fuse_cfg, threads=cfg.threads)
    save_sequence(fused, args.output, fps=manifest.fps)
    _print_value("ssim", ssim_video(fused, original, cfg.ssim, threads=cfg.threads))
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    original, manifest = load_sequence(args.input)
    relit, _ = load_sequence(args.relit)
    fused, report = run_pipeline(original, relit, cfg)
    save_sequence(fused, args.output, fps=manifest.fps)
    _emit_report(report, args)
    if args.csv:
        write_signals_csv(args.csv, light_stability_score(_grays(fused), cfg.stability))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    reference, _ = load_sequence(args.input)
    candidate, _ = load_sequence(args.relit)
    stability = light_stability_score(_grays(candidate), cfg.stability)
    similarity = ssim_video(candidate, reference, cfg.ssim, threads=cfg.threads)
    _emit_report(eval_report_dict(stability, similarity, cfg.stability), args)
    if args.csv:
        write_signals_csv(args.csv, stability)
    return 0


def cmd_sweep_tau(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    named = {}
    for path in args.sequences:
        frames, _ = load_sequence(path)
        name = Path(path).name or str(path)
        while name in named:
            name += "+"
        named[name] = _grays(frames)
    if args.taus:
        taus = [float(t) for t in args.taus.split(",")]
    else:
        taus = list(DEFAULT_TAU_SWEEP)
    scores, rankings = tau_sweep_table(named, taus, cfg.stability)
    for tau in taus:
        print(f"tau {tau:g}: " + " > ".join(rankings[tau]))
    if args.json:
        doc = {
            "taus": taus,
            "scores": scores,
            "rankings": {f"{tau:g}": rankings[tau] for tau in taus},
        }
        Path(args.json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.csv:
        lines = ["tau,name,s_ls"]
        for tau_idx, tau in enumerate(taus):
            for name in sorted(named):
                lines.append(f"{tau:g},{name},{scores[name][tau_idx]!r}")
        Path(args.csv).write_text("\n".join(lines) + "\n")
    return 0


def _write_pgm(path: str | Path, plane: np.ndarray) -> None:
    peak = float(plane.max())
    scaled = plane / peak if peak > 0 else np.zeros_like(plane)
    data = np.rint(scaled * 255.0).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def _mean_spectrum(frames) -> Spectrum:
    mean_mag = np.mean([magnitude_spectrum(g).magnitude for g in _grays(frames)], axis=0)
    return Spectrum(magnitude=mean_mag, log_magnitude=np.log1p(mean_mag))


def cmd_spectrum(args: argparse.Namespace) -> int:
    frames, _ = load_sequence(args.input)
    spec = _mean_spectrum(frames)
    if args.output:
        _write_pgm(args.output, spec.log_magnitude)
    if args.relit:
        ref_frames, _ = load_sequence(args.relit)
        ratio = high_freq_energy_ratio(spec, _mean_spectrum(ref_frames), args.cutoff)
        _print_value("high_freq_ratio", ratio)
    return 0


def cmd_hist(args: argparse.Namespace) -> int:
    frames, _ = load_sequence(args.input)
    counts = brightness_histogram(_grays(frames), args.bins)
    span = 256 // args.bins
    lines = ["bin_start,count"]
    lines += [f"{i * span},{int(c)}" for i, c in enumerate(counts)]
    text = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_SYNTH_KEYS = {
    "constant": {"value": "value"},
    "global-flicker": {
        "base": "base",
        "amplitude": "amplitude",
        "period": "period",
        "texture": "texture",
    },
    "jitter-noise": {"base": "base", "amplitude": "amplitude", "texture": "texture"},
    "moving-bright-square": {
        "bg": "bg",
        "fg": "fg",
        "square_size": "size",
        "speed_x": "speed_x",
        "speed_y": "speed_y",
        "start_x": "start_x",
        "start_y": "start_y",
    },
    "textured-translation": {
        "dx": "dx",
        "dy": "dy",
        "low": "low",
        "high": "high",
        "smooth": "smooth",
    },
}


def cmd_synth(args: argparse.Namespace) -> int:
    params = {}
    for attr, kw in _SYNTH_KEYS[args.kind].items():
        value = getattr(args, attr, None)
        if value is not None:
            params[kw] = value
    frames, meta = synth.generate(
        args.kind, args.width, args.height, args.frames, seed=args.seed, **params
    )
    save_sequence(frames, args.output)
    if meta is not None:
        Path(args.output, "gt.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n"
        )
    print(f"frames: {len(frames)}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="relitkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("smooth", help="temporally stabilize a sequence")
    p.add_argument("--input", "-i", required=True, metavar="SEQ")
    p.add_argument("--output", "-o", required=True, metavar="SEQ")
    _add_config_flags(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("fuse", help="transfer relit illumination onto the original")
    p.add_argument("--input", "-i", required=True, metavar="SEQ")
    p.add_argument("--relit", "-r", required=True, metavar="SEQ")
    p.add_argument("--output", "-o", required=True, metavar="SEQ")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("pipeline", help="smooth the relit video, then fuse")
    p.add_argument("--input", "-i", required=True, metavar="SEQ")
    p.add_argument("--relit", "-r", required=True, metavar="SEQ")
    p.add_argument("--output", "-o", required=True, metavar="SEQ")
    _add_config_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="score a candidate against a reference")
    p.add_argument("--input", "-i", required=True, metavar="SEQ", help="reference")
    p.add_argument("--relit", "-r", required=True, metavar="SEQ", help="candidate")
    _add_config_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-tau", help="threshold sensitivity over sequences")
    p.add_argument("sequences", nargs="+", metavar="SEQ")
    p.add_argument("--taus", metavar="T1,T2,...", help="comma-separated thresholds")
    _add_config_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_sweep_tau)

    p = sub.add_parser("spectrum", help="mean log-magnitude spectrum as PGM")
    p.add_argument("--input", "-i", required=True, metavar="SEQ")
    p.add_argument("--output", "-o", metavar="PGM")
    p.add_argument("--relit", "-r", metavar="SEQ", help="reference for energy ratio")
    p.add_argument("--cutoff", type=float, default=0.25, metavar="FRAC")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("hist", help="pooled 8-bit brightness histogram")
    p.add_argument("--input", "-i", required=True, metavar="SEQ")
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("synth", help="generate a deterministic test sequence")
    p.add_argument("kind", choices=list(synth.KINDS))
    p.add_argument("--output", "-o", required=True, metavar="SEQ")
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--value", type=float)
    p.add_argument("--base", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--period", type=int)
    p.add_argument("--texture", type=float)
    p.add_argument("--bg", type=float)
    p.add_argument("--fg", type=float)
    p.add_argument("--square-size", type=int, dest="square_size")
    p.add_argument("--speed-x", type=int, dest="speed_x")
    p.add_argument("--speed-y", type=int, dest="speed_y")
    p.add_argument("--start-x", type=int, dest="start_x")
    p.add_argument("--start-y", type=int, dest="start_y")
    p.add_argument("--dx", type=int)
    p.add_argument("--dy", type=int)
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--smooth", type=float)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("a command is required (see --help)")
        return args.func(args)
    except UsageError as exc:
        print(f"error[1]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[2]: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, ZeroDivisionError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(f"error[3]: {message}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
