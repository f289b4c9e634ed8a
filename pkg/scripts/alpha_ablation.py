"""Stability versus temporal blend weight on a global-flicker fixture.

Sweeps fixed (non-adaptive) alpha values over a static flickering scene and
reports the bright-intensity smoothness and composite stability per value.
Higher alpha leans harder on history and should score monotonically better
on a motion-free scene.
"""

import argparse
from pathlib import Path

import numpy as np

from relitkit import synth
from relitkit.core import to_grayscale
from relitkit.flow import estimate_sequence_flows
from relitkit.metrics import light_stability_score
from relitkit.temporal import SmootherConfig, smooth_sequence


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--width", type=int, default=64)
    parser.add_argument("--height", type=int, default=48)
    parser.add_argument("--frames", type=int, default=48)
    parser.add_argument("--amplitude", type=float, default=25.0)
    parser.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    parser.add_argument("--csv", metavar="PATH")
    args = parser.parse_args()

    frames = synth.flicker_sequence(
        args.width, args.height, args.frames, base=160.0, amplitude=args.amplitude
    )
    grays = [to_grayscale(f) for f in frames]
    flows = estimate_sequence_flows(grays)

    rows = []
    print(f"{'alpha':>6}  {'s_I':>12}  {'s_LS':>8}")
    for alpha in (float(a) for a in args.alphas.split(",")):
        cfg = SmootherConfig(alpha_base=alpha, adaptive=False, window_size=1)
        out = smooth_sequence(frames, cfg=cfg, flows=flows)
        report = light_stability_score([to_grayscale(f) for f in out])
        rows.append((alpha, report.s_i, report.s_ls))
        print(f"{alpha:>6.2f}  {report.s_i:>12.6e}  {report.s_ls:>8.4f}")

    if args.csv:
        lines = ["alpha,s_I,s_LS"]
        lines += [f"{a!r},{si!r},{sls!r}" for a, si, sls in rows]
        Path(args.csv).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
