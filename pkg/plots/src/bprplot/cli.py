"""plot: render figure panels from a sweep CSV."""

from __future__ import annotations

import argparse

from .render import preset_spec, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot",
        description="Render latency/overflow/throughput panels from an averaged sweep CSV.",
    )
    ap.add_argument("--input", required=True, help="sweep CSV with seed=mean rows")
    ap.add_argument("--preset", required=True, choices=("fig3", "fig4"))
    ap.add_argument("--outdir", default=".")
    ap.add_argument("--format", choices=("png", "svg"), default="png")
    args = ap.parse_args(argv)

    spec = preset_spec(args.preset, args.input, args.outdir, args.format)
    for path in render(spec):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
