"""Standalone figure renderer for simulator output manifests."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_NAMES, ReportSpec, render
from .readers import ReportDataError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="areasearch-report",
        description="Render figures from simulation output manifests.")
    parser.add_argument("manifest", help="manifest.json emitted by the "
                        "simulator, or a collection manifest")
    parser.add_argument("--out", default="figures", help="output directory")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    parser.add_argument("--figures", default=",".join(FIGURE_NAMES),
                        help="comma-separated subset of "
                             f"{', '.join(FIGURE_NAMES)}")
    args = parser.parse_args(argv)

    figures = tuple(f.strip() for f in args.figures.split(",") if f.strip())
    try:
        spec = ReportSpec(manifest_path=args.manifest, output_dir=args.out,
                          figures=figures, fmt=args.format)
        produced = render(spec)
    except (ReportDataError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for name, path in produced.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
