"""qrc-figures: render figures from a completed qrc-sensor run directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FigureKind, SchemaError, discover_jobs, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrc-figures",
        description="Render figures from a qrc-sensor run directory")
    parser.add_argument("--run", required=True, help="run directory")
    parser.add_argument("--only", choices=[k.value for k in FigureKind],
                        default=None, help="render only this figure kind")
    parser.add_argument("--format", choices=["png", "svg"], default="png")
    parser.add_argument("--out", default=None,
                        help="output directory (default <run>/figures)")
    args = parser.parse_args(argv)

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"error: not a directory: {run_dir}", file=sys.stderr)
        return 2
    jobs = discover_jobs(run_dir, args.out, args.format)
    if args.only:
        jobs = [j for j in jobs if j.kind.value == args.only]
    if not jobs:
        print("error: no renderable artifacts found", file=sys.stderr)
        return 1
    failures = 0
    for job in jobs:
        try:
            render(job)
            print(f"wrote {job.output}")
        except (SchemaError, OSError) as exc:
            failures += 1
            print(f"error rendering {job.kind.value}: {exc}", file=sys.stderr)
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
