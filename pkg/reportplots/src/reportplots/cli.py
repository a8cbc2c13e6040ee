"""reportplots command line: render figures from simulator artifacts."""

import argparse
import json
import sys

from .render import render_artifact_dir, render_spec
from .schemas import SchemaError


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="reportplots",
        description="render figures from qarrival CSV artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render a figure spec")
    p_render.add_argument("--spec", required=True,
                          help="JSON FigureSpec file")

    p_all = sub.add_parser("render-dir",
                           help="render every artifact in a directory")
    p_all.add_argument("--artifacts", required=True)
    p_all.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            with open(args.spec) as fh:
                spec = json.load(fh)
            written = render_spec(spec)
        else:
            written = render_artifact_dir(args.artifacts, args.out)
    except (SchemaError, FileNotFoundError, KeyError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
