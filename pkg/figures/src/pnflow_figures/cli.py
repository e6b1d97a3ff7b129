"""figures render --spec <json> : render one figure from pnflow outputs."""

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="figures")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render a figure from a JSON spec")
    p.add_argument("--spec", required=True)
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        spec = FigureSpec.from_json(args.spec)
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
