"""``plot <spec.json>``: render one figure per spec file."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a rough-scl figure from a JSON spec.",
    )
    parser.add_argument("spec", nargs="+", help="figure spec JSON file(s)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    for spec_path in args.spec:
        try:
            spec = FigureSpec.from_json(spec_path)
            result = render(spec)
        except (SchemaError, OSError, ValueError) as exc:
            print(f"plot: {spec_path}: {exc}", file=sys.stderr)
            return 1
        note = f" ({', '.join(result.annotations)})" if result.annotations else ""
        print(f"plot: wrote {result.path}{note}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
