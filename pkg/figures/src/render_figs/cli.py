"""render_figs <kind> <in.csv>... <out.png>

Kinds: dynamics, heatmap, losscurves. Exit codes: 0 success, 1 usage
error, 2 schema or empty-input error, 3 I/O error.
"""

import sys

from .render import KINDS, FigureJob, render
from .schemas import EmptyInputError, FigureError, SchemaError


def main(argv=None):
    args = sys.argv[1:] if argv is None else list(argv)
    if len(args) < 3:
        print(
            "usage: render_figs <kind> <in.csv>... <out.png>  "
            f"(kinds: {', '.join(KINDS)})",
            file=sys.stderr,
        )
        return 1
    kind, inputs, output = args[0], args[1:-1], args[-1]
    try:
        render(FigureJob(kind=kind, inputs=inputs, output=output))
    except (SchemaError, EmptyInputError) as exc:
        print(f"error: schema: {exc}", file=sys.stderr)
        return 2
    except FigureError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
