"""Command line front end: plot --input samples.csv --output fig.png [...]."""

import argparse
import sys

from .render import AUTO_RANGE, PlotInputError, PlotSpec, render

EXIT_OK = 0
EXIT_INPUT = 2


def _parse_range(text):
    if text == AUTO_RANGE:
        return AUTO_RANGE
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f'range must be "{AUTO_RANGE}" or a positive real, got {text!r}'
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a 2-D histogram heatmap of scaled-deviation samples, "
        "optionally overlaying 1 and 2 sigma ellipses of the theoretical covariance.",
    )
    parser.add_argument("--input", required=True, help="samples.csv path")
    parser.add_argument("--report", default=None, help="report.json path for the ellipse overlay")
    parser.add_argument("--output", required=True, help="image path (raster format)")
    parser.add_argument("--bins", type=int, default=60, help="bins per axis (default 60)")
    parser.add_argument(
        "--range",
        type=_parse_range,
        default=AUTO_RANGE,
        help='plot half-width, or "auto" for the 99.5th percentile radius (default)',
    )
    parser.add_argument("--title", default="", help="figure title")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_INPUT if err.code else EXIT_OK
    try:
        spec = PlotSpec(
            input_csv=args.input,
            output=args.output,
            report_json=args.report,
            bins=args.bins,
            range=args.range,
            title=args.title,
        )
        result = render(spec)
    except PlotInputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {result.image}, {result.grid}, {result.meta}")
    return EXIT_OK


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
