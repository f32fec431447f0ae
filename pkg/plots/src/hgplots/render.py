"""Render convergence and performance plots from pre-aggregated benchmark CSVs.

Input schemas (produced by ``hgpart aggregate``):

    convergence:  algorithm,elapsed_s,geomean_best
    performance:  algorithm,ratio,fraction

The renderer is a pure function of its input files: all aggregation math
happens upstream, this tool only draws. Convergence curves go on a log time
axis; performance curves are monotone non-decreasing steps showing, for each
ratio r, the fraction of instances where the algorithm was at most r times
worse than the best.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


CONVERGENCE_COLUMNS = ("algorithm", "elapsed_s", "geomean_best")
PERFORMANCE_COLUMNS = ("algorithm", "ratio", "fraction")


@dataclass
class PlotSpec:
    inputs: list
    kind: str  # convergence | performance
    output: str
    labels: dict = field(default_factory=dict)  # raw algorithm name -> label
    log_x: bool | None = None  # default: log for convergence, linear otherwise
    title: str = ""


def load_series(paths, kind) -> dict:
    """Per-algorithm [(x, y), ...] series from aggregated CSVs, in file order."""
    columns = CONVERGENCE_COLUMNS if kind == "convergence" else PERFORMANCE_COLUMNS
    series: dict = {}
    for path in paths:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or tuple(reader.fieldnames) != columns:
                raise ValueError(
                    f"{path}: expected columns {','.join(columns)}, "
                    f"got {reader.fieldnames}"
                )
            for row in reader:
                series.setdefault(row[columns[0]], []).append(
                    (float(row[columns[1]]), float(row[columns[2]]))
                )
    if not series:
        raise ValueError("no data rows in input CSVs")
    return series


def check_performance_series(series):
    for label, points in series.items():
        ratios = [r for r, _ in points]
        fractions = [f for _, f in points]
        if ratios != sorted(ratios):
            raise ValueError(f"{label}: ratios not sorted")
        if fractions != sorted(fractions):
            raise ValueError(f"{label}: fractions must be non-decreasing")
        if any(r < 1.0 for r in ratios):
            raise ValueError(f"{label}: ratio below 1.0")


def render(spec: PlotSpec) -> str:
    """Draw the spec and return the output path."""
    series = load_series(spec.inputs, spec.kind)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if spec.kind == "performance":
        check_performance_series(series)
        for name in sorted(series):
            pts = series[name]
            label = spec.labels.get(name, name)
            xs = [r for r, _ in pts]
            ys = [f for _, f in pts]
            # extend the last step to the right edge for readability
            xs = xs + [max(xs) * 1.05 if max(xs) > 1 else 1.1]
            ys = ys + [ys[-1]]
            ax.step(xs, ys, where="post", label=label)
        ax.set_xlabel("quality relative to best (r)")
        ax.set_ylabel("fraction of instances")
        ax.set_ylim(0.0, 1.05)
        if spec.log_x:
            ax.set_xscale("log")
    else:
        for name in sorted(series):
            pts = series[name]
            label = spec.labels.get(name, name)
            ax.plot([t for t, _ in pts], [v for _, v in pts], label=label)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("geometric mean best connectivity")
        if spec.log_x is None or spec.log_x:
            ax.set_xscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


def _parse_labels(items):
    labels = {}
    for item in items or ():
        if "=" not in item:
            raise ValueError(f"label mapping must be raw=shown: {item!r}")
        raw, shown = item.split("=", 1)
        labels[raw] = shown
    return labels


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hgplot", description=__doc__)
    ap.add_argument("--kind", choices=("convergence", "performance"), required=True)
    ap.add_argument("--inp", nargs="+", required=True, help="aggregated CSV files")
    ap.add_argument("--out", required=True, help="output image (svg/png by extension)")
    ap.add_argument("--label", action="append", help="rename a series: raw=shown")
    ap.add_argument("--log-x", action="store_true", default=None)
    ap.add_argument("--title", default="")
    args = ap.parse_args(argv)
    try:
        spec = PlotSpec(
            inputs=args.inp,
            kind=args.kind,
            output=args.out,
            labels=_parse_labels(args.label),
            log_x=args.log_x,
            title=args.title,
        )
        render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
