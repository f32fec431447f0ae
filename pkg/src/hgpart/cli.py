"""Command-line driver and benchmark harness.

Verbs: ``partition`` (one instance, one mode), ``bench`` (instance x k x seed
x mode grid on a process pool, resumable), ``aggregate`` (convergence /
performance aggregation of the per-run CSVs).

Per-run outputs: ``<prefix>.part`` (one block id per line), ``<prefix>.stats``
(flat ``key = value`` lines) and ``<prefix>.csv`` with the schema
``instance,seed,elapsed_s,generation,operator,best_km1`` (one row per
improvement of the best objective, monotone non-increasing).

Deterministic runs use ``--generations`` instead of ``--time-limit``: the
elapsed column then carries the generation index and wall-clock fields are
omitted, so reruns are byte-identical. Worker count for ``bench`` comes from
the ``HGPART_WORKERS`` environment variable (default: all cores).
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import math
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .hgraph import HmetisFormatError, parse_hmetis, write_partition_file
from .memetic import OperatorConfig, evolve
from .multilevel import partition_single, vcycle
from .partition import connectivity_metric, cut_metric, imbalance, is_balanced

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4

CSV_HEADER = ("instance", "seed", "elapsed_s", "generation", "operator", "best_km1")

# convergence aggregation samples this many points per decade of time
GRID_PER_DECADE = 10


@dataclass
class RunConfig:
    hypergraph_path: str
    k: int
    epsilon: float = 0.03
    mode: str = "single"  # single | repeated | evolve
    time_limit: float | None = None
    generations: int | None = None
    seed: int = 1
    pop_size: int | None = None
    schedule: str = "default"  # default | classic
    p_combine: float | None = None
    combine_weights: tuple | None = None
    mutate_weights: tuple | None = None
    gamma: float | None = None
    max_vcycles: int = 100
    vcycle_patience: int = 3
    out_prefix: str | None = None
    # the engine always optimizes the connectivity metric; this only selects
    # which metric the stats file reports under the `objective` key
    objective: str = "km1"

    def operator_config(self) -> OperatorConfig:
        base = OperatorConfig.classic() if self.schedule == "classic" else OperatorConfig()
        return OperatorConfig(
            p_combine=self.p_combine if self.p_combine is not None else base.p_combine,
            combine_weights=tuple(self.combine_weights)
            if self.combine_weights is not None
            else base.combine_weights,
            mutate_weights=tuple(self.mutate_weights)
            if self.mutate_weights is not None
            else base.mutate_weights,
            gamma=self.gamma if self.gamma is not None else base.gamma,
        )


def _fmt_num(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return str(x)


def cmd_partition(cfg: RunConfig) -> int:
    """Run one instance in one mode; writes partition, stats, convergence CSV.

    Exit codes: 0 ok, 3 balance infeasible (outputs still written), 4 input or
    precondition problem (no outputs), 1 unexpected crash."""
    try:
        with open(cfg.hypergraph_path) as f:
            h = parse_hmetis(f)
    except OSError as exc:
        print(f"error: cannot read {cfg.hypergraph_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HmetisFormatError as exc:
        print(f"error: {cfg.hypergraph_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.k < 2:
        print("error: k must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    if cfg.epsilon < 0:
        print("error: eps must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    if cfg.k > h.num_active:
        print(
            f"error: k={cfg.k} exceeds the {h.num_active} nodes of the instance",
            file=sys.stderr,
        )
        return EXIT_INPUT
    if cfg.objective not in ("km1", "cut"):
        print("error: objective must be km1 or cut", file=sys.stderr)
        return EXIT_INPUT
    if cfg.generations is not None and cfg.generations < 1:
        print("error: --generations must be positive", file=sys.stderr)
        return EXIT_INPUT
    if cfg.mode == "evolve" and (cfg.time_limit is None) == (cfg.generations is None):
        print("error: evolve needs exactly one of --time-limit/--generations", file=sys.stderr)
        return EXIT_INPUT
    if cfg.mode == "repeated" and cfg.time_limit is None and cfg.generations is None:
        print("error: repeated needs --time-limit or --generations", file=sys.stderr)
        return EXIT_INPUT

    deterministic = cfg.generations is not None
    # single-shot runs have no trajectory; their one row gets a fixed stamp so
    # identical commands give identical files
    stamp_fixed = deterministic or cfg.mode == "single"
    instance = Path(cfg.hypergraph_path).stem
    rng = Random(cfg.seed)
    rows = []
    start = time.perf_counter()

    def record(unit, gen, op, obj):
        elapsed = float(unit) if stamp_fixed else time.perf_counter() - start
        rows.append(
            (instance, cfg.seed, f"{elapsed:.3f}", gen, op, _fmt_num(obj))
        )

    gens_done = 0
    if cfg.mode == "single":
        part = partition_single(h, cfg.k, cfg.epsilon, rng)
        record(0, 0, "single", connectivity_metric(h, part))
    elif cfg.mode == "repeated":
        part, gens_done = _run_repeated(h, cfg, rng, record)
    elif cfg.mode == "evolve":
        def on_progress(ev):
            nonlocal gens_done
            gens_done = max(gens_done, ev.generation)
            rows.append(
                (
                    instance,
                    cfg.seed,
                    f"{ev.elapsed_s:.3f}",
                    ev.generation,
                    ev.operator,
                    _fmt_num(ev.best_objective),
                )
            )

        best = evolve(
            h,
            cfg.k,
            cfg.epsilon,
            time_limit=cfg.time_limit,
            generations=cfg.generations,
            cfg=cfg.operator_config(),
            rng=rng,
            pop_size=cfg.pop_size,
            progress=on_progress,
        )
        part = best.partition
        gens_done = cfg.generations if cfg.generations is not None else gens_done
    else:
        print(f"error: unknown mode {cfg.mode!r}", file=sys.stderr)
        return EXIT_INPUT

    runtime = time.perf_counter() - start
    balanced = is_balanced(h, part, cfg.epsilon)
    prefix = cfg.out_prefix or f"{instance}_k{cfg.k}_s{cfg.seed}_{cfg.mode}"
    write_partition_file(part.block_of, prefix + ".part")
    km1_val = connectivity_metric(h, part)
    cut_val = cut_metric(h, part)
    stats = {
        "instance": instance,
        "mode": cfg.mode,
        "k": cfg.k,
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
        "objective": _fmt_num(cut_val if cfg.objective == "cut" else km1_val),
        "objective_km1": _fmt_num(km1_val),
        "objective_cut": _fmt_num(cut_val),
        "imbalance": f"{imbalance(h, part):.6f}",
        "balanced": str(balanced).lower(),
        "generations": gens_done,
    }
    if not deterministic:
        stats["runtime_s"] = f"{runtime:.3f}"
    with open(prefix + ".stats", "w") as f:
        for key, value in stats.items():
            f.write(f"{key} = {value}\n")
    with open(prefix + ".csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        w.writerows(rows)
    return EXIT_OK if balanced else EXIT_INFEASIBLE


def _run_repeated(h, cfg, rng, record):
    """Restart partition_single until the budget runs out, polishing each
    result with V-cycles (capped, and abandoned after a patience-run of
    non-improving cycles). Keeps the best partition overall."""
    deterministic = cfg.generations is not None
    deadline = None if deterministic else time.perf_counter() + cfg.time_limit
    max_rounds = cfg.generations if deterministic else None

    def budget_left():
        return deadline is None or time.perf_counter() < deadline

    best = None
    best_obj = None
    unit = 0
    rounds = 0
    while (max_rounds is None or rounds < max_rounds) and (deterministic or budget_left()):
        part = partition_single(h, cfg.k, cfg.epsilon, rng)
        rounds += 1
        unit += 1
        obj = connectivity_metric(h, part)
        if best_obj is None or obj < best_obj:
            best, best_obj = part, obj
            record(unit, unit, "restart", best_obj)
        stale = 0
        cycles = 0
        cur, cur_obj = part, obj
        while cycles < cfg.max_vcycles and stale < cfg.vcycle_patience and (
            deterministic or budget_left()
        ):
            nxt = vcycle(h, cur, cfg.epsilon, rng)
            cycles += 1
            unit += 1
            nxt_obj = connectivity_metric(h, nxt)
            if nxt_obj < cur_obj:
                stale = 0
            else:
                stale += 1
            cur, cur_obj = nxt, nxt_obj
            if cur_obj < best_obj:
                best, best_obj = cur, cur_obj
                record(unit, unit, "vcycle", best_obj)
        if deterministic and rounds >= (max_rounds or 0):
            break
        if not deterministic and not budget_left():
            break
    return best, unit


# -- bench grid ---------------------------------------------------------------


def _cell_name(instance_path, k, seed, mode) -> str:
    return f"{Path(instance_path).stem}__k{k}__s{seed}__{mode}"


def _run_cell(payload) -> dict:
    (path, k, eps, seed, mode, time_limit, generations, outdir, schedule) = payload
    name = _cell_name(path, k, seed, mode)
    prefix = os.path.join(outdir, name)
    cfg = RunConfig(
        hypergraph_path=path,
        k=k,
        epsilon=eps,
        mode=mode,
        time_limit=time_limit,
        generations=generations,
        seed=seed,
        schedule=schedule,
        out_prefix=prefix,
    )
    code = cmd_partition(cfg)
    out = {"cell": name, "exit": code}
    out.update(read_stats(prefix + ".stats"))
    return out


def read_stats(path) -> dict:
    stats = {}
    with open(path) as f:
        for line in f:
            if " = " in line:
                key, value = line.rstrip("\n").split(" = ", 1)
                stats[key] = value
    return stats


RESULT_COLUMNS = (
    "instance",
    "k",
    "seed",
    "mode",
    "objective_km1",
    "objective_cut",
    "balanced",
    "generations",
    "runtime_s",
)


def cmd_bench(args) -> int:
    """Run the full grid, one process per cell; completed cells (stats file
    present) are skipped, so interrupted grids resume."""
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    cells = []
    for path in args.hgr:
        for k in args.k:
            for seed in args.seeds:
                for mode in args.modes:
                    cells.append((path, k, seed, mode))
    pending = []
    for path, k, seed, mode in cells:
        if os.path.exists(os.path.join(outdir, _cell_name(path, k, seed, mode) + ".stats")):
            continue
        pending.append(
            (
                path,
                k,
                args.eps,
                seed,
                mode,
                args.time_limit,
                args.generations,
                outdir,
                args.schedule,
            )
        )
    workers = int(os.environ.get("HGPART_WORKERS") or os.cpu_count() or 1)
    failures = []
    if pending:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_cell, p): p for p in pending}
            for fut in as_completed(futures):
                payload = futures[fut]
                name = _cell_name(payload[0], payload[1], payload[3], payload[4])
                try:
                    result = fut.result()
                except Exception:
                    failures.append(name)
                    print(f"cell {name} FAILED:\n{traceback.format_exc()}", file=sys.stderr)
                    continue
                if result["exit"] not in (EXIT_OK, EXIT_INFEASIBLE):
                    failures.append(name)
                    print(f"cell {name} exited with {result['exit']}", file=sys.stderr)

    rows = []
    for path, k, seed, mode in cells:
        stats_path = os.path.join(outdir, _cell_name(path, k, seed, mode) + ".stats")
        if not os.path.exists(stats_path):
            continue
        stats = read_stats(stats_path)
        rows.append(
            [
                stats.get("instance", Path(path).stem),
                k,
                seed,
                mode,
                stats.get("objective_km1", ""),
                stats.get("objective_cut", ""),
                stats.get("balanced", ""),
                stats.get("generations", ""),
                stats.get("runtime_s", ""),
            ]
        )
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    with open(os.path.join(outdir, "results.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RESULT_COLUMNS)
        w.writerows(rows)
    if failures:
        print(f"{len(failures)} cell(s) failed", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


# -- aggregation ---------------------------------------------------------------


def read_convergence_rows(paths):
    """Rows (instance, seed, elapsed, best) from run CSVs in the cli schema."""
    rows = []
    for path in paths:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or "best_km1" not in reader.fieldnames:
                raise ValueError(f"{path}: not a convergence CSV")
            for rec in reader:
                rows.append(
                    (
                        rec["instance"],
                        rec["seed"],
                        float(rec["elapsed_s"]),
                        float(rec["best_km1"]),
                    )
                )
    return rows


def _geomean(values):
    # objectives can hit 0 on trivial instances; shift into [1, inf) so the
    # geometric mean stays defined
    return math.exp(sum(math.log(max(v, 1.0)) for v in values) / len(values))


def _time_grid(lo, hi, per_decade=GRID_PER_DECADE):
    lo = max(lo, 1e-3)
    hi = max(hi, lo)
    points = []
    exp = math.floor(math.log10(lo) * per_decade)
    last = math.ceil(math.log10(hi) * per_decade)
    while exp <= last:
        points.append(10 ** (exp / per_decade))
        exp += 1
    return points


def aggregate_convergence(series: dict, grid=None) -> list:
    """series: label -> rows from read_convergence_rows. Result rows are
    (label, grid time, geometric mean over instances of the arithmetic mean
    over seeds of the best objective at that time). The common time grid is
    log-spaced over the data range unless supplied."""
    all_t = [t for rows in series.values() for (_, _, t, _) in rows]
    if not all_t:
        raise ValueError("no convergence records")
    if grid is None:
        grid = _time_grid(min(all_t), max(all_t))
    out = []
    for label in sorted(series):
        rows = series[label]
        traj = {}
        for inst, seed, t, obj in rows:
            traj.setdefault(inst, {}).setdefault(seed, []).append((t, obj))
        for per_seed in traj.values():
            for points in per_seed.values():
                points.sort()
        for t in grid:
            means = []
            for per_seed in traj.values():
                bests = []
                for points in per_seed.values():
                    best = points[0][1]
                    for tt, obj in points:
                        if tt <= t:
                            best = obj
                        else:
                            break
                    bests.append(best)
                means.append(sum(bests) / len(bests))
            out.append((label, t, _geomean(means)))
    return out


def aggregate_performance(series: dict) -> list:
    """Performance-profile points: per instance each label's final best (mean
    over seeds) is divided by the best across labels; rows are the sorted
    (label, ratio, fraction of all instances at or below that ratio)."""
    finals = {}
    instances = set()
    for label, rows in series.items():
        latest = {}
        for inst, seed, t, obj in rows:
            key = (inst, seed)
            prev = latest.get(key)
            if prev is None or t >= prev[0]:
                latest[key] = (t, obj)
        by_inst = {}
        for (inst, _seed), (_t, obj) in latest.items():
            by_inst.setdefault(inst, []).append(obj)
        for inst, vals in by_inst.items():
            finals[(label, inst)] = sum(vals) / len(vals)
            instances.add(inst)
    best_known = {}
    for (_label, inst), v in finals.items():
        if inst not in best_known or v < best_known[inst]:
            best_known[inst] = v
    out = []
    total = len(instances)
    for label in sorted(series):
        ratios = []
        for inst in instances:
            if (label, inst) not in finals:
                continue
            val = finals[(label, inst)]
            best = best_known[inst]
            ratios.append(1.0 if val == best else val / max(best, 1e-300))
        ratios.sort()
        for i, r in enumerate(ratios):
            out.append((label, r, (i + 1) / total))
    return out


def _parse_series(specs) -> dict:
    series = {}
    for spec in specs:
        if "=" not in spec:
            raise ValueError(f"series must look like LABEL=path[,path...]: {spec!r}")
        label, rhs = spec.split("=", 1)
        paths = []
        for pat in rhs.split(","):
            hits = sorted(globmod.glob(pat))
            if not hits:
                raise ValueError(f"series {label}: no files match {pat!r}")
            paths.extend(hits)
        series[label] = read_convergence_rows(paths)
    return series


def cmd_aggregate(args) -> int:
    try:
        series = _parse_series(args.series)
        if args.mode == "convergence":
            rows = aggregate_convergence(series)
            header = ("algorithm", "elapsed_s", "geomean_best")
            rows = [(l, f"{t:.6g}", f"{v:.6f}") for (l, t, v) in rows]
        else:
            rows = aggregate_performance(series)
            header = ("algorithm", "ratio", "fraction")
            rows = [(l, f"{r:.6f}", f"{f:.6f}") for (l, r, f) in rows]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _build_parser():
    ap = argparse.ArgumentParser(prog="hgpart", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="partition one instance")
    p.add_argument("--hgr", required=True, help="hMetis hypergraph file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.03)
    p.add_argument("--mode", choices=("single", "repeated", "evolve"), default="single")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--pop-size", type=int, default=None)
    p.add_argument("--schedule", choices=("default", "classic"), default="default")
    p.add_argument("--p-combine", type=float, default=None)
    p.add_argument("--combine-weights", default=None, help="w1,w2,w3")
    p.add_argument("--mutate-weights", default=None, help="w1,w2,w3,w4")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--max-vcycles", type=int, default=100)
    p.add_argument("--vcycle-patience", type=int, default=3)
    p.add_argument("--out-prefix", default=None)
    p.add_argument("--objective", choices=("km1", "cut"), default="km1",
                   help="metric reported as `objective` (optimization always targets km1)")

    b = sub.add_parser("bench", help="run an instance x k x seed x mode grid")
    b.add_argument("--hgr", nargs="+", required=True)
    b.add_argument("--k", type=int, nargs="+", required=True)
    b.add_argument("--seeds", type=int, nargs="+", required=True)
    b.add_argument("--modes", nargs="+", choices=("single", "repeated", "evolve"), required=True)
    b.add_argument("--eps", type=float, default=0.03)
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--generations", type=int, default=None)
    b.add_argument("--schedule", choices=("default", "classic"), default="default")
    b.add_argument("--outdir", required=True)

    a = sub.add_parser("aggregate", help="aggregate run CSVs")
    a.add_argument("--mode", choices=("convergence", "performance"), required=True)
    a.add_argument("--out", required=True)
    a.add_argument("series", nargs="+", help="LABEL=path_or_glob[,more]")
    return ap


def _tuple_arg(text, n, name):
    parts = tuple(float(x) for x in text.split(","))
    if len(parts) != n:
        raise ValueError(f"{name} needs {n} comma-separated values")
    return parts


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "partition":
            cfg = RunConfig(
                hypergraph_path=args.hgr,
                k=args.k,
                epsilon=args.eps,
                mode=args.mode,
                time_limit=args.time_limit,
                generations=args.generations,
                seed=args.seed,
                pop_size=args.pop_size,
                schedule=args.schedule,
                p_combine=args.p_combine,
                combine_weights=_tuple_arg(args.combine_weights, 3, "--combine-weights")
                if args.combine_weights
                else None,
                mutate_weights=_tuple_arg(args.mutate_weights, 4, "--mutate-weights")
                if args.mutate_weights
                else None,
                gamma=args.gamma,
                max_vcycles=args.max_vcycles,
                vcycle_patience=args.vcycle_patience,
                out_prefix=args.out_prefix,
                objective=args.objective,
            )
            return cmd_partition(cfg)
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_aggregate(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
