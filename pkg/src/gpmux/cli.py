"""Command line entry point: run experiments, analyze snapshots and run
logs, print theory tables, replay breeding from a checkpoint.

Exit codes: 0 success, 2 usage error, 3 I/O failure, 4 data format error,
5 resource-budget abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, reporting, theory
from .breeder import make_config, parse_config_file, run_experiment
from .reporting import DataFormatError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_BUDGET = 5


def _parse_range(text: str) -> tuple[int, int]:
    """'lo..hi' inclusive, or a single value."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gpmux",
        description="Long-run tree GP on the Boolean 6-multiplexer")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an evolution experiment")
    run.add_argument("--config", type=Path, help="key=value config file")
    run.add_argument("--pop", type=int, dest="popsize")
    run.add_argument("--gens", type=int, dest="generations")
    run.add_argument("--tournament", type=int, dest="tournament_size")
    run.add_argument("--seed", type=int)
    run.add_argument("--size-limit", dest="size_limit",
                     help="node count, or 'none' to disable")
    run.add_argument("--no-selection", action="store_true")
    run.add_argument("--extended", action="store_true",
                     help="small-population unbounded mode defaults")
    run.add_argument("--workers", type=int)
    run.add_argument("--stats-cadence", type=int, dest="stats_cadence")
    run.add_argument("--budget", type=int, dest="memory_budget_bytes",
                     help="total population byte budget")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--progress", type=int, default=None,
                     help="print a status line every N generations")

    an = sub.add_parser("analyze", help="analyses over a snapshot or run.csv")
    an.add_argument("input", type=Path)
    an.add_argument("--census", action="store_true")
    an.add_argument("--effective", action="store_true")
    an.add_argument("--solutions", action="store_true")
    an.add_argument("--scatter", action="store_true")
    an.add_argument("--subtrees", action="store_true",
                    help="include subtree points in --scatter")
    an.add_argument("--histogram", action="store_true")
    an.add_argument("--mean-fit", action="store_true", dest="mean_fit",
                    help="fit the reference pmf to the observed mean size")
    an.add_argument("--pa", type=float, default=None,
                    help="explicit internal-node probability for --histogram")
    an.add_argument("--overlap", action="store_true")
    an.add_argument("--updown", action="store_true",
                    help="size-change vs runt-count table from a run.csv")
    an.add_argument("--out", type=Path, default=None,
                    help="output directory (default: alongside the input)")

    th = sub.add_parser("theory", help="closed-form reference curves")
    th.add_argument("--curve", required=True,
                    choices=("tournament", "limiting", "flajolet"))
    th.add_argument("--pop", type=int, default=500)
    th.add_argument("--k", type=int, default=7)
    th.add_argument("--x", default="0..20", help="runt counts, lo..hi")
    th.add_argument("--mean", type=float, default=None,
                    help="mean size to fit p_a from (limiting curve)")
    th.add_argument("--pa", type=float, default=None)
    th.add_argument("--n", default="0..100",
                    help="internal node counts, lo..hi")

    rp = sub.add_parser("replay", help="re-run breeding from a snapshot")
    rp.add_argument("snapshot", type=Path)
    rp.add_argument("--gens", type=int, dest="generations", required=True)
    rp.add_argument("--seed", type=int, default=None,
                    help="default: the seed stored in the snapshot")
    rp.add_argument("--workers", type=int)
    rp.add_argument("--no-selection", action="store_true")
    rp.add_argument("--out", type=Path, required=True)
    return ap


def _cmd_run(args) -> int:
    overrides: dict = {}
    if args.config is not None:
        overrides.update(parse_config_file(args.config))
    extended = args.extended or overrides.pop("extended_mode", False)
    for key in ("popsize", "generations", "tournament_size", "seed",
                "workers", "stats_cadence", "memory_budget_bytes"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.size_limit is not None:
        overrides["size_limit"] = (None if args.size_limit.lower() == "none"
                                   else int(args.size_limit))
    if args.no_selection:
        overrides["selection_enabled"] = False
    cfg = make_config(extended=extended, **overrides)
    log = run_experiment(cfg, out_dir=args.out, log_every=args.progress)
    print(f"{len(log.stats)} generations, {log.termination}")
    if log.termination_kind == "budget":
        return EXIT_BUDGET
    return EXIT_OK


def _analyze_csv(args, out: Path) -> int:
    cols = reporting.read_generation_csv(args.input)
    if not args.updown:
        raise ValueError(
            "run.csv input supports --updown; snapshot analyses need a "
            "snapshot file")
    start = analysis.first_convergence(cols["runt_count"],
                                       cols["best_fitness"])
    rows = analysis.size_change_vs_runts(cols["mean_size"],
                                         cols["runt_count"],
                                         start_gen=(start or 0) + 1)
    path = out / "updown.csv"
    with open(path, "w") as fh:
        fh.write("runt_count,rises,falls,ratio\n")
        for r in rows:
            ratio = "" if r.ratio is None else repr(r.ratio)
            fh.write(f"{r.runt_count},{r.rises},{r.falls},{ratio}\n")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    out = args.out if args.out is not None else args.input.parent
    out.mkdir(parents=True, exist_ok=True)
    with open(args.input, "rb") as fh:
        head = fh.read(4)
    if head != reporting.MAGIC:
        return _analyze_csv(args, out)
    if args.updown:
        raise DataFormatError("--updown needs a run.csv, not a snapshot")

    pop, meta = reporting.snapshot_read(args.input)
    trees = pop.individuals
    sizes = pop.sizes()
    did_anything = False

    if args.census:
        census = analysis.population_code_census(trees)
        path = out / "census.csv"
        with open(path, "w") as fh:
            fh.write("popsize,total_nodes,constant_nodes,intron_nodes,"
                     "effective_nodes,mean_effective,constant_fraction\n")
            fh.write(f"{census.popsize},{census.total_nodes},"
                     f"{census.constant_nodes},{census.intron_nodes},"
                     f"{census.effective_nodes},{census.mean_effective!r},"
                     f"{census.constant_fraction!r}\n")
        print(f"wrote {path}")
        did_anything = True

    if args.effective:
        path = out / "effective.csv"
        first_classes = None
        with open(path, "w") as fh:
            fh.write("tree,size,effective_nodes,constant_nodes,intron_nodes\n")
            for i, t in enumerate(trees):
                cls = analysis.classify_nodes(t)
                if first_classes is None:
                    first_classes = cls
                fh.write(f"{i},{len(t)},{cls.n_effective},{cls.n_constant},"
                         f"{cls.n_intron}\n")
        dot_path = out / "effective_tree0.dot"
        reporting.export_effective_dot(trees[0], first_classes, dot_path)
        print(f"wrote {path} and {dot_path}")
        did_anything = True

    if args.solutions:
        path = out / "solutions.csv"
        with open(path, "w") as fh:
            fh.write("tree,size,solution_subtrees\n")
            for i, t in enumerate(trees):
                fh.write(f"{i},{len(t)},{analysis.count_solution_subtrees(t)}\n")
        print(f"wrote {path}")
        did_anything = True

    if args.scatter:
        rng = np.random.default_rng(meta.seed)
        points = analysis.size_depth_scatter(trees,
                                             include_subtrees=args.subtrees,
                                             rng=rng)
        path = out / "scatter.csv"
        with open(path, "w") as fh:
            fh.write("size,depth,whole_tree\n")
            for pt in points:
                fh.write(f"{pt.size},{pt.depth},{int(pt.whole_tree)}\n")
        print(f"wrote {path}")
        did_anything = True

    if args.histogram:
        # reference is the crossover fixed-point law, fitted to the
        # observed mean unless an explicit p_a is given
        p_a = args.pa
        if p_a is None:
            p_a = theory.fit_pa_crossover_limit(float(sizes.mean()))
        bins = analysis.decile_histogram_with_exceedance(
            sizes, lambda s: theory.crossover_limit_size_pmf(s, p_a))
        path = out / "histogram.csv"
        with open(path, "w") as fh:
            fh.write("lo,hi,observed,expected,sigma,exceedance\n")
            for b in bins:
                fh.write(f"{b.lo!r},{b.hi!r},{b.observed},{b.expected!r},"
                         f"{b.sigma!r},{b.exceedance!r}\n")
        print(f"wrote {path} (p_a={p_a!r})")
        did_anything = True

    if args.overlap:
        report = analysis.population_overlap(trees, pop.fitness)
        path = out / "overlap.csv"
        with open(path, "w") as fh:
            fh.write(f"# max_fitness_trees={report.n_trees} "
                     f"shared_core_size={report.shared_core_size} "
                     f"threshold={report.threshold!r}\n")
            fh.write("path_hex,trees_containing\n")
            for key, count in sorted(report.path_counts.items(),
                                     key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{key.hex()},{count}\n")
        print(f"wrote {path} (max-fitness trees: {report.n_trees}, "
              f"shared core: {report.shared_core_size} paths)")
        did_anything = True

    if not did_anything:
        print("nothing to do: pass at least one analysis flag",
              file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _cmd_theory(args) -> int:
    if args.curve == "tournament":
        lo, hi = _parse_range(args.x)
        print("x,expected_tournaments")
        for x in range(lo, hi + 1):
            y = theory.expected_fitness_tournaments(x, args.pop, args.k)
            print(f"{x},{y!r}")
    elif args.curve == "limiting":
        if args.pa is not None:
            p_a = args.pa
        elif args.mean is not None:
            p_a = theory.fit_pa_from_mean(args.mean)
        else:
            raise ValueError("limiting curve needs --mean or --pa")
        lo, hi = _parse_range(args.n)
        print(f"# p_a={p_a!r}")
        print("n_internal,size,probability")
        ns = np.arange(lo, hi + 1)
        probs = theory.limiting_size_pmf(ns, p_a)
        for n, p in zip(ns.tolist(), np.atleast_1d(probs).tolist()):
            print(f"{n},{2 * n + 1},{p!r}")
    else:
        lo, hi = _parse_range(args.n)
        print("n_internal,expected_depth")
        for n in range(lo, hi + 1):
            print(f"{n},{theory.flajolet_expected_depth(n)!r}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    pop, meta = reporting.snapshot_read(args.snapshot)
    overrides: dict = {
        "popsize": meta.popsize,
        "generations": args.generations,
        "seed": args.seed if args.seed is not None else meta.seed,
    }
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.no_selection:
        overrides["selection_enabled"] = False
    cfg = make_config(**overrides)

    # same loop as run_experiment but starting from the snapshot population
    from .breeder import breed_generation
    rng = np.random.default_rng(cfg.seed)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run.csv", "w") as fh:
        writer = reporting.GenerationCsvWriter(fh)
        for g in range(1, cfg.generations + 1):
            pop, stats = breed_generation(pop, cfg, rng, generation=g)
            writer.write(stats)
    reporting.snapshot_write(
        pop, reporting.SnapshotMeta(meta.generation + cfg.generations,
                                    cfg.popsize, cfg.seed), out / "final.bin")
    print(f"replayed {cfg.generations} generations from "
          f"generation {meta.generation}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    handlers = {"run": _cmd_run, "analyze": _cmd_analyze,
                "theory": _cmd_theory, "replay": _cmd_replay}
    try:
        return handlers[args.command](args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
