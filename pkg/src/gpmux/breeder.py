"""Generational loop: tournament selection, crossover-only breeding, per
generation statistics, the million-node abort rule, selection-off mode and
the small-population extended mode.

All breeding randomness comes from one sequential stream consumed in a
fixed per-generation order (entrant draws, tie-breaks, crossover points),
and child evaluation is pure, so runs are bit-identical for any evaluation
worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .evaluator import fitness as fitness_of
from .genome import Population, crossover_at, ramped_half_and_half
from .reporting import (GenerationCsvWriter, SnapshotMeta, snapshot_write)

MAX_FITNESS = 64


@dataclass
class RunConfig:
    popsize: int = 500
    tournament_size: int = 7
    generations: int = 10_000
    size_limit: int | None = 1_000_000
    init_depth_lo: int = 2
    init_depth_hi: int = 6
    seed: int = 0
    selection_enabled: bool = True
    stats_cadence: int = 100
    extended_mode: bool = False
    workers: int = 1
    memory_budget_bytes: int | None = None

    def __post_init__(self):
        if self.popsize < 2:
            raise ValueError("popsize must be >= 2")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.stats_cadence < 1:
            raise ValueError("stats_cadence must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.init_depth_lo > self.init_depth_hi:
            raise ValueError("init_depth_lo must be <= init_depth_hi")


# defaults that change when the extended (small population, no limit) mode
# is requested; explicit overrides still win
_EXTENDED_DEFAULTS = dict(popsize=50, size_limit=None, generations=100_000,
                          memory_budget_bytes=4 * 1024**3)


def make_config(extended: bool = False, **overrides) -> RunConfig:
    """RunConfig with the extended-mode defaults applied first; pass only
    the keys that were explicitly set (None is a real value for the
    optional limits)."""
    base: dict = dict(extended_mode=extended)
    if extended:
        base.update(_EXTENDED_DEFAULTS)
    base.update(overrides)
    return RunConfig(**base)


_BOOL_WORDS = {"1": True, "true": True, "on": True, "yes": True,
               "0": False, "false": False, "off": False, "no": False}
_INT_KEYS = {"popsize", "tournament_size", "generations", "init_depth_lo",
             "init_depth_hi", "seed", "stats_cadence", "workers"}
_OPT_INT_KEYS = {"size_limit", "memory_budget_bytes"}
_BOOL_KEYS = {"selection_enabled", "extended_mode"}


def parse_config_file(path) -> dict:
    """Line-oriented key=value file; '#' starts a comment; 'none' clears
    the optional limits."""
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _OPT_INT_KEYS:
                values[key] = None if val.lower() == "none" else int(val)
            elif key in _BOOL_KEYS:
                try:
                    values[key] = _BOOL_WORDS[val.lower()]
                except KeyError:
                    raise ValueError(
                        f"{path}:{lineno}: bad boolean {val!r}") from None
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return values


@dataclass
class GenerationStats:
    generation: int
    mean_size: float
    min_size: int
    max_size: int
    mean_depth: float
    best_fitness: int
    runt_count: int
    wti_observed: int
    wti_expected: float
    hit_size_limit: bool = False
    mean_effective: float | None = None
    constant_fraction: float | None = None
    solution_subtrees_mean: float | None = None
    xo_ineffective_fraction: float | None = None


@dataclass
class BreedingRecord:
    """Per-child lineage for one bred generation (parallel arrays)."""

    mum_idx: np.ndarray
    dad_idx: np.ndarray
    mum_point: np.ndarray
    dad_point: np.ndarray
    mum_size: np.ndarray
    dad_size: np.ndarray
    mum_fitness: np.ndarray
    dad_fitness: np.ndarray
    parent_mean_size: float


@dataclass
class RunLog:
    config: RunConfig
    stats: list[GenerationStats] = field(default_factory=list)
    termination_kind: str = "completed"   # completed | size_limit |
    #                                       converged_stuck | budget
    abort_generation: int | None = None
    first_solution_gen: int | None = None
    first_convergence_gen: int | None = None
    runt_rows: list[tuple] = field(default_factory=list)

    @property
    def termination(self) -> str:
        if self.termination_kind == "completed":
            return "completed"
        names = {"size_limit": "size-limit abort",
                 "converged_stuck": "converged-stuck",
                 "budget": "resource-budget abort"}
        return f"{names[self.termination_kind]} at generation {self.abort_generation}"

    def runt_arrays(self) -> dict[str, np.ndarray]:
        cols = ("gen", "child_size", "child_fitness", "mum_size", "dad_size",
                "parent_mean_size")
        arr = np.array(self.runt_rows, dtype=np.float64).reshape(-1, len(cols))
        return {name: arr[:, i] for i, name in enumerate(cols)}


def tournament_select(pop: Population, k: int, rng: np.random.Generator,
                      selection_enabled: bool = True) -> int:
    """Winner index of one tournament: k entrants drawn uniformly with
    replacement, maximal fitness wins, ties broken uniformly among the
    maximal entrant slots.  With selection off, a uniform random index."""
    n = len(pop.individuals)
    if not selection_enabled:
        return int(rng.integers(n))
    entrants = rng.integers(0, n, size=k)
    fits = pop.fitness[entrants]
    ties = entrants[fits == fits.max()]
    if len(ties) == 1:
        return int(ties[0])
    return int(ties[rng.integers(len(ties))])


def _batched_winners(pop: Population, cfg: RunConfig,
                     rng: np.random.Generator) -> np.ndarray:
    """(popsize, 2) parent indices: two independent tournaments per child,
    drawn vectorized but equivalent in distribution to tournament_select."""
    n = len(pop.individuals)
    p = cfg.popsize
    if not cfg.selection_enabled:
        return rng.integers(0, n, size=(p, 2))
    k = cfg.tournament_size
    entrants = rng.integers(0, n, size=(p, 2, k))
    tie_u = rng.random(size=(p, 2))
    fits = pop.fitness[entrants]
    mask = fits == fits.max(axis=2, keepdims=True)
    m = mask.sum(axis=2)
    pick = np.minimum((tie_u * m).astype(np.int64), m - 1)
    slot = np.argmax(mask.cumsum(axis=2) == (pick + 1)[..., None], axis=2)
    return np.take_along_axis(entrants, slot[..., None], axis=2)[..., 0]


def breed_generation(pop: Population, cfg: RunConfig,
                     rng: np.random.Generator, generation: int = 0,
                     parent_effective: list[np.ndarray] | None = None,
                     ) -> tuple[Population, GenerationStats]:
    """One panmictic, non-elitist generation: popsize children, each from a
    subtree crossover of two tournament winners (first winner donates the
    root).  Fitness of every child is evaluated and cached; if any child
    reaches the size limit the stats carry the abort flag."""
    winners = _batched_winners(pop, cfg, rng)
    mum_idx = winners[:, 0]
    dad_idx = winners[:, 1]
    parent_sizes = pop.sizes()
    mum_sizes = parent_sizes[mum_idx]
    dad_sizes = parent_sizes[dad_idx]
    mum_points = rng.integers(0, mum_sizes)
    dad_points = rng.integers(0, dad_sizes)

    individuals = pop.individuals
    children = [
        crossover_at(individuals[mi], individuals[di], mp, dp)
        for mi, di, mp, dp in zip(mum_idx.tolist(), dad_idx.tolist(),
                                  mum_points.tolist(), dad_points.tolist())
    ]

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            values = list(pool.map(lambda t: kernels.eval_root(t.codes),
                                   children))
    else:
        values = [kernels.eval_root(t.codes) for t in children]
    fits = np.fromiter((fitness_of(v) for v in values), dtype=np.uint8,
                       count=len(values))

    record = BreedingRecord(
        mum_idx=mum_idx, dad_idx=dad_idx,
        mum_point=mum_points, dad_point=dad_points,
        mum_size=mum_sizes, dad_size=dad_sizes,
        mum_fitness=pop.fitness[mum_idx], dad_fitness=pop.fitness[dad_idx],
        parent_mean_size=float(parent_sizes.mean()),
    )
    child_pop = Population(children, fits, lineage=record)

    child_sizes = child_pop.sizes()
    depths = np.fromiter((kernels.tree_depth(t.codes) for t in children),
                         dtype=np.int64, count=len(children))
    xo_frac = None
    if parent_effective is not None:
        hits = sum(
            1 for mi, mp in zip(mum_idx.tolist(), mum_points.tolist())
            if not parent_effective[mi][mp])
        xo_frac = hits / cfg.popsize
    stats = GenerationStats(
        generation=generation,
        mean_size=float(child_sizes.mean()),
        min_size=int(child_sizes.min()),
        max_size=int(child_sizes.max()),
        mean_depth=float(depths.mean()),
        best_fitness=int(fits.max()),
        runt_count=int((fits < MAX_FITNESS).sum()),
        wti_observed=int((dad_points == dad_sizes - 1).sum()),
        wti_expected=float((1.0 / dad_sizes).sum()),
        hit_size_limit=(cfg.size_limit is not None
                        and int(child_sizes.max()) >= cfg.size_limit),
        xo_ineffective_fraction=xo_frac,
    )
    return child_pop, stats


def _census_pass(pop: Population) -> tuple[dict, list[np.ndarray]]:
    """Classification sweep over the population: census scalars plus the
    per-tree effective flag arrays (reused for the next generation's
    crossover-placement fraction)."""
    from .analysis import classify_nodes, count_solution_subtrees

    total = consts = introns = eff = solutions = 0
    eff_arrays = []
    for t in pop.individuals:
        cls = classify_nodes(t)
        total += len(cls)
        consts += cls.n_constant
        introns += cls.n_intron
        eff += cls.n_effective
        solutions += count_solution_subtrees(t)
        eff_arrays.append(cls.effective)
    n = len(pop.individuals)
    scalars = dict(mean_effective=eff / n,
                   constant_fraction=consts / total,
                   solution_subtrees_mean=solutions / n)
    return scalars, eff_arrays


def run_experiment(cfg: RunConfig, out_dir=None, log_every: int | None = None,
                   stop_when=None) -> RunLog:
    """Full run: ramped initialization, then breed for cfg.generations or
    until a size-limit / budget / absorbing-state abort.

    With an output directory, streams run.csv and runts.csv per generation
    and checkpoints a snapshot every stats cadence.  ``stop_when`` is an
    optional callback fed the RunLog after each generation; returning True
    ends the run early (used by scaled-down studies), leaving the
    termination marked completed.
    """
    rng = np.random.default_rng(cfg.seed)
    log = RunLog(config=cfg)
    out = Path(out_dir) if out_dir is not None else None
    csv_fh = None
    runts_fh = None
    try:
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            csv_fh = open(out / "run.csv", "w")
            writer = GenerationCsvWriter(csv_fh)
            runts_fh = open(out / "runts.csv", "w")
            runts_fh.write("gen,child_size,child_fitness,mum_size,dad_size,"
                           "parent_mean_size\n")

        pop = ramped_half_and_half(cfg.popsize, cfg.init_depth_lo,
                                   cfg.init_depth_hi, rng)
        carry_effective = _census_pass(pop)[1]

        for g in range(1, cfg.generations + 1):
            pop, stats = breed_generation(pop, cfg, rng, generation=g,
                                          parent_effective=carry_effective)
            carry_effective = None
            if g % cfg.stats_cadence == 0:
                scalars, carry_effective = _census_pass(pop)
                stats.mean_effective = scalars["mean_effective"]
                stats.constant_fraction = scalars["constant_fraction"]
                stats.solution_subtrees_mean = scalars["solution_subtrees_mean"]
                if out is not None:
                    snapshot_write(pop, SnapshotMeta(g, cfg.popsize, cfg.seed),
                                   out / f"snapshot_gen{g:07d}.bin")
            log.stats.append(stats)

            if log.first_solution_gen is None and stats.best_fitness == MAX_FITNESS:
                log.first_solution_gen = g
            if (log.first_convergence_gen is None and stats.runt_count == 0
                    and stats.best_fitness == MAX_FITNESS):
                log.first_convergence_gen = g

            rec = pop.lineage
            runt_mask = ((pop.fitness < MAX_FITNESS)
                         & (rec.mum_fitness == MAX_FITNESS)
                         & (rec.dad_fitness == MAX_FITNESS))
            if runt_mask.any():
                sizes = pop.sizes()
                for i in np.nonzero(runt_mask)[0].tolist():
                    row = (g, int(sizes[i]), int(pop.fitness[i]),
                           int(rec.mum_size[i]), int(rec.dad_size[i]),
                           rec.parent_mean_size)
                    log.runt_rows.append(row)
                    if runts_fh is not None:
                        runts_fh.write(",".join(map(str, row)) + "\n")

            if csv_fh is not None:
                writer.write(stats)
            if log_every and g % log_every == 0:
                print(f"gen {g}: mean size {stats.mean_size:.1f} "
                      f"best {stats.best_fitness} runts {stats.runt_count}")

            if stats.hit_size_limit:
                log.termination_kind = "size_limit"
                log.abort_generation = g
                break
            if (cfg.memory_budget_bytes is not None
                    and pop.total_nodes() > cfg.memory_budget_bytes):
                log.termination_kind = "budget"
                log.abort_generation = g
                break
            if stats.max_size == 1:
                # all-leaf population: closed under crossover, nothing can
                # ever change again
                log.termination_kind = "converged_stuck"
                log.abort_generation = g
                break
            if stop_when is not None and stop_when(log):
                break

        if out is not None:
            snapshot_write(pop, SnapshotMeta(len(log.stats), cfg.popsize,
                                             cfg.seed), out / "final.bin")
            _write_summary(log, out / "summary.json")
    finally:
        if csv_fh is not None:
            csv_fh.close()
        if runts_fh is not None:
            runts_fh.close()
    return log


def _write_summary(log: RunLog, path) -> None:
    last = log.stats[-1] if log.stats else None
    payload = {
        "config": asdict(log.config),
        "generations_run": len(log.stats),
        "termination": log.termination,
        "termination_kind": log.termination_kind,
        "abort_generation": log.abort_generation,
        "first_solution_gen": log.first_solution_gen,
        "first_convergence_gen": log.first_convergence_gen,
        "final_mean_size": last.mean_size if last else None,
        "final_best_fitness": last.best_fitness if last else None,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
