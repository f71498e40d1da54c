"""Per-tree and per-population measurements: constants, introns, effective
code and its overlap across the population, solution subtrees, runt
parentage, size-change ratios, whole-tree insertions, size/depth scatter,
and decile histograms against a reference size distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .evaluator import mux6_target
from .genome import Tree


@dataclass
class NodeClassification:
    """Per-node flags for one tree.

    ``constant`` is 0 for varying output, 1 for always-false, 2 for
    always-true.  ``effective`` marks nodes whose root path crosses no
    constant; ``intron`` marks whole subtrees whose sibling's constant
    value already fixes the shared parent.
    """

    constant: np.ndarray
    effective: np.ndarray
    intron: np.ndarray

    def __len__(self) -> int:
        return len(self.constant)

    @property
    def n_constant(self) -> int:
        return int(np.count_nonzero(self.constant))

    @property
    def n_effective(self) -> int:
        return int(np.count_nonzero(self.effective))

    @property
    def n_intron(self) -> int:
        return int(np.count_nonzero(self.intron))


def classify_nodes(tree: Tree) -> NodeClassification:
    """Bottom-up value pass then top-down effectiveness pass.

    Root is effective; children of a constant node and of an ineffective
    node are ineffective.  Linear time, ~2 bytes of scratch per node.
    """
    n = len(tree)
    marks = np.zeros(n, dtype=np.uint8)
    kernels.node_marks(tree.codes, marks)
    eff = np.empty(n, dtype=np.uint8)
    intr = np.empty(n, dtype=np.uint8)
    kernels.spread_flags(tree.codes, marks, eff, intr)
    return NodeClassification(constant=marks & 3, effective=eff, intron=intr)


@dataclass
class CodeCensus:
    popsize: int
    total_nodes: int
    constant_nodes: int
    intron_nodes: int
    effective_nodes: int

    @property
    def mean_effective(self) -> float:
        return self.effective_nodes / self.popsize

    @property
    def constant_fraction(self) -> float:
        return self.constant_nodes / self.total_nodes

    @property
    def intron_fraction(self) -> float:
        return self.intron_nodes / self.total_nodes

    @property
    def effective_fraction(self) -> float:
        return self.effective_nodes / self.total_nodes

    def __add__(self, other: "CodeCensus") -> "CodeCensus":
        return CodeCensus(
            self.popsize + other.popsize,
            self.total_nodes + other.total_nodes,
            self.constant_nodes + other.constant_nodes,
            self.intron_nodes + other.intron_nodes,
            self.effective_nodes + other.effective_nodes,
        )


def _as_trees(trees_or_pop) -> list:
    individuals = getattr(trees_or_pop, "individuals", None)
    return list(individuals if individuals is not None else trees_or_pop)


def population_code_census(trees) -> CodeCensus:
    """Node totals over a Population or tree sequence; additive across
    partitions."""
    trees = _as_trees(trees)
    total = consts = introns = eff = 0
    for t in trees:
        cls = classify_nodes(t)
        total += len(cls)
        consts += cls.n_constant
        introns += cls.n_intron
        eff += cls.n_effective
    return CodeCensus(len(trees), total, consts, introns, eff)


def count_solution_subtrees(tree: Tree) -> int:
    """Nodes whose case-vector equals the multiplexer exactly (fitness-64
    subtrees), streamed so huge trees stay cheap."""
    return kernels.count_value_matches(tree.codes, mux6_target())


def children_index(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(left, right) child index per node, -1 for leaves; one stack pass."""
    n = len(codes)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    stack = []
    for i, c in enumerate(codes.tolist()):
        if c >= 6:
            right[i] = stack.pop()
            left[i] = stack.pop()
        stack.append(i)
    return left, right


def effective_path_keys(tree: Tree,
                        classes: NodeClassification | None = None) -> set[bytes]:
    """Root-path keys of the tree's effective nodes.

    A key is the byte string opcode, (side, opcode), (side, opcode), ...
    from the root down to the node, so keys are prefix-closed and
    comparable across structurally different trees.
    """
    if classes is None:
        classes = classify_nodes(tree)
    codes = tree.codes
    n = len(codes)
    eff = classes.effective
    left, right = children_index(codes)
    keys: set[bytes] = set()
    root_key = bytes([codes[n - 1]])
    todo = [(n - 1, root_key)]
    while todo:
        i, key = todo.pop()
        keys.add(key)
        for side, child in ((0, left[i]), (1, right[i])):
            if child >= 0 and eff[child]:
                todo.append((child, key + bytes([side, codes[child]])))
    return keys


@dataclass
class OverlapReport:
    n_trees: int
    path_counts: dict[bytes, int]
    shared_core_size: int
    threshold: float


def population_overlap(trees, fitness=None, threshold: float = 0.99,
                       max_fitness: int = 64) -> OverlapReport:
    """Occurrence counts of effective root-paths across the population.

    Only max-fitness trees are compared (pass fitness=None to include all);
    the shared core is the number of paths present in at least
    ``threshold`` of them.
    """
    trees = _as_trees(trees)
    if fitness is not None:
        pool = [t for t, f in zip(trees, fitness) if f == max_fitness]
    else:
        pool = trees
    counts: dict[bytes, int] = {}
    for t in pool:
        for key in effective_path_keys(t):
            counts[key] = counts.get(key, 0) + 1
    need = threshold * len(pool)
    core = sum(1 for c in counts.values() if c >= need) if pool else 0
    return OverlapReport(len(pool), counts, core, threshold)


@dataclass
class RuntReport:
    n_children: int
    mum_size_correlation: float
    dad_size_correlation: float
    mum_offsets: np.ndarray  # mum size minus parent-population mean, per child
    mum_offset_mean: float
    mums_below_mean_fraction: float
    size_change_bins: list[tuple[float, float, int]]
    smaller: int
    larger: int
    same: int


def _signed_decile_bins(changes: np.ndarray) -> list[tuple[float, float, int]]:
    """Histogram of size changes: unit bins within +-8, logarithmic decile
    bins beyond."""
    bins: dict[tuple[float, float], int] = {}
    for d in changes.tolist():
        if -8 <= d <= 8:
            lo, hi = float(d), float(d)
        else:
            mag = abs(d)
            j = math.floor(10 * math.log10(mag) + 1e-9)
            lo, hi = 10 ** (j / 10), 10 ** ((j + 1) / 10)
            if d < 0:
                lo, hi = -hi, -lo
        bins[(lo, hi)] = bins.get((lo, hi), 0) + 1
    return [(lo, hi, c) for (lo, hi), c in sorted(bins.items())]


def runt_parent_report(child_size, child_fitness, mum_size, dad_size,
                       pop_mean_size) -> RuntReport:
    """Statistics over low-fitness children of two max-fitness parents.

    Inputs are parallel arrays (one row per such child, as recorded by the
    breeder).  pop_mean_size is the parent-population mean at breeding
    time, per row.
    """
    child_size = np.asarray(child_size, dtype=np.float64)
    mum_size = np.asarray(mum_size, dtype=np.float64)
    dad_size = np.asarray(dad_size, dtype=np.float64)
    pop_mean_size = np.asarray(pop_mean_size, dtype=np.float64)
    n = len(child_size)
    if n == 0:
        return RuntReport(0, math.nan, math.nan, np.empty(0), math.nan,
                          math.nan, [], 0, 0, 0)

    def corr(a, b):
        if np.std(a) == 0 or np.std(b) == 0:
            return math.nan
        return float(np.corrcoef(a, b)[0, 1])

    offsets = mum_size - pop_mean_size
    change = child_size - mum_size
    return RuntReport(
        n_children=n,
        mum_size_correlation=corr(child_size, mum_size),
        dad_size_correlation=corr(child_size, dad_size),
        mum_offsets=offsets,
        mum_offset_mean=float(offsets.mean()),
        mums_below_mean_fraction=float((offsets < 0).mean()),
        size_change_bins=_signed_decile_bins(change.astype(np.int64)),
        smaller=int((change < 0).sum()),
        larger=int((change > 0).sum()),
        same=int((change == 0).sum()),
    )


@dataclass
class UpDownRow:
    runt_count: int
    rises: int
    falls: int
    ratio: float | None  # None when suppressed (<= 5 rises or <= 5 falls)


def size_change_vs_runts(mean_size, runt_count, start_gen: int = 0,
                         min_instances: int = 5) -> list[UpDownRow]:
    """Ratio of generations where mean size rose vs fell, grouped by the
    parent generation's runt count.  Rows with too few rises or falls are
    suppressed (ratio None) to limit noise."""
    mean_size = np.asarray(mean_size, dtype=np.float64)
    runt_count = np.asarray(runt_count, dtype=np.int64)
    rises: dict[int, int] = {}
    falls: dict[int, int] = {}
    for g in range(max(start_gen, 1), len(mean_size)):
        x = int(runt_count[g - 1])
        d = mean_size[g] - mean_size[g - 1]
        if d > 0:
            rises[x] = rises.get(x, 0) + 1
        elif d < 0:
            falls[x] = falls.get(x, 0) + 1
    rows = []
    for x in sorted(set(rises) | set(falls)):
        r = rises.get(x, 0)
        f = falls.get(x, 0)
        ratio = r / f if r > min_instances and f > min_instances else None
        rows.append(UpDownRow(x, r, f, ratio))
    return rows


def whole_tree_insertions(dad_sizes, dad_root_hits) -> tuple[int, float]:
    """Observed vs expected count of crossovers that inserted a whole dad.

    Expected is the exact sum of 1/size(dad) over events, additive and
    order-independent."""
    dad_sizes = np.asarray(dad_sizes, dtype=np.float64)
    observed = int(np.count_nonzero(np.asarray(dad_root_hits)))
    expected = float((1.0 / dad_sizes).sum())
    return observed, expected


@dataclass
class SizeDepthPoint:
    size: int
    depth: int
    whole_tree: bool


def size_depth_scatter(trees, include_subtrees: bool = False,
                       subtree_limit: int = 10**5,
                       sample_count: int = 10**4,
                       rng: np.random.Generator | None = None) -> list[SizeDepthPoint]:
    """One (size, depth) point per tree, optionally plus subtree points.

    Trees above subtree_limit nodes contribute sample_count uniformly
    sampled subtree roots instead of all of them, keeping cost bounded.
    """
    points = []
    for t in _as_trees(trees):
        n = len(t)
        points.append(SizeDepthPoint(n, kernels.tree_depth(t.codes), True))
        if not include_subtrees:
            continue
        if n <= subtree_limit:
            depths = np.empty(n, dtype=np.int64)
            sizes = np.empty(n, dtype=np.int64)
            kernels.node_depths_sizes(t.codes, depths, sizes)
            for i in range(n - 1):  # root already covered as the whole tree
                points.append(SizeDepthPoint(int(sizes[i]), int(depths[i]),
                                             False))
        else:
            if rng is None:
                rng = np.random.default_rng()
            for i in rng.integers(0, n - 1, size=sample_count).tolist():
                start = kernels.subtree_start(t.codes, i)
                sub = t.codes[start:i + 1]
                points.append(SizeDepthPoint(len(sub),
                                             kernels.tree_depth(sub), False))
    return points


@dataclass
class HistogramBin:
    lo: float        # inclusive lower size bound
    hi: float        # exclusive upper size bound
    observed: int
    expected: float
    sigma: float
    exceedance: float

    @property
    def flagged(self) -> bool:
        return self.exceedance > 0


def decile_histogram_with_exceedance(sizes, size_probability,
                                     n_sigma: float = 3.0) -> list[HistogramBin]:
    """Logarithmic decile bins (10 per factor of 10) with per-bin
    exceedance over a reference size distribution.

    size_probability maps an integer size array to per-size probabilities;
    expected bin counts are N * P(bin) and the flag threshold is expected
    plus n_sigma binomial standard deviations.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if len(sizes) == 0:
        raise ValueError("no sizes to bin")
    if sizes.min() < 1:
        raise ValueError("sizes must be >= 1")
    n_total = len(sizes)
    j = np.floor(10 * np.log10(sizes) + 1e-9).astype(np.int64)
    j_hi = int(j.max())
    counts = np.bincount(j, minlength=j_hi + 1)

    edges = 10 ** (np.arange(j_hi + 2) / 10)
    bins = []
    all_sizes = np.arange(1, int(math.ceil(edges[-1])) + 1, dtype=np.int64)
    probs = np.asarray(size_probability(all_sizes), dtype=np.float64)
    size_bin = np.floor(10 * np.log10(all_sizes) + 1e-9).astype(np.int64)
    for b in range(j_hi + 1):
        p = float(probs[size_bin == b].sum())
        expected = n_total * p
        sigma = math.sqrt(n_total * p * (1.0 - p))
        observed = int(counts[b])
        exceedance = max(0.0, observed - expected - n_sigma * sigma)
        bins.append(HistogramBin(float(edges[b]), float(edges[b + 1]),
                                 observed, expected, sigma, exceedance))
    return bins


def first_convergence(runt_count, best_fitness=None,
                      max_fitness: int = 64) -> int | None:
    """Index of the first generation where no individual is below max
    fitness; None if it never happens."""
    runt_count = np.asarray(runt_count)
    for g in range(len(runt_count)):
        if runt_count[g] == 0:
            if best_fitness is None or best_fitness[g] == max_fitness:
                return g
    return None
