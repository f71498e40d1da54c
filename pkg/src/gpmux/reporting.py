"""Bit-exact persistence: binary population snapshots, per-generation CSV,
and DOT export of a tree's effective code.

Snapshot layout (all little-endian):
  magic "GPLT" | u32 version | u64 generation | u32 popsize | u64 seed
  then per tree: u64 length followed by that many postfix opcode bytes
  (D0..D5 = 0..5, AND=6, OR=7, NAND=8, NOR=9).
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .genome import OPCODE_NAMES, Population, Tree

MAGIC = b"GPLT"
VERSION = 1
_HEADER = struct.Struct("<4sIQIQ")
_TREE_LEN = struct.Struct("<Q")


class DataFormatError(ValueError):
    """Malformed snapshot or CSV; ``offset`` is the failing byte position
    where that makes sense."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None
                         else f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass
class SnapshotMeta:
    generation: int
    popsize: int
    seed: int


def snapshot_write(pop: Population, meta: SnapshotMeta, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, meta.generation,
                              len(pop.individuals), meta.seed))
        for tree in pop.individuals:
            fh.write(_TREE_LEN.pack(len(tree)))
            fh.write(tree.codes.tobytes())


def snapshot_read(path) -> tuple[Population, SnapshotMeta]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise DataFormatError("truncated snapshot header", offset=len(data))
    magic, version, generation, popsize, seed = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r}", offset=0)
    if version > VERSION:
        raise DataFormatError(f"unsupported version {version}", offset=4)
    pos = _HEADER.size
    trees = []
    for i in range(popsize):
        if pos + _TREE_LEN.size > len(data):
            raise DataFormatError(f"truncated length field of tree {i}",
                                  offset=pos)
        (length,) = _TREE_LEN.unpack_from(data, pos)
        pos += _TREE_LEN.size
        if length < 1 or pos + length > len(data):
            raise DataFormatError(
                f"tree {i} declares {length} bytes, payload impossible",
                offset=pos - _TREE_LEN.size)
        codes = np.frombuffer(data, dtype=np.uint8, count=length, offset=pos)
        if not kernels.check_postfix(codes):
            raise DataFormatError(f"tree {i} payload is not well-formed",
                                  offset=pos)
        trees.append(Tree(codes, validate=False))
        pos += length
    if pos != len(data):
        raise DataFormatError("trailing bytes after last tree", offset=pos)
    pop = Population.from_trees(trees)
    return pop, SnapshotMeta(generation, popsize, seed)


CSV_COLUMNS = (
    "gen", "mean_size", "min_size", "max_size", "mean_depth",
    "best_fitness", "runt_count", "mean_effective", "constant_fraction",
    "solution_subtrees_mean", "wti_observed", "wti_expected",
    "runt_count_smoothed30",
)

_INT_COLUMNS = {"gen", "min_size", "max_size", "best_fitness", "runt_count",
                "wti_observed"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip, also for np floats
    return str(value)


class GenerationCsvWriter:
    """Streams one row per generation; keeps the trailing 30-generation
    runt-count mean so rows can be written as the run progresses."""

    def __init__(self, fh):
        self._fh = fh
        self._window: deque[int] = deque(maxlen=30)
        fh.write(",".join(CSV_COLUMNS) + "\n")

    def write(self, stats) -> None:
        self._window.append(stats.runt_count)
        smoothed = sum(self._window) / len(self._window)
        row = (stats.generation, stats.mean_size, stats.min_size,
               stats.max_size, stats.mean_depth, stats.best_fitness,
               stats.runt_count, stats.mean_effective,
               stats.constant_fraction, stats.solution_subtrees_mean,
               stats.wti_observed, stats.wti_expected, smoothed)
        self._fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_generation_csv(stats_seq, path) -> None:
    with open(path, "w") as fh:
        writer = GenerationCsvWriter(fh)
        for stats in stats_seq:
            writer.write(stats)


def read_generation_csv(path) -> dict[str, np.ndarray]:
    """Parse a run CSV back into column arrays; blank cells become NaN.

    Rejects any file whose header differs from the frozen schema.
    """
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header.split(",") != list(CSV_COLUMNS):
            raise DataFormatError(f"unexpected CSV header: {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    out: dict[str, np.ndarray] = {}
    for ci, name in enumerate(CSV_COLUMNS):
        cells = [r[ci] for r in rows]
        if name in _INT_COLUMNS:
            out[name] = np.array([int(c) for c in cells], dtype=np.int64)
        else:
            out[name] = np.array(
                [float(c) if c else np.nan for c in cells], dtype=np.float64)
    return out


def export_effective_dot(tree: Tree, classes, path) -> tuple[int, int]:
    """DOT graph of the tree's effective code.

    Effective nodes are drawn with their opcode; an ineffective child whose
    subtree is constant appears as a marked boundary box labelled with its
    value; other ineffective subtrees (introns included) are omitted.
    Returns (node_count, edge_count) of the emitted graph.
    """
    from .analysis import children_index

    codes = tree.codes
    n = len(codes)
    left, right = children_index(codes)
    eff = classes.effective
    const = classes.constant
    lines = ["digraph effective {", "  node [fontname=monospace];"]
    nodes = 0
    edges = 0
    for i in range(n - 1, -1, -1):
        if not eff[i]:
            continue
        label = OPCODE_NAMES[codes[i]]
        lines.append(f'  n{i} [label="{label}"];')
        nodes += 1
        for child in (left[i], right[i]):
            if child < 0:
                continue
            if eff[child]:
                lines.append(f"  n{i} -> n{child};")
                edges += 1
            elif const[child]:
                value = 0 if const[child] == kernels.CONST_ZERO else 1
                lines.append(
                    f'  n{child} [label="{value}" shape=box style=dashed];')
                lines.append(f"  n{i} -> n{child};")
                nodes += 1
                edges += 1
    lines.append("}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return nodes, edges
