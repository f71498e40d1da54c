"""Tree genome: flat postfix opcode buffers plus the structural operators.

A tree is one byte per node in postfix (children before parent) order, so a
hundred-million-node individual costs ~100 MB and every operator below is a
linear scan.  Depth is counted in edges with the root at depth 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

# opcode bytes; also the on-disk snapshot encoding
D0, D1, D2, D3, D4, D5 = 0, 1, 2, 3, 4, 5
AND, OR, NAND, NOR = 6, 7, 8, 9

LEAVES = (D0, D1, D2, D3, D4, D5)
FUNCTIONS = (AND, OR, NAND, NOR)
N_OPCODES = 10

OPCODE_NAMES = ("D0", "D1", "D2", "D3", "D4", "D5", "AND", "OR", "NAND", "NOR")


def arity(code: int) -> int:
    return 0 if code < 6 else 2


class Tree:
    """Immutable postfix opcode buffer."""

    __slots__ = ("codes",)

    def __init__(self, codes, validate: bool = True):
        arr = np.ascontiguousarray(codes, dtype=np.uint8)
        if validate and not kernels.check_postfix(arr):
            raise ValueError("not a well-formed postfix tree")
        arr.flags.writeable = False
        self.codes = arr

    @classmethod
    def leaf(cls, code: int) -> "Tree":
        return cls(np.array([code], dtype=np.uint8), validate=True)

    def __len__(self) -> int:
        return self.codes.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash(self.codes.tobytes())

    def __repr__(self) -> str:
        if len(self) <= 12:
            body = " ".join(OPCODE_NAMES[c] for c in self.codes.tolist())
        else:
            body = f"{len(self)} nodes"
        return f"Tree({body})"

    def is_well_formed(self) -> bool:
        return bool(kernels.check_postfix(self.codes))


@dataclass
class Population:
    """Fixed-size set of trees with their cached fitness values.

    ``lineage`` describes how the population was bred (see
    ``breeder.BreedingRecord``); it is None for initial populations.
    """

    individuals: list[Tree]
    fitness: np.ndarray
    lineage: object | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.individuals)

    def sizes(self) -> np.ndarray:
        return np.fromiter((len(t) for t in self.individuals),
                           dtype=np.int64, count=len(self.individuals))

    def total_nodes(self) -> int:
        return int(self.sizes().sum())

    @classmethod
    def from_trees(cls, trees: list[Tree], workers: int = 1) -> "Population":
        from .evaluator import population_fitness

        return cls(list(trees), population_fitness(trees, workers=workers))


def random_tree(max_depth: int, method: str, rng: np.random.Generator) -> Tree:
    """Random tree emitted directly in postfix.

    ``full`` places every leaf at exactly max_depth; ``grow`` draws each
    node uniformly over all 10 opcodes until the depth limit forces a leaf.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if method not in ("grow", "full"):
        raise ValueError(f"unknown method {method!r}")
    grow = method == "grow"
    out = bytearray()
    # task stack: positive = expand subtree with this much depth budget,
    # negative = emit function opcode ~(code)
    todo = [max_depth]
    while todo:
        t = todo.pop()
        if t < 0:
            out.append(~t)
            continue
        if t == 0:
            out.append(int(rng.integers(6)))
        elif grow:
            c = int(rng.integers(N_OPCODES))
            if c < 6:
                out.append(c)
            else:
                todo.append(~c)
                todo.append(t - 1)
                todo.append(t - 1)
        else:
            c = 6 + int(rng.integers(4))
            todo.append(~c)
            todo.append(t - 1)
            todo.append(t - 1)
    return Tree(np.frombuffer(bytes(out), dtype=np.uint8), validate=False)


def ramped_half_and_half(popsize: int, depth_lo: int, depth_hi: int,
                         rng: np.random.Generator) -> Population:
    """Initial population: depths cycle over [depth_lo, depth_hi], grow and
    full alternating so each depth gets half of each method.  Duplicates
    are allowed."""
    if popsize < 1:
        raise ValueError("popsize must be >= 1")
    if depth_lo > depth_hi:
        raise ValueError("depth_lo must be <= depth_hi")
    span = depth_hi - depth_lo + 1
    trees = []
    for i in range(popsize):
        depth = depth_lo + (i // 2) % span
        method = "grow" if i % 2 == 0 else "full"
        trees.append(random_tree(depth, method, rng))
    return Population.from_trees(trees)


def subtree_span(tree: Tree, node_index: int) -> tuple[int, int]:
    """Inclusive (start, end) bounds of the postfix subtree rooted at
    node_index; the slice codes[start:end+1] is itself a well-formed tree."""
    n = len(tree)
    if not 0 <= node_index < n:
        raise IndexError(f"node index {node_index} out of range for {n} nodes")
    start = kernels.subtree_start(tree.codes, node_index)
    return start, node_index


def crossover(mum: Tree, dad: Tree, rng: np.random.Generator) -> Tree:
    """Subtree crossover: replace a uniformly chosen mum subtree with a
    uniformly chosen dad subtree.  The child keeps mum's root context."""
    m = int(rng.integers(len(mum)))
    d = int(rng.integers(len(dad)))
    return crossover_at(mum, dad, m, d)


def crossover_at(mum: Tree, dad: Tree, mum_point: int, dad_point: int) -> Tree:
    ms = kernels.subtree_start(mum.codes, mum_point)
    ds = kernels.subtree_start(dad.codes, dad_point)
    child = np.concatenate([
        mum.codes[:ms],
        dad.codes[ds:dad_point + 1],
        mum.codes[mum_point + 1:],
    ])
    return Tree(child, validate=False)


def tree_depth(tree: Tree) -> int:
    """Edges on the longest root-to-leaf path (lone leaf: 0)."""
    return kernels.tree_depth(tree.codes)
