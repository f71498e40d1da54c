"""Bit-parallel evaluation: one 64-bit word per node carries the node's
output on all 64 fitness cases at once.

Case k assigns input Di the value (k>>i)&1.  D0 and D1 are the multiplexer
address lines (D0 least significant) and D2..D5 the data lines, so address
a selects D(2+a).  Fitness numbers are invariant to this labelling; it is
fixed here so every mask is bit-exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kernels
from .genome import Tree

FULL = kernels.FULL
CASES = 64

_TARGET = 0
for _k in range(CASES):
    _TARGET |= (((_k >> (2 + (_k & 3))) & 1) << _k)

# default cap for materializing one word per node; above it, stream instead
VALUE_BUFFER_MAX_NODES = 10**6


def input_vector(i: int) -> int:
    """Case-vector of leaf Di: bit k = (k>>i)&1."""
    if not 0 <= i <= 5:
        raise ValueError(f"input index {i} out of range 0..5")
    return kernels.INPUT_MASKS[i]


def mux6_target() -> int:
    """Case-vector of the 6-input multiplexer itself."""
    return _TARGET


def evaluate(tree: Tree) -> int:
    """Root case-vector via one postfix pass with a value stack."""
    return kernels.eval_root(tree.codes)


def fitness(v: int) -> int:
    """Number of the 64 cases on which v agrees with the multiplexer."""
    return CASES - (v ^ _TARGET).bit_count()


def tree_fitness(tree: Tree) -> int:
    return fitness(evaluate(tree))


def population_fitness(trees, workers: int = 1) -> np.ndarray:
    """Fitness of every tree; evaluation is pure, so worker count never
    changes the result."""
    out = np.empty(len(trees), dtype=np.uint8)
    if workers > 1 and len(trees) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, f in enumerate(pool.map(tree_fitness, trees)):
                out[i] = f
    else:
        for i, t in enumerate(trees):
            out[i] = tree_fitness(t)
    return out


def entropy(v: int) -> float:
    """Output entropy in bits: -64(p log2 p + q log2 q) with p the fraction
    of the 64 cases that are true.  Zero iff v is constant."""
    ones = v.bit_count()
    if ones == 0 or ones == CASES:
        return 0.0
    p = ones / CASES
    q = 1.0 - p
    return -CASES * (p * math.log2(p) + q * math.log2(q))


def node_values(tree: Tree, consumer) -> None:
    """Stream (node_index, case-vector) in postfix order.

    Memory is bounded by tree depth (a stack of words), not tree size, so
    this is safe on arbitrarily large trees.
    """
    stack = []
    push = stack.append
    pop = stack.pop
    masks = kernels.INPUT_MASKS
    for i, c in enumerate(tree.codes.tolist()):
        if c < 6:
            v = masks[c]
        else:
            b = pop()
            a = pop()
            if c == 6:
                v = a & b
            elif c == 7:
                v = a | b
            elif c == 8:
                v = (a & b) ^ FULL
            else:
                v = (a | b) ^ FULL
        push(v)
        consumer(i, v)


def values_array(tree: Tree, max_nodes: int = VALUE_BUFFER_MAX_NODES) -> np.ndarray:
    """Materialized per-node case-vectors (uint64, one word per node).

    Refuses trees above max_nodes: a 10^8-node tree would need 800 MB here,
    use node_values for those.
    """
    n = len(tree)
    if n > max_nodes:
        raise ValueError(
            f"tree has {n} nodes, above the {max_nodes} materialization cap")
    out = np.empty(n, dtype=np.uint64)
    kernels.eval_values(tree.codes, out)
    return out
