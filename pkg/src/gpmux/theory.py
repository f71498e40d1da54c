"""Reference curves and distributions the measurements are compared against.

Each closed form here is backed by an independent oracle in the test suite
(exhaustive enumeration, Monte-Carlo sampling, or a selection-free breeding
run), so the formulas are never trusted on their own.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .genome import Tree


def expected_fitness_tournaments(x: float, popsize: int, k: int) -> float:
    """Expected number of the 2*popsize parent tournaments that contain at
    least one of x low-fitness individuals (entrants drawn uniformly with
    replacement)."""
    if x < 0 or x > popsize:
        raise ValueError(f"runt count {x} outside 0..{popsize}")
    return 2.0 * popsize * (1.0 - (1.0 - x / popsize) ** k)


def simulate_runt_tournaments(x: int, popsize: int, k: int,
                              n_tournaments: int, rng: np.random.Generator,
                              chunk: int = 1 << 21) -> int:
    """Count tournaments containing a runt by actually drawing entrants.

    Runts occupy indices 0..x-1 (any placement is equivalent by symmetry);
    each tournament draws k entrant indices uniformly with replacement.
    """
    hits = 0
    left = n_tournaments
    while left > 0:
        m = min(chunk, left)
        entrants = rng.integers(0, popsize, size=(m, k), dtype=np.uint16)
        hits += int((entrants < x).any(axis=1).sum())
        left -= m
    return hits


def log_catalan(n) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64)
    return gammaln(2 * n + 1) - gammaln(n + 1) - gammaln(n + 2)


def limiting_size_pmf(n_internal, p_a: float):
    """Stationary probability that a crossover-only tree has n internal
    nodes (total size 2n+1): Catalan(n) * p_a^n * (1-p_a)^(n+1).

    Computed in log space so it stays finite for n up to 10^8.
    """
    if not 0 <= p_a < 0.5:
        raise ValueError(f"p_a {p_a} outside [0, 1/2)")
    n = np.asarray(n_internal)
    if np.any(n < 0):
        raise ValueError("internal node count must be >= 0")
    if p_a == 0.0:
        out = np.where(n == 0, 1.0, 0.0)
        return float(out) if np.isscalar(n_internal) else out
    nf = n.astype(np.float64)
    logp = log_catalan(nf) + nf * math.log(p_a) + (nf + 1) * math.log1p(-p_a)
    out = np.exp(logp)
    return float(out) if np.isscalar(n_internal) else out


def size_pmf(sizes, p_a: float):
    """limiting_size_pmf re-parameterized over total node counts; even
    sizes have probability zero."""
    s = np.asarray(sizes)
    odd = (s % 2) == 1
    out = np.zeros(s.shape, dtype=np.float64)
    if np.any(odd):
        out[odd] = limiting_size_pmf((s[odd] - 1) // 2, p_a)
    return float(out) if np.isscalar(sizes) else out


def crossover_limit_pmf(n_internal, p_a: float):
    """Stationary size distribution of fitness-free subtree crossover:
    the size-tilted branching law (1-2p_a)(2n+1)Catalan(n)p_a^n(1-p_a)^(n+1)
    (a Lagrange distribution of the second kind).

    This is the form the selection-off breeding oracle validates; the
    untilted limiting_size_pmf above describes plain branching and decays
    one power of n faster than populations bred by crossover actually do.
    """
    if not 0 <= p_a < 0.5:
        raise ValueError(f"p_a {p_a} outside [0, 1/2)")
    n = np.asarray(n_internal)
    if np.any(n < 0):
        raise ValueError("internal node count must be >= 0")
    if p_a == 0.0:
        out = np.where(n == 0, 1.0, 0.0)
        return float(out) if np.isscalar(n_internal) else out
    nf = n.astype(np.float64)
    logp = (math.log1p(-2 * p_a) + np.log(2 * nf + 1) + log_catalan(nf)
            + nf * math.log(p_a) + (nf + 1) * math.log1p(-p_a))
    out = np.exp(logp)
    return float(out) if np.isscalar(n_internal) else out


def crossover_limit_size_pmf(sizes, p_a: float):
    """crossover_limit_pmf over total node counts; even sizes get zero."""
    s = np.asarray(sizes)
    odd = (s % 2) == 1
    out = np.zeros(s.shape, dtype=np.float64)
    if np.any(odd):
        out[odd] = crossover_limit_pmf((s[odd] - 1) // 2, p_a)
    return float(out) if np.isscalar(sizes) else out


def crossover_limit_mean(p_a: float) -> float:
    """Mean total size of the tilted law: 1/t + (1-t^2)/t^2 with t=1-2p_a."""
    if not 0 <= p_a < 0.5:
        raise ValueError(f"p_a {p_a} outside [0, 1/2)")
    t = 1.0 - 2.0 * p_a
    return 1.0 / t + (1.0 - t * t) / (t * t)


def fit_pa_crossover_limit(mean_size: float) -> float:
    """Invert crossover_limit_mean: with u = 1/t, u^2 + u = mean + 1."""
    if mean_size < 1:
        raise ValueError(f"mean size {mean_size} below 1")
    u = (-1.0 + math.sqrt(1.0 + 4.0 * (mean_size + 1.0))) / 2.0
    return (1.0 - 1.0 / u) / 2.0


def fit_pa_from_mean(mean_size: float) -> float:
    """Invert E[size] = 1/(1-2 p_a) to the internal-node probability."""
    if mean_size < 1:
        raise ValueError(f"mean size {mean_size} below 1")
    return (mean_size - 1.0) / (2.0 * mean_size)


def flajolet_expected_depth(n_internal: int) -> float:
    """Asymptotic mean height 2*sqrt(pi*n) of uniform random binary trees
    with n internal nodes.  Only meaningful for n in the hundreds and up."""
    if n_internal < 1:
        raise ValueError("need at least one internal node")
    return 2.0 * math.sqrt(math.pi * n_internal)


def bloat_limit_estimate(popsize: int, core_code_size: int) -> int:
    """Tree size where one disrupted core per generation is expected:
    popsize times the effective code size near the root."""
    if popsize < 1 or core_code_size < 1:
        raise ValueError("popsize and core size must be positive")
    return popsize * core_code_size


def uniform_random_binary_tree(n_internal: int,
                               rng: np.random.Generator) -> Tree:
    """Uniform sample over all Catalan(n) binary tree shapes, with leaf and
    function opcodes drawn uniformly (Remy's grafting procedure, linear
    time)."""
    if n_internal < 0:
        raise ValueError("internal node count must be >= 0")
    n = n_internal
    if n == 0:
        return Tree(np.array([rng.integers(6)], dtype=np.uint8),
                    validate=False)

    # node ids in creation order; before step k (0-based) the tree holds
    # 2k+1 nodes, all equally likely graft points
    total = 2 * n + 1
    victims = rng.integers(0, np.arange(1, 2 * n, 2))
    sides = rng.integers(0, 2, size=n)
    vl = victims.tolist()
    sl = sides.tolist()
    lft = [-1] * total
    rgt = [-1] * total
    parent = [-1] * total
    pside = [0] * total
    root = 0
    count = 1
    for step in range(n):
        v = vl[step]
        internal = count
        new_leaf = count + 1
        p = parent[v]
        if p < 0:
            root = internal
        elif pside[v] == 0:
            lft[p] = internal
        else:
            rgt[p] = internal
        parent[internal] = p
        pside[internal] = pside[v]
        if sl[step] == 0:
            lft[internal] = new_leaf
            rgt[internal] = v
            parent[new_leaf] = internal
            pside[new_leaf] = 0
            parent[v] = internal
            pside[v] = 1
        else:
            lft[internal] = v
            rgt[internal] = new_leaf
            parent[v] = internal
            pside[v] = 0
            parent[new_leaf] = internal
            pside[new_leaf] = 1
        count += 2

    leaf_ops = rng.integers(0, 6, size=n + 1, dtype=np.uint8).tolist()
    func_ops = rng.integers(6, 10, size=n, dtype=np.uint8).tolist()
    out = bytearray()
    li = fi = 0
    # iterative post-order: state 1 = descend, 0 = emit the function opcode
    todo = [(root, 1)]
    while todo:
        node, descend = todo.pop()
        if lft[node] < 0:
            out.append(leaf_ops[li])
            li += 1
        elif descend:
            todo.append((node, 0))
            todo.append((rgt[node], 1))
            todo.append((lft[node], 1))
        else:
            out.append(func_ops[fi])
            fi += 1
    return Tree(np.frombuffer(bytes(out), dtype=np.uint8), validate=False)
