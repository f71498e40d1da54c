"""Backend equivalence: the compiled extension and the pure-Python twin
must agree bit-for-bit on every kernel, for the same buffers."""

import numpy as np
import pytest

from gpmux import _kernels_py, kernels
from gpmux import theory
from gpmux.evaluator import mux6_target
from gpmux.genome import random_tree

compiled = pytest.importorskip("gpmux._kernels",
                               reason="compiled backend not built")


@pytest.fixture(scope="module")
def trees():
    rng = np.random.default_rng(77)
    out = [random_tree(d, m, rng) for d in range(1, 8)
           for m in ("grow", "full") for _ in range(10)]
    out += [theory.uniform_random_binary_tree(n, rng)
            for n in (0, 1, 5, 200, 1000)]
    return out


def test_backends_present():
    assert kernels.BACKEND in ("compiled", "python")
    assert compiled.INPUT_MASKS == _kernels_py.INPUT_MASKS
    assert compiled.FULL == _kernels_py.FULL


def test_check_postfix_parity(trees):
    for t in trees:
        assert compiled.check_postfix(t.codes) == _kernels_py.check_postfix(
            t.codes) == 1
    for bad in ([6, 0, 1], [0, 1], [0, 1, 2, 6], [11]):
        arr = np.array(bad, dtype=np.uint8)
        assert compiled.check_postfix(arr) == _kernels_py.check_postfix(arr)


def test_eval_root_parity(trees):
    for t in trees:
        assert compiled.eval_root(t.codes) == _kernels_py.eval_root(t.codes)


def test_eval_values_parity(trees):
    for t in trees[:40]:
        n = len(t)
        a = np.empty(n, dtype=np.uint64)
        b = np.empty(n, dtype=np.uint64)
        compiled.eval_values(t.codes, a)
        _kernels_py.eval_values(t.codes, b)
        assert np.array_equal(a, b)


def test_count_value_matches_parity(trees):
    target = mux6_target()
    for t in trees:
        assert (compiled.count_value_matches(t.codes, target)
                == _kernels_py.count_value_matches(t.codes, target))


def test_subtree_start_parity(trees):
    for t in trees[:30]:
        for i in range(len(t)):
            assert (compiled.subtree_start(t.codes, i)
                    == _kernels_py.subtree_start(t.codes, i))


def test_tree_depth_parity(trees):
    for t in trees:
        assert compiled.tree_depth(t.codes) == _kernels_py.tree_depth(t.codes)


def test_node_depths_sizes_parity(trees):
    for t in trees[:40]:
        n = len(t)
        d1 = np.empty(n, dtype=np.int64)
        s1 = np.empty(n, dtype=np.int64)
        d2 = np.empty(n, dtype=np.int64)
        s2 = np.empty(n, dtype=np.int64)
        compiled.node_depths_sizes(t.codes, d1, s1)
        _kernels_py.node_depths_sizes(t.codes, d2, s2)
        assert np.array_equal(d1, d2)
        assert np.array_equal(s1, s2)


def test_classification_parity(trees):
    for t in trees:
        n = len(t)
        m1 = np.zeros(n, dtype=np.uint8)
        m2 = np.zeros(n, dtype=np.uint8)
        compiled.node_marks(t.codes, m1)
        _kernels_py.node_marks(t.codes, m2)
        assert np.array_equal(m1, m2)
        e1 = np.empty(n, dtype=np.uint8)
        i1 = np.empty(n, dtype=np.uint8)
        e2 = np.empty(n, dtype=np.uint8)
        i2 = np.empty(n, dtype=np.uint8)
        compiled.spread_flags(t.codes, m1, e1, i1)
        _kernels_py.spread_flags(t.codes, m2, e2, i2)
        assert np.array_equal(e1, e2)
        assert np.array_equal(i1, i2)


def comb_codes(n_leaves, right):
    """Degenerate chains: right combs push every leaf before any function
    (worst-case value stack), left combs stress the flag-slot stack."""
    leaves = np.arange(n_leaves, dtype=np.uint8) % 6
    ops = np.full(n_leaves - 1, 6, dtype=np.uint8)
    if right:
        return np.concatenate([leaves, ops])
    out = np.empty(2 * n_leaves - 1, dtype=np.uint8)
    out[0] = leaves[0]
    out[1::2] = leaves[1:]
    out[2::2] = ops
    return out


@pytest.mark.parametrize("right", [True, False])
def test_comb_stack_stress(right):
    codes = comb_codes(100_000, right)
    assert compiled.check_postfix(codes) == 1
    assert _kernels_py.check_postfix(codes) == 1
    assert compiled.tree_depth(codes) == 99_999
    assert _kernels_py.tree_depth(codes) == 99_999
    assert compiled.eval_root(codes) == _kernels_py.eval_root(codes)
    assert compiled.subtree_start(codes, len(codes) - 1) == 0
    n = len(codes)
    m1 = np.zeros(n, dtype=np.uint8)
    m2 = np.zeros(n, dtype=np.uint8)
    compiled.node_marks(codes, m1)
    _kernels_py.node_marks(codes, m2)
    assert np.array_equal(m1, m2)
    e1 = np.empty(n, dtype=np.uint8)
    i1 = np.empty(n, dtype=np.uint8)
    e2 = np.empty(n, dtype=np.uint8)
    i2 = np.empty(n, dtype=np.uint8)
    compiled.spread_flags(codes, m1, e1, i1)
    _kernels_py.spread_flags(codes, m2, e2, i2)
    assert np.array_equal(e1, e2)
    assert np.array_equal(i1, i2)


def test_pure_backend_selectable(tmp_path):
    import subprocess
    import sys

    code = ("import os; os.environ['GPMUX_PURE_PYTHON'] = '1';"
            "from gpmux import kernels; print(kernels.BACKEND)")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"
