"""Kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python twin when
the extension is missing or ``GPMUX_PURE_PYTHON`` is set to a non-empty
value.  Both expose the same functions over contiguous uint8 postfix
buffers; ``BACKEND`` records which one is live.
"""

import os

if os.environ.get("GPMUX_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

FULL = _impl.FULL
INPUT_MASKS = _impl.INPUT_MASKS
CONST_ZERO = _impl.CONST_ZERO
CONST_ONES = _impl.CONST_ONES
INTRON_ROOT = _impl.INTRON_ROOT

check_postfix = _impl.check_postfix
eval_root = _impl.eval_root
eval_values = _impl.eval_values
count_value_matches = _impl.count_value_matches
subtree_start = _impl.subtree_start
tree_depth = _impl.tree_depth
node_depths_sizes = _impl.node_depths_sizes
node_marks = _impl.node_marks
spread_flags = _impl.spread_flags
