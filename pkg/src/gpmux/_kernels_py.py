"""Pure-Python kernels over postfix opcode buffers.

Same contract as the compiled backend in ``_kernels.pyx``: every function
takes a contiguous uint8 array of opcodes in postfix order (codes 0..5 are
the six input leaves, 6=AND, 7=OR, 8=NAND, 9=NOR) and works in one or two
linear passes with an explicit stack.  Correct for any tree size, just
slower; the import selector in ``kernels.py`` prefers the compiled twin.
"""

import numpy as np

FULL = (1 << 64) - 1

# bit k of mask i is input Di under fitness case k, where case k sets Di=(k>>i)&1
INPUT_MASKS = tuple(
    sum(((k >> i) & 1) << k for k in range(64)) for i in range(6)
)

AND, OR, NAND, NOR = 6, 7, 8, 9

# mark byte: 1 = constant 0, 2 = constant 1, 4 = intron subtree root
CONST_ZERO = 1
CONST_ONES = 2
INTRON_ROOT = 4


def check_postfix(codes):
    """1 if the buffer is a well-formed postfix binary tree, else 0."""
    n = len(codes)
    if n == 0:
        return 0
    a = np.asarray(codes)
    if int(a.max(initial=0)) > 9:
        return 0
    bal = np.where(a < 6, 1, -1).cumsum()
    if int(bal.min(initial=1)) < 1:
        return 0
    return 1 if int(bal[-1]) == 1 else 0


def eval_root(codes):
    """Root case-vector: all 64 fitness cases evaluated bit-parallel."""
    stack = []
    push = stack.append
    pop = stack.pop
    masks = INPUT_MASKS
    for c in codes.tolist():
        if c < 6:
            push(masks[c])
        elif c == AND:
            b = pop()
            stack[-1] &= b
        elif c == OR:
            b = pop()
            stack[-1] |= b
        elif c == NAND:
            b = pop()
            stack[-1] = (stack[-1] & b) ^ FULL
        else:
            b = pop()
            stack[-1] = (stack[-1] | b) ^ FULL
    return stack[0]


def eval_values(codes, out):
    """Fill out[i] with node i's case-vector (materialized, bottom-up)."""
    stack = []
    push = stack.append
    pop = stack.pop
    masks = INPUT_MASKS
    for i, c in enumerate(codes.tolist()):
        if c < 6:
            v = masks[c]
        else:
            b = pop()
            a = pop()
            if c == AND:
                v = a & b
            elif c == OR:
                v = a | b
            elif c == NAND:
                v = (a & b) ^ FULL
            else:
                v = (a | b) ^ FULL
        push(v)
        out[i] = v


def count_value_matches(codes, target):
    """Number of nodes whose case-vector equals target exactly."""
    stack = []
    push = stack.append
    pop = stack.pop
    masks = INPUT_MASKS
    hits = 0
    for c in codes.tolist():
        if c < 6:
            v = masks[c]
        else:
            b = pop()
            a = pop()
            if c == AND:
                v = a & b
            elif c == OR:
                v = a | b
            elif c == NAND:
                v = (a & b) ^ FULL
            else:
                v = (a | b) ^ FULL
        if v == target:
            hits += 1
        push(v)
    return hits


def subtree_start(codes, idx):
    """First index of the postfix subtree rooted at idx (backward scan)."""
    need = 1
    j = idx + 1
    chunk_len = 4096
    while True:
        lo = j - chunk_len
        if lo < 0:
            lo = 0
        chunk = codes[lo:j].tolist()
        for p in range(len(chunk) - 1, -1, -1):
            if chunk[p] < 6:
                need -= 1
                if need == 0:
                    return lo + p
            else:
                need += 1
        j = lo


def tree_depth(codes):
    """Edges on the longest root-leaf path; 0 for a lone leaf."""
    stack = []
    push = stack.append
    pop = stack.pop
    for c in codes.tolist():
        if c < 6:
            push(0)
        else:
            b = pop()
            a = pop()
            push((a if a > b else b) + 1)
    return stack[0]


def node_depths_sizes(codes, depths, sizes):
    """Per-node subtree depth and node count, in one bottom-up pass."""
    stack = []
    push = stack.append
    pop = stack.pop
    for i, c in enumerate(codes.tolist()):
        if c < 6:
            d, s = 0, 1
        else:
            db, sb = pop()
            da, sa = pop()
            d = (da if da > db else db) + 1
            s = sa + sb + 1
        push((d, s))
        depths[i] = d
        sizes[i] = s


def node_marks(codes, marks):
    """Bottom-up mark pass.

    Sets marks[i] to CONST_ZERO/CONST_ONES when node i's case-vector is
    constant, and or-s INTRON_ROOT into a child whose sibling's constant
    value already fixes the parent's output (AND/NAND with a 0 sibling,
    OR/NOR with an all-ones sibling).
    """
    vstack = []
    istack = []
    masks = INPUT_MASKS
    for i, c in enumerate(codes.tolist()):
        if c < 6:
            v = masks[c]
        else:
            b = vstack.pop()
            bi = istack.pop()
            a = vstack.pop()
            ai = istack.pop()
            if c == AND:
                v = a & b
            elif c == OR:
                v = a | b
            elif c == NAND:
                v = (a & b) ^ FULL
            else:
                v = (a | b) ^ FULL
            if c == AND or c == NAND:
                if a == 0:
                    marks[bi] |= INTRON_ROOT
                if b == 0:
                    marks[ai] |= INTRON_ROOT
            else:
                if a == FULL:
                    marks[bi] |= INTRON_ROOT
                if b == FULL:
                    marks[ai] |= INTRON_ROOT
        if v == 0:
            marks[i] |= CONST_ZERO
        elif v == FULL:
            marks[i] |= CONST_ONES
        vstack.append(v)
        istack.append(i)


def spread_flags(codes, marks, effective, intron):
    """Top-down flag pass over a postfix buffer (right-to-left scan).

    Root is effective; children of a constant node and children of an
    ineffective node are ineffective.  Intron membership is inherited from
    the INTRON_ROOT marks downward through whole subtrees.
    """
    n = len(codes)
    # each pending slot packs (effective << 1) | intron for a subtree root
    slots = [2]  # root: effective, not intron
    pop = slots.pop
    push = slots.append
    lst = codes.tolist()
    mlist = marks.tolist()
    for i in range(n - 1, -1, -1):
        f = pop()
        eff = f >> 1
        intr = f & 1
        if mlist[i] & INTRON_ROOT:
            intr = 1
        effective[i] = eff
        intron[i] = intr
        if lst[i] >= 6:
            ceff = eff if not (mlist[i] & (CONST_ZERO | CONST_ONES)) else 0
            cf = (ceff << 1) | intr
            push(cf)
            push(cf)
