# cython: boundscheck=False, wraparound=False, nonecheck=False, cdivision=True
"""Compiled kernels over postfix opcode buffers.

Twin of ``_kernels_py.py`` — identical signatures and semantics, built for
trees with up to 10^8 nodes.  Value stacks are heap buffers sized by the
leaf count bound (n/2+2 words), so memory stays linear in the input and
the GIL is released inside every scan.
"""

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

cdef uint64_t FULL_C = <uint64_t>0xFFFFFFFFFFFFFFFF

cdef uint64_t MASKS[6]

cdef void _init_masks() noexcept:
    cdef int i, k
    for i in range(6):
        MASKS[i] = 0
        for k in range(64):
            if (k >> i) & 1:
                MASKS[i] |= (<uint64_t>1) << k

_init_masks()

FULL = int(FULL_C)
INPUT_MASKS = tuple(int(MASKS[i]) for i in range(6))

AND, OR, NAND, NOR = 6, 7, 8, 9

CONST_ZERO = 1
CONST_ONES = 2
INTRON_ROOT = 4

DEF C_AND = 6
DEF C_OR = 7
DEF C_NAND = 8
DEF C_NOR = 9
DEF M_CONST = 3     # CONST_ZERO | CONST_ONES
DEF M_INTRON = 4


cdef inline uint64_t _apply(uint8_t op, uint64_t a, uint64_t b) noexcept nogil:
    if op == C_AND:
        return a & b
    elif op == C_OR:
        return a | b
    elif op == C_NAND:
        return ~(a & b)
    else:
        return ~(a | b)


def check_postfix(const uint8_t[::1] codes):
    """1 if the buffer is a well-formed postfix binary tree, else 0."""
    cdef int64_t n = codes.shape[0]
    cdef int64_t i, c = 0
    cdef int ok = 1
    if n == 0:
        return 0
    with nogil:
        for i in range(n):
            if codes[i] > 9:
                ok = 0
                break
            if codes[i] < 6:
                c += 1
            else:
                c -= 1
            if c < 1:
                ok = 0
                break
    if ok and c == 1:
        return 1
    return 0


def eval_root(const uint8_t[::1] codes):
    """Root case-vector: all 64 fitness cases evaluated bit-parallel."""
    cdef int64_t n = codes.shape[0]
    cdef uint64_t* stack = <uint64_t*>malloc((n // 2 + 2) * sizeof(uint64_t))
    if stack == NULL:
        raise MemoryError()
    cdef int64_t i, top = 0
    cdef uint8_t c
    cdef uint64_t out
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                stack[top] = MASKS[c]
                top += 1
            else:
                top -= 1
                stack[top - 1] = _apply(c, stack[top - 1], stack[top])
        out = stack[0]
    free(stack)
    return int(out)


def eval_values(const uint8_t[::1] codes, uint64_t[::1] out):
    """Fill out[i] with node i's case-vector (materialized, bottom-up)."""
    cdef int64_t n = codes.shape[0]
    cdef uint64_t* stack = <uint64_t*>malloc((n // 2 + 2) * sizeof(uint64_t))
    if stack == NULL:
        raise MemoryError()
    cdef int64_t i, top = 0
    cdef uint8_t c
    cdef uint64_t v
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                v = MASKS[c]
            else:
                top -= 2
                v = _apply(c, stack[top], stack[top + 1])
            stack[top] = v
            top += 1
            out[i] = v
    free(stack)


def count_value_matches(const uint8_t[::1] codes, object target):
    """Number of nodes whose case-vector equals target exactly."""
    cdef uint64_t t = <uint64_t>int(target)
    cdef int64_t n = codes.shape[0]
    cdef uint64_t* stack = <uint64_t*>malloc((n // 2 + 2) * sizeof(uint64_t))
    if stack == NULL:
        raise MemoryError()
    cdef int64_t i, top = 0, hits = 0
    cdef uint8_t c
    cdef uint64_t v
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                v = MASKS[c]
            else:
                top -= 2
                v = _apply(c, stack[top], stack[top + 1])
            stack[top] = v
            top += 1
            if v == t:
                hits += 1
    free(stack)
    return int(hits)


def subtree_start(const uint8_t[::1] codes, object idx):
    """First index of the postfix subtree rooted at idx (backward scan)."""
    cdef int64_t j = <int64_t>int(idx) + 1
    cdef int64_t need = 1
    with nogil:
        while need > 0:
            j -= 1
            if codes[j] < 6:
                need -= 1
            else:
                need += 1
    return int(j)


def tree_depth(const uint8_t[::1] codes):
    """Edges on the longest root-leaf path; 0 for a lone leaf."""
    cdef int64_t n = codes.shape[0]
    cdef int64_t* stack = <int64_t*>malloc((n // 2 + 2) * sizeof(int64_t))
    if stack == NULL:
        raise MemoryError()
    cdef int64_t i, top = 0, a, b, out
    cdef uint8_t c
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                stack[top] = 0
                top += 1
            else:
                top -= 1
                b = stack[top]
                a = stack[top - 1]
                stack[top - 1] = (a if a > b else b) + 1
        out = stack[0]
    free(stack)
    return int(out)


def node_depths_sizes(const uint8_t[::1] codes, int64_t[::1] depths,
                      int64_t[::1] sizes):
    """Per-node subtree depth and node count, in one bottom-up pass."""
    cdef int64_t n = codes.shape[0]
    cdef int64_t* dstack = <int64_t*>malloc((n // 2 + 2) * sizeof(int64_t))
    cdef int64_t* sstack = <int64_t*>malloc((n // 2 + 2) * sizeof(int64_t))
    if dstack == NULL or sstack == NULL:
        free(dstack)
        free(sstack)
        raise MemoryError()
    cdef int64_t i, top = 0, d, s
    cdef uint8_t c
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                d = 0
                s = 1
            else:
                top -= 2
                d = (dstack[top] if dstack[top] > dstack[top + 1]
                     else dstack[top + 1]) + 1
                s = sstack[top] + sstack[top + 1] + 1
            dstack[top] = d
            sstack[top] = s
            top += 1
            depths[i] = d
            sizes[i] = s
    free(dstack)
    free(sstack)


def node_marks(const uint8_t[::1] codes, uint8_t[::1] marks):
    """Bottom-up mark pass: constant values and intron subtree roots."""
    cdef int64_t n = codes.shape[0]
    cdef uint64_t* vstack = <uint64_t*>malloc((n // 2 + 2) * sizeof(uint64_t))
    cdef int64_t* istack = <int64_t*>malloc((n // 2 + 2) * sizeof(int64_t))
    if vstack == NULL or istack == NULL:
        free(vstack)
        free(istack)
        raise MemoryError()
    cdef int64_t i, top = 0, ai, bi
    cdef uint8_t c
    cdef uint64_t v, a, b
    with nogil:
        for i in range(n):
            c = codes[i]
            if c < 6:
                v = MASKS[c]
            else:
                top -= 2
                a = vstack[top]
                b = vstack[top + 1]
                ai = istack[top]
                bi = istack[top + 1]
                v = _apply(c, a, b)
                if c == C_AND or c == C_NAND:
                    if a == 0:
                        marks[bi] |= M_INTRON
                    if b == 0:
                        marks[ai] |= M_INTRON
                else:
                    if a == FULL_C:
                        marks[bi] |= M_INTRON
                    if b == FULL_C:
                        marks[ai] |= M_INTRON
            if v == 0:
                marks[i] |= 1
            elif v == FULL_C:
                marks[i] |= 2
            vstack[top] = v
            istack[top] = i
            top += 1
    free(vstack)
    free(istack)


def spread_flags(const uint8_t[::1] codes, const uint8_t[::1] marks,
                 uint8_t[::1] effective, uint8_t[::1] intron):
    """Top-down flag pass (right-to-left scan over the postfix buffer)."""
    cdef int64_t n = codes.shape[0]
    cdef uint8_t* slots = <uint8_t*>malloc(n // 2 + 2)
    if slots == NULL:
        raise MemoryError()
    cdef int64_t i, top = 1
    cdef uint8_t f, eff, intr, cf
    slots[0] = 2  # root: effective, not intron
    with nogil:
        for i in range(n - 1, -1, -1):
            top -= 1
            f = slots[top]
            eff = f >> 1
            intr = f & 1
            if marks[i] & M_INTRON:
                intr = 1
            effective[i] = eff
            intron[i] = intr
            if codes[i] >= 6:
                if marks[i] & M_CONST:
                    cf = intr
                else:
                    cf = (eff << 1) | intr
                slots[top] = cf
                slots[top + 1] = cf
                top += 2
    free(slots)
