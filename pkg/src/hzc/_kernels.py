"""Compiled inner loops for fixed-step integration with guard monitoring.

Continuous expressions are lowered to a small stack bytecode of
``(opcode, argument)`` pairs so one kernel serves every program.  With
numba available the kernels are compiled with ``njit``; setting the
environment variable ``HZC_NUMBA=0`` runs the identical code as plain
Python instead.
"""

from __future__ import annotations

import os

import numpy as np

from .syntax import BinOp, Const, Neg, Tuple, Var

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG = range(7)
_BINOPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}

STATUS_OK = 0
STATUS_DIV_ZERO = 1
STATUS_NONFINITE = 2

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("HZC_NUMBA", "1") != "0"


def _jit(fn):
    return numba.njit(cache=True)(fn) if USE_NUMBA else fn


# --------------------------------------------------------------------------
# lowering


class Program:
    """Bytecode for a list of scalar expressions sharing one slot layout."""

    def __init__(self, exprs, slots: dict):
        code, consts, starts = [], [], [0]
        self.max_depth = 1
        for e in exprs:
            depth = self._emit(e, slots, code, consts)
            self.max_depth = max(self.max_depth, depth)
            starts.append(len(code))
        self.code = np.array(code, dtype=np.int64).reshape(-1, 2)
        self.consts = np.array(consts if consts else [0.0], dtype=np.float64)
        self.starts = np.array(starts, dtype=np.int64)

    def _emit(self, e, slots, code, consts) -> int:
        if isinstance(e, Const):
            consts.append(float(e.value))
            code.append((OP_CONST, len(consts) - 1))
            return 1
        if isinstance(e, Var):
            code.append((OP_VAR, slots[e.name]))
            return 1
        if isinstance(e, Neg):
            d = self._emit(e.operand, slots, code, consts)
            code.append((OP_NEG, 0))
            return d
        if isinstance(e, BinOp):
            d1 = self._emit(e.left, slots, code, consts)
            d2 = self._emit(e.right, slots, code, consts)
            code.append((_BINOPS[e.op], 0))
            return max(d1, d2 + 1)
        if isinstance(e, Tuple):
            raise TypeError("tuples must be split before lowering")
        raise TypeError(f"cannot lower {e!r}")


# --------------------------------------------------------------------------
# kernels


@_jit
def eval_code(code, consts, start, stop, slots, stack):
    sp = 0
    for p in range(start, stop):
        op = code[p, 0]
        arg = code[p, 1]
        if op == 0:
            stack[sp] = consts[arg]
            sp += 1
        elif op == 1:
            stack[sp] = slots[arg]
            sp += 1
        elif op == 6:
            stack[sp - 1] = -stack[sp - 1]
        else:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == 2:
                r = a + b
            elif op == 3:
                r = a - b
            elif op == 4:
                r = a * b
            else:
                if b == 0.0:
                    return 0.0, 1
                r = a / b
            stack[sp - 1] = r
    return stack[0], 0


@_jit
def eval_range(y, m, first, count, code, consts, starts, slots, stack, out):
    """Evaluate expressions ``first .. first+count-1`` with state ``y`` loaded into the slots."""
    for i in range(m):
        slots[i] = y[i]
    for i in range(count):
        v, st = eval_code(code, consts, starts[first + i], starts[first + i + 1], slots, stack)
        if st != 0:
            return st
        out[i] = v
    return 0


@_jit
def rk4_step(y, h, m, code, consts, starts, slots, stack, work, out):
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    st = eval_range(y, m, 0, m, code, consts, starts, slots, stack, k1)
    if st != 0:
        return st
    for i in range(m):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    st = eval_range(tmp, m, 0, m, code, consts, starts, slots, stack, k2)
    if st != 0:
        return st
    for i in range(m):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    st = eval_range(tmp, m, 0, m, code, consts, starts, slots, stack, k3)
    if st != 0:
        return st
    for i in range(m):
        tmp[i] = y[i] + h * k3[i]
    st = eval_range(tmp, m, 0, m, code, consts, starts, slots, stack, k4)
    if st != 0:
        return st
    for i in range(m):
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not np.isfinite(out[i]):
            return 2
    return 0


@_jit
def rk4_block(y0, t0, k0, base_t, h, t_end, m, ng, code, consts, starts, slots, tol_v,
              armed, out_t, out_y, out_g, hits):
    """Advance from ``y0`` until a guard fires, ``t_end`` is reached or the buffers fill.

    Step ``k`` lands on ``base_t + k*h`` (clipped to ``t_end``) so chunked
    calls produce the same grid as one long call.  Returns
    ``(rows_written, status, fired)``; row 0 is the starting point.
    """
    n_rows = out_t.shape[0]
    stack = np.empty(64, dtype=np.float64)
    work = np.empty((5, m), dtype=np.float64)
    g = np.empty(max(ng, 1), dtype=np.float64)
    y = np.empty(m, dtype=np.float64)
    for i in range(m):
        y[i] = y0[i]
        out_y[0, i] = y0[i]
    out_t[0] = t0
    st = eval_range(y, m, m, ng, code, consts, starts, slots, stack, g)
    if st != 0:
        return 1, st, False
    for j in range(ng):
        out_g[0, j] = g[j]
        if g[j] < -tol_v:
            armed[j] = True
    t = t0
    row = 1
    k = k0
    while row < n_rows and t < t_end:
        k += 1
        t_next = base_t + k * h
        if t_next > t_end:
            t_next = t_end
        hk = t_next - t
        if hk <= 0.0:
            break
        st = rk4_step(y, hk, m, code, consts, starts, slots, stack, work, out_y[row])
        if st != 0:
            return row, st, False
        for i in range(m):
            y[i] = out_y[row, i]
        out_t[row] = t_next
        t = t_next
        st = eval_range(y, m, m, ng, code, consts, starts, slots, stack, g)
        if st != 0:
            return row + 1, st, False
        fired = False
        for j in range(ng):
            out_g[row, j] = g[j]
            if not armed[j] and g[j] > tol_v and out_g[row - 1, j] <= tol_v:
                # a dip shorter than one step: probe inside it
                if first_negative_probe(out_y[row - 1], hk, m, j, code, consts, starts, slots, tol_v) > 0.0:
                    armed[j] = True
            if armed[j] and g[j] > tol_v:
                hits[j] = True
                fired = True
        row += 1
        if fired:
            return row, 0, True
        for j in range(ng):
            if g[j] < -tol_v:
                armed[j] = True
    return row, 0, False


PROBES = 16


@_jit
def first_negative_probe(y, hk, m, j, code, consts, starts, slots, tol_v):
    """Offset of the first of ``PROBES`` interior points where guard ``j`` is below ``-tol_v``; 0 if none."""
    buf = np.empty(m, dtype=np.float64)
    for q in range(1, PROBES):
        tau = hk * q / PROBES
        val, st = guard_after(y, tau, m, j, code, consts, starts, slots, buf)
        if st != 0:
            return 0.0
        if val < -tol_v:
            return tau
    return 0.0


@_jit
def guard_after(y, tau, m, j, code, consts, starts, slots, out_state):
    """State and value of guard ``j`` a partial step ``tau`` after ``y``."""
    stack = np.empty(64, dtype=np.float64)
    work = np.empty((5, m), dtype=np.float64)
    g = np.empty(1, dtype=np.float64)
    if tau == 0.0:
        for i in range(m):
            out_state[i] = y[i]
    else:
        st = rk4_step(y, tau, m, code, consts, starts, slots, stack, work, out_state)
        if st != 0:
            return 0.0, st
    st = eval_range(out_state, m, m + j, 1, code, consts, starts, slots, stack, g)
    return g[0], st
