"""Batched expression evaluation: postfix bytecode run by a numba kernel.

Expressions are compiled once into a flat postfix program and then evaluated
over many environments at once (one column per environment).  The numba
kernel and the pure-numpy fallback give identical results; set
``SVAGEN_DISABLE_NUMBA=1`` (or call :func:`set_backend`) to force numpy.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..sva.ast import Binary, Conditional, Identifier, NumericLiteral, Paren, SystemCall, Unary
from .evaluate import ARITH_OPS, DEFAULT_WIDTH, compare_width, mask, result_width

try:  # pragma: no cover - import guard
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

SIG, CONST, MASK, SHR, LNOT, TRUTH, BNOT, NEG = 0, 1, 2, 3, 4, 5, 6, 7
ADD, SUB, AND, OR, XOR, LAND, LOR = 8, 9, 10, 11, 12, 13, 14
EQ, NE, LT, LE, GT, GE, SEL = 15, 16, 17, 18, 19, 20, 21

_BINOP = {"+": ADD, "-": SUB, "&": AND, "|": OR, "^": XOR, "&&": LAND, "||": LOR,
          "==": EQ, "!=": NE, "<": LT, "<=": LE, ">": GT, ">=": GE}


@dataclass(frozen=True)
class Program:
    ops: np.ndarray
    args: np.ndarray
    depth: int


class _Emitter:
    def __init__(self, widths, index, call):
        self.widths = widths
        self.index = index
        self.call = call  # SystemCall -> column index of its precomputed value
        self.ops: list[int] = []
        self.args: list[int] = []
        self.sp = 0
        self.depth = 0

    def emit(self, op, arg=0, delta=0):
        self.ops.append(op)
        self.args.append(arg)
        self.sp += delta
        self.depth = max(self.depth, self.sp)

    def expr(self, e, ctx):
        if isinstance(e, Paren):
            return self.expr(e.inner, ctx)
        if isinstance(e, Identifier):
            try:
                col = self.index[e.name]
            except KeyError:
                raise KeyError(f"signal {e.name!r} is not available") from None
            self.emit(SIG, col, +1)
            if e.index is not None:
                self.emit(SHR, e.index)
                self.emit(MASK, 1)
            elif e.part is not None:
                self.emit(SHR, e.part[1])
                self.emit(MASK, mask(e.part[0] - e.part[1] + 1))
            return
        if isinstance(e, NumericLiteral):
            if e.fill:
                value = mask(ctx if ctx is not None else 1) if e.value else 0
            else:
                w = ctx if ctx is not None else (e.width or DEFAULT_WIDTH)
                value = e.value & mask(w)
            self.emit(CONST, value, +1)
            return
        if isinstance(e, Unary):
            if e.op == "!":
                self.expr(e.operand, None)
                self.emit(LNOT)
                return
            w = result_width(e, self.widths, ctx)
            self.expr(e.operand, w)
            self.emit(BNOT if e.op == "~" else NEG)
            self.emit(MASK, mask(w))
            return
        if isinstance(e, Binary):
            if e.op in ("&&", "||"):
                self.expr(e.lhs, None)
                self.expr(e.rhs, None)
            elif e.op in ARITH_OPS:
                w = result_width(e, self.widths, ctx)
                self.expr(e.lhs, w)
                self.expr(e.rhs, w)
                self.emit(_BINOP[e.op], 0, -1)
                self.emit(MASK, mask(w))
                return
            else:
                w = compare_width(e, self.widths)
                self.expr(e.lhs, w)
                self.emit(MASK, mask(w))
                self.expr(e.rhs, w)
                self.emit(MASK, mask(w))
            self.emit(_BINOP[e.op], 0, -1)
            return
        if isinstance(e, Conditional):
            w = result_width(e, self.widths, ctx)
            self.expr(e.cond, None)
            self.expr(e.then, w)
            self.expr(e.other, w)
            self.emit(SEL, 0, -2)
            self.emit(MASK, mask(w))
            return
        if isinstance(e, SystemCall):
            if self.call is None:
                raise ValueError(f"{e.name} needs trace context")
            self.emit(SIG, self.call(e), +1)
            return
        raise TypeError(f"not a boolean expression: {e!r}")


def compile_expr(expr, widths: Mapping[str, int], index: Mapping[str, int],
                 call: Callable | None = None, ctx: int | None = None) -> Program:
    em = _Emitter(widths, index, call)
    em.expr(expr, ctx)
    return Program(np.asarray(em.ops, dtype=np.int64), np.asarray(em.args, dtype=np.int64),
                   max(em.depth, 1))


def _run_numpy(ops, args, depth, cols):
    stack = []
    for op, arg in zip(ops.tolist(), args.tolist()):
        if op == SIG:
            stack.append(cols[arg])
        elif op == CONST:
            stack.append(np.full(cols.shape[1], arg, dtype=np.int64))
        elif op == MASK:
            stack[-1] = stack[-1] & arg
        elif op == SHR:
            stack[-1] = stack[-1] >> arg
        elif op == LNOT:
            stack[-1] = (stack[-1] == 0).astype(np.int64)
        elif op == TRUTH:
            stack[-1] = (stack[-1] != 0).astype(np.int64)
        elif op == BNOT:
            stack[-1] = ~stack[-1]
        elif op == NEG:
            stack[-1] = -stack[-1]
        elif op == SEL:
            f = stack.pop()
            t = stack.pop()
            c = stack.pop()
            stack.append(np.where(c != 0, t, f))
        else:
            b = stack.pop()
            a = stack.pop()
            if op == ADD:
                r = a + b
            elif op == SUB:
                r = a - b
            elif op == AND:
                r = a & b
            elif op == OR:
                r = a | b
            elif op == XOR:
                r = a ^ b
            elif op == LAND:
                r = ((a != 0) & (b != 0)).astype(np.int64)
            elif op == LOR:
                r = ((a != 0) | (b != 0)).astype(np.int64)
            elif op == EQ:
                r = (a == b).astype(np.int64)
            elif op == NE:
                r = (a != b).astype(np.int64)
            elif op == LT:
                r = (a < b).astype(np.int64)
            elif op == LE:
                r = (a <= b).astype(np.int64)
            elif op == GT:
                r = (a > b).astype(np.int64)
            else:
                r = (a >= b).astype(np.int64)
            stack.append(r)
    return np.ascontiguousarray(stack[0], dtype=np.int64)


_BLOCK = 512

if HAS_NUMBA:
    @njit(cache=True, nogil=True)
    def _chunk(ops, args, cols, lo, n, stack):  # pragma: no cover - compiled
        sp = 0
        for k in range(ops.shape[0]):
            op = ops[k]
            arg = args[k]
            if op == SIG:
                for i in range(n):
                    stack[sp, i] = cols[arg, lo + i]
                sp += 1
            elif op == CONST:
                for i in range(n):
                    stack[sp, i] = arg
                sp += 1
            elif op == SEL:
                sp -= 2
                c, t, f = stack[sp - 1], stack[sp], stack[sp + 1]
                for i in range(n):
                    c[i] = t[i] if c[i] != 0 else f[i]
            elif op <= NEG:
                x = stack[sp - 1]
                if op == MASK:
                    for i in range(n):
                        x[i] &= arg
                elif op == SHR:
                    for i in range(n):
                        x[i] >>= arg
                elif op == LNOT:
                    for i in range(n):
                        x[i] = x[i] == 0
                elif op == TRUTH:
                    for i in range(n):
                        x[i] = x[i] != 0
                elif op == BNOT:
                    for i in range(n):
                        x[i] = ~x[i]
                elif op == NEG:
                    for i in range(n):
                        x[i] = -x[i]
            else:
                sp -= 1
                a = stack[sp - 1]
                b = stack[sp]
                if op == ADD:
                    for i in range(n):
                        a[i] = a[i] + b[i]
                elif op == SUB:
                    for i in range(n):
                        a[i] = a[i] - b[i]
                elif op == AND:
                    for i in range(n):
                        a[i] = a[i] & b[i]
                elif op == OR:
                    for i in range(n):
                        a[i] = a[i] | b[i]
                elif op == XOR:
                    for i in range(n):
                        a[i] = a[i] ^ b[i]
                elif op == LAND:
                    for i in range(n):
                        a[i] = (a[i] != 0) & (b[i] != 0)
                elif op == LOR:
                    for i in range(n):
                        a[i] = (a[i] != 0) | (b[i] != 0)
                elif op == EQ:
                    for i in range(n):
                        a[i] = a[i] == b[i]
                elif op == NE:
                    for i in range(n):
                        a[i] = a[i] != b[i]
                elif op == LT:
                    for i in range(n):
                        a[i] = a[i] < b[i]
                elif op == LE:
                    for i in range(n):
                        a[i] = a[i] <= b[i]
                elif op == GT:
                    for i in range(n):
                        a[i] = a[i] > b[i]
                else:
                    for i in range(n):
                        a[i] = a[i] >= b[i]

    @njit(cache=True, nogil=True)
    def _run_numba(ops, args, depth, cols):  # pragma: no cover - compiled
        # run the whole program on one cache-sized block of environments at a
        # time, so the stack never leaves L1
        n = cols.shape[1]
        out = np.empty(n, dtype=np.int64)
        stack = np.empty((depth, _BLOCK), dtype=np.int64)
        for lo in range(0, n, _BLOCK):
            m = min(_BLOCK, n - lo)
            _chunk(ops, args, cols, lo, m, stack)
            for i in range(m):
                out[lo + i] = stack[0, i]
        return out


_backend = "numpy" if (not HAS_NUMBA or os.environ.get("SVAGEN_DISABLE_NUMBA", "") not in ("", "0")) \
    else "numba"


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def get_backend() -> str:
    return _backend


def run(program: Program, cols: np.ndarray) -> np.ndarray:
    """Evaluate ``program`` for every column of ``cols`` (shape: signals x N)."""
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    if cols.ndim != 2:
        raise ValueError("cols must be 2-D (signals x environments)")
    if cols.shape[0] == 0:
        cols = np.zeros((1, cols.shape[1]), dtype=np.int64)
    if _backend == "numba":
        return _run_numba(program.ops, program.args, program.depth, cols)
    return _run_numpy(program.ops, program.args, program.depth, cols)
