"""Scalar semantics shared by both interpreters.

i32 arithmetic wraps modulo 2**32 with C-style truncating division; f32 is IEEE
single precision via numpy. Both engines call into these helpers so results are
bit-identical whenever the evaluation order matches.
"""

from __future__ import annotations

import numpy as np

from .errors import ExecutionError

I32 = "i32"
F32 = "f32"

_U32 = 0xFFFFFFFF


def wrap_i32(v: int) -> int:
    v &= _U32
    return v - 0x100000000 if v >= 0x80000000 else v


def i32_div(a: int, b: int) -> int:
    if b == 0:
        raise ExecutionError("integer division by zero")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap_i32(q)


def i32_rem(a: int, b: int) -> int:
    if b == 0:
        raise ExecutionError("integer remainder by zero")
    return wrap_i32(a - i32_div(a, b) * b)


def f32(v) -> np.float32:
    return np.float32(v)


def zero(kind: str):
    return np.float32(0.0) if kind == F32 else 0


def numpy_dtype(kind: str):
    return np.float32 if kind == F32 else np.int32


def binary_op(op: str, kind: str, a, b):
    """Apply a binary operator with the semantics of the given result kind.

    Comparison and logic operators always yield i32 0/1 regardless of operand
    kind; `kind` here is the operand kind after promotion.
    """
    if kind == F32:
        a = np.float32(a)
        b = np.float32(b)
    if op == "+":
        return f32(a + b) if kind == F32 else wrap_i32(a + b)
    if op == "-":
        return f32(a - b) if kind == F32 else wrap_i32(a - b)
    if op == "*":
        return f32(a * b) if kind == F32 else wrap_i32(a * b)
    if op == "/":
        if kind == F32:
            return f32(np.divide(a, b))
        return i32_div(a, b)
    if op == "%":
        if kind == F32:
            raise ExecutionError("% is not defined for f32")
        return i32_rem(a, b)
    if op == "==":
        return 1 if a == b else 0
    if op == "!=":
        return 1 if a != b else 0
    if op == "<":
        return 1 if a < b else 0
    if op == "<=":
        return 1 if a <= b else 0
    if op == ">":
        return 1 if a > b else 0
    if op == ">=":
        return 1 if a >= b else 0
    if op == "&&":
        return 1 if (a != 0 and b != 0) else 0
    if op == "||":
        return 1 if (a != 0 or b != 0) else 0
    raise ExecutionError(f"unknown binary operator {op!r}")


def unary_op(op: str, kind: str, a):
    if op == "-":
        return f32(-a) if kind == F32 else wrap_i32(-a)
    if op == "!":
        return 1 if a == 0 else 0
    raise ExecutionError(f"unknown unary operator {op!r}")
