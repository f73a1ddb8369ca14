"""Expression evaluation shared by both engines.

Values are python ints (i32, kept in wrapped range by the operator helpers)
and numpy float32 scalars (f32); the operand types pick the semantics, which
is safe because the checker rules out narrowing assignments.
"""

from __future__ import annotations

import numpy as np

from ..dsl import nodes as n
from ..errors import ExecutionError
from ..numerics import F32, I32, binary_op, unary_op


def value_kind(v) -> str:
    return F32 if isinstance(v, np.floating) else I32


def eval_expr(e: n.Expr, scope):
    if isinstance(e, n.IntLit):
        return e.value
    if isinstance(e, n.FloatLit):
        return np.float32(e.value)
    if isinstance(e, n.VarRef):
        return scope.read_var(e.name)
    if isinstance(e, n.BuiltinRef):
        return scope.builtin(e.name)
    if isinstance(e, n.IndexExpr):
        idx = eval_expr(e.index, scope)
        return scope.load(e.base, idx)
    if isinstance(e, n.Unary):
        v = eval_expr(e.operand, scope)
        return unary_op(e.op, value_kind(v), v)
    if isinstance(e, n.Binary):
        a = eval_expr(e.left, scope)
        b = eval_expr(e.right, scope)
        kind = F32 if (isinstance(a, np.floating) or isinstance(b, np.floating)) else I32
        return binary_op(e.op, kind, a, b)
    if isinstance(e, n.Select):
        if eval_expr(e.cond, scope) != 0:
            return eval_expr(e.if_true, scope)
        return eval_expr(e.if_false, scope)
    if isinstance(e, n.LaneIdx):
        return scope.lane()
    if isinstance(e, n.VoteReduce):
        return scope.vote(e.buffer, e.kind)
    raise ExecutionError(f"cannot evaluate {type(e).__name__}")
