"""Interpreter for transformed programs.

A transformed program is an ordinary sequential CFG (loops and branches over
one simulated block), so execution is a straight block-at-a-time walk. For
speed, every expression is compiled once per program (per process) into a
closure; operand kinds are resolved statically from the symbol table. All
mutable state lives in a BlockContext, never shared between block executors.
"""

from __future__ import annotations

import weakref

import numpy as np

from ..dsl import nodes as n
from ..cfg import ir
from ..cfg.build import infer_kind
from ..config import LaunchConfig
from ..errors import ExecutionError
from ..numerics import F32, I32, i32_div, i32_rem, numpy_dtype, wrap_i32, zero
from ..passes.warp_lower import reduce_vote
from ..passes.pipeline import MpmdProgram
from .trace import ExecTrace

_DEFAULT_STEP_LIMIT = 200_000_000


class BlockContext:
    """Per-block execution state; one per in-flight block."""

    def __init__(self, program: MpmdProgram, config: LaunchConfig,
                 bound: dict, block_index: int):
        if program.specialized is not None:
            want = (program.specialized["block_size"], program.specialized["grid_size"])
            have = (config.block_size, config.grid_size)
            if want != have:
                raise ExecutionError(
                    f"program specialized for block/grid {want}, launched with {have}")
        self.program = program
        self.config = config
        self.block_index = block_index
        self.bound = bound
        self.env: dict = {}
        self.shared = {name: np.zeros(length, dtype=numpy_dtype(kind))
                       for name, (kind, length) in program.shared.items()}
        self.lane = {buf: [0] * program.warp_size for buf in ir.LANE_BUFFERS}
        self.repl = {}
        for name, r in program.replicated.items():
            length = program.warp_size if r.extent == ir.WARP else config.block_size
            self.repl[name] = np.zeros(length, dtype=numpy_dtype(r.kind))


# --- expression compilation ---

def _check(idx: int, length: int, base: str):
    if idx < 0 or idx >= length:
        raise ExecutionError(f"out-of-bounds access {base}[{idx}], length {length}")
    return idx


def _compile_load(program: MpmdProgram, base: str, idx_fn):
    symbols = program.symbols
    if base in ir.LANE_BUFFERS:
        def load(ctx, env):
            arr = ctx.lane[base]
            return arr[_check(idx_fn(ctx, env), len(arr), base)]
        return load
    if base in program.replicated or base in symbols.shared:
        source, kind = ("repl", symbols.locals[base]) if base in program.replicated \
            else ("shared", symbols.shared[base][0])
        to_int = kind == I32

        def load(ctx, env):
            arr = getattr(ctx, source)[base]
            v = arr[_check(idx_fn(ctx, env), len(arr), base)]
            return int(v) if to_int else v
        return load
    # global buffer parameter
    to_int = symbols.element_kind(base) == I32

    def load(ctx, env):
        arr = ctx.bound[base]
        v = arr[_check(idx_fn(ctx, env), len(arr), base)]
        return int(v) if to_int else v
    return load


def _compile_store(program: MpmdProgram, base: str, idx_fn):
    symbols = program.symbols
    if base in ir.LANE_BUFFERS:
        def store(ctx, env, value):
            arr = ctx.lane[base]
            arr[_check(idx_fn(ctx, env), len(arr), base)] = value
        return store
    source = "repl" if base in program.replicated else \
        "shared" if base in symbols.shared else "bound"

    def store(ctx, env, value):
        arr = getattr(ctx, source)[base]
        arr[_check(idx_fn(ctx, env), len(arr), base)] = value
    return store


_I32_BIN = {
    "+": lambda a, b: wrap_i32(a + b),
    "-": lambda a, b: wrap_i32(a - b),
    "*": lambda a, b: wrap_i32(a * b),
    "/": i32_div,
    "%": i32_rem,
}
_F32_BIN = {
    "+": lambda a, b: np.float32(a + b),
    "-": lambda a, b: np.float32(a - b),
    "*": lambda a, b: np.float32(a * b),
    "/": lambda a, b: np.float32(np.divide(np.float32(a), np.float32(b))),
}
_CMP = {
    "==": lambda a, b: 1 if a == b else 0,
    "!=": lambda a, b: 1 if a != b else 0,
    "<": lambda a, b: 1 if a < b else 0,
    "<=": lambda a, b: 1 if a <= b else 0,
    ">": lambda a, b: 1 if a > b else 0,
    ">=": lambda a, b: 1 if a >= b else 0,
}


def _compile_expr(program: MpmdProgram, e: n.Expr):
    symbols = program.symbols
    if isinstance(e, n.IntLit):
        v = e.value
        return lambda ctx, env: v
    if isinstance(e, n.FloatLit):
        v = np.float32(e.value)
        return lambda ctx, env: v
    if isinstance(e, n.VarRef):
        name = e.name
        if name in symbols.params:
            return lambda ctx, env: ctx.bound[name]
        default = zero(symbols.locals.get(name, I32))
        return lambda ctx, env: env.get(name, default)
    if isinstance(e, n.BuiltinRef):
        name = e.name
        if name == "blockIdx.x":
            return lambda ctx, env: ctx.block_index
        if name == "blockDim.x":
            return lambda ctx, env: ctx.config.block_size
        if name == "gridDim.x":
            return lambda ctx, env: ctx.config.grid_size
        # threadIdx survives only when a mutated pipeline left a block unwrapped
        return lambda ctx, env: 0
    if isinstance(e, n.IndexExpr):
        return _compile_load(program, e.base, _compile_expr(program, e.index))
    if isinstance(e, n.Unary):
        operand = _compile_expr(program, e.operand)
        if e.op == "!":
            return lambda ctx, env: 1 if operand(ctx, env) == 0 else 0
        if infer_kind(e.operand, symbols) == F32:
            return lambda ctx, env: np.float32(-operand(ctx, env))
        return lambda ctx, env: wrap_i32(-operand(ctx, env))
    if isinstance(e, n.Binary):
        left = _compile_expr(program, e.left)
        right = _compile_expr(program, e.right)
        op = e.op
        if op in _CMP:
            fn = _CMP[op]
            return lambda ctx, env: fn(left(ctx, env), right(ctx, env))
        if op == "&&":
            return lambda ctx, env: 1 if (left(ctx, env) != 0 and right(ctx, env) != 0) else 0
        if op == "||":
            return lambda ctx, env: 1 if (left(ctx, env) != 0 or right(ctx, env) != 0) else 0
        f32_op = infer_kind(e.left, symbols) == F32 or infer_kind(e.right, symbols) == F32
        fn = _F32_BIN[op] if f32_op else _I32_BIN[op]
        return lambda ctx, env: fn(left(ctx, env), right(ctx, env))
    if isinstance(e, n.Select):
        cond = _compile_expr(program, e.cond)
        if_true = _compile_expr(program, e.if_true)
        if_false = _compile_expr(program, e.if_false)
        return lambda ctx, env: if_true(ctx, env) if cond(ctx, env) != 0 else if_false(ctx, env)
    if isinstance(e, n.LaneIdx):
        return lambda ctx, env: 0  # rewritten away except under mutations
    if isinstance(e, n.VoteReduce):
        buf, kind = e.buffer, e.kind
        return lambda ctx, env: reduce_vote(ctx.lane[buf], kind)
    raise ExecutionError(f"cannot compile {type(e).__name__}")


def _compile_instr(program: MpmdProgram, instr: ir.Instr):
    if isinstance(instr, ir.Assign):
        value = _compile_expr(program, instr.expr)
        t = instr.target
        if isinstance(t, n.VarTarget):
            name = t.name

            def run(ctx, env):
                env[name] = value(ctx, env)
            return run
        store = _compile_store(program, t.base, _compile_expr(program, t.index))

        def run(ctx, env):
            store(ctx, env, value(ctx, env))
        return run
    if isinstance(instr, ir.Barrier):
        def run(ctx, env):
            raise ExecutionError("barrier executed in transformed code")
        return run
    return None  # declarations


def _compile_block(program: MpmdProgram, blk: ir.Block):
    fns = [f for f in (_compile_instr(program, i) for i in blk.instrs) if f is not None]
    uids = [i.uid for i in blk.instrs]
    term = blk.term
    if isinstance(term, ir.Br):
        target = term.target
        term_fn = lambda ctx, env: target
    elif isinstance(term, ir.CondBr):
        cond = _compile_expr(program, term.cond)
        then_t, else_t = term.then_target, term.else_target
        term_fn = lambda ctx, env: then_t if cond(ctx, env) != 0 else else_t
    else:
        term_fn = lambda ctx, env: None
    return fns, term_fn, uids, term.uid


_compiled_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def compiled_table(program: MpmdProgram) -> dict:
    table = _compiled_cache.get(program)
    if table is None:
        table = {bid: _compile_block(program, blk) for bid, blk in program.cfg.blocks.items()}
        _compiled_cache[program] = table
    return table


def run_mpmd(program: MpmdProgram, ctx: BlockContext,
             trace: ExecTrace | None = None,
             step_limit: int = _DEFAULT_STEP_LIMIT) -> None:
    """Run one block of a transformed program to completion."""
    table = compiled_table(program)
    env = ctx.env
    steps = 0
    bid = program.cfg.entry
    while bid is not None:
        fns, term_fn, uids, term_uid = table[bid]
        steps += len(uids) + 1
        if steps > step_limit:
            raise ExecutionError(f"block {ctx.block_index} exceeded the step limit")
        if trace is not None:
            trace.instr_counts.update(uids)
            trace.term_counts[term_uid] += 1
        for fn in fns:
            fn(ctx, env)
        bid = term_fn(ctx, env)
