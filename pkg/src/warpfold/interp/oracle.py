"""Lockstep reference interpreter: ground truth for the transformation.

Every logical thread of a block runs the untransformed CFG. Threads are
grouped into warps; a warp advances its lanes until each reaches a
synchronization event (warp barrier, collective, block barrier, or exit) and
requires all lanes to arrive at the same site, which is exactly the aligned-
barrier contract. Collectives are computed directly over the lanes' operand
values. Warps are advanced serially (warp 0 up to its next block-level event,
then warp 1, ...), a legal witness of the hardware's unordered interleaving
that keeps differential runs reproducible.
"""

from __future__ import annotations

import numpy as np

from ..dsl import nodes as n
from ..dsl.nodes import KernelDef
from ..cfg import ir
from ..config import LaunchConfig
from ..errors import BarrierViolation, ExecutionError
from ..numerics import numpy_dtype, zero
from .evalexpr import eval_expr
from .trace import ExecTrace

_DEFAULT_STEP_LIMIT = 50_000_000


class _LaneScope:
    def __init__(self, tid: int, block_index: int, config: LaunchConfig,
                 bound: dict, shared: dict, locals_kinds: dict):
        self.tid = tid
        self.block_index = block_index
        self.config = config
        self.bound = bound
        self.shared = shared
        self.locals_kinds = locals_kinds
        self.env: dict = {}

    def read_var(self, name: str):
        if name in self.env:
            return self.env[name]
        if name in self.bound:
            return self.bound[name]
        # reading a declared-but-unassigned local: defined as the kind's zero
        return zero(self.locals_kinds.get(name, n.I32))

    def builtin(self, name: str):
        if name == "threadIdx.x":
            return self.tid
        if name == "blockIdx.x":
            return self.block_index
        if name == "blockDim.x":
            return self.config.block_size
        if name == "gridDim.x":
            return self.config.grid_size
        raise ExecutionError(f"unknown builtin {name!r}")

    def load(self, base: str, idx: int):
        arr = self.shared.get(base)
        if arr is None:
            arr = self.bound.get(base)
        if arr is None or not isinstance(arr, np.ndarray):
            raise ExecutionError(f"{base!r} is not an array")
        if idx < 0 or idx >= len(arr):
            raise ExecutionError(f"out-of-bounds read {base}[{idx}], length {len(arr)}")
        v = arr[idx]
        return int(v) if arr.dtype == np.int32 else v

    def store(self, base: str, idx, value):
        if idx is None:
            self.env[base] = value
            return
        arr = self.shared.get(base)
        if arr is None:
            arr = self.bound.get(base)
        if arr is None or not isinstance(arr, np.ndarray):
            raise ExecutionError(f"{base!r} is not an array")
        if idx < 0 or idx >= len(arr):
            raise ExecutionError(f"out-of-bounds write {base}[{idx}], length {len(arr)}")
        arr[idx] = value

    def lane(self):
        raise ExecutionError("lane-buffer form in untransformed code")

    def vote(self, buffer, kind):
        raise ExecutionError("lane-buffer form in untransformed code")


class _Lane:
    """One logical thread, run as a generator yielding synchronization events."""

    def __init__(self, cfg: ir.Cfg, scope: _LaneScope, trace: ExecTrace | None,
                 step_limit: int):
        self.cfg = cfg
        self.scope = scope
        self.trace = trace
        self.step_limit = step_limit
        self.gen = self._run()
        self.event = None
        self.done = False

    def step(self, value=None):
        try:
            self.event = self.gen.send(value)
        except StopIteration:
            self.done = True
            self.event = None

    def _run(self):
        cfg, scope, trace = self.cfg, self.scope, self.trace
        steps = 0
        bid = cfg.entry
        while True:
            blk = cfg.blocks[bid]
            for instr in blk.instrs:
                steps += 1
                if steps > self.step_limit:
                    raise ExecutionError(f"thread {scope.tid} exceeded the step limit")
                if trace is not None:
                    trace.count_instr(instr.uid)
                if isinstance(instr, ir.Assign):
                    value = eval_expr(instr.expr, scope)
                    t = instr.target
                    if isinstance(t, n.VarTarget):
                        scope.store(t.name, None, value)
                    else:
                        scope.store(t.base, eval_expr(t.index, scope), value)
                elif isinstance(instr, ir.Collective):
                    args = tuple(eval_expr(a, scope) for a in instr.args)
                    result = yield ("collective", instr.uid, instr.op, args)
                    scope.store(instr.dest, None, result)
                elif isinstance(instr, ir.Barrier):
                    yield ("barrier", instr.uid, instr.level)
                # declarations need no action
            term = blk.term
            if trace is not None:
                trace.count_term(term.uid)
            if isinstance(term, ir.Br):
                bid = term.target
            elif isinstance(term, ir.CondBr):
                bid = term.then_target if eval_expr(term.cond, scope) != 0 else term.else_target
            else:
                return


def _resolve_collective(op: str, args: list, warp_size: int) -> list:
    if op == "vote_all":
        r = 1 if all(a[0] != 0 for a in args) else 0
        return [r] * len(args)
    if op == "vote_any":
        r = 1 if any(a[0] != 0 for a in args) else 0
        return [r] * len(args)
    if op == "shfl_down":
        values = [a[0] for a in args]
        results = []
        for i, a in enumerate(args):
            src = i + a[1]
            results.append(values[src] if 0 <= src < warp_size else values[i])
        return results
    raise ExecutionError(f"unknown collective {op!r}")


def _violation(message: str, lanes: list, events: list) -> BarrierViolation:
    detail = ", ".join(
        f"t{l.scope.tid}:{'exit' if l.done else _fmt_event(e)}"
        for l, e in zip(lanes, events))
    return BarrierViolation(f"{message} [{detail}]")


def _fmt_event(e) -> str:
    if e is None:
        return "running"
    if e[0] == "barrier":
        return f"barrier#{e[1]}({e[2]})"
    return f"{e[2]}#{e[1]}"


def _advance_warp(lanes: list, warp_size: int, trace: ExecTrace | None):
    """Run a warp until all lanes exit or park at one block-level barrier."""
    while True:
        for lane in lanes:
            if not lane.done and lane.event is None:
                lane.step()
        if all(lane.done for lane in lanes):
            return ("done", None)
        events = [lane.event for lane in lanes]
        if any(lane.done for lane in lanes):
            raise _violation("some threads of a warp exited while others wait", lanes, events)
        sites = {(e[0], e[1]) for e in events}
        if len(sites) != 1:
            raise _violation("threads of a warp reached different synchronization points",
                             lanes, events)
        kind, uid = next(iter(sites))
        if kind == "collective":
            if len(lanes) != warp_size:
                raise ExecutionError(
                    f"collective in a partial warp of {len(lanes)} threads "
                    f"(warp size {warp_size})")
            results = _resolve_collective(events[0][2], [e[3] for e in events], warp_size)
            for lane, r in zip(lanes, results):
                lane.step(r)
            continue
        level = events[0][2]
        if level == ir.WARP:
            if trace is not None:
                trace.record_arrival(uid, [lane.scope.tid for lane in lanes])
            for lane in lanes:
                lane.event = None
            continue
        return ("block", uid)


def run_block(cfg: ir.Cfg, config: LaunchConfig, bound: dict, block_index: int,
              trace: ExecTrace | None = None,
              step_limit: int = _DEFAULT_STEP_LIMIT) -> None:
    shared = {name: np.zeros(length, dtype=numpy_dtype(kind))
              for name, (kind, length) in cfg.symbols.shared.items()}
    lanes = [
        _Lane(cfg,
              _LaneScope(tid, block_index, config, bound, shared, cfg.symbols.locals),
              trace, step_limit)
        for tid in range(config.block_size)
    ]
    warps = [lanes[i:i + config.warp_size]
             for i in range(0, len(lanes), config.warp_size)]

    states = [_advance_warp(w, config.warp_size, trace) for w in warps]
    while not all(s[0] == "done" for s in states):
        parked = {s[1] for s in states if s[0] == "block"}
        if any(s[0] == "done" for s in states) or len(parked) != 1:
            detail = ", ".join(f"warp{i}:{s[0]}#{s[1]}" if s[0] == "block" else f"warp{i}:done"
                               for i, s in enumerate(states))
            raise BarrierViolation(
                f"block-level barrier not reached by all warps [{detail}]")
        if trace is not None:
            trace.record_arrival(next(iter(parked)),
                                 [lane.scope.tid for lane in lanes])
        for w, s in zip(warps, states):
            if s[0] == "block":
                for lane in w:
                    lane.event = None
        states = [_advance_warp(w, config.warp_size, trace) if s[0] == "block" else s
                  for w, s in zip(warps, states)]


def run_oracle(kernel: KernelDef, config: LaunchConfig, bound: dict,
               trace: ExecTrace | None = None,
               step_limit: int = _DEFAULT_STEP_LIMIT) -> None:
    """Execute the kernel in SPMD semantics over already-bound arguments.

    `bound` maps parameter names to numpy views (buffers) or scalars; buffer
    contents are mutated in place. Blocks run sequentially.
    """
    from ..passes.pipeline import prepare_kernel_cfg

    config.validate()
    cfg = prepare_kernel_cfg(kernel)
    for block_index in range(config.grid_size):
        run_block(cfg, config, bound, block_index, trace, step_limit)
