"""Lower the AST to a CFG.

Shapes produced here:
  * If: the current block ends with a conditional branch to then/else blocks
    that join at a merge block.
  * For: a bottom-tested loop guarded by an initial test, i.e.
    [init; guard-branch] -> body ... [step; latch-branch] with the back edge
    leaving the latch. Both branch sites evaluate the same source condition,
    so each thread still evaluates it trips+1 times.
  * Collectives are hoisted out of expressions into dedicated marker
    instructions, in evaluation order, so later passes only see collectives
    at instruction granularity.

Returns are routed to a single synthetic exit block.
"""

from __future__ import annotations

from ..dsl import nodes as n
from ..dsl.checker import SymbolTable, check_kernel
from ..errors import TransformError
from . import ir


class _Builder:
    def __init__(self, kernel: n.KernelDef, symbols: SymbolTable):
        self.kernel = kernel
        self.cfg = ir.Cfg(kernel.name, symbols)
        self.cur: ir.Block | None = None

    def build(self) -> ir.Cfg:
        cfg = self.cfg
        entry = ir.Block("entry")
        cfg.add_block(entry)
        cfg.entry = "entry"
        exit_blk = ir.Block("exit", term=ir.Ret(cfg.new_uid()))
        cfg.add_block(exit_blk)
        cfg.exit = "exit"

        self.cur = entry
        self.lower_stmts(self.kernel.body)
        if self.cur is not None:
            self.cur.term = ir.Br(cfg.new_uid(), "exit")
        # keep exit last in iteration order
        del cfg.blocks["exit"]
        cfg.blocks["exit"] = exit_blk
        return cfg

    def emit(self, instr: ir.Instr):
        if self.cur is None:
            return  # unreachable code after return
        self.cur.instrs.append(instr)

    def lower_stmts(self, stmts):
        for s in stmts:
            self.lower_stmt(s)

    def lower_stmt(self, s: n.Stmt):
        cfg = self.cfg
        if self.cur is None:
            return
        if isinstance(s, n.DeclLocal):
            self.emit(ir.DeclLocal(cfg.new_uid(), s.name, s.kind))
            if s.init is not None:
                expr = self.flatten(s.init)
                self.emit(ir.Assign(cfg.new_uid(), n.VarTarget(s.name), expr))
        elif isinstance(s, n.DeclShared):
            self.emit(ir.DeclShared(cfg.new_uid(), s.name, s.kind, s.length))
        elif isinstance(s, n.Assign):
            index = None
            if isinstance(s.target, n.IndexTarget):
                index = self.flatten(s.target.index)
            expr = self.flatten(s.expr)
            target = s.target if index is None else n.IndexTarget(s.target.base, index)
            self.emit(ir.Assign(cfg.new_uid(), target, expr))
        elif isinstance(s, n.SyncThreads):
            self.emit(ir.Barrier(cfg.new_uid(), ir.BLOCK, ir.SOURCE))
        elif isinstance(s, n.SyncWarp):
            self.emit(ir.Barrier(cfg.new_uid(), ir.WARP, ir.SOURCE))
        elif isinstance(s, n.Return):
            self.cur.term = ir.Br(cfg.new_uid(), "exit")
            self.cur = None
        elif isinstance(s, n.If):
            self.lower_if(s)
        elif isinstance(s, n.For):
            self.lower_for(s)
        else:
            raise TransformError(f"cannot lower {type(s).__name__}")

    def lower_if(self, s: n.If):
        cfg = self.cfg
        cond = self.flatten(s.cond)
        merge = cfg.fresh_block("if.merge")
        then_blk = cfg.fresh_block("if.then") if s.then else None
        else_blk = cfg.fresh_block("if.else") if s.orelse else None
        then_target = then_blk.bid if then_blk else merge.bid
        else_target = else_blk.bid if else_blk else merge.bid
        self.cur.term = ir.CondBr(cfg.new_uid(), cond, then_target, else_target)

        if then_blk is not None:
            self.cur = then_blk
            self.lower_stmts(s.then)
            if self.cur is not None:
                self.cur.term = ir.Br(cfg.new_uid(), merge.bid)
        if else_blk is not None:
            self.cur = else_blk
            self.lower_stmts(s.orelse)
            if self.cur is not None:
                self.cur.term = ir.Br(cfg.new_uid(), merge.bid)
        self.cur = merge

    def lower_for(self, s: n.For):
        cfg = self.cfg
        self.lower_stmt(s.init)

        body = cfg.fresh_block("loop.body")
        after = cfg.fresh_block("loop.after")

        guard_cond = self.flatten(s.cond)
        self.cur.term = ir.CondBr(cfg.new_uid(), guard_cond, body.bid, after.bid)

        self.cur = body
        self.lower_stmts(s.body)
        if self.cur is not None:
            # latch: step, then re-test the condition; back edge to the body
            self.lower_stmt(s.step)
            latch_cond = self.flatten(s.cond)
            self.cur.term = ir.CondBr(cfg.new_uid(), latch_cond, body.bid, after.bid)
        self.cur = after

    def flatten(self, e: n.Expr) -> n.Expr:
        """Hoist collectives out of an expression, left to right."""
        if isinstance(e, n.CollectiveCall):
            args = tuple(self.flatten(a) for a in e.args)
            kind = self.collective_kind(e.op, args)
            dest = self.cfg.fresh_local("__cc", kind)
            self.emit(ir.Collective(self.cfg.new_uid(), dest, e.op, args))
            return n.VarRef(dest)
        if isinstance(e, n.Unary):
            return n.Unary(e.op, self.flatten(e.operand))
        if isinstance(e, n.Binary):
            left = self.flatten(e.left)
            right = self.flatten(e.right)
            return n.Binary(e.op, left, right)
        if isinstance(e, n.IndexExpr):
            return n.IndexExpr(e.base, self.flatten(e.index))
        return e

    def collective_kind(self, op: str, args) -> str:
        if op == "shfl_down":
            return infer_kind(args[0], self.cfg.symbols)
        return n.I32


def infer_kind(e: n.Expr, symbols: SymbolTable) -> str:
    """Result kind of a checked expression (no error paths, checker ran already)."""
    if isinstance(e, (n.IntLit, n.BuiltinRef, n.LaneIdx, n.VoteReduce)):
        return n.I32
    if isinstance(e, n.FloatLit):
        return n.F32
    if isinstance(e, n.VarRef):
        return symbols.scalar_kind(e.name)
    if isinstance(e, n.IndexExpr):
        if e.base in ir.LANE_BUFFERS:
            return n.I32  # interpreters store scalars; kind is informational here
        if e.base in symbols.locals:
            return symbols.locals[e.base]  # replicated local
        return symbols.element_kind(e.base)
    if isinstance(e, n.Unary):
        return n.I32 if e.op == "!" else infer_kind(e.operand, symbols)
    if isinstance(e, n.Binary):
        if e.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
            return n.I32
        lk = infer_kind(e.left, symbols)
        rk = infer_kind(e.right, symbols)
        return n.F32 if n.F32 in (lk, rk) else n.I32
    if isinstance(e, n.Select):
        return infer_kind(e.if_true, symbols)
    if isinstance(e, n.CollectiveCall):
        if e.op == "shfl_down":
            return infer_kind(e.args[0], symbols)
        return n.I32
    raise TransformError(f"cannot infer kind of {type(e).__name__}")


def build_cfg(kernel: n.KernelDef, symbols: SymbolTable | None = None) -> ir.Cfg:
    if symbols is None:
        symbols = check_kernel(kernel)
    return _Builder(kernel, symbols).build()
