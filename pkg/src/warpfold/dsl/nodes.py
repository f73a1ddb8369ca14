"""AST node definitions for the kernel language.

Expression nodes are shared with the CFG layer; the lowering passes add a few
IR-only forms (Select, LaneIdx, VoteReduce) that the parser never produces.
Every node compares structurally, which is what the round-trip tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

I32 = "i32"
F32 = "f32"

BUILTINS = ("threadIdx.x", "blockIdx.x", "blockDim.x", "gridDim.x")
COLLECTIVES = ("shfl_down", "vote_all", "vote_any")


# --- expressions ---

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class FloatLit:
    value: float


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class BuiltinRef:
    name: str  # one of BUILTINS


@dataclass(frozen=True)
class IndexExpr:
    base: str
    index: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str  # - !
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / % == != < <= > >= && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class CollectiveCall:
    op: str  # shfl_down | vote_all | vote_any
    args: tuple


# IR-only expression forms.

@dataclass(frozen=True)
class Select:
    cond: "Expr"
    if_true: "Expr"
    if_false: "Expr"


@dataclass(frozen=True)
class LaneIdx:
    """Index of the current thread within its warp."""


@dataclass(frozen=True)
class VoteReduce:
    buffer: str
    kind: str  # all | any


Expr = Union[IntLit, FloatLit, VarRef, BuiltinRef, IndexExpr, Unary, Binary,
             CollectiveCall, Select, LaneIdx, VoteReduce]


# --- lvalues ---

@dataclass(frozen=True)
class VarTarget:
    name: str


@dataclass(frozen=True)
class IndexTarget:
    base: str
    index: Expr


LValue = Union[VarTarget, IndexTarget]


# --- statements ---

@dataclass
class Assign:
    target: LValue
    expr: Expr


@dataclass
class DeclLocal:
    name: str
    kind: str
    init: Optional[Expr] = None


@dataclass
class DeclShared:
    name: str
    kind: str
    length: int


@dataclass
class If:
    cond: Expr
    then: list = field(default_factory=list)
    orelse: Optional[list] = None


@dataclass
class For:
    init: "Stmt"          # DeclLocal with init, or Assign
    cond: Expr
    step: Assign
    body: list = field(default_factory=list)


@dataclass
class SyncThreads:
    pass


@dataclass
class SyncWarp:
    pass


@dataclass
class Return:
    pass


Stmt = Union[Assign, DeclLocal, DeclShared, If, For, SyncThreads, SyncWarp, Return]


# --- kernels ---

@dataclass
class Param:
    name: str
    kind: str
    is_buffer: bool


@dataclass
class KernelDef:
    name: str
    params: list
    body: list


@dataclass
class KernelModule:
    kernels: list

    def kernel(self, name: Optional[str] = None) -> KernelDef:
        if name is None:
            if not self.kernels:
                raise KeyError("module has no kernels")
            return self.kernels[0]
        for k in self.kernels:
            if k.name == name:
                return k
        raise KeyError(f"no kernel named {name!r}")


def walk_exprs(e: Expr):
    """Yield e and all sub-expressions."""
    yield e
    if isinstance(e, IndexExpr):
        yield from walk_exprs(e.index)
    elif isinstance(e, Unary):
        yield from walk_exprs(e.operand)
    elif isinstance(e, Binary):
        yield from walk_exprs(e.left)
        yield from walk_exprs(e.right)
    elif isinstance(e, CollectiveCall):
        for a in e.args:
            yield from walk_exprs(a)
    elif isinstance(e, Select):
        yield from walk_exprs(e.cond)
        yield from walk_exprs(e.if_true)
        yield from walk_exprs(e.if_false)


def walk_stmts(stmts):
    """Yield every statement, depth first."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            if s.orelse is not None:
                yield from walk_stmts(s.orelse)
        elif isinstance(s, For):
            yield s.init
            yield s.step
            yield from walk_stmts(s.body)


def stmt_exprs(s: Stmt):
    if isinstance(s, Assign):
        if isinstance(s.target, IndexTarget):
            yield from walk_exprs(s.target.index)
        yield from walk_exprs(s.expr)
    elif isinstance(s, DeclLocal) and s.init is not None:
        yield from walk_exprs(s.init)
    elif isinstance(s, If):
        yield from walk_exprs(s.cond)
    elif isinstance(s, For):
        yield from walk_exprs(s.cond)


def uses_warp_features(kernel: KernelDef) -> bool:
    """True if the kernel needs warp-aware translation (collectives or syncwarp)."""
    for s in walk_stmts(kernel.body):
        if isinstance(s, SyncWarp):
            return True
        for e in stmt_exprs(s):
            if isinstance(e, CollectiveCall):
                return True
    return False
