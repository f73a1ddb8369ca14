"""Semantic checks: name resolution and kind (type) rules.

Locals live in a single per-kernel namespace once lowered to the CFG, so the
checker rejects redeclaration outright instead of supporting shadowing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SemanticError
from . import nodes as n

I32, F32 = n.I32, n.F32


@dataclass
class SymbolTable:
    """Per-kernel name information, reused by the CFG builder and interpreters."""
    params: dict = field(default_factory=dict)   # name -> Param
    locals: dict = field(default_factory=dict)   # name -> kind
    shared: dict = field(default_factory=dict)   # name -> (kind, length)

    def is_array(self, name: str) -> bool:
        if name in self.shared:
            return True
        p = self.params.get(name)
        return p is not None and p.is_buffer

    def element_kind(self, name: str) -> str:
        if name in self.shared:
            return self.shared[name][0]
        return self.params[name].kind

    def scalar_kind(self, name: str) -> str:
        if name in self.locals:
            return self.locals[name]
        p = self.params.get(name)
        if p is not None and not p.is_buffer:
            return p.kind
        raise KeyError(name)


class _Checker:
    def __init__(self, kernel: n.KernelDef):
        self.kernel = kernel
        self.table = SymbolTable()
        self.scopes: list[set] = [set()]

    def fail(self, msg: str):
        raise SemanticError(f"in kernel {self.kernel.name!r}: {msg}")

    def run(self) -> SymbolTable:
        for p in self.kernel.params:
            if p.name in self.table.params:
                self.fail(f"duplicate parameter {p.name!r}")
            self.table.params[p.name] = p
            self.scopes[0].add(p.name)
        self.check_block(self.kernel.body)
        return self.table

    def declare(self, name: str, kind: str, shared_len=None):
        if name in self.table.params or name in self.table.locals or name in self.table.shared:
            self.fail(f"redeclaration of {name!r} (shadowing is not supported)")
        if shared_len is None:
            self.table.locals[name] = kind
        else:
            self.table.shared[name] = (kind, shared_len)
        self.scopes[-1].add(name)

    def visible(self, name: str) -> bool:
        return any(name in s for s in self.scopes)

    def check_block(self, stmts, extra_scope=True):
        if extra_scope:
            self.scopes.append(set())
        for s in stmts:
            self.check_stmt(s)
        if extra_scope:
            self.scopes.pop()

    def check_stmt(self, s: n.Stmt):
        if isinstance(s, n.DeclLocal):
            if s.init is not None:
                k = self.expr_kind(s.init)
                self.require_assignable(s.kind, k, s.name)
            self.declare(s.name, s.kind)
        elif isinstance(s, n.DeclShared):
            self.declare(s.name, s.kind, shared_len=s.length)
        elif isinstance(s, n.Assign):
            self.check_assign(s)
        elif isinstance(s, n.If):
            self.require_i32(self.expr_kind(s.cond), "if condition")
            self.check_block(s.then)
            if s.orelse is not None:
                self.check_block(s.orelse)
        elif isinstance(s, n.For):
            self.scopes.append(set())
            self.check_stmt(s.init)
            self.require_i32(self.expr_kind(s.cond), "for condition")
            self.check_assign(s.step)
            self.check_block(s.body, extra_scope=False)
            self.scopes.pop()
        elif isinstance(s, (n.SyncThreads, n.SyncWarp, n.Return)):
            pass
        else:
            self.fail(f"unknown statement {type(s).__name__}")

    def check_assign(self, s: n.Assign):
        t = s.target
        if isinstance(t, n.VarTarget):
            if not self.visible(t.name):
                self.fail(f"unknown identifier {t.name!r}")
            if t.name in self.table.params:
                if self.table.params[t.name].is_buffer:
                    self.fail(f"buffer parameter {t.name!r} can only be assigned through indexing")
                self.fail(f"cannot assign to parameter {t.name!r}")
            if t.name in self.table.shared:
                self.fail(f"shared array {t.name!r} can only be assigned through indexing")
            target_kind = self.table.locals[t.name]
        else:
            if not self.visible(t.base):
                self.fail(f"unknown identifier {t.base!r}")
            if not self.table.is_array(t.base):
                self.fail(f"{t.base!r} is not an array")
            self.require_i32(self.expr_kind(t.index), f"index into {t.base!r}")
            target_kind = self.table.element_kind(t.base)
        self.require_assignable(target_kind, self.expr_kind(s.expr), _target_name(t))

    def require_assignable(self, target_kind: str, value_kind: str, name: str):
        if target_kind == value_kind:
            return
        if target_kind == F32 and value_kind == I32:
            return  # implicit widening
        self.fail(f"cannot assign {value_kind} value to {target_kind} {name!r}")

    def require_i32(self, kind: str, what: str):
        if kind != I32:
            self.fail(f"{what} must be i32, got {kind}")

    # kind inference

    def expr_kind(self, e: n.Expr) -> str:
        if isinstance(e, n.IntLit):
            return I32
        if isinstance(e, n.FloatLit):
            return F32
        if isinstance(e, n.BuiltinRef):
            return I32
        if isinstance(e, n.VarRef):
            if not self.visible(e.name):
                self.fail(f"unknown identifier {e.name!r}")
            if self.table.is_array(e.name):
                self.fail(f"array {e.name!r} used without an index")
            return self.table.scalar_kind(e.name)
        if isinstance(e, n.IndexExpr):
            if not self.visible(e.base):
                self.fail(f"unknown identifier {e.base!r}")
            if not self.table.is_array(e.base):
                self.fail(f"{e.base!r} is not an array")
            self.require_i32(self.expr_kind(e.index), f"index into {e.base!r}")
            return self.table.element_kind(e.base)
        if isinstance(e, n.Unary):
            k = self.expr_kind(e.operand)
            if e.op == "!":
                self.require_i32(k, "operand of '!'")
                return I32
            return k
        if isinstance(e, n.Binary):
            lk = self.expr_kind(e.left)
            rk = self.expr_kind(e.right)
            if e.op in ("&&", "||"):
                self.require_i32(lk, f"operand of {e.op!r}")
                self.require_i32(rk, f"operand of {e.op!r}")
                return I32
            if e.op == "%" and (lk == F32 or rk == F32):
                self.fail("'%' is not defined for f32 operands")
            if e.op in ("==", "!=", "<", "<=", ">", ">="):
                return I32
            return F32 if F32 in (lk, rk) else I32
        if isinstance(e, n.CollectiveCall):
            if e.op == "shfl_down":
                val_kind = self.expr_kind(e.args[0])
                self.require_i32(self.expr_kind(e.args[1]), "shfl_down offset")
                return val_kind
            self.require_i32(self.expr_kind(e.args[0]), f"{e.op} predicate")
            return I32
        self.fail(f"unexpected expression {type(e).__name__}")


def _target_name(t: n.LValue) -> str:
    return t.name if isinstance(t, n.VarTarget) else t.base


def check_kernel(kernel: n.KernelDef) -> SymbolTable:
    return _Checker(kernel).run()


def check_module(module: n.KernelModule) -> dict:
    """Validate every kernel; returns {kernel name: SymbolTable}."""
    seen = set()
    tables = {}
    for k in module.kernels:
        if k.name in seen:
            raise SemanticError(f"duplicate kernel name {k.name!r}")
        seen.add(k.name)
        tables[k.name] = check_kernel(k)
    return tables
