"""Pretty printer. parse(pretty_print(m)) is structurally equal to m."""

from __future__ import annotations

from . import nodes as n

_PREC = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5, "%": 5,
}
_UNARY_PREC = 6


def print_expr(e: n.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, n.IntLit):
        return str(e.value) if e.value >= 0 else f"(-{-e.value})" if parent_prec >= _UNARY_PREC else str(e.value)
    if isinstance(e, n.FloatLit):
        text = repr(float(e.value))
        if "e" not in text and "." not in text:
            text += ".0"
        return text if e.value >= 0 or parent_prec < _UNARY_PREC else f"({text})"
    if isinstance(e, n.VarRef):
        return e.name
    if isinstance(e, n.BuiltinRef):
        return e.name
    if isinstance(e, n.IndexExpr):
        return f"{e.base}[{print_expr(e.index)}]"
    if isinstance(e, n.Unary):
        inner = print_expr(e.operand, _UNARY_PREC)
        text = f"{e.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, n.Binary):
        prec = _PREC[e.op]
        left = print_expr(e.left, prec)
        right = print_expr(e.right, prec + 1)  # left associative
        text = f"{left} {e.op} {right}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, n.CollectiveCall):
        args = ", ".join(print_expr(a) for a in e.args)
        return f"{e.op}({args})"
    # IR-only forms, printed for dumps (not re-parseable)
    if isinstance(e, n.Select):
        return f"select({print_expr(e.cond)}, {print_expr(e.if_true)}, {print_expr(e.if_false)})"
    if isinstance(e, n.LaneIdx):
        return "@lane"
    if isinstance(e, n.VoteReduce):
        return f"@vote_{e.kind}({e.buffer})"
    raise TypeError(f"cannot print {type(e).__name__}")


def print_lvalue(t: n.LValue) -> str:
    if isinstance(t, n.VarTarget):
        return t.name
    return f"{t.base}[{print_expr(t.index)}]"


def _print_stmt(s: n.Stmt, out: list, indent: int):
    pad = "    " * indent
    if isinstance(s, n.DeclLocal):
        if s.init is None:
            out.append(f"{pad}{s.kind} {s.name};")
        else:
            out.append(f"{pad}{s.kind} {s.name} = {print_expr(s.init)};")
    elif isinstance(s, n.DeclShared):
        out.append(f"{pad}shared {s.kind} {s.name}[{s.length}];")
    elif isinstance(s, n.Assign):
        out.append(f"{pad}{print_lvalue(s.target)} = {print_expr(s.expr)};")
    elif isinstance(s, n.If):
        out.append(f"{pad}if ({print_expr(s.cond)}) {{")
        for inner in s.then:
            _print_stmt(inner, out, indent + 1)
        if s.orelse is None:
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}}} else {{")
            for inner in s.orelse:
                _print_stmt(inner, out, indent + 1)
            out.append(f"{pad}}}")
    elif isinstance(s, n.For):
        init = _print_inline(s.init)
        step = _print_inline(s.step)
        out.append(f"{pad}for ({init}; {print_expr(s.cond)}; {step}) {{")
        for inner in s.body:
            _print_stmt(inner, out, indent + 1)
        out.append(f"{pad}}}")
    elif isinstance(s, n.SyncThreads):
        out.append(f"{pad}__syncthreads();")
    elif isinstance(s, n.SyncWarp):
        out.append(f"{pad}__syncwarp();")
    elif isinstance(s, n.Return):
        out.append(f"{pad}return;")
    else:
        raise TypeError(f"cannot print {type(s).__name__}")


def _print_inline(s: n.Stmt) -> str:
    if isinstance(s, n.DeclLocal):
        return f"{s.kind} {s.name} = {print_expr(s.init)}"
    if isinstance(s, n.Assign):
        return f"{print_lvalue(s.target)} = {print_expr(s.expr)}"
    raise TypeError(f"cannot print {type(s).__name__} inline")


def pretty_print(module: n.KernelModule) -> str:
    """Render a module back to source text."""
    out: list[str] = []
    for k in module.kernels:
        params = ", ".join(
            f"global {p.kind}* {p.name}" if p.is_buffer else f"{p.kind} {p.name}"
            for p in k.params
        )
        out.append(f"__global__ void {k.name}({params}) {{")
        for s in k.body:
            _print_stmt(s, out, 1)
        out.append("}")
        out.append("")
    return "\n".join(out[:-1]) + "\n" if out else ""
