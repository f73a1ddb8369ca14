"""Recursive-descent parser for the kernel language.

parse_module() is the only entry point: it tokenizes, parses and runs the
semantic checker, so a returned module always satisfies the language rules.
"""

from __future__ import annotations

from ..errors import ParseError, SemanticError, UnsupportedFeatureError
from .lexer import Token, UNSUPPORTED_CALLS, tokenize
from . import nodes as n

_ASSIGN_OPS = {"=": None, "+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%"}
_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")

_FULL_MASKS = (-1, 0xFFFFFFFF)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # token helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text!r}" if t.text else f"expected {text!r}, found end of input")
        return self.next()

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # grammar

    def module(self) -> n.KernelModule:
        kernels = []
        while self.peek().type != "eof":
            kernels.append(self.kernel())
        return n.KernelModule(kernels)

    def kernel(self) -> n.KernelDef:
        self.expect("__global__")
        self.expect("void")
        name = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        body = self.block()
        return n.KernelDef(name, params, body)

    def param(self) -> n.Param:
        if self.accept("global"):
            kind = self.kind()
            self.expect("*")
            return n.Param(self.ident(), kind, is_buffer=True)
        kind = self.kind()
        return n.Param(self.ident(), kind, is_buffer=False)

    def kind(self) -> str:
        t = self.peek()
        if t.text in ("i32", "f32"):
            self.next()
            return t.text
        self.fail(f"expected a type (i32 or f32), found {t.text!r}")

    def ident(self) -> str:
        t = self.peek()
        if t.type != "ident":
            self.fail(f"expected identifier, found {t.text!r}")
        if "." in t.text:
            self.fail(f"{t.text!r} is not a valid identifier")
        return self.next().text

    def block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().type == "eof":
                self.fail("unterminated block, expected '}'")
            stmts.append(self.stmt())
        self.expect("}")
        return stmts

    def block_or_stmt(self) -> list:
        if self.at("{"):
            return self.block()
        return [self.stmt()]

    def stmt(self) -> n.Stmt:
        t = self.peek()
        if t.text == "shared":
            return self.decl_shared()
        if t.text in ("i32", "f32"):
            return self.decl_local()
        if t.text == "if":
            return self.if_stmt()
        if t.text == "for":
            return self.for_stmt()
        if t.text == "__syncthreads":
            self.next()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return n.SyncThreads()
        if t.text == "__syncwarp":
            self.next()
            self.expect("(")
            # an explicit mask argument must name all lanes
            if not self.at(")"):
                mask = self.expr()
                if _literal_mask(mask) not in _FULL_MASKS:
                    raise UnsupportedFeatureError(
                        f"{t.line}:{t.col}: dynamic mask unsupported: __syncwarp requires the all-lanes mask")
            self.expect(")")
            self.expect(";")
            return n.SyncWarp()
        if t.text == "return":
            self.next()
            self.expect(";")
            return n.Return()
        if t.text == "switch":
            self.fail("switch statements are not part of this language")
        if t.type == "ident" and t.text in UNSUPPORTED_CALLS and self.peek(1).text == "(":
            raise UnsupportedFeatureError(f"{t.line}:{t.col}: unsupported feature: {UNSUPPORTED_CALLS[t.text]}")
        stmt = self.assign()
        self.expect(";")
        return stmt

    def decl_local(self) -> n.DeclLocal:
        kind = self.kind()
        name = self.ident()
        init = None
        if self.accept("="):
            init = self.expr()
        self.expect(";")
        return n.DeclLocal(name, kind, init)

    def decl_shared(self) -> n.DeclShared:
        self.expect("shared")
        kind = self.kind()
        name = self.ident()
        self.expect("[")
        t = self.peek()
        if t.type != "int":
            self.fail("shared array length must be a compile-time integer constant")
        length = _int_value(self.next().text)
        self.expect("]")
        self.expect(";")
        if length <= 0:
            raise SemanticError(f"shared array {name!r} must have positive length", t.line, t.col)
        return n.DeclShared(name, kind, length)

    def if_stmt(self) -> n.If:
        self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block_or_stmt()
        orelse = None
        if self.accept("else"):
            orelse = self.block_or_stmt()
        return n.If(cond, then, orelse)

    def for_stmt(self) -> n.For:
        self.expect("for")
        self.expect("(")
        if self.peek().text in ("i32", "f32"):
            kind = self.kind()
            name = self.ident()
            self.expect("=")
            init = n.DeclLocal(name, kind, self.expr())
        else:
            init = self.assign()
        self.expect(";")
        cond = self.expr()
        self.expect(";")
        step = self.assign(allow_incdec=True)
        self.expect(")")
        body = self.block_or_stmt()
        return n.For(init, cond, step, body)

    def assign(self, allow_incdec: bool = False) -> n.Assign:
        target = self.lvalue()
        t = self.peek()
        if allow_incdec and t.text in ("++", "--"):
            self.next()
            ref = _target_ref(target)
            op = "+" if t.text == "++" else "-"
            return n.Assign(target, n.Binary(op, ref, n.IntLit(1)))
        if t.text not in _ASSIGN_OPS:
            self.fail(f"expected an assignment operator, found {t.text!r}")
        self.next()
        expr = self.expr()
        base_op = _ASSIGN_OPS[t.text]
        if base_op is not None:
            expr = n.Binary(base_op, _target_ref(target), expr)
        return n.Assign(target, expr)

    def lvalue(self) -> n.LValue:
        name = self.ident()
        if self.accept("["):
            index = self.expr()
            self.expect("]")
            return n.IndexTarget(name, index)
        return n.VarTarget(name)

    # expressions, precedence climbing

    def expr(self) -> n.Expr:
        return self.or_expr()

    def or_expr(self) -> n.Expr:
        e = self.and_expr()
        while self.at("||"):
            self.next()
            e = n.Binary("||", e, self.and_expr())
        return e

    def and_expr(self) -> n.Expr:
        e = self.cmp_expr()
        while self.at("&&"):
            self.next()
            e = n.Binary("&&", e, self.cmp_expr())
        return e

    def cmp_expr(self) -> n.Expr:
        e = self.add_expr()
        while self.peek().text in _CMP_OPS:
            op = self.next().text
            e = n.Binary(op, e, self.add_expr())
        return e

    def add_expr(self) -> n.Expr:
        e = self.mul_expr()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            e = n.Binary(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> n.Expr:
        e = self.unary_expr()
        while self.peek().text in ("*", "/", "%"):
            op = self.next().text
            e = n.Binary(op, e, self.unary_expr())
        return e

    def unary_expr(self) -> n.Expr:
        t = self.peek()
        if t.text in ("-", "!"):
            self.next()
            operand = self.unary_expr()
            if t.text == "-" and isinstance(operand, n.IntLit):
                return n.IntLit(-operand.value)
            if t.text == "-" and isinstance(operand, n.FloatLit):
                return n.FloatLit(-operand.value)
            return n.Unary(t.text, operand)
        return self.postfix_expr()

    def postfix_expr(self) -> n.Expr:
        t = self.peek()
        if t.type == "int":
            self.next()
            return n.IntLit(_int_value(t.text))
        if t.type == "float":
            self.next()
            return n.FloatLit(float(t.text.rstrip("f")))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.text in n.COLLECTIVES:
            return self.collective()
        if t.type not in ("ident", "keyword"):
            self.fail(f"expected an expression, found {t.text!r}")
        if t.text in n.BUILTINS:
            self.next()
            return n.BuiltinRef(t.text)
        if t.text in UNSUPPORTED_CALLS and self.peek(1).text == "(":
            raise UnsupportedFeatureError(f"{t.line}:{t.col}: unsupported feature: {UNSUPPORTED_CALLS[t.text]}")
        name = self.ident()
        if self.at("("):
            self.fail(f"unknown function {name!r}")
        if self.accept("["):
            index = self.expr()
            self.expect("]")
            return n.IndexExpr(name, index)
        return n.VarRef(name)

    def collective(self) -> n.CollectiveCall:
        t = self.next()
        op = t.text
        self.expect("(")
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        expected = 2 if op == "shfl_down" else 1
        if len(args) == expected + 1:
            # leading mask argument: it must statically name every lane
            mask = _literal_mask(args[0])
            if mask not in _FULL_MASKS:
                raise UnsupportedFeatureError(
                    f"{t.line}:{t.col}: dynamic mask unsupported: {op} requires the "
                    f"all-lanes mask (-1 or 0xffffffff)")
            args = args[1:]
        if len(args) != expected:
            raise ParseError(f"{op} expects {expected} argument(s)", t.line, t.col)
        return n.CollectiveCall(op, tuple(args))


def _literal_mask(e: n.Expr):
    if isinstance(e, n.IntLit):
        return e.value
    return None


def _target_ref(target: n.LValue) -> n.Expr:
    if isinstance(target, n.VarTarget):
        return n.VarRef(target.name)
    return n.IndexExpr(target.base, target.index)


def _int_value(text: str) -> int:
    return int(text, 16) if text.lower().startswith("0x") else int(text)


def parse_module(source: str) -> n.KernelModule:
    """Parse and validate a module; raises ParseError / SemanticError /
    UnsupportedFeatureError with line:col positions on bad input."""
    module = _Parser(tokenize(source)).module()
    from .checker import check_module
    check_module(module)
    return module
