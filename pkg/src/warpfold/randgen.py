"""Random kernel generator for differential testing.

Programs are built over a restricted grammar that keeps them safe by
construction: loops have constant trips, divisions are by nonzero constants,
global accesses are indexed by the thread id, shared-memory phases are
write / barrier / read triples, and any construct containing a barrier or
collective is guarded only by conditions that are uniform across the barrier's
scope (block-uniform for block barriers, warp-uniform for warp-level events).
Divergent branches are allowed only around barrier-free code.

The generator emits source text, so every sample also exercises the parser.
"""

from __future__ import annotations

import random

_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")
_ARITH_OPS = ("+", "-", "*")


class KernelGen:
    def __init__(self, seed: int, warp_size: int = 4, block_size: int = 8):
        self.rng = random.Random(seed)
        self.warp_size = warp_size
        self.block_size = block_size
        self.locals: list[str] = []
        self.n_locals = 0
        self.shared_len = block_size
        self.lines: list[str] = []
        self.indent = 1

    # --- expressions ---

    def scalar(self) -> str:
        choices = ["tid", "tx", str(self.rng.randint(-4, 9)), "sparam", "blockIdx.x"]
        choices += self.locals * 2
        return self.rng.choice(choices)

    def expr(self, depth: int = 0) -> str:
        if depth >= 2 or self.rng.random() < 0.4:
            base = self.scalar()
            if self.rng.random() < 0.25:
                return f"gin[{self.index_expr()}]"
            return base
        op = self.rng.choice(_ARITH_OPS + ("/", "%"))
        left = self.expr(depth + 1)
        if op in ("/", "%"):
            return f"({left} {op} {self.rng.choice(['2', '3', '5'])})"
        return f"({left} {op} {self.expr(depth + 1)})"

    def index_expr(self) -> str:
        return "tid"

    def cond(self, uniform: str | None) -> str:
        """uniform: None (free), 'warp' or 'block'."""
        if uniform is None:
            left = self.expr(1)
        elif uniform == "warp":
            # constant over each warp: warp id, scalars, block index
            left = self.rng.choice(
                [f"(tx / {self.warp_size})", "sparam", "blockIdx.x",
                 f"(tid / {self.warp_size})"])
        else:
            left = self.rng.choice(["sparam", "blockIdx.x", "gridDim.x"])
        return f"{left} {self.rng.choice(_CMP_OPS)} {self.rng.randint(-2, 4)}"

    # --- statements ---

    def emit(self, text: str):
        self.lines.append("    " * self.indent + text)

    def new_local(self, init: str) -> str:
        name = f"v{self.n_locals}"
        self.n_locals += 1
        self.emit(f"i32 {name} = {init};")
        self.locals.append(name)
        return name

    def stmt_assign(self, level):
        if self.locals and self.rng.random() < 0.6:
            self.emit(f"{self.rng.choice(self.locals)} = {self.expr()};")
        else:
            self.new_local(self.expr())

    def stmt_store(self, level):
        self.emit(f"gout[{self.index_expr()}] = {self.expr()};")

    def stmt_shared_phase(self, level):
        # write / barrier / read: race-free cross-thread exchange
        if level != "block":
            return
        offset = self.rng.randint(1, self.block_size - 1)
        self.emit(f"s[tx] = {self.expr(1)};")
        self.emit("__syncthreads();")
        self.new_local(f"s[(tx + {offset}) % blockDim.x]")
        self.emit("__syncthreads();")

    def stmt_collective(self, level):
        if level == "none":
            return
        kind = self.rng.choice(("shfl", "all", "any"))
        if kind == "shfl":
            offset = self.rng.randint(0, self.warp_size)
            self.new_local(f"shfl_down({self.expr(1)}, {offset})")
        else:
            self.new_local(f"vote_{'all' if kind == 'all' else 'any'}({self.cond(None)})")

    def stmt_syncwarp(self, level):
        if level == "none":
            return
        self.emit("__syncwarp();")

    def stmt_if_uniform(self, level, depth):
        if level == "none" or depth >= 2:
            return
        # inside a warp-uniform branch, only warp-scoped events stay aligned
        scope = "block" if (level == "block" and self.rng.random() < 0.5) else "warp"
        inner_level = scope
        self.emit(f"if ({self.cond(scope)}) {{")
        self.indent += 1
        saved = len(self.locals)
        self.block(depth + 1, inner_level, max_stmts=2)
        del self.locals[saved:]
        self.indent -= 1
        self.emit("}")

    def stmt_if_divergent(self, level, depth):
        if depth >= 2:
            return
        self.emit(f"if ({self.cond(None)}) {{")
        self.indent += 1
        saved = len(self.locals)
        self.block(depth + 1, "none", max_stmts=2)
        del self.locals[saved:]
        self.indent -= 1
        self.emit("}")
        if self.rng.random() < 0.4:
            # rewrite into if/else by appending an else branch
            self.lines[-1] = self.lines[-1] + " else {"
            self.indent += 1
            saved = len(self.locals)
            self.block(depth + 1, "none", max_stmts=1)
            del self.locals[saved:]
            self.indent -= 1
            self.emit("}")

    def stmt_for(self, level, depth):
        if depth >= 2:
            return
        trips = self.rng.randint(1, 3)
        var = f"it{self.n_locals}"
        self.n_locals += 1
        self.emit(f"for (i32 {var} = 0; {var} < {trips}; {var} = {var} + 1) {{")
        self.indent += 1
        saved = len(self.locals)
        self.block(depth + 1, level, max_stmts=2)
        del self.locals[saved:]
        self.indent -= 1
        self.emit("}")

    def block(self, depth: int, level: str, max_stmts: int):
        """level: 'block' (any events), 'warp' (warp events only), 'none'."""
        n = self.rng.randint(1, max_stmts)
        for _ in range(n):
            pick = self.rng.random()
            if pick < 0.30:
                self.stmt_assign(level)
            elif pick < 0.42:
                self.stmt_store(level)
            elif pick < 0.52:
                self.stmt_shared_phase(level)
            elif pick < 0.64:
                self.stmt_collective(level)
            elif pick < 0.70:
                self.stmt_syncwarp(level)
            elif pick < 0.80:
                self.stmt_if_uniform(level, depth)
            elif pick < 0.90:
                self.stmt_if_divergent(level, depth)
            else:
                self.stmt_for(level, depth)

    def generate(self) -> str:
        self.lines = [
            "__global__ void fuzz(global i32* gin, global i32* gout, i32 sparam) {",
        ]
        self.indent = 1
        self.emit(f"shared i32 s[{self.shared_len}];")
        self.emit("i32 tx = threadIdx.x;")
        self.emit("i32 tid = threadIdx.x + blockIdx.x * blockDim.x;")
        self.locals = []
        self.n_locals = 0
        self.block(0, "block", max_stmts=4)
        self.emit(f"gout[{self.index_expr()}] = gout[tid] + {self.expr(1)};")
        self.lines.append("}")
        return "\n".join(self.lines) + "\n"


def generate_kernel(seed: int, warp_size: int = 4, block_size: int = 8) -> str:
    return KernelGen(seed, warp_size, block_size).generate()
