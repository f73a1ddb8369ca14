"""CFG intermediate representation: blocks of straight-line instructions.

Instruction identity matters: every instruction and terminator carries a uid
assigned at build time, and passes that clone or derive instructions preserve
provenance through `src_uid`. Execution-count checks rely on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from ..dsl import nodes as n
from ..dsl.checker import SymbolTable
from ..dsl.printer import print_expr, print_lvalue

WARP = "warp"
BLOCK = "block"

# Barrier.origin values
SOURCE = "source"
RAW_HAZARD = "raw-hazard"
WAR_HAZARD = "war-hazard"
EXTRA = "extra"

# Barrier.hint values (internal placement intent, used by the purity split)
H_BOUNDARY = "boundary"
H_FENCE_HEAD = "fence-head"
H_FENCE_EXIT = "fence-exit"
H_FENCE_TAIL = "fence-tail"

VOTE_BUFFER = "__warp_vote"
SHFL_BUFFER = "__warp_shfl"
LANE_BUFFERS = (VOTE_BUFFER, SHFL_BUFFER)


# --- instructions ---

@dataclass
class Assign:
    uid: int
    target: n.LValue
    expr: n.Expr
    src_uid: Optional[int] = None


@dataclass
class DeclLocal:
    uid: int
    name: str
    kind: str


@dataclass
class DeclShared:
    uid: int
    name: str
    kind: str
    length: int


@dataclass
class Collective:
    """Pre-lowering marker: dest = op(args) over the whole warp."""
    uid: int
    dest: str
    op: str
    args: tuple


@dataclass
class Barrier:
    uid: int
    level: str              # warp | block
    origin: str             # source | raw-hazard | war-hazard | extra
    hint: Optional[str] = None


Instr = Union[Assign, DeclLocal, DeclShared, Collective, Barrier]


# --- terminators ---

@dataclass
class Br:
    uid: int
    target: str


@dataclass
class CondBr:
    uid: int
    cond: n.Expr
    then_target: str
    else_target: str


@dataclass
class Ret:
    uid: int


Terminator = Union[Br, CondBr, Ret]


def successors(term: Terminator) -> list[str]:
    if isinstance(term, Br):
        return [term.target]
    if isinstance(term, CondBr):
        return [term.then_target, term.else_target]
    return []


def retarget(term: Terminator, old: str, new: str) -> Terminator:
    if isinstance(term, Br) and term.target == old:
        return replace(term, target=new)
    if isinstance(term, CondBr):
        t = new if term.then_target == old else term.then_target
        e = new if term.else_target == old else term.else_target
        return replace(term, then_target=t, else_target=e)
    return term


# --- blocks and graphs ---

@dataclass
class Block:
    bid: str
    instrs: list = field(default_factory=list)
    term: Optional[Terminator] = None
    peel_level: Optional[str] = None   # warp|block when this is a peeled branch block

    def barrier_levels(self) -> set:
        return {i.level for i in self.instrs if isinstance(i, Barrier)}

    def has_barrier(self, level: Optional[str] = None) -> bool:
        for i in self.instrs:
            if isinstance(i, Barrier) and (level is None or i.level == level):
                return True
        return False

    def real_instr_count(self) -> int:
        """Instructions other than barriers and declarations."""
        return sum(1 for i in self.instrs if not isinstance(i, (Barrier, DeclLocal, DeclShared)))


class Cfg:
    def __init__(self, name: str, symbols: SymbolTable):
        self.name = name
        self.symbols = symbols
        self.blocks: dict[str, Block] = {}
        self.entry: str = ""
        self.exit: str = ""
        self._next_uid = 0
        self._next_name = 0

    # --- construction helpers ---

    def new_uid(self) -> int:
        self._next_uid += 1
        return self._next_uid

    def fresh_block(self, hint: str) -> Block:
        self._next_name += 1
        bid = f"{hint}.{self._next_name}"
        while bid in self.blocks:
            self._next_name += 1
            bid = f"{hint}.{self._next_name}"
        blk = Block(bid)
        self.blocks[bid] = blk
        return blk

    def add_block(self, blk: Block) -> Block:
        if blk.bid in self.blocks:
            raise ValueError(f"duplicate block id {blk.bid!r}")
        self.blocks[blk.bid] = blk
        return blk

    def fresh_local(self, prefix: str, kind: str) -> str:
        i = 0
        name = f"{prefix}{i}"
        while name in self.symbols.locals or name in self.symbols.params or name in self.symbols.shared:
            i += 1
            name = f"{prefix}{i}"
        self.symbols.locals[name] = kind
        return name

    # --- graph queries ---

    def order(self) -> list[str]:
        return list(self.blocks.keys())

    def succs(self, bid: str) -> list[str]:
        return successors(self.blocks[bid].term)

    def preds(self) -> dict:
        p: dict[str, list] = {bid: [] for bid in self.blocks}
        for bid, blk in self.blocks.items():
            for s in successors(blk.term):
                p[s].append(bid)
        return p

    def reachable(self) -> list[str]:
        seen = []
        seen_set = set()
        stack = [self.entry]
        while stack:
            bid = stack.pop()
            if bid in seen_set:
                continue
            seen_set.add(bid)
            seen.append(bid)
            for s in reversed(self.succs(bid)):
                stack.append(s)
        return seen

    def drop_unreachable(self) -> None:
        keep = set(self.reachable())
        for bid in [b for b in self.blocks if b not in keep]:
            del self.blocks[bid]

    def instructions(self):
        for blk in self.blocks.values():
            for i in blk.instrs:
                yield blk, i


# --- textual dump (deterministic, used by --emit-cfg and snapshots) ---

def format_instr(i: Instr) -> str:
    if isinstance(i, Assign):
        return f"{print_lvalue(i.target)} = {print_expr(i.expr)}"
    if isinstance(i, DeclLocal):
        return f"decl {i.kind} {i.name}"
    if isinstance(i, DeclShared):
        return f"decl shared {i.kind} {i.name}[{i.length}]"
    if isinstance(i, Collective):
        args = ", ".join(print_expr(a) for a in i.args)
        return f"{i.dest} = {i.op}({args})"
    if isinstance(i, Barrier):
        tag = "" if i.origin == SOURCE else f" [{i.origin}]"
        return f"barrier.{i.level}{tag}"
    raise TypeError(type(i).__name__)


def format_term(t: Terminator) -> str:
    if isinstance(t, Br):
        return f"br {t.target}"
    if isinstance(t, CondBr):
        return f"br {print_expr(t.cond)} ? {t.then_target} : {t.else_target}"
    return "ret"


def format_cfg(cfg: Cfg) -> str:
    lines = [f"kernel {cfg.name} (entry={cfg.entry}, exit={cfg.exit})"]
    for bid, blk in cfg.blocks.items():
        peel = " [peel]" if blk.peel_level else ""
        lines.append(f"{bid}:{peel}")
        for i in blk.instrs:
            lines.append(f"    {format_instr(i)}")
        lines.append(f"    {format_term(blk.term)}")
    return "\n".join(lines) + "\n"
