"""End-to-end transformation driver and the specializer.

hybrid_transform picks flat or hierarchical translation (auto mode inspects
the kernel for warp-level features), runs the pass pipeline, and returns an
MpmdProgram: a barrier-free CFG plus the metadata interpreters need.

specialize folds the launch configuration into a program as constants:
blockDim/gridDim become literals, loops whose trip folds to one are bypassed
with their induction variable pinned to zero, and peel branches whose flag is
provably constant turn unconditional.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..dsl import nodes as n
from ..dsl.checker import SymbolTable, check_kernel
from ..dsl.nodes import KernelDef, uses_warp_features
from ..config import LaunchConfig
from ..errors import UnsupportedFeatureError
from ..cfg import ir, build_cfg, canonicalize, compute_domtrees
from ..numerics import binary_op, unary_op, wrap_i32
from .warp_lower import lower_collectives, verify_hazard_barriers
from .barriers import insert_extra_barriers, verify_fences
from .split import split_at_barriers
from .regions import find_parallel_regions, verify_regions
from .wrap import TX, WID, TransformMeta, assert_no_barriers, delete_barriers, wrap_regions
from .replicate import replicate_locals

SNAPSHOT_STEPS = ("step1", "step2", "step3", "step4", "step5")


@dataclass
class TransformOptions:
    check: bool = True
    insert_raw: bool = True        # mutation knob: raw-hazard warp barriers
    insert_war: bool = True        # mutation knob: war-hazard warp barriers
    insert_if_extras: bool = True  # mutation knob: extra barriers for conditionals

    @property
    def mutated(self) -> bool:
        return not (self.insert_raw and self.insert_war and self.insert_if_extras)


@dataclass(eq=False)  # identity semantics: programs are cached by object
class MpmdProgram:
    name: str
    params: list
    cfg: ir.Cfg
    mode: str                   # flat | hier
    warp_size: int
    meta: TransformMeta
    replicated: dict            # name -> ReplicatedLocal
    shared: dict                # name -> (kind, length)
    original_instr_uids: set
    original_term_uids: set
    specialized: Optional[dict] = None   # {"block_size", "grid_size"} when folded in
    snapshots: dict = field(default_factory=dict)

    @property
    def symbols(self) -> SymbolTable:
        return self.cfg.symbols

    def src_map(self) -> dict:
        """uid -> originating uid (identity where the instruction is original)."""
        out = {}
        for _, instr in self.cfg.instructions():
            src = getattr(instr, "src_uid", None)
            out[instr.uid] = src if src is not None else instr.uid
        return out


def prepare_kernel_cfg(kernel: KernelDef, symbols: SymbolTable | None = None) -> ir.Cfg:
    """Shared front half: the reference interpreter runs this exact CFG, so
    instruction uids line up between the two engines by construction."""
    return canonicalize(build_cfg(kernel, symbols))


def original_uids(cfg: ir.Cfg) -> tuple[set, set]:
    instr_uids = set()
    term_uids = set()
    for bid, blk in cfg.blocks.items():
        for i in blk.instrs:
            if isinstance(i, (ir.Assign, ir.Collective)):
                instr_uids.add(i.uid)
        term_uids.add(blk.term.uid)
    return instr_uids, term_uids


def resolve_mode(kernel: KernelDef, mode: str) -> str:
    warp_features = uses_warp_features(kernel)
    if mode == "auto":
        return "hier" if warp_features else "flat"
    if mode == "flat" and warp_features:
        raise UnsupportedFeatureError(
            f"kernel {kernel.name!r} uses warp-level features (shuffle/vote/syncwarp); "
            f"flat translation cannot express them, use --mode hier or auto")
    return mode


def hybrid_transform(kernel: KernelDef, config: LaunchConfig, mode: str | None = None,
                     options: TransformOptions | None = None,
                     want_snapshots: tuple = ()) -> MpmdProgram:
    options = options or TransformOptions()
    mode = resolve_mode(kernel, mode or config.mode)
    config.validate(hierarchical=(mode == "hier"))
    symbols = check_kernel(kernel)
    cfg = prepare_kernel_cfg(kernel, symbols)
    instr_uids, term_uids = original_uids(cfg)
    warp = config.warp_size
    meta = TransformMeta(mode=mode, warp_size=warp)
    snapshots = {}

    def snap(step):
        if step in want_snapshots:
            snapshots[step] = _clone_cfg(cfg)

    if mode == "hier":
        lower_collectives(cfg, warp, options.insert_raw, options.insert_war)
        if options.check and options.insert_raw and options.insert_war:
            verify_hazard_barriers(cfg)
    snap("step1")

    insert_extra_barriers(cfg, enable_if_extras=options.insert_if_extras)
    if options.check and options.insert_if_extras:
        verify_fences(cfg)
    snap("step2")

    split_at_barriers(cfg)
    snap("step3")

    if mode == "hier":
        trees = compute_domtrees(cfg)
        warp_regions = find_parallel_regions(cfg, ir.WARP, trees)
        if options.check:
            verify_regions(cfg, warp_regions, ir.WARP)
        wrap_regions(cfg, warp_regions, ir.WARP, TX, n.IntLit(warp), meta,
                     hoist_block_barriers=True)
        delete_barriers(cfg, ir.WARP)
        snap("step4")

        trees = compute_domtrees(cfg)
        block_regions = find_parallel_regions(cfg, ir.BLOCK, trees)
        if options.check:
            verify_regions(cfg, block_regions, ir.BLOCK)
        trip = n.Binary("/", n.BuiltinRef("blockDim.x"), n.IntLit(warp))
        wrap_regions(cfg, block_regions, ir.BLOCK, WID, trip, meta)
        delete_barriers(cfg, ir.BLOCK)
    else:
        trees = compute_domtrees(cfg)
        regions = find_parallel_regions(cfg, ir.BLOCK, trees)
        if options.check:
            verify_regions(cfg, regions, ir.BLOCK)
        wrap_regions(cfg, regions, ir.BLOCK, TX, n.BuiltinRef("blockDim.x"), meta)
        delete_barriers(cfg, ir.BLOCK)
        snap("step4")

    if options.check:
        assert_no_barriers(cfg)
    replicated = replicate_locals(cfg, meta, warp)
    cfg.drop_unreachable()
    snap("step5")

    program = MpmdProgram(
        name=kernel.name, params=list(kernel.params), cfg=cfg, mode=mode,
        warp_size=warp, meta=meta, replicated=replicated,
        shared=dict(symbols.shared),
        original_instr_uids=instr_uids, original_term_uids=term_uids,
        snapshots=snapshots,
    )
    if config.specialize:
        specialized = specialize(program, config)
        if "step5" in want_snapshots:
            snapshots["step5"] = _clone_cfg(specialized.cfg)
        specialized.snapshots = snapshots
        program = specialized
    return program


# --- specialization (configuration folding) ---

def _clone_cfg(cfg: ir.Cfg) -> ir.Cfg:
    new = ir.Cfg(cfg.name, cfg.symbols)
    new.entry, new.exit = cfg.entry, cfg.exit
    new._next_uid = cfg._next_uid
    new._next_name = cfg._next_name
    for bid, blk in cfg.blocks.items():
        new.add_block(ir.Block(bid, [replace(i) for i in blk.instrs],
                               replace(blk.term), blk.peel_level))
    return new


def _fold(e: n.Expr, env: dict, tx_bound: int | None) -> n.Expr:
    if isinstance(e, n.BuiltinRef) and e.name in env:
        return n.IntLit(env[e.name])
    if isinstance(e, n.VarRef) and e.name in env:
        return n.IntLit(env[e.name])
    if isinstance(e, n.Unary):
        inner = _fold(e.operand, env, tx_bound)
        if isinstance(inner, n.IntLit):
            return n.IntLit(wrap_i32(unary_op(e.op, n.I32, inner.value)))
        return n.Unary(e.op, inner)
    if isinstance(e, n.Binary):
        left = _fold(e.left, env, tx_bound)
        right = _fold(e.right, env, tx_bound)
        if isinstance(left, n.IntLit) and isinstance(right, n.IntLit):
            if not (e.op in ("/", "%") and right.value == 0):
                return n.IntLit(binary_op(e.op, n.I32, left.value, right.value))
        # identities that make folded loop variables disappear
        if e.op == "+" and isinstance(left, n.IntLit) and left.value == 0:
            return right
        if e.op == "+" and isinstance(right, n.IntLit) and right.value == 0:
            return left
        if e.op == "*" and isinstance(left, n.IntLit) and left.value == 0:
            return n.IntLit(0)
        if e.op == "*" and isinstance(right, n.IntLit) and right.value == 0:
            return n.IntLit(0)
        if e.op == "*" and isinstance(left, n.IntLit) and left.value == 1:
            return right
        if e.op == "*" and isinstance(right, n.IntLit) and right.value == 1:
            return left
        # the lane variable is bounded by its loop trip
        if tx_bound is not None and e.op == "<" and isinstance(left, n.VarRef) \
                and left.name == TX and isinstance(right, n.IntLit):
            if right.value >= tx_bound:
                return n.IntLit(1)
            if right.value <= 0:
                return n.IntLit(0)
        return n.Binary(e.op, left, right)
    if isinstance(e, n.IndexExpr):
        return n.IndexExpr(e.base, _fold(e.index, env, tx_bound))
    if isinstance(e, n.Select):
        cond = _fold(e.cond, env, tx_bound)
        t = _fold(e.if_true, env, tx_bound)
        f = _fold(e.if_false, env, tx_bound)
        if isinstance(cond, n.IntLit):
            return t if cond.value != 0 else f
        return n.Select(cond, t, f)
    return e


def _fold_block(blk: ir.Block, env: dict, tx_bound: int | None):
    out = []
    for instr in blk.instrs:
        if isinstance(instr, ir.Assign):
            t = instr.target
            if isinstance(t, n.IndexTarget):
                t = n.IndexTarget(t.base, _fold(t.index, env, tx_bound))
            out.append(ir.Assign(instr.uid, t, _fold(instr.expr, env, tx_bound), instr.src_uid))
        else:
            out.append(instr)
    blk.instrs = out
    if isinstance(blk.term, ir.CondBr):
        cond = _fold(blk.term.cond, env, tx_bound)
        if isinstance(cond, n.IntLit):
            target = blk.term.then_target if cond.value != 0 else blk.term.else_target
            blk.term = ir.Br(blk.term.uid, target)
        else:
            blk.term = ir.CondBr(blk.term.uid, cond, blk.term.then_target, blk.term.else_target)


def specialize(program: MpmdProgram, config: LaunchConfig) -> MpmdProgram:
    """Fold grid/block size into the program; idempotent."""
    config.validate(hierarchical=(program.mode == "hier"))
    cfg = _clone_cfg(program.cfg)
    env = {"blockDim.x": config.block_size, "gridDim.x": config.grid_size}
    tx_bound = program.warp_size if program.mode == "hier" else config.block_size

    pinned: dict[str, dict] = {}  # block id -> extra constant bindings
    for wl in program.meta.wrap_loops:
        trip_expr = _fold(wl.trip, env, None)
        if isinstance(trip_expr, n.IntLit) and trip_expr.value == 1 and wl.cond in cfg.blocks:
            cfg.blocks[wl.init].term = ir.Br(cfg.blocks[wl.init].term.uid, wl.entry)
            cond_term = cfg.blocks[wl.cond].term
            after = cond_term.else_target if isinstance(cond_term, ir.CondBr) else None
            if after is not None:
                cfg.blocks[wl.inc].term = ir.Br(cfg.blocks[wl.inc].term.uid, after)
            members = program.meta.membership.get(wl.level, {})
            for bid, region_index in members.items():
                if region_index == wl.region_index and bid in cfg.blocks:
                    pinned.setdefault(bid, {})[wl.var] = 0
            # the induction variable is pinned everywhere it was read
            for bid in (wl.init, wl.inc):
                blk = cfg.blocks[bid]
                blk.instrs = [i for i in blk.instrs
                              if not (isinstance(i, ir.Assign)
                                      and isinstance(i.target, n.VarTarget)
                                      and i.target.name == wl.var)]

    # the lane bound __tx < trip holds inside wrapped bodies, but not in the
    # loop-control blocks themselves, where __tx reaches the trip count
    control = set()
    for wl in program.meta.wrap_loops:
        control.update((wl.init, wl.cond, wl.inc))
    for bid, blk in cfg.blocks.items():
        block_env = dict(env)
        block_env.update(pinned.get(bid, {}))
        bound = tx_bound if (bid not in control and bid in program.meta.membership.get(
            ir.WARP if program.mode == "hier" else ir.BLOCK, {})) else None
        _fold_block(blk, block_env, bound)

    # peel branches whose flag is assigned only constants fold away
    flag_values: dict[str, set] = {}
    for _, instr in cfg.instructions():
        if isinstance(instr, ir.Assign) and isinstance(instr.target, n.IndexTarget) \
                and instr.target.base in program.replicated:
            flag_values.setdefault(instr.target.base, set()).add(
                instr.expr.value if isinstance(instr.expr, n.IntLit) else None)
    for bid in list(cfg.blocks):
        blk = cfg.blocks[bid]
        if blk.peel_level is None or not isinstance(blk.term, ir.CondBr):
            continue
        cond = blk.term.cond
        base = cond.base if isinstance(cond, n.IndexExpr) else None
        values = flag_values.get(base)
        if values and len(values) == 1 and None not in values:
            value = next(iter(values))
            target = blk.term.then_target if value != 0 else blk.term.else_target
            blk.term = ir.Br(blk.term.uid, target)

    # jump-thread empty forwarding blocks left by folding
    changed = True
    while changed:
        changed = False
        for bid in list(cfg.blocks):
            blk = cfg.blocks[bid]
            if blk.instrs or not isinstance(blk.term, ir.Br) or blk.term.target == bid \
                    or bid == cfg.exit:
                continue
            target = blk.term.target
            if bid == cfg.entry:
                cfg.entry = target
            else:
                for other in cfg.blocks.values():
                    other.term = ir.retarget(other.term, bid, target)
            del cfg.blocks[bid]
            changed = True
            break

    cfg.drop_unreachable()
    return replace(program, cfg=cfg, snapshots={},
                   specialized={"block_size": config.block_size, "grid_size": config.grid_size})
