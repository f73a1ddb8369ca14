import pytest

from warpfold.dsl import parse_module
from warpfold.cfg import build_cfg, canonicalize, compute_domtrees, find_loops
from warpfold.cfg import ir
from warpfold.cfg.ir import format_cfg
from warpfold.passes.barriers import (insert_boundary_barriers, insert_extra_barriers,
                                      insert_for_barriers, insert_if_barriers,
                                      purity_split_cond, verify_fences)
from warpfold.passes.warp_lower import lower_collectives


def prepared(source, warp=32, lower=True):
    cfg = canonicalize(build_cfg(parse_module(source).kernel()))
    if lower:
        lower_collectives(cfg, warp)
    return cfg


def barriers(cfg, level=None):
    out = []
    for bid, blk in cfg.blocks.items():
        for i in blk.instrs:
            if isinstance(i, ir.Barrier) and (level is None or i.level == level):
                out.append((bid, i))
    return out


BARRIER_FREE = "__global__ void k(global i32* a) { a[threadIdx.x] = 1; }"

IF_BARRIER = """
__global__ void k(global i32* a, i32 n) {
    shared i32 s[64];
    s[threadIdx.x] = a[threadIdx.x];
    if (n > 0) {
        __syncthreads();
        a[threadIdx.x] = s[0];
    }
}
"""

FOR_BARRIER = """
__global__ void k(global i32* a, i32 n) {
    for (i32 i = 0; i < n; i = i + 1) {
        a[threadIdx.x] = a[threadIdx.x] + 1;
        __syncthreads();
    }
}
"""


def test_boundary_barriers_on_barrier_free_kernel():
    cfg = prepared(BARRIER_FREE)
    insert_boundary_barriers(cfg)
    bars = barriers(cfg)
    assert len(bars) == 2
    entry = cfg.blocks[cfg.entry]
    assert isinstance(entry.instrs[0], ir.Barrier) and entry.instrs[0].level == ir.BLOCK
    exit_blk = cfg.blocks[cfg.exit]
    assert isinstance(exit_blk.instrs[-1], ir.Barrier)


def test_boundary_barriers_on_empty_kernel():
    cfg = prepared("__global__ void k() { }")
    insert_boundary_barriers(cfg)
    assert len(barriers(cfg)) == 2


def test_unconditional_barrier_gets_no_if_fences():
    src = """
    __global__ void k(global i32* a) {
        a[threadIdx.x] = 1;
        __syncthreads();
        a[threadIdx.x] = 2;
    }"""
    cfg = prepared(src)
    count_before = len(barriers(cfg))
    insert_if_barriers(cfg)
    assert len(barriers(cfg)) == count_before


def test_if_insertion_fences_head_body_and_exit():
    cfg = prepared(IF_BARRIER)
    entry_term = cfg.blocks["entry"].term
    then_bid = entry_term.then_target
    merge_bid = entry_term.else_target
    insert_if_barriers(cfg)
    # end of if-head
    assert isinstance(cfg.blocks["entry"].instrs[-1], ir.Barrier)
    assert cfg.blocks["entry"].instrs[-1].hint == ir.H_FENCE_HEAD
    # end of if-body
    assert isinstance(cfg.blocks[then_bid].instrs[-1], ir.Barrier)
    # beginning of if-exit
    assert isinstance(cfg.blocks[merge_bid].instrs[0], ir.Barrier)


def test_inserted_level_matches_trigger_level():
    warp_src = """
    __global__ void k(global i32* a, i32 n) {
        if (n > 0) {
            __syncwarp();
            a[threadIdx.x] = 1;
        }
    }"""
    cfg = prepared(warp_src)
    insert_if_barriers(cfg)
    extras = [b for _, b in barriers(cfg) if b.origin == ir.EXTRA]
    assert extras and all(b.level == ir.WARP for b in extras)

    cfg = prepared(IF_BARRIER)
    insert_if_barriers(cfg)
    extras = [b for _, b in barriers(cfg) if b.origin == ir.EXTRA]
    assert extras and all(b.level == ir.BLOCK for b in extras)


def test_nested_if_reenqueues_outer_head():
    src = """
    __global__ void k(global i32* a, i32 n, i32 m) {
        if (n > 0) {
            if (m > 0) {
                __syncthreads();
                a[threadIdx.x] = 1;
            }
        }
    }"""
    cfg = prepared(src)
    insert_if_barriers(cfg)
    verify_fences(cfg)
    # the outer head (entry) must now carry a fence too
    assert isinstance(cfg.blocks["entry"].instrs[-1], ir.Barrier)


def test_for_rule_fences_latch_and_exits():
    cfg = prepared(FOR_BARRIER)
    loops = find_loops(cfg)
    assert len(loops) == 1
    loop = loops[0]
    insert_for_barriers(cfg, loops)
    latch = cfg.blocks[loop.latch]
    assert isinstance(latch.instrs[-1], ir.Barrier)
    assert latch.instrs[-1].hint == ir.H_FENCE_HEAD
    for target in ir.successors(latch.term):
        assert isinstance(cfg.blocks[target].instrs[0], ir.Barrier)
    for e in loop.exit_blocks:
        assert isinstance(cfg.blocks[e].instrs[0], ir.Barrier)


def test_for_rule_ignores_barrier_free_loops():
    src = """
    __global__ void k(global i32* a, i32 n) {
        for (i32 i = 0; i < n; i = i + 1) { a[threadIdx.x] = i; }
    }"""
    cfg = prepared(src)
    before = format_cfg(cfg)
    insert_for_barriers(cfg)
    assert format_cfg(cfg) == before


def test_warp_barrier_in_loop_gets_warp_level_fences():
    src = """
    __global__ void k(global i32* a) {
        i32 v = a[threadIdx.x];
        if (threadIdx.x < 32) {
            for (i32 off = 16; off > 0; off = off / 2) {
                v = v + shfl_down(v, off);
            }
        }
        a[threadIdx.x] = v;
    }"""
    cfg = prepared(src)
    insert_extra_barriers(cfg)
    extras = [b for _, b in barriers(cfg) if b.origin == ir.EXTRA and b.hint != ir.H_BOUNDARY]
    assert extras and all(b.level == ir.WARP for b in extras)


def test_purity_split_creates_peel_blocks():
    cfg = prepared(IF_BARRIER)
    insert_boundary_barriers(cfg)
    insert_if_barriers(cfg)
    purity_split_cond(cfg)
    peels = {bid: blk for bid, blk in cfg.blocks.items() if blk.peel_level}
    assert len(peels) == 1
    peel = next(iter(peels.values()))
    assert peel.peel_level == ir.BLOCK
    assert peel.instrs == [] and isinstance(peel.term, ir.CondBr)
    # the flag is computed before the trailing fence, inside the region
    entry = cfg.blocks["entry"]
    assert isinstance(entry.instrs[-1], ir.Barrier)
    flag_assign = entry.instrs[-2]
    assert isinstance(flag_assign, ir.Assign)
    assert flag_assign.target.name.startswith("__flag")


def test_purity_split_leaves_divergent_branches_alone():
    src = """
    __global__ void k(global i32* a) {
        __syncthreads();
        if (threadIdx.x == 0) { a[0] = 1; }
    }"""
    cfg = prepared(src)
    insert_extra_barriers(cfg)
    # the divergent branch guards no barrier: no peel block for it
    peel_conds = [blk.term.cond for blk in cfg.blocks.values() if blk.peel_level]
    from warpfold.dsl import nodes as n
    for cond in peel_conds:
        assert isinstance(cond, n.VarRef)
    divergent = [blk for blk in cfg.blocks.values()
                 if isinstance(blk.term, ir.CondBr) and not blk.peel_level]
    assert divergent  # the tid == 0 branch survives unpeeled


def test_insertion_pipeline_idempotent():
    for src in (IF_BARRIER, FOR_BARRIER):
        cfg = prepared(src)
        insert_extra_barriers(cfg)
        once = format_cfg(cfg)
        insert_extra_barriers(cfg)
        assert format_cfg(cfg) == once


def test_verify_fences_accepts_pipeline_output():
    for src in (IF_BARRIER, FOR_BARRIER, BARRIER_FREE):
        cfg = prepared(src)
        insert_extra_barriers(cfg)
        verify_fences(cfg)
