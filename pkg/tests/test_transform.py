import numpy as np
import pytest

from conftest import transform

from warpfold import corpus, specialize, LaunchConfig, DeviceMemory
from warpfold.cfg import ir
from warpfold.cfg.ir import format_cfg
from warpfold.dsl import nodes as n
from warpfold.errors import ConfigError, UnsupportedFeatureError
from warpfold.interp.diff import diff_run
from warpfold.passes import TX, WID, hybrid_transform, split_at_barriers
from warpfold.dsl import parse_module
from warpfold.cfg import build_cfg, canonicalize


def test_split_makes_barriers_terminal():
    src = """
    __global__ void k(global i32* a) {
        a[0] = 1;
        __syncthreads();
        a[1] = 2;
        __syncthreads();
        a[2] = 3;
    }"""
    cfg = canonicalize(build_cfg(parse_module(src).kernel()))
    count_before = len(cfg.blocks)
    split_at_barriers(cfg)
    assert len(cfg.blocks) == count_before + 2
    for bid, blk in cfg.blocks.items():
        for idx, instr in enumerate(blk.instrs):
            if isinstance(instr, ir.Barrier):
                assert idx == len(blk.instrs) - 1, f"{bid}: barrier not last"
                assert not isinstance(blk.term, ir.CondBr)
    once = format_cfg(cfg)
    split_at_barriers(cfg)
    assert format_cfg(cfg) == once  # idempotent


def test_hier_structure_matches_nested_loop_form():
    ck = corpus.get("reduce_warp")
    kernel, config, program = transform(ck.source, mode="hier", block=64)
    blocks = program.cfg.blocks
    intra = [b for b in blocks if b.startswith("intra_warp_init")]
    inter = [b for b in blocks if b.startswith("inter_warp_init")]
    assert len(inter) == 1          # one per-block loop wraps everything
    assert len(intra) >= 3          # store, read, continuation phases at least
    peels = [b for b, blk in blocks.items() if blk.peel_level]
    assert peels                    # the guard and the loop control are peeled
    for bid in peels:
        cond = blocks[bid].term.cond
        assert isinstance(cond, n.IndexExpr)      # flag array ...
        assert cond.index == n.IntLit(0)          # ... read at thread 0
    # no barriers survive
    for _, instr in program.cfg.instructions():
        assert not isinstance(instr, ir.Barrier)


def test_flat_structure_single_loop():
    ck = corpus.get("vecadd")
    kernel, config, program = transform(ck.source, mode="flat", block=64)
    loops = [b for b in program.cfg.blocks if b.startswith("thread_loop_init")]
    assert len(loops) == 1
    trip_conds = [blk.term.cond for b, blk in program.cfg.blocks.items()
                  if b.startswith("thread_loop_cond")]
    assert trip_conds[0].right == n.BuiltinRef("blockDim.x")


def test_replication_classes():
    ck = corpus.get("reduce_warp")
    _, _, program = transform(ck.source, mode="hier", block=64)
    repl = {name: r.extent for name, r in program.replicated.items()}
    # val crosses warp-level regions inside one block-level region
    assert repl["val"] == ir.WARP
    assert repl["offset"] == ir.WARP
    # peel flags are warp-extent arrays read at index 0
    flags = [name for name in repl if name.startswith("__flag")]
    assert flags and all(repl[f] == ir.WARP for f in flags)
    # tid is consumed inside a single region and stays scalar
    assert "tid" not in repl


def test_replication_block_extent_across_block_regions():
    src = """
    __global__ void k(global i32* a, global i32* out) {
        i32 x = a[threadIdx.x] * 2;
        __syncthreads();
        out[threadIdx.x] = x;
    }"""
    _, _, program = transform(src, mode="hier", block=64)
    assert program.replicated["x"].extent == ir.BLOCK
    _, _, flat = transform(src, mode="flat", block=64)
    assert flat.replicated["x"].extent == ir.BLOCK


def test_scalar_local_stays_scalar():
    src = """
    __global__ void k(global i32* a) {
        i32 t = a[threadIdx.x] + 1;
        a[threadIdx.x] = t * t;
    }"""
    _, _, program = transform(src, mode="hier")
    assert "t" not in program.replicated


def test_auto_mode_dispatch():
    assert transform(corpus.get("vecadd").source, mode=None)[2].mode == "flat"
    assert transform(corpus.get("reduce_warp").source, mode=None)[2].mode == "hier"
    assert transform(corpus.get("stencil_shared").source, mode=None)[2].mode == "flat"
    assert transform(corpus.get("warp_neighbor").source, mode=None)[2].mode == "hier"


def test_flat_mode_rejects_warp_features():
    with pytest.raises(UnsupportedFeatureError, match="warp-level features"):
        transform(corpus.get("reduce_warp").source, mode="flat")


def test_hier_requires_divisible_block_size():
    with pytest.raises(ConfigError, match="divisible"):
        transform(corpus.get("reduce_warp").source, mode="hier", block=48)


def test_specialize_folds_config():
    ck = corpus.get("reduce_warp")
    kernel, config, program = transform(ck.source, mode="hier", block=32)
    folded = specialize(program, config)
    assert folded.specialized == {"block_size": 32, "grid_size": 1}
    assert len(folded.cfg.blocks) < len(program.cfg.blocks)
    # no symbolic launch dimensions remain
    for _, instr in folded.cfg.instructions():
        if isinstance(instr, ir.Assign):
            for e in n.walk_exprs(instr.expr):
                assert not (isinstance(e, n.BuiltinRef) and e.name in ("blockDim.x", "gridDim.x"))
    # trivially-true peel folded away: the guard branch is unconditional now
    for bid, blk in folded.cfg.blocks.items():
        if blk.peel_level and isinstance(blk.term, ir.CondBr):
            cond = blk.term.cond
            assert not (isinstance(cond, n.IndexExpr) and cond.base == "__flag0")


def test_specialize_idempotent():
    for name in ("reduce_warp", "vecadd", "barrier_in_for"):
        ck = corpus.get(name)
        mode = "hier" if not ck.flat_eligible else "flat"
        kernel, config, program = transform(ck.source, mode=mode, block=64, grid=2)
        once = specialize(program, config)
        twice = specialize(once, config)
        assert format_cfg(once.cfg) == format_cfg(twice.cfg)


def test_specialized_program_rejects_other_geometry():
    ck = corpus.get("vecadd")
    kernel, config, program = transform(ck.source, mode="flat", block=32)
    folded = specialize(program, config)
    other = LaunchConfig(grid_size=1, block_size=64, workers=1)
    mem, args = ck.build(1, 64)
    from warpfold.errors import ExecutionError
    from warpfold.runtime.launch import launch
    with pytest.raises(ExecutionError, match="specialized for"):
        launch(folded, other, mem, args)


def test_two_sequential_block_barriers_make_sequential_loops():
    src = """
    __global__ void k(global i32* a) {
        a[threadIdx.x] = 1;
        __syncthreads();
        a[threadIdx.x] = 2;
        __syncthreads();
        a[threadIdx.x] = 3;
    }"""
    _, _, program = transform(src, mode="flat", block=32)
    inits = [b for b in program.cfg.blocks if b.startswith("thread_loop_init")]
    assert len(inits) == 3


def test_snapshots_are_deterministic():
    ck = corpus.get("barrier_in_if")
    want = ("step1", "step2", "step3", "step4", "step5")
    _, _, p1 = transform(ck.source, mode="hier", block=64, want_snapshots=want)
    _, _, p2 = transform(ck.source, mode="hier", block=64, want_snapshots=want)
    assert set(p1.snapshots) == set(want)
    for step in want:
        assert format_cfg(p1.snapshots[step]) == format_cfg(p2.snapshots[step])
    # step3 still carries barrier instructions, step5 does not
    assert "barrier.block" in format_cfg(p1.snapshots["step3"])
    assert "barrier.block" not in format_cfg(p1.snapshots["step5"])
    assert "[extra]" in format_cfg(p1.snapshots["step2"])


def test_clone_path_multi_entry_region():
    # barrier in the then-branch plus a non-empty else: the continuation
    # region is entered both from the else branch and from the then tail
    ck = corpus.get("barrier_in_if_else")
    kernel, config, program = transform(ck.source, mode="hier", block=64, grid=2)
    clones = [b for b in program.cfg.blocks if ".c0" in b or ".c1" in b]
    assert clones
    mem, args = ck.build(2, 64)
    assert diff_run(kernel, program, config, mem, args).equal
