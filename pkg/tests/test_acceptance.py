"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete. Every tolerance is pinned here: memory comparisons are bit-exact,
count checks are exact integers, benchmark checks assert direction only.
"""

import os
import statistics
import time

import numpy as np
import pytest

from warpfold import (DeviceMemory, ExecTrace, LaunchConfig, TransformOptions,
                      corpus, hybrid_transform, parse_module, specialize)
from warpfold.bench import bench_jit, bench_modes, bench_scaling
from warpfold.cfg import compute_domtrees
from warpfold.cfg import ir
from warpfold.cli import main as cli_main
from warpfold.errors import UnsupportedFeatureError
from warpfold.interp.diff import compare_memory, diff_run
from warpfold.interp.oracle import run_oracle
from warpfold.passes import find_parallel_regions, verify_regions
from warpfold.randgen import generate_kernel
from warpfold.runtime.launch import bind_args, launch

CORES = os.cpu_count() or 1


def report(number, ok, text):
    print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, f"criterion {number}: {text}"


# ----------------------------------------------------------------------------
# 1. Differential corpus equivalence, bit-exact, all mode combinations,
#    workers in {1, cores}, under 60 seconds.
# ----------------------------------------------------------------------------

def test_criterion_1_corpus_differential():
    t0 = time.perf_counter()
    failures = []
    runs = 0
    assert len(corpus.ALL) >= 12
    for ck in corpus.ALL:
        kernel = ck.kernel()
        for workers, grid, block in ((1, 2, 64), (CORES, max(2, CORES), 64)):
            config = LaunchConfig(grid_size=grid, block_size=block, workers=1)
            memory, args = ck.build(grid, block)
            reference = memory.clone()
            run_oracle(kernel, config, bind_args(kernel.params, reference, args))
            kinds = {int(a): p.kind for p, a in zip(kernel.params, args) if p.is_buffer}

            modes = ["hier"] + (["flat"] if ck.flat_eligible else [])
            for mode in modes:
                for spec in (False, True):
                    run_config = LaunchConfig(grid_size=grid, block_size=block,
                                              workers=workers)
                    program = hybrid_transform(kernel, run_config, mode=mode)
                    if spec:
                        program = specialize(program, run_config)
                    got = memory.clone()
                    launch(program, run_config, got, args)
                    outcome = compare_memory(reference, got, kinds)
                    runs += 1
                    if not outcome.equal:
                        failures.append(
                            f"{ck.name}/{mode}{'/spec' if spec else ''}/w{workers}: "
                            f"{outcome.detail}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60.0
    report(1, ok,
           f"{runs} differential runs over {len(corpus.ALL)} kernels bit-equal "
           f"in {elapsed:.1f}s (budget 60s)"
           + (f"; failures: {failures[:3]}" if failures else ""))


# ----------------------------------------------------------------------------
# 2. Execution-count invariant at block sizes {32, 64, 128}; exact.
# ----------------------------------------------------------------------------

def test_criterion_2_execution_counts():
    failures = []
    checked = 0
    for ck in corpus.ALL:
        kernel = ck.kernel()
        for block in (32, 64, 128):
            config = LaunchConfig(grid_size=1, block_size=block, workers=1)
            program = hybrid_transform(kernel, config, mode="hier")
            memory, args = ck.build(1, block)
            oracle_trace = ExecTrace()
            run_oracle(kernel, config,
                       bind_args(kernel.params, memory.clone(), args), oracle_trace)
            mpmd_trace = ExecTrace()
            launch(program, config, memory.clone(), args, trace=mpmd_trace)
            by_src = mpmd_trace.counts_by_src(program.src_map())

            for uid in program.original_instr_uids:
                oracle_n = oracle_trace.instr_counts.get(uid, 0)
                got = by_src.get(uid, 0)
                checked += 1
                if got != oracle_n:
                    failures.append(f"{ck.name}/bs{block} uid{uid}: {got} != {oracle_n}")
                elif oracle_n == block and got != block:
                    failures.append(f"{ck.name}/bs{block} uid{uid}: "
                                    f"{got} != block size {block}")
            for bid, level in program.meta.peels.items():
                if bid not in program.cfg.blocks:
                    continue
                term_uid = program.cfg.blocks[bid].term.uid
                group = block if level == ir.BLOCK else config.warp_size
                oracle_n = oracle_trace.term_counts.get(term_uid, 0)
                got = mpmd_trace.term_counts.get(term_uid, 0)
                checked += 1
                if got * group != oracle_n:
                    failures.append(f"{ck.name}/bs{block} peel {bid}: "
                                    f"{got}*{group} != {oracle_n}")
    report(2, not failures,
           f"{checked} exact count checks across block sizes 32/64/128"
           + (f"; failures: {failures[:3]}" if failures else ""))


# ----------------------------------------------------------------------------
# 3. Region structure: the warp-barrier-between-two-phases shape yields
#    exactly 2 warp-level and 1 block-level region; nesting and partition
#    hold corpus-wide.
# ----------------------------------------------------------------------------

def test_criterion_3_region_structure():
    from warpfold.cfg import build_cfg, canonicalize
    from warpfold.passes import (insert_extra_barriers, lower_collectives,
                                 split_at_barriers)

    def discovered(source):
        cfg = canonicalize(build_cfg(parse_module(source).kernel()))
        lower_collectives(cfg, 32)
        insert_extra_barriers(cfg)
        split_at_barriers(cfg)
        trees = compute_domtrees(cfg)
        warp_regions = find_parallel_regions(cfg, ir.WARP, trees)
        block_regions = find_parallel_regions(cfg, ir.BLOCK, trees)
        return cfg, warp_regions, block_regions

    problems = []

    cfg, warp_regions, block_regions = discovered(corpus.get("warp_neighbor").source)
    real_warp = [r for r in warp_regions
                 if any(cfg.blocks[m].real_instr_count() for m in r.blocks)]
    real_block = [r for r in block_regions
                  if any(cfg.blocks[m].real_instr_count() for m in r.blocks)]
    if len(real_warp) != 2:
        problems.append(f"expected 2 warp regions, found {len(real_warp)}")
    if len(real_block) != 1:
        problems.append(f"expected 1 block region, found {len(real_block)}")
    for wr in real_warp:
        owners = [br for br in real_block if wr.blocks <= br.blocks]
        if len(owners) != 1:
            problems.append(f"warp region {wr.tail} nests in {len(owners)} block regions")

    for ck in corpus.ALL:
        cfg, warp_regions, block_regions = discovered(ck.source)
        try:
            verify_regions(cfg, warp_regions, ir.WARP)
            verify_regions(cfg, block_regions, ir.BLOCK)
        except Exception as e:  # partition violation
            problems.append(f"{ck.name}: {e}")
            continue
        peels = {bid for bid, blk in cfg.blocks.items() if blk.peel_level}
        for r in warp_regions:
            if r.blocks & peels:
                problems.append(f"{ck.name}: peel in warp region {r.tail}")
        block_peels = {bid for bid, blk in cfg.blocks.items()
                       if blk.peel_level == ir.BLOCK}
        for r in block_regions:
            if r.blocks & block_peels:
                problems.append(f"{ck.name}: block peel in block region {r.tail}")
        for wr in warp_regions:
            owners = [br for br in block_regions if wr.blocks <= br.blocks]
            if len(owners) != 1:
                problems.append(f"{ck.name}: warp region {wr.tail} not nested once")
    report(3, not problems,
           "2 warp / 1 block regions on the two-phase warp kernel; partition and "
           "nesting hold corpus-wide" + (f"; problems: {problems[:3]}" if problems else ""))


# ----------------------------------------------------------------------------
# 4. Barrier mutation sensitivity: disabling each inserted-barrier class
#    produces at least one corpus divergence.
# ----------------------------------------------------------------------------

def test_criterion_4_mutation_sensitivity():
    outcomes = {}
    for knob in ("insert_raw", "insert_war", "insert_if_extras"):
        diverged = []
        for ck in corpus.ALL:
            kernel = ck.kernel()
            config = LaunchConfig(grid_size=2, block_size=64, workers=1)
            options = TransformOptions(check=False, **{knob: False})
            try:
                program = hybrid_transform(kernel, config, mode="hier", options=options)
                memory, args = ck.build(2, 64)
                outcome = diff_run(kernel, program, config, memory, args)
            except Exception:
                continue  # crashes count as neither equal nor diverged
            if not outcome.equal:
                diverged.append(ck.name)
        outcomes[knob] = diverged
    ok = all(len(v) >= 1 for v in outcomes.values())
    summary = "; ".join(f"{k}: {len(v)} kernels diverge" for k, v in outcomes.items())
    report(4, ok, summary)


# ----------------------------------------------------------------------------
# 5. Randomized differential testing: 1000 generated kernels at warp size 4,
#    zero divergences.
# ----------------------------------------------------------------------------

def test_criterion_5_randomized_differential():
    failures = []
    count = 1000
    for seed in range(count):
        source = generate_kernel(seed, warp_size=4, block_size=8)
        kernel = parse_module(source).kernel()
        config = LaunchConfig(grid_size=1, block_size=8, warp_size=4, workers=1)
        program = hybrid_transform(kernel, config)
        memory = DeviceMemory()
        gin = memory.alloc(4 * 8)
        gout = memory.alloc(4 * 8)
        memory.view(gin, "i32")[:] = (np.arange(8) * 5 - 9).astype(np.int32)
        outcome = diff_run(kernel, program, config, memory, [gin, gout, 2])
        if not outcome.equal:
            failures.append((seed, outcome.detail))
    report(5, not failures,
           f"{count} generated kernels agree with the reference interpreter"
           + (f"; first failure seed {failures[0]}" if failures else ""))


# ----------------------------------------------------------------------------
# 6. Mode-direction benchmarks at 1000+ iterations, medians of 5 runs.
# ----------------------------------------------------------------------------

def test_criterion_6_benchmark_directions():
    rows = bench_modes(kernels=("veccopy", "vecadd", "saxpy"),
                       iters=1000, repeats=5)
    mode_ok = all(row["hier_ms"] >= row["flat_ms"] for row in rows)
    jit = bench_jit("reduce_warp", iters=1000, repeats=5)
    jit_ok = jit["specialized_ms"] <= jit["normal_ms"]
    detail = ", ".join(f"{r['kernel']} hier/flat {r['hier_over_flat']:.2f}" for r in rows)
    report(6, mode_ok and jit_ok,
           f"{detail}; reduce specialized/normal "
           f"{jit['specialized_over_normal']:.2f}")


# ----------------------------------------------------------------------------
# 7. Scaling sanity: at grid = cores, running with workers = cores beats the
#    same work on one worker (speedup > 1.5x when cores >= 4).
# ----------------------------------------------------------------------------

def test_criterion_7_scaling():
    rows = bench_scaling(grids=[CORES], repeats=5)
    row = rows[0]
    speedup = row["speedup"]
    if CORES >= 4:
        ok = speedup > 1.5
        bar = "1.5x"
    elif CORES >= 2:
        # the 1.5x bar presumes at least four independent cores; on a two-way
        # host the primary claim is simply parallel < single-worker
        ok = speedup > 1.0
        bar = "1.0x (host has fewer than 4 cores; the 1.5x bar needs >= 4)"
    else:
        pytest.skip("single-core host cannot demonstrate parallel speedup")
    report(7, ok,
           f"grid={row['grid']} workers={row['workers']}: parallel "
           f"{row['parallel_s']:.2f}s vs single-worker {row['single_worker_s']:.2f}s, "
           f"speedup {speedup:.2f}x against bar {bar}")


# ----------------------------------------------------------------------------
# 8. Coverage self-report: transform succeeds on the whole corpus and rejects
#    the documented unsupported probes with their diagnostics.
# ----------------------------------------------------------------------------

def test_criterion_8_coverage(tmp_path, capsys):
    failures = []
    for ck in corpus.ALL:
        kernel = ck.kernel()
        config = LaunchConfig(grid_size=1, block_size=64, workers=1)
        try:
            hybrid_transform(kernel, config, mode="hier")
            if ck.flat_eligible:
                hybrid_transform(kernel, config, mode="flat")
        except Exception as e:
            failures.append(f"{ck.name}: {e}")

    try:
        parse_module("__global__ void g(global i32* a) { grid_sync(); }")
        failures.append("grid-sync probe was accepted")
    except UnsupportedFeatureError as e:
        if "grid-level synchronization" not in str(e):
            failures.append(f"grid-sync diagnostic: {e}")
    try:
        parse_module("__global__ void m(global i32* a) { a[0] = vote_all(0xFF, a[0] > 0); }")
        failures.append("dynamic-mask probe was accepted")
    except UnsupportedFeatureError as e:
        if "dynamic mask unsupported" not in str(e):
            failures.append(f"dynamic-mask diagnostic: {e}")

    # the CLI surfaces the same diagnostics with the transform-error exit code
    probe = tmp_path / "probe.spk"
    probe.write_text("__global__ void g(global i32* a) { grid_sync(); }")
    if cli_main(["transform", str(probe)]) != 3:
        failures.append("CLI exit code for the grid-sync probe was not 3")
    capsys.readouterr()
    report(8, not failures,
           f"transform covers all {len(corpus.ALL)} corpus kernels; probes rejected "
           "with documented diagnostics" + (f"; {failures[:3]}" if failures else ""))
