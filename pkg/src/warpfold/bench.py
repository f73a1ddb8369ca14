"""Micro-benchmark harness comparing translation modes on the built-in corpus.

Timing includes launch overhead (worker dispatch and join), matching how the
underlying system is normally measured. Assertions about results belong to
the acceptance suite and only ever concern direction (hierarchical loops cost
more than a single flat loop; folding the configuration in cannot be slower),
never absolute numbers, which are machine-specific.
"""

from __future__ import annotations

import os
import statistics
import time

import numpy as np

from . import corpus
from .config import LaunchConfig
from .passes import hybrid_transform, specialize
from .runtime.launch import launch
from .runtime.memory import DeviceMemory

MODE_KERNELS = ("veccopy", "vecadd", "saxpy", "matmul")  # barrier-free set


def time_launches(program, config, memory, args, iters: int) -> float:
    """Total wall seconds for `iters` launches."""
    t0 = time.perf_counter()
    for _ in range(iters):
        launch(program, config, memory, args)
    return time.perf_counter() - t0


def _median_run(program, config, memory, args, iters: int, repeats: int) -> float:
    launch(program, config, memory, args)  # warm up the compiled-closure cache
    return statistics.median(
        time_launches(program, config, memory, args, iters) for _ in range(repeats))


def _median_pair(a, b, iters: int, repeats: int) -> tuple[float, float]:
    """Interleaved timing of two (program, config, memory, args) setups so
    load drift hits both sides equally."""
    for setup in (a, b):
        launch(setup[0], setup[1], setup[2], setup[3])
    times_a, times_b = [], []
    for _ in range(repeats):
        times_a.append(time_launches(*a, iters))
        times_b.append(time_launches(*b, iters))
    return statistics.median(times_a), statistics.median(times_b)


def bench_modes(kernels=MODE_KERNELS, iters: int = 1000, repeats: int = 5,
                grid: int = 1, block: int = 32) -> list[dict]:
    """Flat vs hierarchical translation on barrier-free kernels."""
    rows = []
    config = LaunchConfig(grid_size=grid, block_size=block, workers=1)
    for name in kernels:
        ck = corpus.get(name)
        kernel = ck.kernel()
        memory, args = ck.build(grid, block)
        flat = hybrid_transform(kernel, config, mode="flat")
        hier = hybrid_transform(kernel, config, mode="hier")
        flat_s, hier_s = _median_pair((flat, config, memory, args),
                                      (hier, config, memory, args), iters, repeats)
        rows.append({
            "kernel": name, "iters": iters, "grid": grid, "block": block,
            "flat_ms": flat_s / iters * 1e3, "hier_ms": hier_s / iters * 1e3,
            "hier_over_flat": hier_s / flat_s if flat_s else float("nan"),
        })
    return rows


def bench_jit(kernel_name: str = "reduce_warp", iters: int = 1000, repeats: int = 5,
              grid: int = 1, block: int = 32) -> dict:
    """Normal mode vs configuration-folded (JIT-style) mode."""
    ck = corpus.get(kernel_name)
    kernel = ck.kernel()
    config = LaunchConfig(grid_size=grid, block_size=block, workers=1)
    memory, args = ck.build(grid, block)
    normal = hybrid_transform(kernel, config, mode="hier")
    folded = specialize(normal, config)
    normal_s, folded_s = _median_pair((normal, config, memory, args),
                                      (folded, config, memory, args), iters, repeats)
    return {
        "kernel": kernel_name, "iters": iters, "grid": grid, "block": block,
        "normal_ms": normal_s / iters * 1e3, "specialized_ms": folded_s / iters * 1e3,
        "specialized_over_normal": folded_s / normal_s if normal_s else float("nan"),
    }


def _heavy_matmul(grid: int, block: int, inner: int):
    ck = corpus.get("matmul")
    kernel = ck.kernel()
    mem = DeviceMemory()
    rng = np.random.default_rng(7)
    a = mem.alloc(4 * grid * inner)
    b = mem.alloc(4 * inner * block)
    c = mem.alloc(4 * grid * block)
    mem.view(a, "f32")[:] = rng.standard_normal(grid * inner).astype(np.float32)
    mem.view(b, "f32")[:] = rng.standard_normal(inner * block).astype(np.float32)
    return kernel, mem, [a, b, c, inner]


def bench_scaling(grids=None, block: int = 64, inner: int = 1536,
                  repeats: int = 3, workers: int | None = None) -> list[dict]:
    """Multi-block wall time over a grid sweep, plus a single-worker baseline."""
    cores = workers or os.cpu_count() or 1
    if grids is None:
        grids = sorted({1, max(2, cores // 2), cores, 2 * cores})
    rows = []
    for grid in grids:
        kernel, memory, args = _heavy_matmul(grid, block, inner)
        config = LaunchConfig(grid_size=grid, block_size=block, workers=cores)
        program = hybrid_transform(kernel, config, mode="flat")
        par = statistics.median(time_launches(program, config, memory, args, 1)
                                for _ in range(repeats))
        serial_config = LaunchConfig(grid_size=grid, block_size=block, workers=1)
        ser = statistics.median(time_launches(program, serial_config, memory, args, 1)
                                for _ in range(repeats))
        rows.append({
            "grid": grid, "block": block, "workers": cores,
            "parallel_s": par, "single_worker_s": ser,
            "speedup": ser / par if par else float("nan"),
        })
    return rows
