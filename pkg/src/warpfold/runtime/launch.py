"""Kernel launch: block scheduling over a worker pool with join semantics.

One CPU worker executes whole blocks. With workers == 1 everything runs in
process; otherwise the global buffers move into shared memory and a fork pool
of processes executes disjoint block ranges against them, mirroring the
fork/join launch of the original host API. launch() returns only after every
block finished; an executor error aborts the launch.
"""

from __future__ import annotations

import gc
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import shared_memory

import numpy as np

from ..config import LaunchConfig
from ..errors import LaunchError
from ..numerics import numpy_dtype
from ..interp.mpmd import BlockContext, run_mpmd
from ..interp.trace import ExecTrace
from ..passes.pipeline import MpmdProgram
from .memory import DeviceMemory


def bind_args(params, memory: DeviceMemory, args) -> dict:
    """Check arity/kinds and resolve buffer ids to typed views."""
    if len(params) != len(args):
        raise LaunchError(f"kernel takes {len(params)} arguments, got {len(args)}")
    bound = {}
    for p, a in zip(params, args):
        if p.is_buffer:
            if not isinstance(a, (int, np.integer)) or isinstance(a, bool):
                raise LaunchError(f"argument {p.name!r} must be a buffer id, got {a!r}")
            bound[p.name] = memory.view(int(a), p.kind)
        elif p.kind == "i32":
            if not isinstance(a, (int, np.integer)) or isinstance(a, bool):
                raise LaunchError(f"argument {p.name!r} must be an i32 scalar, got {a!r}")
            bound[p.name] = int(a)
        else:
            if isinstance(a, bool) or not isinstance(a, (int, float, np.floating)):
                raise LaunchError(f"argument {p.name!r} must be an f32 scalar, got {a!r}")
            bound[p.name] = np.float32(a)
    return bound


def run_blocks_inline(program: MpmdProgram, config: LaunchConfig, bound: dict,
                      block_indices, trace: ExecTrace | None = None) -> None:
    for block_index in block_indices:
        ctx = BlockContext(program, config, bound, block_index)
        run_mpmd(program, ctx, trace)


def _run_attached(program, config, binding_spec, segments, lo, hi, want_trace):
    bound = {}
    seg_index = 0
    for spec in binding_spec:
        if spec[0] == "buffer":
            _, name, kind, _, nbytes = spec
            seg = segments[seg_index]
            seg_index += 1
            bound[name] = np.frombuffer(seg.buf, dtype=numpy_dtype(kind), count=nbytes // 4)
        else:
            _, name, value = spec
            bound[name] = value
    trace = ExecTrace() if want_trace else None
    run_blocks_inline(program, config, bound, range(lo, hi), trace)
    return trace


def _worker(program: MpmdProgram, config: LaunchConfig, binding_spec: list,
            lo: int, hi: int, want_trace: bool):
    segments = [shared_memory.SharedMemory(name=spec[3])
                for spec in binding_spec if spec[0] == "buffer"]
    try:
        return _run_attached(program, config, binding_spec, segments, lo, hi, want_trace)
    finally:
        # numpy views over the segments must be gone before close; anything
        # still pinned by a traceback is released by gc first
        gc.collect()
        for seg in segments:
            try:
                seg.close()
            except BufferError:
                pass  # freed at process exit


def launch(program: MpmdProgram, config: LaunchConfig, memory: DeviceMemory,
           args, trace: ExecTrace | None = None) -> None:
    config.validate(hierarchical=(program.mode == "hier"))
    if config.grid_size == 0:
        return
    workers = min(config.workers, config.grid_size)
    if workers <= 1:
        bound = bind_args(program.params, memory, args)
        run_blocks_inline(program, config, bound, range(config.grid_size), trace)
        return

    bind_args(program.params, memory, args)  # validate before spawning anything
    binding_spec = []
    segments = []
    try:
        for p, a in zip(program.params, args):
            if p.is_buffer:
                raw = memory.raw(int(a))
                seg = shared_memory.SharedMemory(create=True, size=max(1, len(raw)))
                seg.buf[:len(raw)] = raw
                segments.append((seg, int(a), len(raw)))
                binding_spec.append(("buffer", p.name, p.kind, seg.name, len(raw)))
            elif p.kind == "i32":
                binding_spec.append(("scalar", p.name, int(a)))
            else:
                binding_spec.append(("scalar", p.name, np.float32(a)))

        ranges = _split(config.grid_size, workers)
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = [pool.submit(_worker, program, config, binding_spec, lo, hi,
                                   trace is not None)
                       for lo, hi in ranges]
            for f in futures:
                worker_trace = f.result()
                if trace is not None and worker_trace is not None:
                    trace.instr_counts.update(worker_trace.instr_counts)
                    trace.term_counts.update(worker_trace.term_counts)

        for seg, buffer_id, nbytes in segments:
            memory.copy_in(buffer_id, bytes(seg.buf[:nbytes]))
    finally:
        for seg, _, _ in segments:
            seg.close()
            seg.unlink()


def _split(n: int, parts: int) -> list[tuple[int, int]]:
    base = n // parts
    extra = n % parts
    ranges = []
    lo = 0
    for i in range(parts):
        hi = lo + base + (1 if i < extra else 0)
        if hi > lo:
            ranges.append((lo, hi))
        lo = hi
    return ranges
