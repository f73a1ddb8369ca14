"""Differential harness: reference interpreter vs transformed program."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dsl.nodes import KernelDef
from ..config import LaunchConfig
from ..numerics import numpy_dtype
from ..passes.pipeline import MpmdProgram
from ..runtime.memory import DeviceMemory
from ..runtime.launch import bind_args, launch
from .oracle import run_oracle


@dataclass
class DiffReport:
    equal: bool
    detail: str = "equal"
    divergence: Optional[dict] = field(default=None)

    def to_json(self) -> dict:
        data = {"equal": self.equal, "detail": self.detail}
        if self.divergence:
            data["divergence"] = self.divergence
        return data


def _first_divergence(buffer_id: int, kind: str | None, ref: bytes, got: bytes):
    if kind is not None:
        a = np.frombuffer(ref, dtype=numpy_dtype(kind))
        b = np.frombuffer(got, dtype=numpy_dtype(kind))
        bad = np.nonzero(a.view(np.int32) != b.view(np.int32))[0]
        if len(bad):
            i = int(bad[0])
            return {"buffer": buffer_id, "element": i,
                    "reference": float(a[i]) if kind == "f32" else int(a[i]),
                    "transformed": float(b[i]) if kind == "f32" else int(b[i])}
    for i, (x, y) in enumerate(zip(ref, got)):
        if x != y:
            return {"buffer": buffer_id, "byte": i, "reference": x, "transformed": y}
    return {"buffer": buffer_id, "byte": min(len(ref), len(got)), "detail": "length mismatch"}


def compare_memory(reference: DeviceMemory, transformed: DeviceMemory,
                   buffer_kinds: dict | None = None, fp_tol: float = 0.0) -> DiffReport:
    buffer_kinds = buffer_kinds or {}
    ids = sorted(set(reference._buffers) | set(transformed._buffers))
    for buffer_id in ids:
        ref = reference.copy_out(buffer_id)
        got = transformed.copy_out(buffer_id)
        if ref == got:
            continue
        kind = buffer_kinds.get(buffer_id)
        if fp_tol > 0.0 and kind == "f32" and len(ref) == len(got):
            a = np.frombuffer(ref, dtype=np.float32)
            b = np.frombuffer(got, dtype=np.float32)
            if np.allclose(a, b, rtol=0.0, atol=fp_tol, equal_nan=True):
                continue
        divergence = _first_divergence(buffer_id, kind, ref, got)
        where = (f"element {divergence['element']}" if "element" in divergence
                 else f"byte {divergence.get('byte')}")
        return DiffReport(False,
                          f"buffer {buffer_id} diverges at {where}: "
                          f"reference={divergence.get('reference')} "
                          f"transformed={divergence.get('transformed')}",
                          divergence)
    return DiffReport(True)


def diff_run(kernel: KernelDef, program: MpmdProgram, config: LaunchConfig,
             memory: DeviceMemory, args, fp_tol: float = 0.0) -> DiffReport:
    """Run both engines from identical initial memory and compare bytes.

    The transformed side goes through the runtime launcher (honoring
    config.workers); the reference side always runs sequentially.
    """
    ref_mem = memory.clone()
    got_mem = memory.clone()

    ref_config = LaunchConfig(config.grid_size, config.block_size, config.warp_size,
                              config.mode, config.specialize, workers=1)
    run_oracle(kernel, ref_config, bind_args(kernel.params, ref_mem, args))
    launch(program, config, got_mem, args)

    buffer_kinds = {int(a): p.kind
                    for p, a in zip(kernel.params, args) if p.is_buffer}
    return compare_memory(ref_mem, got_mem, buffer_kinds, fp_tol)
