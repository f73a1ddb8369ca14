"""Built-in kernel corpus: the differential-testing and benchmark suite.

Kernels cover the feature classes the pipeline must handle: plain elementwise
code, block-barrier reductions and stencils, barrier-in-conditional and
barrier-in-loop shapes, warp barriers, warp shuffles and warp votes. Each
entry knows how to build deterministic inputs for a given launch geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dsl import parse_module
from .dsl.nodes import KernelDef
from .runtime.memory import DeviceMemory

SHARED_MAX = 128  # shared arrays are sized for the largest tested block


@dataclass(frozen=True)
class CorpusKernel:
    name: str
    source: str
    features: tuple
    flat_eligible: bool
    build: Callable  # (grid, block, seed) -> (DeviceMemory, args)

    def kernel(self) -> KernelDef:
        return parse_module(self.source).kernel()


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _alloc_i32(mem: DeviceMemory, data: np.ndarray) -> int:
    buf = mem.alloc(4 * len(data))
    mem.view(buf, "i32")[:] = data.astype(np.int32)
    return buf


def _alloc_f32(mem: DeviceMemory, data: np.ndarray) -> int:
    buf = mem.alloc(4 * len(data))
    mem.view(buf, "f32")[:] = data.astype(np.float32)
    return buf


def _in_out_i32(scale: int = 1):
    def build(grid: int, block: int, seed: int = 0):
        mem = DeviceMemory()
        n = grid * block
        a = _alloc_i32(mem, _rng(seed).integers(-100, 100, n))
        out = _alloc_i32(mem, np.zeros(n))
        return mem, [a, out]
    return build


def _in_out_f32():
    def build(grid: int, block: int, seed: int = 0):
        mem = DeviceMemory()
        n = grid * block
        a = _alloc_f32(mem, _rng(seed).standard_normal(n))
        out = _alloc_f32(mem, np.zeros(n))
        return mem, [a, out]
    return build


_KERNELS: list[CorpusKernel] = []


def _register(name, source, features, flat_eligible, build):
    _KERNELS.append(CorpusKernel(name, source, tuple(features), flat_eligible, build))


# --- elementwise kernels (no barriers) ---

_register(
    "veccopy",
    """
__global__ void veccopy(global i32* a, global i32* b) {
    i32 i = threadIdx.x + blockIdx.x * blockDim.x;
    b[i] = a[i];
}
""",
    ["elementwise"], True, _in_out_i32())


def _build_vecadd(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    rng = _rng(seed)
    a = _alloc_f32(mem, rng.standard_normal(n))
    b = _alloc_f32(mem, rng.standard_normal(n))
    c = _alloc_f32(mem, np.zeros(n))
    return mem, [a, b, c]


_register(
    "vecadd",
    """
__global__ void vecadd(global f32* a, global f32* b, global f32* c) {
    i32 i = threadIdx.x + blockIdx.x * blockDim.x;
    c[i] = a[i] + b[i];
}
""",
    ["elementwise"], True, _build_vecadd)


def _build_saxpy(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    rng = _rng(seed)
    a = _alloc_f32(mem, rng.standard_normal(n))
    out = _alloc_f32(mem, np.zeros(n))
    return mem, [a, out, 2.5, -1.25]


_register(
    "saxpy",
    """
__global__ void saxpy(global f32* a, global f32* out, f32 scale, f32 shift) {
    i32 i = threadIdx.x + blockIdx.x * blockDim.x;
    out[i] = scale * a[i] + shift;
}
""",
    ["elementwise", "scalar-params"], True, _build_saxpy)


_MATMUL_K = 16


def _build_matmul(grid, block, seed=0):
    mem = DeviceMemory()
    rng = _rng(seed)
    a = _alloc_f32(mem, rng.standard_normal(grid * _MATMUL_K))
    b = _alloc_f32(mem, rng.standard_normal(_MATMUL_K * block))
    c = _alloc_f32(mem, np.zeros(grid * block))
    return mem, [a, b, c, _MATMUL_K]


_register(
    "matmul",
    """
__global__ void matmul(global f32* a, global f32* b, global f32* c, i32 kd) {
    i32 row = blockIdx.x;
    i32 col = threadIdx.x;
    f32 acc = 0.0;
    for (i32 k = 0; k < kd; k = k + 1) {
        acc = acc + a[row * kd + k] * b[k * blockDim.x + col];
    }
    c[row * blockDim.x + col] = acc;
}
""",
    ["elementwise", "loop"], True, _build_matmul)


# --- block-barrier kernels ---

_register(
    "stencil_shared",
    """
__global__ void stencil_shared(global i32* a, global i32* out) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    i32 tid = tx + blockIdx.x * blockDim.x;
    s[tx] = a[tid];
    __syncthreads();
    out[tid] = s[(tx + 1) % blockDim.x] + s[tx];
}
""",
    ["block-barrier", "shared-memory"], True, _in_out_i32())


def _build_reduce_block(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    a = _alloc_i32(mem, _rng(seed).integers(-50, 50, n))
    out = _alloc_i32(mem, np.zeros(grid))
    return mem, [a, out]


_register(
    "reduce_block",
    """
__global__ void reduce_block(global i32* a, global i32* out) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    s[tx] = a[tx + blockIdx.x * blockDim.x];
    __syncthreads();
    for (i32 stride = 1; stride < blockDim.x; stride = stride * 2) {
        if (tx % (2 * stride) == 0) {
            s[tx] = s[tx] + s[tx + stride];
        }
        __syncthreads();
    }
    if (tx == 0) {
        out[blockIdx.x] = s[0];
    }
}
""",
    ["block-barrier", "shared-memory", "barrier-in-loop"], True, _build_reduce_block)


_register(
    "reduce_block_strided",
    """
__global__ void reduce_block_strided(global i32* a, global i32* out) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    s[tx] = a[tx + blockIdx.x * blockDim.x];
    __syncthreads();
    for (i32 stride = blockDim.x / 2; stride > 0; stride = stride / 2) {
        if (tx < stride) {
            s[tx] = s[tx] + s[tx + stride];
        }
        __syncthreads();
    }
    if (tx == 0) {
        out[blockIdx.x] = s[0];
    }
}
""",
    ["block-barrier", "shared-memory", "barrier-in-loop"], True, _build_reduce_block)


def _build_barrier_in_if(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    a = _alloc_i32(mem, _rng(seed).integers(-20, 20, n))
    out = _alloc_i32(mem, np.zeros(n))
    return mem, [a, out, 1]


_register(
    "barrier_in_if",
    """
__global__ void barrier_in_if(global i32* a, global i32* out, i32 n) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    i32 tid = tx + blockIdx.x * blockDim.x;
    s[tx] = a[tid] * 3;
    if (n > 0) {
        __syncthreads();
        out[tid] = s[blockDim.x - 1 - tx];
    }
}
""",
    ["block-barrier", "barrier-in-if", "scalar-params"], True, _build_barrier_in_if)


_register(
    "barrier_in_if_else",
    """
__global__ void barrier_in_if_else(global i32* a, global i32* out, i32 n) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    i32 tid = tx + blockIdx.x * blockDim.x;
    s[tx] = a[tid] + 7;
    if (n > 0) {
        __syncthreads();
        out[tid] = s[blockDim.x - 1 - tx];
    } else {
        out[tid] = 0 - 1;
    }
}
""",
    ["block-barrier", "barrier-in-if", "scalar-params"], True, _build_barrier_in_if)


def _build_barrier_in_for(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    a = _alloc_i32(mem, _rng(seed).integers(0, 100, n))
    out = _alloc_i32(mem, np.zeros(n))
    return mem, [a, out, 5]


_register(
    "barrier_in_for",
    """
__global__ void barrier_in_for(global i32* a, global i32* out, i32 rounds) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    i32 tid = tx + blockIdx.x * blockDim.x;
    s[tx] = a[tid];
    __syncthreads();
    for (i32 r = 0; r < rounds; r = r + 1) {
        i32 t = s[(tx + 1) % blockDim.x];
        __syncthreads();
        s[tx] = t + 1;
        __syncthreads();
    }
    out[tid] = s[tx];
}
""",
    ["block-barrier", "barrier-in-loop", "scalar-params"], True, _build_barrier_in_for)


# --- warp-level kernels (hierarchical only) ---

_register(
    "warp_neighbor",
    """
__global__ void warp_neighbor(global i32* a, global i32* out) {
    shared i32 s[128];
    i32 tx = threadIdx.x;
    i32 tid = tx + blockIdx.x * blockDim.x;
    s[tx] = a[tid] * 2;
    __syncwarp();
    i32 base = tx - tx % 32;
    out[tid] = s[base + (tx + 1) % 32];
}
""",
    ["warp-barrier", "shared-memory"], False, _in_out_i32())


def _build_reduce_warp(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    a = _alloc_i32(mem, _rng(seed).integers(-10, 10, n))
    out = _alloc_i32(mem, np.zeros(grid))
    return mem, [a, out]


_register(
    "reduce_warp",
    """
__global__ void reduce_warp(global i32* a, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    i32 val = a[tid];
    if (threadIdx.x < 32) {
        for (i32 offset = 16; offset > 0; offset = offset / 2) {
            val = val + shfl_down(val, offset);
        }
    }
    if (threadIdx.x == 0) {
        out[blockIdx.x] = val;
    }
}
""",
    ["warp-shuffle", "barrier-in-if", "barrier-in-loop"], False, _build_reduce_warp)


_register(
    "shfl_suffix_scan",
    """
__global__ void shfl_suffix_scan(global i32* a, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    i32 v = a[tid];
    if (threadIdx.x < 32) {
        for (i32 off = 1; off < 32; off = off * 2) {
            i32 t = shfl_down(v, off);
            if (threadIdx.x % 32 + off < 32) {
                v = v + t;
            }
        }
    }
    out[tid] = v;
}
""",
    ["warp-shuffle", "barrier-in-if", "barrier-in-loop"], False, _in_out_i32())


def _build_vote(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    rng = _rng(seed)
    a = _alloc_i32(mem, rng.integers(0, 4, n))
    out = _alloc_i32(mem, np.zeros(n))
    return mem, [a, out]


_register(
    "vote_all_kernel",
    """
__global__ void vote_all_kernel(global i32* a, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    out[tid] = vote_all(a[tid] > 0);
}
""",
    ["warp-vote"], False, _build_vote)


_register(
    "vote_any_kernel",
    """
__global__ void vote_any_kernel(global i32* a, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    out[tid] = vote_any(a[tid] == 3);
}
""",
    ["warp-vote"], False, _build_vote)


def _build_vote_pair(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    p = _alloc_i32(mem, np.ones(n))                     # vote_all over p>0 is true
    q_data = np.zeros(n)
    q_data[5::32] = 7                                   # vote_any(q==7) true via lane 5
    q = _alloc_i32(mem, q_data)
    out = _alloc_i32(mem, np.zeros(n))
    return mem, [p, q, out]


_register(
    "vote_pair",
    """
__global__ void vote_pair(global i32* p, global i32* q, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    i32 r1 = vote_all(p[tid] > 0);
    i32 r2 = vote_any(q[tid] == 7);
    out[tid] = r1 * 2 + r2;
}
""",
    ["warp-vote", "consecutive-collectives"], False, _build_vote_pair)


def _build_warp_vote_mix(grid, block, seed=0):
    mem = DeviceMemory()
    n = grid * block
    rng = _rng(seed)
    a = _alloc_i32(mem, rng.integers(-5, 6, n))
    out = _alloc_i32(mem, np.zeros(n))
    return mem, [a, out]


_register(
    "shfl_vote_mix",
    """
__global__ void shfl_vote_mix(global i32* a, global i32* out) {
    i32 tid = threadIdx.x + blockIdx.x * blockDim.x;
    i32 v = a[tid];
    i32 up = shfl_down(v, 1);
    i32 anyneg = vote_any(up < 0);
    out[tid] = up + anyneg * 100;
}
""",
    ["warp-shuffle", "warp-vote", "consecutive-collectives"], False, _build_warp_vote_mix)


ALL = tuple(_KERNELS)
BY_NAME = {k.name: k for k in ALL}


def get(name: str) -> CorpusKernel:
    return BY_NAME[name]


def names() -> list[str]:
    return [k.name for k in ALL]
