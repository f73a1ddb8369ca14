import numpy as np
import pytest

from warpfold import DeviceMemory, LaunchConfig, hybrid_transform, parse_module
from warpfold.interp.diff import diff_run


def transform(source, mode=None, grid=1, block=32, warp=32, **kw):
    kernel = parse_module(source).kernel()
    config = LaunchConfig(grid_size=grid, block_size=block, warp_size=warp, workers=1)
    return kernel, config, hybrid_transform(kernel, config, mode=mode, **kw)


def diff_source(source, args_spec, mode=None, grid=1, block=32, warp=32, seed=0):
    """args_spec: list of ('i32'|'f32', count, init array) for buffers, or
    ('scalar', value)."""
    kernel, config, program = transform(source, mode, grid, block, warp)
    mem = DeviceMemory()
    args = []
    for spec in args_spec:
        if spec[0] == "scalar":
            args.append(spec[1])
            continue
        kind, count, init = spec
        buf = mem.alloc(4 * count)
        if init is not None:
            mem.view(buf, kind)[:] = init
        args.append(buf)
    return diff_run(kernel, program, config, mem, args)


@pytest.fixture
def cores():
    import os
    return os.cpu_count() or 1
