"""Host-program description files.

A JSON document stands in for hand-migrated host code: it declares buffers
with initial contents, then runs copy / launch / dump steps in order. See
docs/hostdesc.md for the schema. The same description can be executed by the
transformed-program engine or by the reference interpreter, which is how the
diff command compares whole host programs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..config import LaunchConfig
from ..dsl import parse_module
from ..errors import LaunchError
from ..interp.oracle import run_oracle
from ..interp.trace import ExecTrace
from ..numerics import numpy_dtype
from ..passes import hybrid_transform, specialize
from .launch import bind_args, launch
from .memory import DeviceMemory


def load_description(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _init_values(spec: dict, count: int, kind: str, base_dir: Path) -> np.ndarray:
    dtype = numpy_dtype(kind)
    init = spec.get("init")
    if init is None:
        return np.zeros(count, dtype=dtype)
    if isinstance(init, list):
        if len(init) != count:
            raise LaunchError(f"buffer {spec['name']!r}: init has {len(init)} values, "
                              f"count is {count}")
        return np.asarray(init, dtype=dtype)
    if isinstance(init, str) and init.startswith("@"):
        raw = (base_dir / init[1:]).read_bytes()
        values = np.frombuffer(raw, dtype=dtype)
        if len(values) != count:
            raise LaunchError(f"buffer {spec['name']!r}: file holds {len(values)} values, "
                              f"count is {count}")
        return values.copy()
    if isinstance(init, dict) and "fill" in init:
        return np.full(count, init["fill"], dtype=dtype)
    if isinstance(init, dict) and "range" in init:
        start = init["range"].get("start", 0)
        step = init["range"].get("step", 1)
        return (start + step * np.arange(count)).astype(dtype)
    raise LaunchError(f"buffer {spec['name']!r}: unsupported init {init!r}")


class HostProgram:
    """A loaded description plus its memory state."""

    def __init__(self, desc: dict, base_dir: Path, kernel_path: str | None = None):
        self.desc = desc
        self.base_dir = Path(base_dir)
        kernel_file = kernel_path or desc.get("kernel_file")
        if kernel_file is None:
            raise LaunchError("description has no kernel_file and none was supplied")
        kernel_file = Path(kernel_file)
        if not kernel_file.is_absolute():
            kernel_file = self.base_dir / kernel_file
        self.module = parse_module(kernel_file.read_text(encoding="utf-8"))
        self.memory = DeviceMemory()
        self.buffers: dict[str, tuple[int, str, int]] = {}  # name -> (id, kind, count)
        for spec in desc.get("buffers", []):
            name, kind, count = spec["name"], spec.get("kind", "i32"), int(spec["count"])
            buffer_id = self.memory.alloc(4 * count)
            self.memory.view(buffer_id, kind)[:] = _init_values(spec, count, kind, self.base_dir)
            self.buffers[name] = (buffer_id, kind, count)

    def buffer_id(self, name: str) -> int:
        if name not in self.buffers:
            raise LaunchError(f"unknown buffer {name!r}")
        return self.buffers[name][0]

    def resolve_args(self, raw_args: list):
        args = []
        for a in raw_args:
            if isinstance(a, str):
                args.append(self.buffer_id(a))
            elif isinstance(a, dict) and "scalar" in a:
                args.append(a["scalar"])
            elif isinstance(a, (int, float)):
                args.append(a)
            else:
                raise LaunchError(f"bad launch argument {a!r}")
        return args

    def run(self, config: LaunchConfig, engine: str = "mpmd",
            trace: ExecTrace | None = None) -> list[dict]:
        """Execute all steps; returns the dump payloads in order."""
        dumps = []
        programs: dict = {}
        for step in self.desc.get("steps", []):
            op = step.get("op")
            if op == "copy":
                dst_id, _, _ = self.buffers[step["dst"]]
                src_id, kind, count = self.buffers[step["src"]]
                nbytes = 4 * int(step.get("count", count))
                self.memory.copy(dst_id, src_id, nbytes)
            elif op == "launch":
                kernel = self.module.kernel(step.get("kernel"))
                grid = int(step.get("grid", config.grid_size))
                block = int(step.get("block", config.block_size))
                run_config = LaunchConfig(grid, block, config.warp_size, config.mode,
                                          config.specialize, config.workers)
                args = self.resolve_args(step.get("args", []))
                if engine == "oracle":
                    run_config.validate()
                    bound = bind_args(kernel.params, self.memory, args)
                    run_oracle(kernel, run_config, bound, trace)
                    continue
                key = (kernel.name, run_config.mode, block if config.specialize else None,
                       grid if config.specialize else None)
                program = programs.get(key)
                if program is None:
                    program = hybrid_transform(kernel, run_config)
                    if config.specialize:
                        program = specialize(program, run_config)
                    programs[key] = program
                launch(program, run_config, self.memory, args, trace)
            elif op == "dump":
                name = step["buffer"]
                buffer_id, kind, count = self.buffers[name]
                values = self.memory.view(buffer_id, kind)[:count]
                payload = {
                    "buffer": name, "kind": kind,
                    "values": [float(v) if kind == "f32" else int(v) for v in values],
                }
                to = step.get("to")
                if to:
                    out_path = Path(to)
                    if not out_path.is_absolute():
                        out_path = self.base_dir / out_path
                    out_path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
                    payload = dict(payload, written=str(out_path))
                dumps.append(payload)
            else:
                raise LaunchError(f"unknown step op {op!r}")
        return dumps


def run_description(path, config: LaunchConfig, engine: str = "mpmd",
                    kernel_path: str | None = None,
                    trace: ExecTrace | None = None) -> tuple[HostProgram, list[dict]]:
    desc = load_description(path)
    host = HostProgram(desc, Path(path).parent, kernel_path)
    return host, host.run(config, engine, trace)
