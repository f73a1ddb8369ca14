"""Command-line driver.

Subcommands: transform (emit translated IR), run (execute a host description),
diff (reference vs transformed over a host description), bench (mode
comparisons), corpus (inspect the built-in kernel suite).

Exit codes: 0 success/equal, 1 divergence, 2 usage error, 3 transform error,
4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import corpus
from .config import LaunchConfig
from .cfg import to_dot
from .cfg.ir import format_cfg
from .dsl import parse_module
from .errors import (ConfigError, DivergenceError, ExecutionError, LaunchError,
                     ParseError, TransformError, UnsupportedFeatureError, WarpfoldError)
from .interp.diff import compare_memory
from .interp.trace import ExecTrace
from .passes import hybrid_transform, specialize
from .runtime.hostdesc import HostProgram, load_description

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_USAGE = 2
EXIT_TRANSFORM = 3
EXIT_RUNTIME = 4


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("flat", "hier", "auto"), default="auto")
    p.add_argument("--block-size", type=int, default=32)
    p.add_argument("--grid-size", type=int, default=1)
    p.add_argument("--warp-size", type=int, default=32)
    p.add_argument("--specialize", action="store_true")
    p.add_argument("--workers", type=int, default=None)


def _config(args) -> LaunchConfig:
    config = LaunchConfig(grid_size=args.grid_size, block_size=args.block_size,
                          warp_size=args.warp_size, mode=args.mode,
                          specialize=args.specialize)
    if getattr(args, "workers", None):
        config.workers = args.workers
    return config


def cmd_transform(args) -> int:
    source = Path(args.input).read_text(encoding="utf-8")
    module = parse_module(source)
    kernel = module.kernel(args.kernel)
    config = _config(args)
    want = tuple(s.strip() for s in args.emit_cfg.split(",")) if args.emit_cfg else ()
    program = hybrid_transform(kernel, config, options=None, want_snapshots=want)
    if args.specialize:
        program = specialize(program, config)

    render = (lambda c, title: to_dot(c, title)) if args.dot \
        else (lambda c, title: format_cfg(c))
    sections = []
    for step in want:
        if step in program.snapshots:
            prefix = "" if args.dot else f"// --- {step} ---\n"
            sections.append(prefix + render(program.snapshots[step], f"{kernel.name} {step}"))
    if args.dot:
        sections.append(to_dot(program.cfg, f"{kernel.name} [{program.mode}]"))
    else:
        sections.append(f"// mode: {program.mode}\n{format_cfg(program.cfg)}")
    text = "\n".join(sections)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config(args)
    desc = load_description(args.description)
    kernel_file = str(Path(args.kernel_file).resolve()) if args.kernel_file else None
    host = HostProgram(desc, Path(args.description).parent, kernel_file)
    trace = ExecTrace() if args.trace_counts else None
    dumps = host.run(config, engine="mpmd", trace=trace)
    if args.trace_counts:
        Path(args.trace_counts).write_text(json.dumps(trace.to_json()) + "\n",
                                           encoding="utf-8")
    for payload in dumps:
        if args.json:
            print(json.dumps(payload))
        elif "written" in payload:
            print(f"{payload['buffer']}: written to {payload['written']}")
        else:
            print(f"{payload['buffer']}: {payload['values']}")
    return EXIT_OK


def cmd_diff(args) -> int:
    config = _config(args)
    desc = load_description(args.description)
    base = Path(args.description).parent
    kernel_file = str(Path(args.input).resolve())

    reference = HostProgram(desc, base, kernel_file)
    reference.run(config, engine="oracle")
    transformed = HostProgram(desc, base, kernel_file)
    transformed.run(config, engine="mpmd")

    kinds = {}
    for name, (buffer_id, kind, _) in reference.buffers.items():
        kinds[buffer_id] = kind
    report = compare_memory(reference.memory, transformed.memory, kinds,
                            fp_tol=args.fp_tol)
    if args.json:
        print(json.dumps(report.to_json()))
    else:
        print(report.detail)
    return EXIT_OK if report.equal else EXIT_DIVERGED


def cmd_bench(args) -> int:
    results = {}
    if args.suite in ("modes", "all"):
        results["modes"] = bench_mod.bench_modes(iters=args.iters, repeats=args.repeats)
    if args.suite in ("jit", "all"):
        results["jit"] = bench_mod.bench_jit(iters=args.iters, repeats=args.repeats)
    if args.suite in ("scaling", "all"):
        results["scaling"] = bench_mod.bench_scaling(repeats=args.repeats)
    if args.json:
        print(json.dumps(results))
        return EXIT_OK
    for row in results.get("modes", []):
        print(f"{row['kernel']:<16} flat {row['flat_ms']:.3f} ms   "
              f"hier {row['hier_ms']:.3f} ms   hier/flat {row['hier_over_flat']:.2f}")
    if "jit" in results:
        row = results["jit"]
        print(f"{row['kernel']:<16} normal {row['normal_ms']:.3f} ms   "
              f"specialized {row['specialized_ms']:.3f} ms   "
              f"ratio {row['specialized_over_normal']:.2f}")
    for row in results.get("scaling", []):
        print(f"grid {row['grid']:<4} workers {row['workers']}: parallel "
              f"{row['parallel_s']:.3f} s   single-worker {row['single_worker_s']:.3f} s   "
              f"speedup {row['speedup']:.2f}x")
    return EXIT_OK


def cmd_corpus(args) -> int:
    if args.dump:
        out = Path(args.dump)
        out.mkdir(parents=True, exist_ok=True)
        for ck in corpus.ALL:
            (out / f"{ck.name}.spk").write_text(ck.source.lstrip("\n"), encoding="utf-8")
        print(f"wrote {len(corpus.ALL)} kernels to {out}")
        return EXIT_OK
    if args.show:
        print(corpus.get(args.show).source.lstrip("\n"), end="")
        return EXIT_OK
    for ck in corpus.ALL:
        modes = "flat,hier" if ck.flat_eligible else "hier"
        print(f"{ck.name:<22} [{modes}] {', '.join(ck.features)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpfold",
                                     description="Run GPU-style kernels on CPU threads.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="translate a kernel and print the IR")
    p.add_argument("input")
    p.add_argument("--kernel", default=None)
    p.add_argument("--emit-cfg", default=None, metavar="step2,step3,...")
    p.add_argument("--dot", action="store_true", help="emit graphviz instead of text")
    p.add_argument("-o", "--output", default=None)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("run", help="execute a host description")
    p.add_argument("description")
    p.add_argument("--kernel-file", default=None)
    p.add_argument("--trace-counts", default=None, metavar="PATH")
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diff", help="compare reference and transformed runs")
    p.add_argument("input", help="kernel source (.spk)")
    p.add_argument("description", help="host description (.json)")
    p.add_argument("--fp-tol", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_diff)

    p = sub.add_parser("bench", help="mode-comparison micro-benchmarks")
    p.add_argument("--suite", choices=("modes", "jit", "scaling", "all"), default="all")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("corpus", help="inspect the built-in kernel suite")
    p.add_argument("--dump", default=None, metavar="DIR")
    p.add_argument("--show", default=None, metavar="NAME")
    p.set_defaults(fn=cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, UnsupportedFeatureError, TransformError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TRANSFORM
    except (ExecutionError, LaunchError, DivergenceError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except WarpfoldError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
