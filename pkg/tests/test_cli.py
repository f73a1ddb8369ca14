import json

import numpy as np
import pytest

from warpfold import corpus
from warpfold.cli import main

VECCOPY_DESC = {
    "kernel_file": "veccopy.spk",
    "buffers": [
        {"name": "a", "kind": "i32", "count": 1024, "init": {"range": {"start": 0, "step": 1}}},
        {"name": "b", "kind": "i32", "count": 1024},
    ],
    "steps": [
        {"op": "launch", "kernel": "veccopy", "grid": 1, "block": 1024, "args": ["a", "b"]},
        {"op": "dump", "buffer": "b"},
    ],
}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "veccopy.spk").write_text(corpus.get("veccopy").source)
    (tmp_path / "reduce_warp.spk").write_text(corpus.get("reduce_warp").source)
    (tmp_path / "desc.json").write_text(json.dumps(VECCOPY_DESC))
    return tmp_path


def test_transform_prints_ir(workdir, capsys):
    rc = main(["transform", str(workdir / "reduce_warp.spk"), "--mode", "hier",
               "--block-size", "64"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "// mode: hier" in out
    assert "inter_warp_init" in out and "intra_warp_init" in out


def test_transform_deterministic_output(workdir, capsys):
    argv = ["transform", str(workdir / "reduce_warp.spk"), "--mode", "hier",
            "--emit-cfg", "step2,step3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    assert "--- step2 ---" in first and "[extra]" in first


def test_transform_dot_output(workdir, capsys):
    rc = main(["transform", str(workdir / "veccopy.spk"), "--dot"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_transform_flat_on_warp_kernel_exits_3(workdir, capsys):
    rc = main(["transform", str(workdir / "reduce_warp.spk"), "--mode", "flat"])
    assert rc == 3
    assert "warp-level features" in capsys.readouterr().err


def test_transform_parse_error_exits_3(workdir, capsys):
    bad = workdir / "bad.spk"
    bad.write_text("__global__ void k( {")
    assert main(["transform", str(bad)]) == 3


def test_unsupported_probes_exit_3(workdir, capsys):
    grid_probe = workdir / "grid_probe.spk"
    grid_probe.write_text("__global__ void g(global i32* a) { grid_sync(); }")
    assert main(["transform", str(grid_probe)]) == 3
    assert "grid-level synchronization" in capsys.readouterr().err

    mask_probe = workdir / "mask_probe.spk"
    mask_probe.write_text(
        "__global__ void m(global i32* a) { a[0] = vote_all(0xFF, a[0] > 0); }")
    assert main(["transform", str(mask_probe)]) == 3
    assert "dynamic mask unsupported" in capsys.readouterr().err


def test_run_vec_copy(workdir, capsys):
    rc = main(["run", str(workdir / "desc.json"), "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["values"] == list(range(1024))


def test_run_workers_identical(workdir, capsys):
    main(["run", str(workdir / "desc.json"), "--json", "--workers", "1"])
    one = capsys.readouterr().out
    main(["run", str(workdir / "desc.json"), "--json", "--workers", "8"])
    assert capsys.readouterr().out == one


def test_run_trace_counts(workdir, tmp_path, capsys):
    trace_path = tmp_path / "trace.json"
    rc = main(["run", str(workdir / "desc.json"), "--trace-counts", str(trace_path)])
    assert rc == 0
    data = json.loads(trace_path.read_text())
    assert data["instructions"] and data["terminators"]


def test_run_missing_buffer_errors(workdir, capsys):
    desc = dict(VECCOPY_DESC)
    desc["steps"] = [{"op": "launch", "grid": 1, "block": 32, "args": ["a", "nope"]}]
    p = workdir / "bad_desc.json"
    p.write_text(json.dumps(desc))
    assert main(["run", str(p)]) == 4
    assert "unknown buffer" in capsys.readouterr().err


def test_diff_equal_exits_0(workdir, capsys):
    rc = main(["diff", str(workdir / "veccopy.spk"), str(workdir / "desc.json")])
    assert rc == 0
    assert "equal" in capsys.readouterr().out


def test_diff_json_report(workdir, capsys):
    rc = main(["diff", str(workdir / "veccopy.spk"), str(workdir / "desc.json"),
               "--json", "--specialize"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["equal"] is True


def test_diff_empty_kernel_equal(workdir, capsys):
    (workdir / "empty.spk").write_text("__global__ void empty(global i32* a, global i32* b) { }")
    desc = dict(VECCOPY_DESC, kernel_file="empty.spk")
    desc["steps"] = [{"op": "launch", "grid": 1, "block": 32, "args": ["a", "b"]}]
    p = workdir / "empty_desc.json"
    p.write_text(json.dumps(desc))
    assert main(["diff", str(workdir / "empty.spk"), str(p)]) == 0


def test_copy_step(workdir, capsys):
    desc = {
        "kernel_file": "veccopy.spk",
        "buffers": [
            {"name": "a", "kind": "i32", "count": 16, "init": {"fill": 3}},
            {"name": "b", "kind": "i32", "count": 16},
        ],
        "steps": [
            {"op": "copy", "dst": "b", "src": "a"},
            {"op": "dump", "buffer": "b"},
        ],
    }
    p = workdir / "copy_desc.json"
    p.write_text(json.dumps(desc))
    rc = main(["run", str(p), "--json"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["values"] == [3] * 16


def test_dump_to_file(workdir, tmp_path):
    desc = dict(VECCOPY_DESC)
    desc["steps"] = list(VECCOPY_DESC["steps"][:-1]) + [
        {"op": "dump", "buffer": "b", "to": str(tmp_path / "out.json")}]
    p = workdir / "dump_desc.json"
    p.write_text(json.dumps(desc))
    assert main(["run", str(p)]) == 0
    data = json.loads((tmp_path / "out.json").read_text())
    assert data["values"][:3] == [0, 1, 2]


def test_init_from_binary_file(workdir, capsys):
    payload = np.arange(8, dtype=np.int32)
    (workdir / "init.bin").write_bytes(payload.tobytes())
    desc = {
        "kernel_file": "veccopy.spk",
        "buffers": [
            {"name": "a", "kind": "i32", "count": 8, "init": "@init.bin"},
            {"name": "b", "kind": "i32", "count": 8},
        ],
        "steps": [
            {"op": "launch", "grid": 1, "block": 8, "args": ["a", "b"]},
            {"op": "dump", "buffer": "b"},
        ],
    }
    p = workdir / "bin_desc.json"
    p.write_text(json.dumps(desc))
    assert main(["run", str(p), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["values"] == list(range(8))


def test_corpus_listing(capsys):
    assert main(["corpus"]) == 0
    out = capsys.readouterr().out
    assert "reduce_warp" in out and "vecadd" in out


def test_corpus_dump(tmp_path):
    assert main(["corpus", "--dump", str(tmp_path / "k")]) == 0
    files = list((tmp_path / "k").glob("*.spk"))
    assert len(files) == len(corpus.ALL)


def test_bench_smoke(capsys):
    rc = main(["bench", "--suite", "jit", "--iters", "5", "--repeats", "1", "--json"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert "jit" in data and data["jit"]["normal_ms"] > 0
