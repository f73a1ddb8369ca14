import pytest

from warpfold import corpus
from warpfold.dsl import parse_module, pretty_print
from warpfold.dsl import nodes as n
from warpfold.errors import ParseError, SemanticError, UnsupportedFeatureError

MINIMAL = "__global__ void k(global i32* a) { a[threadIdx.x] = 1; }"


def test_minimal_kernel():
    m = parse_module(MINIMAL)
    assert len(m.kernels) == 1
    k = m.kernel()
    assert k.name == "k"
    assert len(k.params) == 1 and k.params[0].is_buffer
    assert len(k.body) == 1 and isinstance(k.body[0], n.Assign)


def test_reduction_kernel_shape():
    src = """
    __global__ void r(global i32* a) {
        i32 val = 1;
        if (threadIdx.x < 32) {
            for (i32 offset = 16; offset > 0; offset /= 2) {
                val += shfl_down(val, offset);
            }
        }
    }
    """
    k = parse_module(src).kernel()
    cond = k.body[1]
    assert isinstance(cond, n.If)
    loop = cond.then[0]
    assert isinstance(loop, n.For)
    assign = loop.body[0]
    collectives = [e for e in n.walk_exprs(assign.expr) if isinstance(e, n.CollectiveCall)]
    assert len(collectives) == 1 and collectives[0].op == "shfl_down"


def test_compound_assign_normalizes():
    src = "__global__ void k(global i32* a) { i32 x = 0; x += 2; a[0] = x; }"
    k = parse_module(src).kernel()
    assign = k.body[1]
    assert isinstance(assign.expr, n.Binary) and assign.expr.op == "+"


def test_explicit_full_masks_accepted():
    src = """
    __global__ void k(global i32* a) {
        i32 p = vote_all(-1, threadIdx.x < 64);
        i32 q = vote_any(0xffffffff, p);
        i32 s = shfl_down(-1, q, 1);
        a[threadIdx.x] = s;
        __syncwarp(-1);
    }
    """
    parse_module(src)


@pytest.mark.parametrize("call", [
    "vote_all(0xFF, p)",
    "vote_any(1, p)",
    "shfl_down(0x0F, p, 1)",
])
def test_dynamic_mask_rejected(call):
    src = f"__global__ void k(global i32* a) {{ i32 p = 1; a[0] = {call}; }}"
    with pytest.raises(UnsupportedFeatureError, match="dynamic mask unsupported"):
        parse_module(src)


@pytest.mark.parametrize("probe,message", [
    ("grid_sync();", "grid-level synchronization"),
    ("i32 g = this_grid();", "grid-level cooperative groups"),
    ("i32 g = coalesced_threads();", "activated-thread"),
    ("i32 g = shfl_up(1, 1);", "shfl_up is unsupported"),
])
def test_unsupported_feature_probes(probe, message):
    src = f"__global__ void k(global i32* a) {{ {probe} }}"
    with pytest.raises(UnsupportedFeatureError, match=message):
        parse_module(src)


def test_shared_length_must_be_constant():
    src = "__global__ void k(i32 n) { shared i32 s[n]; }"
    with pytest.raises(ParseError, match="compile-time integer constant"):
        parse_module(src)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_module("__global__ void k() { i32 x = ; }")
    assert err.value.line == 1 and err.value.col > 0


@pytest.mark.parametrize("src,message", [
    ("__global__ void k() { x = 1; }", "unknown identifier"),
    ("__global__ void k(i32 x) { x = 1; }", "cannot assign to parameter"),
    ("__global__ void k(global i32* a) { i32 q = a; }", "used without an index"),
    ("__global__ void k(i32 x) { i32 q = x[0]; }", "is not an array"),
    ("__global__ void k(f32 x) { i32 q = x; }", "cannot assign f32"),
    ("__global__ void k(f32 x) { i32 q = x % 2; }", "not defined for f32"),
    ("__global__ void k(f32 x) { if (x) { } }", "must be i32"),
    ("__global__ void k(i32 x) { i32 x = 1; }", "redeclaration"),
])
def test_semantic_rejections(src, message):
    with pytest.raises(SemanticError, match=message):
        parse_module(src)


def test_duplicate_kernel_names_rejected():
    src = MINIMAL + "\n" + MINIMAL
    with pytest.raises(SemanticError, match="duplicate kernel name"):
        parse_module(src)


def test_switch_rejected():
    with pytest.raises(ParseError, match="switch"):
        parse_module("__global__ void k() { switch (1) { } }")


def test_empty_module_prints_empty():
    assert pretty_print(n.KernelModule([])) == ""


def test_roundtrip_minimal():
    m = parse_module(MINIMAL)
    assert parse_module(pretty_print(m)) == m


@pytest.mark.parametrize("name", corpus.names())
def test_roundtrip_corpus(name):
    m = parse_module(corpus.get(name).source)
    printed = pretty_print(m)
    m2 = parse_module(printed)
    assert m2 == m
    # idempotent: printing the reparse gives the same text
    assert pretty_print(m2) == printed


def test_roundtrip_operator_precedence():
    src = """
    __global__ void k(global i32* a) {
        a[0] = (1 + 2) * 3 - 4 / (5 - 3) % 2;
        a[1] = -(1 + 2) * -3;
        a[2] = 1 < 2 && 3 >= 2 || !(4 == 5);
    }
    """
    m = parse_module(src)
    assert parse_module(pretty_print(m)) == m
