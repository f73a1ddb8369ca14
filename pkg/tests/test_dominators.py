"""Dominator trees checked against a brute-force path-enumeration oracle."""

import random

import pytest

from warpfold.dsl import nodes as n
from warpfold.dsl.checker import SymbolTable
from warpfold.cfg import ir
from warpfold.cfg.dom import compute_dominators, compute_postdominators


def random_cfg(rng, max_blocks=12):
    """Random digraph where every block is reachable and reaches the exit."""
    count = rng.randint(3, max_blocks)
    bids = [f"b{i}" for i in range(count)]
    cfg = ir.Cfg("rand", SymbolTable())
    for bid in bids:
        cfg.add_block(ir.Block(bid))
    cfg.entry = bids[0]
    cfg.exit = bids[-1]
    for i, bid in enumerate(bids):
        if bid == cfg.exit:
            cfg.blocks[bid].term = ir.Ret(cfg.new_uid())
            continue
        # bias edges forward so most nodes reach the exit, allow back edges
        t1 = rng.choice(bids[1:])
        if rng.random() < 0.5:
            t2 = rng.choice(bids[1:])
            cfg.blocks[bid].term = ir.CondBr(cfg.new_uid(), n.IntLit(1), t1, t2)
        else:
            cfg.blocks[bid].term = ir.Br(cfg.new_uid(), t1)
        if i + 1 < count and rng.random() < 0.7:
            # guarantee a forward spine
            cfg.blocks[bid].term = ir.CondBr(cfg.new_uid(), n.IntLit(1), bids[i + 1], t1)
    return cfg


def reaches(cfg, src, dst, avoid=None):
    seen = set()
    stack = [src]
    while stack:
        cur = stack.pop()
        if cur == avoid or cur in seen:
            continue
        if cur == dst:
            return True
        seen.add(cur)
        stack.extend(cfg.succs(cur))
    return False


def brute_dominates(cfg, a, b):
    """a dominates b iff no entry->b path avoids a."""
    if a == b:
        return True
    return not reaches(cfg, cfg.entry, b, avoid=a)


def brute_postdominates(cfg, a, b):
    if a == b:
        return True
    return not reaches(cfg, b, cfg.exit, avoid=a)


@pytest.mark.parametrize("seed", range(40))
def test_dominators_match_bruteforce(seed):
    rng = random.Random(seed)
    cfg = random_cfg(rng)
    cfg.drop_unreachable()
    if cfg.exit not in cfg.blocks:
        pytest.skip("exit unreachable in this sample")
    blocks = [b for b in cfg.blocks if reaches(cfg, b, cfg.exit)]
    dom = compute_dominators(cfg)
    for a in cfg.blocks:
        for b in cfg.blocks:
            assert dom.dominates(a, b) == brute_dominates(cfg, a, b), (a, b)
    if set(blocks) != set(cfg.blocks):
        return  # post-dominance is defined only when everything reaches the exit
    pdt = compute_postdominators(cfg)
    for a in blocks:
        for b in blocks:
            assert pdt.dominates(a, b) == brute_postdominates(cfg, a, b), (a, b)
