"""Dominator and post-dominator trees.

Classic iterative dataflow formulation over reverse-postorder; these graphs
are tiny, so clarity wins over an O(n alpha(n)) construction. Trees are
recomputed from scratch after any mutating pass.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ir


def _rpo(entry: str, succs) -> list[str]:
    seen = set()
    post: list[str] = []

    def walk(bid: str):
        stack = [(bid, iter(succs(bid)))]
        seen.add(bid)
        while stack:
            cur, it = stack[-1]
            advanced = False
            for s in it:
                if s not in seen:
                    seen.add(s)
                    stack.append((s, iter(succs(s))))
                    advanced = True
                    break
            if not advanced:
                post.append(cur)
                stack.pop()

    walk(entry)
    return list(reversed(post))


def _idoms(entry: str, order: list[str], preds) -> dict:
    index = {b: i for i, b in enumerate(order)}
    idom = {entry: entry}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in order:
            if b == entry:
                continue
            candidates = [p for p in preds(b) if p in idom]
            if not candidates:
                continue
            new = candidates[0]
            for p in candidates[1:]:
                new = intersect(new, p)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    idom[entry] = None
    return idom


@dataclass
class DomTree:
    root: str
    idom: dict  # block -> immediate dominator (root -> None)

    def dominates(self, a: str, b: str) -> bool:
        """True if a dominates b (reflexive)."""
        cur = b
        while cur is not None:
            if cur == a:
                return True
            cur = self.idom.get(cur)
        return False

    def parent(self, b: str):
        return self.idom.get(b)


@dataclass
class DomTrees:
    dom: DomTree
    postdom: DomTree


def compute_dominators(cfg: ir.Cfg) -> DomTree:
    preds = cfg.preds()
    order = _rpo(cfg.entry, cfg.succs)
    return DomTree(cfg.entry, _idoms(cfg.entry, order, lambda b: preds[b]))


def compute_postdominators(cfg: ir.Cfg) -> DomTree:
    preds = cfg.preds()
    order = _rpo(cfg.exit, lambda b: preds[b])
    return DomTree(cfg.exit, _idoms(cfg.exit, order, cfg.succs))


def compute_domtrees(cfg: ir.Cfg) -> DomTrees:
    return DomTrees(compute_dominators(cfg), compute_postdominators(cfg))
