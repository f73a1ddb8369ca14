"""DOT emitter for CFG snapshots; node order follows block insertion order."""

from __future__ import annotations

from . import ir


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(cfg: ir.Cfg, title: str | None = None) -> str:
    lines = [f'digraph "{_escape(title or cfg.name)}" {{', "    node [shape=box, fontname=monospace];"]
    for bid, blk in cfg.blocks.items():
        body = [bid + (" [peel]" if blk.peel_level else "")]
        body += [ir.format_instr(i) for i in blk.instrs]
        body.append(ir.format_term(blk.term))
        label = _escape("\\l".join(body) + "\\l").replace("\\\\l", "\\l")
        lines.append(f'    "{bid}" [label="{label}"];')
    for bid, blk in cfg.blocks.items():
        t = blk.term
        if isinstance(t, ir.Br):
            lines.append(f'    "{bid}" -> "{t.target}";')
        elif isinstance(t, ir.CondBr):
            lines.append(f'    "{bid}" -> "{t.then_target}" [label="T"];')
            lines.append(f'    "{bid}" -> "{t.else_target}" [label="F"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
