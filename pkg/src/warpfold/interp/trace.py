"""Execution traces: exact per-instruction counts and barrier arrival sets."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


@dataclass
class ExecTrace:
    instr_counts: Counter = field(default_factory=Counter)   # uid -> executions
    term_counts: Counter = field(default_factory=Counter)    # terminator uid -> executions
    barrier_arrivals: dict = field(default_factory=dict)     # uid -> [frozenset of thread ids]

    def count_instr(self, uid: int):
        self.instr_counts[uid] += 1

    def count_term(self, uid: int):
        self.term_counts[uid] += 1

    def record_arrival(self, uid: int, threads):
        self.barrier_arrivals.setdefault(uid, []).append(frozenset(threads))

    def merged(self, other: "ExecTrace") -> "ExecTrace":
        out = ExecTrace(Counter(self.instr_counts), Counter(self.term_counts),
                        {k: list(v) for k, v in self.barrier_arrivals.items()})
        out.instr_counts.update(other.instr_counts)
        out.term_counts.update(other.term_counts)
        for k, v in other.barrier_arrivals.items():
            out.barrier_arrivals.setdefault(k, []).extend(v)
        return out

    def counts_by_src(self, src_map: dict) -> dict:
        """Aggregate instruction counts onto originating uids."""
        out: Counter = Counter()
        for uid, count in self.instr_counts.items():
            out[src_map.get(uid, uid)] += count
        return dict(out)

    def to_json(self, src_map: dict | None = None) -> dict:
        data = {
            "instructions": {str(k): v for k, v in sorted(self.instr_counts.items())},
            "terminators": {str(k): v for k, v in sorted(self.term_counts.items())},
        }
        if src_map is not None:
            data["by_source"] = {str(k): v for k, v in sorted(self.counts_by_src(src_map).items())}
        if self.barrier_arrivals:
            data["barrier_arrivals"] = {
                str(k): [sorted(s) for s in v] for k, v in sorted(self.barrier_arrivals.items())}
        return data
