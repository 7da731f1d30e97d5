"""Time-indexed fault roles, network outages and the coherence predicate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple


@dataclass(frozen=True)
class ByzWindow:
    start: int
    end: int
    node: int
    strategy: str


@dataclass(frozen=True)
class Outage:
    start: int
    end: int
    policy: str = "drop"


@dataclass
class FaultSchedule:
    n: int
    f: int
    windows: List[ByzWindow] = field(default_factory=list)
    outages: List[Outage] = field(default_factory=list)
    delta_net: int = 0
    delta_node: int = 0

    def byzantine_at(self, node: int, t: int) -> Optional[str]:
        """Strategy id if the node is Byzantine at t, else None."""
        for w in self.windows:
            if w.node == node and w.start <= t < w.end:
                return w.strategy
        return None

    def network_nonfaulty(self, t: int) -> bool:
        return all(not (o.start <= t < o.end) for o in self.outages)

    def _network_nonfaulty_since(self, t: int) -> Optional[int]:
        if not self.network_nonfaulty(t):
            return None
        since = 0
        for o in self.outages:
            if o.end <= t:
                since = max(since, o.end)
        return since

    def network_correct(self, t: int) -> bool:
        since = self._network_nonfaulty_since(t)
        return since is not None and t - since >= self.delta_net

    def _node_nonfaulty_since(self, node: int, t: int) -> Optional[int]:
        if self.byzantine_at(node, t) is not None:
            return None
        since = 0
        for w in self.windows:
            if w.node == node and w.end <= t:
                since = max(since, w.end)
        return since

    def node_correct(self, node: int, t: int) -> bool:
        """Correct after delta_node of clean behavior while the network
        is correct; the two soaks run concurrently."""
        if not self.network_correct(t):
            return False
        since = self._node_nonfaulty_since(node, t)
        return since is not None and t - since >= self.delta_node

    def correct_nodes(self, t: int) -> List[int]:
        return [i for i in range(self.n) if self.node_correct(i, t)]

    def coherent(self, t: int) -> bool:
        return (self.network_correct(t)
                and len(self.correct_nodes(t)) >= self.n - self.f)

    def coherent_from(self) -> Optional[int]:
        """Earliest instant after which coherence holds permanently
        (schedules are finite, so coherence is eventually constant)."""
        candidates = {0, self.delta_net, self.delta_node,
                      max(self.delta_net, self.delta_node)}
        for w in self.windows:
            candidates.add(w.start)
            candidates.add(w.end + self.delta_node)
            candidates.add(w.end + self.delta_node + self.delta_net)
        for o in self.outages:
            candidates.add(o.start)
            candidates.add(o.end + self.delta_net)
            candidates.add(o.end + self.delta_net + self.delta_node)
        last_start = max([w.start for w in self.windows]
                        + [o.start for o in self.outages] + [0])
        best = None
        for c in sorted(candidates):
            if c < last_start:
                continue
            if self.coherent(c):
                best = c if best is None else min(best, c)
        return best
