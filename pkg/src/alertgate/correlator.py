"""Queue-graph correlation with a token bucket on every queue.

Each exploit vertex owns a queue that holds only the latest alert mapped
to it.  Backward and forward breadth-first spanning trees are computed
once per vertex when the queue graph is built, so handling an alert is a
walk over precomputed structure instead of a search of the attack graph.

Every alert, admitted or not, advances the queues and drives the
correlation walk.  The throttle decides only whether the alert is emitted
as an output node; strategy discovery does not depend on it.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from alertgate.attack_graph import Alert, AttackGraph
from alertgate.errors import AlertGateError
from alertgate.throttle import RunLengthRecord, Throttle, Verdict

__all__ = [
    "CORRELATION",
    "HYPOTHESIS",
    "HYPOTHESIZE",
    "PREDICTION",
    "STOP",
    "SUPPRESSION",
    "CorrelationEvent",
    "CorrelationGraph",
    "Edge",
    "Node",
    "QueueGraph",
    "SpanningTree",
    "correlate_bruteforce",
    "snapshot_correlation_graph",
]

STOP = "stop"
HYPOTHESIZE = "hypothesize"
MODES = (STOP, HYPOTHESIZE)

CORRELATION = "correlation"
PREDICTION = "prediction"
HYPOTHESIS = "hypothesis"
SUPPRESSION = "suppression"


@dataclass(frozen=True)
class CorrelationEvent:
    """A correlation, hypothesis or prediction edge.

    Correlation: ``src_alert`` at ``src_vertex`` enables ``dst_alert``.
    Hypothesis: ``src_vertex`` must have been exploited unseen before
    ``dst_alert``; ``src_alert`` is None.
    Prediction: ``src_alert`` may be followed by an attack on
    ``dst_vertex``; ``dst_alert`` is None.
    """

    kind: str
    src_vertex: str
    src_alert: Optional[int]
    dst_vertex: str
    dst_alert: Optional[int]


@dataclass(frozen=True)
class SpanningTree:
    """Breadth-first spanning tree rooted at one exploit vertex.

    ``order`` lists the non-root vertices in discovery order;
    ``parent`` maps each of them to its tree parent.
    """

    root: str
    order: tuple[str, ...]
    parent: dict[str, str]

    @property
    def vertices(self) -> frozenset[str]:
        return frozenset(self.order)

    def children(self, vertex: str) -> list[str]:
        return [v for v in self.order if self.parent[v] == vertex]

    def depth(self, vertex: str) -> int:
        d = 0
        while vertex != self.root:
            vertex = self.parent[vertex]
            d += 1
        return d


def _bfs_tree(root: str, adjacency: dict[str, tuple[str, ...]]) -> SpanningTree:
    parent = {}
    order = []
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in seen:
                seen.add(w)
                parent[w] = v
                order.append(w)
                queue.append(w)
    return SpanningTree(root, tuple(order), parent)


class _Entry:
    __slots__ = ("vertex", "slot", "throttle", "backward", "forward",
                 "direct_preds", "walk", "last_admitted")

    def __init__(self, vertex, throttle, backward, forward, direct_preds, walk):
        self.vertex = vertex
        self.slot: Optional[Alert] = None
        self.throttle = throttle
        self.backward = backward
        self.forward = forward
        self.direct_preds = direct_preds
        # (u, links) in reverse topological order; links are u's
        # successors inside the backward closure, root included
        self.walk = walk
        self.last_admitted: Optional[int] = None


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    vertex: str
    ts: Optional[float] = None
    count: Optional[int] = None


@dataclass(frozen=True)
class Edge:
    kind: str
    src: str
    dst: str


@dataclass
class CorrelationGraph:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    def validate(self) -> None:
        ids = set()
        for node in self.nodes:
            if node.id in ids:
                raise AlertGateError(f"duplicate node id {node.id!r}")
            ids.add(node.id)
        for edge in self.edges:
            for end in (edge.src, edge.dst):
                if end not in ids:
                    raise AlertGateError(
                        f"{edge.kind} edge {edge.src!r} -> {edge.dst!r} references missing node {end!r}"
                    )

    def nodes_of(self, kind: str) -> list[Node]:
        return [n for n in self.nodes if n.kind == kind]

    def edges_of(self, kind: str) -> list[Edge]:
        return [e for e in self.edges if e.kind == kind]


def alert_node_id(alert_id: int) -> str:
    return f"a{alert_id}"


class QueueGraph:
    """Runtime correlation state for one attack graph.

    Parameters
    ----------
    graph : AttackGraph
    rate, burst : float
        Token bucket parameters applied independently at every queue.
    start_ts : float
        Clock origin for the buckets.
    """

    def __init__(self, graph: AttackGraph, rate: float, burst: float, start_ts: float = 0.0):
        self.graph = graph
        topo_index = {v: i for i, v in enumerate(graph.topological_order)}
        preds = graph.exploit_predecessors
        succs = graph.exploit_successors
        self.entries: dict[str, _Entry] = {}
        for v in sorted(graph.exploits):
            backward = _bfs_tree(v, preds)
            forward = _bfs_tree(v, succs)
            closure = backward.vertices | {v}
            walk = tuple(
                (u, tuple(w for w in succs[u] if w in closure))
                for u in sorted(backward.order, key=topo_index.__getitem__, reverse=True)
            )
            self.entries[v] = _Entry(v, Throttle(rate, burst, start_ts),
                                     backward, forward, preds[v], walk)

        # dedup state, O(V^2): a slot alert never returns once replaced, so
        # remembering the last correlated source per vertex pair suffices
        self._last_correlated: dict[tuple[str, str], int] = {}
        self._hypothesized: set[tuple[str, str]] = set()

        self.events: list[CorrelationEvent] = []
        self.suppressions: list[tuple[str, RunLengthRecord, int]] = []
        self._materialized: dict[int, tuple[Alert, str]] = {}
        self.counts = defaultdict(int)

    def backward_tree(self, vertex: str) -> SpanningTree:
        return self._entry(vertex).backward

    def forward_tree(self, vertex: str) -> SpanningTree:
        return self._entry(vertex).forward

    def slot(self, vertex: str) -> Optional[Alert]:
        return self._entry(vertex).slot

    def slots(self) -> dict[str, Optional[Alert]]:
        return {v: e.slot for v, e in self.entries.items()}

    def throttle(self, vertex: str) -> Throttle:
        return self._entry(vertex).throttle

    def _entry(self, vertex: str) -> _Entry:
        try:
            return self.entries[vertex]
        except KeyError:
            raise AlertGateError(f"unknown exploit vertex {vertex!r}") from None

    def retained_alerts(self) -> int:
        """Alerts held in correlation state: occupied slots plus pending exemplars."""
        return sum((e.slot is not None) + (e.throttle.pending is not None)
                   for e in self.entries.values())

    def walk_backward(self, vertex: str, alert: Alert, mode: str = STOP) -> list[CorrelationEvent]:
        """Correlation and hypothesis events for ``alert`` given current slots.

        Pure with respect to the queue graph: nothing is stored and no
        deduplication is applied.  A queue whose alert precedes ``alert``
        yields a correlation and ends that branch.  An unusable queue ends
        the branch in stop mode; in hypothesize mode it yields a
        hypothesis and the walk continues past it.
        """
        entry = self._entry(vertex)
        entries = self.entries
        ts, aid = alert.ts, alert.id
        events = []
        if mode == STOP:
            for u in entry.direct_preds:
                held = entries[u].slot
                if held is not None and (held.ts, held.id) < (ts, aid):
                    events.append(CorrelationEvent(CORRELATION, u, held.id, vertex, aid))
            return events
        if mode != HYPOTHESIZE:
            raise AlertGateError(f"unknown hypothesis mode {mode!r}")
        open_set = {vertex}
        for u, links in entry.walk:
            for w in links:
                if w in open_set:
                    break
            else:
                continue
            held = entries[u].slot
            if held is not None and (held.ts, held.id) < (ts, aid):
                events.append(CorrelationEvent(CORRELATION, u, held.id, vertex, aid))
            else:
                events.append(CorrelationEvent(HYPOTHESIS, u, None, vertex, aid))
                open_set.add(u)
        return events

    def process_alert(self, vertex: str, alert: Alert, mode: str = STOP):
        """Throttle, correlate and enqueue one alert mapped to ``vertex``.

        Returns ``(events, verdict)`` where ``events`` are the newly
        emitted (deduplicated) correlation, hypothesis and prediction
        events.  Predictions are only announced for admitted alerts.
        """
        entry = self._entry(vertex)
        verdict = entry.throttle.submit(alert)
        emitted = []
        for event in self.walk_backward(vertex, alert, mode):
            if event.kind == CORRELATION:
                key = (event.src_vertex, vertex)
                if self._last_correlated.get(key) == event.src_alert:
                    continue
                self._last_correlated[key] = event.src_alert
                self._materialize(self.entries[event.src_vertex].slot, event.src_vertex)
            else:
                key = (event.src_vertex, vertex)
                if key in self._hypothesized:
                    continue
                self._hypothesized.add(key)
            emitted.append(event)

        if verdict.admitted:
            for w in entry.forward.order:
                emitted.append(CorrelationEvent(PREDICTION, vertex, alert.id, w, None))
            entry.last_admitted = alert.id
            if verdict.backlog is not None:
                self.suppressions.append((vertex, verdict.backlog, alert.id))
        if verdict.admitted or emitted:
            self._materialize(alert, vertex)

        for event in emitted:
            self.counts[event.kind] += 1
        self.events.extend(emitted)
        entry.slot = alert
        return emitted, verdict

    def _materialize(self, alert: Alert, vertex: str) -> None:
        if alert.id not in self._materialized:
            self._materialized[alert.id] = (alert, vertex)

    def flush(self) -> list[tuple[str, RunLengthRecord, int]]:
        """Release every pending suppression record, attached to its vertex's last admitted alert."""
        released = []
        for v, entry in self.entries.items():
            record = entry.throttle.flush()
            if record is not None:
                released.append((v, record, entry.last_admitted))
        self.suppressions.extend(released)
        return released

    def materialized_alerts(self) -> list[tuple[Alert, str]]:
        return list(self._materialized.values())


def snapshot_correlation_graph(qg: QueueGraph) -> CorrelationGraph:
    """Build the output correlation graph from a queue graph's accumulated output.

    Nodes are alert nodes for every admitted or correlation-relevant
    alert, one hypothesis node per hypothesis event, one prediction node
    per prediction event and one suppression node per run-length record.
    """
    g = CorrelationGraph()
    for alert, vertex in sorted(qg.materialized_alerts(), key=lambda av: av[0].id):
        g.nodes.append(Node(alert_node_id(alert.id), "alert", vertex, ts=alert.ts))
    for event in qg.events:
        if event.kind == CORRELATION:
            g.edges.append(Edge(CORRELATION, alert_node_id(event.src_alert),
                                alert_node_id(event.dst_alert)))
        elif event.kind == HYPOTHESIS:
            hid = f"h{event.dst_alert}:{event.src_vertex}"
            g.nodes.append(Node(hid, HYPOTHESIS, event.src_vertex))
            g.edges.append(Edge(HYPOTHESIS, hid, alert_node_id(event.dst_alert)))
        elif event.kind == PREDICTION:
            pid = f"p{event.src_alert}:{event.dst_vertex}"
            g.nodes.append(Node(pid, PREDICTION, event.dst_vertex))
            g.edges.append(Edge(PREDICTION, alert_node_id(event.src_alert), pid))
    for i, (vertex, record, attached) in enumerate(qg.suppressions):
        sid = f"s{i}"
        g.nodes.append(Node(sid, SUPPRESSION, vertex, ts=record.last_ts, count=record.count))
        g.edges.append(Edge(SUPPRESSION, sid, alert_node_id(attached)))
    g.validate()
    return g


def correlate_bruteforce(graph: AttackGraph, slots: dict, vertex: str, alert: Alert,
                         mode: str = STOP) -> list[CorrelationEvent]:
    """Reference correlation by breadth-first search of the attack graph itself.

    Walks prerequisite edges backward from ``vertex`` through condition
    vertices, with no precomputation.  Used only as a test oracle for
    :meth:`QueueGraph.walk_backward`.
    """
    if vertex not in graph.exploits:
        raise AlertGateError(f"unknown exploit vertex {vertex!r}")
    if mode not in MODES:
        raise AlertGateError(f"unknown hypothesis mode {mode!r}")
    into = defaultdict(list)
    for src, dst in graph.edges:
        into[dst].append(src)

    events = []
    seen = {vertex}
    queue = deque(into[vertex])
    seen.update(queue)
    while queue:
        v = queue.popleft()
        if v in graph.exploits:
            held = slots.get(v)
            if held is not None and held.precedes(alert):
                events.append(CorrelationEvent(CORRELATION, v, held.id, vertex, alert.id))
                continue
            if mode == STOP:
                continue
            events.append(CorrelationEvent(HYPOTHESIS, v, None, vertex, alert.id))
        for w in into[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return events
