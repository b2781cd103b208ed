"""Attack graph model and the alert-to-exploit mapping.

An attack graph is a bipartite DAG.  Exploit vertices are
``(vuln, src, dst)`` tuples whose host fields may be single addresses,
CIDR blocks or the ``"*"`` wildcard; condition vertices are the
prerequisites and consequences that chain exploits together.

Graph files are JSON documents::

    {
      "exploits":   [{"id": "e1", "vuln": "CVE-X", "src": "*", "dst": "10.0.0.5"}],
      "conditions": [{"id": "c0", "predicate": "net-access", "host": "*"}],
      "edges":      [["c0", "e1"]],
      "sigmap":     [{"sig": "sid:1234", "vuln": "CVE-X"}]
    }
"""

from __future__ import annotations

import json
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

from alertgate.errors import GraphValidationError, ParseError

__all__ = [
    "Alert",
    "AttackGraph",
    "ConditionVertex",
    "ExploitVertex",
    "HostSpec",
    "ip_to_int",
    "load_attack_graph",
    "map_alert",
]


_OCTET = r"(25[0-5]|2[0-4][0-9]|[01]?[0-9]?[0-9])"
_IPV4 = re.compile(r"\.".join([_OCTET] * 4))


def is_ipv4(addr) -> bool:
    return isinstance(addr, str) and _IPV4.fullmatch(addr) is not None


def ip_to_int(addr: str) -> int:
    """Convert a dotted-quad IPv4 address to an integer.

    Strict about form: exactly four decimal octets, each 0-255.
    """
    m = _IPV4.fullmatch(addr)
    if m is None:
        raise ValueError(f"not an IPv4 address: {addr!r}")
    a, b, c, d = m.groups()
    return (int(a) << 24) | (int(b) << 16) | (int(c) << 8) | int(d)


def int_to_ip(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


@dataclass(frozen=True)
class HostSpec:
    """A host pattern: one address, a CIDR block, or the wildcard.

    ``specificity`` is the prefix length (32 for a single address, 0 for
    ``"*"``), which orders competing matches.
    """

    pattern: str
    network: int
    mask: int
    specificity: int

    @classmethod
    def parse(cls, pattern: str) -> "HostSpec":
        if not isinstance(pattern, str):
            raise ValueError(f"host spec must be a string, got {pattern!r}")
        if pattern == "*":
            return cls("*", 0, 0, 0)
        if "/" in pattern:
            addr, _, prefix_text = pattern.partition("/")
            if not prefix_text.isdigit() or int(prefix_text) > 32:
                raise ValueError(f"bad prefix length in {pattern!r}")
            prefix = int(prefix_text)
        else:
            addr, prefix = pattern, 32
        mask = (0xFFFFFFFF << (32 - prefix)) & 0xFFFFFFFF
        network = ip_to_int(addr) & mask
        return cls(pattern, network, mask, prefix)

    def matches(self, addr: int) -> bool:
        return (addr & self.mask) == self.network

    def __str__(self) -> str:
        return self.pattern


@dataclass(frozen=True)
class ExploitVertex:
    id: str
    vuln: str
    src: HostSpec
    dst: HostSpec

    def matches_hosts(self, src: int, dst: int) -> bool:
        return self.dst.matches(dst) and self.src.matches(src)


@dataclass(frozen=True)
class ConditionVertex:
    id: str
    predicate: str
    host: HostSpec


class Alert(NamedTuple):
    """One IDS alert.  ``id`` is the arrival sequence number."""

    id: int
    ts: float
    sig: str
    src: str
    dst: str
    vuln: Optional[str] = None
    msg: Optional[str] = None

    def precedes(self, other: "Alert") -> bool:
        """Strict temporal order; equal timestamps fall back to arrival id."""
        return (self.ts, self.id) < (other.ts, other.id)


def _specificity_key(vertex: ExploitVertex):
    return (-vertex.dst.specificity, -vertex.src.specificity, vertex.id)


class AttackGraph:
    """A validated, read-only attack graph.

    Construction checks every structural invariant and raises
    :class:`GraphValidationError` naming the first violation found.
    Besides the raw vertex and edge sets it keeps two derived views used
    by the correlator: exploit-to-exploit adjacency (``u`` precedes ``w``
    when some consequence of ``u`` is a prerequisite of ``w``) and a
    per-vulnerability index for :func:`map_alert`.
    """

    def __init__(self, exploits=(), conditions=(), edges=(), sigmap=()):
        self.exploits: dict[str, ExploitVertex] = {}
        self.conditions: dict[str, ConditionVertex] = {}
        for vertex in exploits:
            if vertex.id in self.exploits:
                raise GraphValidationError(f"duplicate id: {vertex.id!r}")
            self.exploits[vertex.id] = vertex
        for vertex in conditions:
            if vertex.id in self.conditions or vertex.id in self.exploits:
                raise GraphValidationError(f"duplicate id: {vertex.id!r}")
            self.conditions[vertex.id] = vertex

        edge_set = set()
        for src, dst in edges:
            for end in (src, dst):
                if end not in self.exploits and end not in self.conditions:
                    raise GraphValidationError(
                        f"dangling endpoint: edge ({src!r}, {dst!r}) names unknown vertex {end!r}"
                    )
            if (src in self.exploits) == (dst in self.exploits):
                raise GraphValidationError(f"non-bipartite edge: ({src!r}, {dst!r})")
            edge_set.add((src, dst))
        self.edges: frozenset[tuple[str, str]] = frozenset(edge_set)

        self.sigmap: dict[str, tuple[str, ...]] = {}
        for sig, vuln in sigmap:
            known = self.sigmap.get(sig, ())
            if vuln not in known:
                self.sigmap[sig] = known + (vuln,)

        self.topological_order = self._toposort()
        self._build_exploit_adjacency()
        self._by_vuln: dict[str, list[ExploitVertex]] = defaultdict(list)
        for vertex in self.exploits.values():
            self._by_vuln[vertex.vuln].append(vertex)
        for bucket in self._by_vuln.values():
            bucket.sort(key=_specificity_key)

    def _toposort(self) -> list[str]:
        succ = defaultdict(list)
        indegree = {v: 0 for v in (*self.exploits, *self.conditions)}
        for src, dst in self.edges:
            succ[src].append(dst)
            indegree[dst] += 1
        ready = sorted(v for v, d in indegree.items() if d == 0)
        order = []
        queue = deque(ready)
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(succ[v]):
                indegree[w] -= 1
                if indegree[w] == 0:
                    queue.append(w)
        if len(order) != len(indegree):
            stuck = sorted(v for v, d in indegree.items() if d > 0)
            raise GraphValidationError(f"cycle found through {stuck[0]!r}")
        return order

    def _build_exploit_adjacency(self) -> None:
        cond_out = defaultdict(set)
        cond_in = defaultdict(set)
        for src, dst in self.edges:
            if src in self.conditions:
                cond_out[src].add(dst)
            else:
                cond_in[dst].add(src)
        succ = {v: set() for v in self.exploits}
        pred = {v: set() for v in self.exploits}
        for cond, producers in cond_in.items():
            for u in producers:
                for w in cond_out.get(cond, ()):
                    succ[u].add(w)
                    pred[w].add(u)
        self.exploit_successors = {v: tuple(sorted(s)) for v, s in succ.items()}
        self.exploit_predecessors = {v: tuple(sorted(s)) for v, s in pred.items()}

    def candidates(self, vuln: str) -> list[ExploitVertex]:
        """Exploit vertices for ``vuln``, most specific first."""
        return self._by_vuln.get(vuln, [])

    @classmethod
    def from_dict(cls, doc: dict) -> "AttackGraph":
        if not isinstance(doc, dict):
            raise ParseError("graph document must be an object")
        try:
            exploits = [
                ExploitVertex(
                    str(e["id"]), str(e["vuln"]),
                    HostSpec.parse(e.get("src", "*")), HostSpec.parse(e["dst"]),
                )
                for e in doc.get("exploits", [])
            ]
            conditions = [
                ConditionVertex(str(c["id"]), str(c.get("predicate", "")),
                                HostSpec.parse(c.get("host", "*")))
                for c in doc.get("conditions", [])
            ]
            edges = []
            for pair in doc.get("edges", []):
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise ParseError(f"edge must be a [from, to] pair, got {pair!r}")
                edges.append((str(pair[0]), str(pair[1])))
            sigmap = [(str(m["sig"]), str(m["vuln"])) for m in doc.get("sigmap", [])]
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r} in graph document") from exc
        except (TypeError, AttributeError) as exc:
            raise ParseError(f"malformed graph document: {exc}") from exc
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        return cls(exploits, conditions, edges, sigmap)

    def to_dict(self) -> dict:
        doc = {
            "exploits": [
                {"id": v.id, "vuln": v.vuln, "src": v.src.pattern, "dst": v.dst.pattern}
                for v in sorted(self.exploits.values(), key=lambda v: v.id)
            ],
            "conditions": [
                {"id": c.id, "predicate": c.predicate, "host": c.host.pattern}
                for c in sorted(self.conditions.values(), key=lambda c: c.id)
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }
        if self.sigmap:
            doc["sigmap"] = [
                {"sig": sig, "vuln": vuln}
                for sig in sorted(self.sigmap) for vuln in self.sigmap[sig]
            ]
        return doc

    def __repr__(self) -> str:
        return (f"AttackGraph({len(self.exploits)} exploits, "
                f"{len(self.conditions)} conditions, {len(self.edges)} edges)")


def load_attack_graph(text: str) -> AttackGraph:
    """Parse and validate a JSON graph document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"graph file is not valid JSON: {exc}", exc.lineno) from exc
    return AttackGraph.from_dict(doc)


def map_alert(alert: Alert, graph: AttackGraph) -> Optional[str]:
    """Return the id of the exploit vertex ``alert`` belongs to, or None.

    A vertex matches when its vulnerability equals ``alert.vuln`` or is
    associated with ``alert.sig`` through the graph's signature table,
    and both host specs cover the alert's addresses.  Among several
    matches the most specific wins: highest dst prefix, then highest src
    prefix, then smallest id.
    """
    vulns = graph.sigmap.get(alert.sig, ())
    if alert.vuln is not None and alert.vuln not in vulns:
        vulns = (alert.vuln, *vulns)
    if not vulns:
        return None
    src = ip_to_int(alert.src)
    dst = ip_to_int(alert.dst)
    best = None
    for vuln in vulns:
        for vertex in graph.candidates(vuln):
            if vertex.matches_hosts(src, dst):
                if best is None or _specificity_key(vertex) < _specificity_key(best):
                    best = vertex
                break
    return None if best is None else best.id
