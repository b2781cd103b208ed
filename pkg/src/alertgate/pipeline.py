"""Ingestion, mapping, throttled correlation and output.

Input is a line-delimited JSON alert stream, one record per line::

    {"ts": 12.5, "sig": "icmp-flood", "src": "1.2.3.4", "dst": "10.0.0.5"}

with optional ``vuln`` and ``msg`` fields.  Alerts that map to an
exploit vertex go through that vertex's queue and throttle; the rest go
through a per-signature fallback filter.  The alert log written out is
line-delimited JSON as well: ``alert`` records for admitted alerts, each
preceded by a ``repeat`` record when it releases a suppressed run.
"""

from __future__ import annotations

import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional

from alertgate.attack_graph import Alert, AttackGraph, is_ipv4, load_attack_graph, map_alert
from alertgate.correlator import (
    CORRELATION,
    HYPOTHESIS,
    MODES,
    PREDICTION,
    STOP,
    CorrelationGraph,
    Edge,
    Node,
    QueueGraph,
    snapshot_correlation_graph,
)
from alertgate.errors import InvalidParameterError, ParseError, TimeRegressionError
from alertgate.throttle import REGRESSION_TOLERANCE, RunLengthRecord, Throttle, Verdict

__all__ = [
    "Pipeline",
    "PipelineConfig",
    "RunStats",
    "SignatureFilterBank",
    "alert_to_dict",
    "parse_alert_line",
    "read_alert_stream",
    "read_correlation_graph",
    "run_pipeline",
    "write_correlation_graph",
]

_REQUIRED = ("ts", "sig", "src", "dst")
_decode = json.JSONDecoder().decode


def parse_alert_line(line, alert_id: int, lineno: Optional[int] = None) -> Alert:
    """Parse one JSON alert record (str or bytes) into an :class:`Alert`."""
    try:
        rec = _decode(line.decode() if isinstance(line, bytes) else line)
    except ValueError as exc:
        raise ParseError(f"malformed alert record: {exc}", lineno) from None
    if not isinstance(rec, dict):
        raise ParseError("alert record must be a JSON object", lineno)
    for name in _REQUIRED:
        if name not in rec:
            raise ParseError(f"missing required field {name!r}", lineno)
    ts = rec["ts"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise ParseError(f"field 'ts' must be a number, got {ts!r}", lineno)
    src, dst = rec["src"], rec["dst"]
    if not (is_ipv4(src) and is_ipv4(dst)):
        raise ParseError(f"bad address in src={src!r} dst={dst!r}", lineno)
    return Alert(alert_id, float(ts), str(rec["sig"]), src, dst, rec.get("vuln"), rec.get("msg"))


def read_alert_stream(lines: Iterable, start_id: int = 1):
    """Yield alerts from an iterable of lines, numbering them in arrival order."""
    alert_id = start_id
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        yield parse_alert_line(line, alert_id, lineno)
        alert_id += 1


def alert_to_dict(alert: Alert) -> dict:
    rec = {"ts": alert.ts, "sig": alert.sig, "src": alert.src, "dst": alert.dst}
    if alert.vuln is not None:
        rec["vuln"] = alert.vuln
    if alert.msg is not None:
        rec["msg"] = alert.msg
    return rec


@dataclass
class PipelineConfig:
    graph_path: str
    output_alert_path: str
    output_graph_path: str
    input_path: str = "-"
    dot_path: Optional[str] = None
    rate: float = 2.0
    burst: float = 20.0
    fallback_rate: float = 2.0
    fallback_burst: float = 20.0
    hypothesis_mode: str = STOP

    def __post_init__(self):
        if not (self.rate > 0 and self.fallback_rate > 0):
            raise InvalidParameterError("token rates must be positive")
        if not (self.burst >= 1 and self.fallback_burst >= 1):
            raise InvalidParameterError("burst sizes must be >= 1")
        if self.hypothesis_mode not in MODES:
            raise InvalidParameterError(f"hypothesis mode must be one of {MODES}")


@dataclass
class RunStats:
    alerts_in: int = 0
    alerts_out: int = 0
    suppressed: int = 0
    correlations: int = 0
    predictions: int = 0
    hypotheses: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    wall_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class SignatureFilterBank:
    """Per-signature throttles for alerts outside the attack graph, created on first sight."""

    def __init__(self, rate: float, burst: float):
        if not rate > 0 or not burst >= 1:
            raise InvalidParameterError("fallback rate must be positive and burst >= 1")
        self.rate = rate
        self.burst = burst
        self.filters: dict[str, Throttle] = {}

    def submit(self, alert: Alert) -> Verdict:
        throttle = self.filters.get(alert.sig)
        if throttle is None:
            throttle = self.filters[alert.sig] = Throttle(self.rate, self.burst, alert.ts)
        return throttle.submit(alert)

    def flush(self) -> list[tuple[str, RunLengthRecord]]:
        released = []
        for sig in sorted(self.filters):
            record = self.filters[sig].flush()
            if record is not None:
                released.append((sig, record))
        return released

    def __len__(self) -> int:
        return len(self.filters)


def _repeat_record(scope: str, key: str, record: RunLengthRecord) -> dict:
    exemplar = alert_to_dict(record.exemplar)
    exemplar["id"] = record.exemplar.id
    return {
        "type": "repeat", "scope": scope, "key": key, "count": record.count,
        "first_ts": record.first_ts, "last_ts": record.last_ts,
        "exemplar": exemplar, "msg": record.message,
    }


class Pipeline:
    """Single-stage processing loop over an alert stream.

    ``out`` receives the alert log as text.  The queue graph is created
    at the first alert so bucket clocks start at the stream's first
    timestamp.
    """

    def __init__(self, graph: AttackGraph, rate=2.0, burst=20.0,
                 fallback_rate=2.0, fallback_burst=20.0, mode=STOP):
        if mode not in MODES:
            raise InvalidParameterError(f"hypothesis mode must be one of {MODES}")
        self.graph = graph
        self.rate, self.burst, self.mode = rate, burst, mode
        self.bank = SignatureFilterBank(fallback_rate, fallback_burst)
        # validate queue parameters up front
        Throttle(rate, burst)
        self.qg: Optional[QueueGraph] = None
        self.stats = RunStats()
        self._clock: Optional[float] = None

    def _emit(self, out, rec: dict) -> None:
        line = json.dumps(rec) + "\n"
        out.write(line)
        self.stats.bytes_out += len(line)

    def _emit_alert(self, out, alert: Alert, vertex: Optional[str]) -> None:
        rec = {"type": "alert", "id": alert.id}
        rec.update(alert_to_dict(alert))
        if vertex is not None:
            rec["vertex"] = vertex
        self._emit(out, rec)
        self.stats.alerts_out += 1

    def process(self, alert: Alert, out) -> Verdict:
        clock = self._clock
        if clock is None or alert.ts > clock:
            self._clock = alert.ts
        elif alert.ts < clock - REGRESSION_TOLERANCE:
            raise TimeRegressionError(
                f"timestamp {alert.ts} is {clock - alert.ts:.3f}s behind stream clock {clock}",
                alert.id,
            )
        self.stats.alerts_in += 1
        vertex = map_alert(alert, self.graph)
        if vertex is None:
            verdict = self.bank.submit(alert)
            scope, key = "signature", alert.sig
        else:
            if self.qg is None:
                self.qg = QueueGraph(self.graph, self.rate, self.burst, alert.ts)
            _, verdict = self.qg.process_alert(vertex, alert, self.mode)
            scope, key = "vertex", vertex
        if verdict.admitted:
            if verdict.backlog is not None:
                self._emit(out, _repeat_record(scope, key, verdict.backlog))
                self.stats.suppressed += verdict.backlog.count
            self._emit_alert(out, alert, vertex)
        return verdict

    def finish(self, out) -> CorrelationGraph:
        """Flush pending suppression records and return the correlation graph."""
        if self.qg is None:
            self.qg = QueueGraph(self.graph, self.rate, self.burst, 0.0)
        for vertex, record, _ in self.qg.flush():
            self._emit(out, _repeat_record("vertex", vertex, record))
            self.stats.suppressed += record.count
        for sig, record in self.bank.flush():
            self._emit(out, _repeat_record("signature", sig, record))
            self.stats.suppressed += record.count
        counts = self.qg.counts
        self.stats.correlations = counts[CORRELATION]
        self.stats.hypotheses = counts[HYPOTHESIS]
        self.stats.predictions = counts[PREDICTION]
        return snapshot_correlation_graph(self.qg)

    def run(self, lines: Iterable, out) -> tuple[RunStats, CorrelationGraph]:
        """Process every line of ``lines`` (str or bytes) and finish the run."""
        started = time.perf_counter()
        stats = self.stats
        alert_id = 1
        for lineno, line in enumerate(lines, 1):
            stats.bytes_in += len(line)
            if not line.strip():
                continue
            self.process(parse_alert_line(line, alert_id, lineno), out)
            alert_id += 1
        graph = self.finish(out)
        stats.wall_seconds = time.perf_counter() - started
        return stats, graph


def run_stream(graph: AttackGraph, stream, *, rate=2.0, burst=20.0, fallback_rate=2.0,
               fallback_burst=20.0, mode=STOP) -> tuple[RunStats, str, CorrelationGraph]:
    """Run the pipeline over in-memory stream text, returning ``(stats, alert_log, graph)``."""
    if isinstance(stream, str):
        stream = stream.encode()
    pipeline = Pipeline(graph, rate, burst, fallback_rate, fallback_burst, mode)
    out = io.StringIO()
    stats, cgraph = pipeline.run(io.BytesIO(stream), out)
    return stats, out.getvalue(), cgraph


def run_pipeline(config: PipelineConfig) -> RunStats:
    """Run one configured pipeline over files and write every output."""
    graph = load_attack_graph(Path(config.graph_path).read_text())
    pipeline = Pipeline(graph, config.rate, config.burst, config.fallback_rate,
                        config.fallback_burst, config.hypothesis_mode)
    if config.input_path == "-":
        source = sys.stdin.buffer
        close_source = False
    else:
        source = open(config.input_path, "rb")
        close_source = True
    try:
        with open(config.output_alert_path, "w", encoding="ascii", newline="\n") as out:
            stats, cgraph = pipeline.run(source, out)
    finally:
        if close_source:
            source.close()
    Path(config.output_graph_path).write_text(write_correlation_graph(cgraph))
    if config.dot_path:
        Path(config.dot_path).write_text(write_correlation_graph(cgraph, "dot"))
    return stats


def write_correlation_graph(graph: CorrelationGraph, fmt: str = "native") -> str:
    """Serialize a correlation graph as native JSON or Graphviz DOT."""
    if fmt == "native":
        nodes = []
        for n in graph.nodes:
            rec = {"id": n.id, "kind": n.kind, "vertex": n.vertex}
            if n.ts is not None:
                rec["ts"] = n.ts
            if n.count is not None:
                rec["count"] = n.count
            nodes.append(rec)
        edges = [{"kind": e.kind, "src": e.src, "dst": e.dst} for e in graph.edges]
        return json.dumps({"nodes": nodes, "edges": edges}, indent=1) + "\n"
    if fmt == "dot":
        return _to_dot(graph)
    raise ValueError(f"unknown graph format {fmt!r}")


def read_correlation_graph(text: str) -> CorrelationGraph:
    try:
        doc = json.loads(text)
        nodes = [Node(n["id"], n["kind"], n["vertex"], n.get("ts"), n.get("count"))
                 for n in doc["nodes"]]
        edges = [Edge(e["kind"], e["src"], e["dst"]) for e in doc["edges"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed correlation graph: {exc}") from None
    graph = CorrelationGraph(nodes, edges)
    graph.validate()
    return graph


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(graph: CorrelationGraph) -> str:
    lines = ["digraph correlation {", "  rankdir=LR;", "  node [shape=box];"]
    for n in graph.nodes:
        if n.kind == "alert":
            attrs = f"label={_quote(f'{n.vertex} {n.id} @ {n.ts}')}"
        elif n.kind == HYPOTHESIS:
            attrs = f"label={_quote(f'{n.vertex} (hypothesized)')}, style=dashed"
        elif n.kind == PREDICTION:
            attrs = f"label={_quote(f'{n.vertex} (predicted)')}, style=dotted"
        else:
            attrs = f"label={_quote(f'{n.vertex}: repeated {n.count} times')}, shape=note"
        lines.append(f"  {_quote(n.id)} [{attrs}];")
    for e in graph.edges:
        style = ", style=dashed" if e.kind == HYPOTHESIS else ""
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} [label={_quote(e.kind)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
