"""Synthetic alert floods and the throttled-vs-unthrottled benchmark."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from alertgate.attack_graph import Alert, AttackGraph, int_to_ip, ip_to_int, map_alert
from alertgate.correlator import CORRELATION
from alertgate.errors import InvalidParameterError, ScenarioError
from alertgate.pipeline import PipelineConfig, RunStats, run_stream

__all__ = [
    "BenchReport",
    "FloodSpec",
    "ScenarioSpec",
    "ScenarioStep",
    "generate_flood",
    "interleave_scenario",
    "run_benchmark",
]

# IANA special-purpose blocks skipped when drawing random sources
_RESERVED = [
    (ip_to_int(net), 32 - int(prefix))
    for net, prefix in (
        s.split("/") for s in (
            "0.0.0.0/8", "10.0.0.0/8", "100.64.0.0/10", "127.0.0.0/8",
            "169.254.0.0/16", "172.16.0.0/12", "192.0.0.0/24", "192.0.2.0/24",
            "192.168.0.0/16", "198.18.0.0/15", "198.51.100.0/24",
            "203.0.113.0/24", "224.0.0.0/4", "240.0.0.0/4",
        )
    )
]


def _reserved(addr: int) -> bool:
    return any(addr >> shift == net >> shift for net, shift in _RESERVED)


@dataclass
class FloodSpec:
    total: int
    pps: float
    sig: str = "icmp-flood"
    dst: str = "10.0.0.5"
    src_mode: str = "fixed"
    src: str = "192.0.2.66"
    src_cidr: str = "0.0.0.0/0"
    seed: int = 0
    start_ts: float = 0.0

    def __post_init__(self):
        if self.total < 0:
            raise InvalidParameterError("flood total must be >= 0")
        if not self.pps > 0:
            raise InvalidParameterError("flood pps must be positive")
        if self.src_mode not in ("fixed", "random"):
            raise InvalidParameterError("src_mode must be 'fixed' or 'random'")


def generate_flood(spec: FloodSpec) -> str:
    """Render a flood as alert-stream text, one record per line.

    Alert ``i`` is stamped ``start_ts + i / pps``.  Random sources are
    drawn uniformly from ``src_cidr`` by a generator seeded with
    ``spec.seed``; for the whole address space the reserved blocks are
    skipped.
    """
    rng = random.Random(spec.seed)
    net, _, prefix = spec.src_cidr.partition("/")
    host_bits = 32 - int(prefix or 32)
    base = ip_to_int(net) & ~((1 << host_bits) - 1) & 0xFFFFFFFF
    sig_part = json.dumps(spec.sig)
    dst_part = json.dumps(spec.dst)
    fixed_src = json.dumps(spec.src)
    lines = []
    for i in range(spec.total):
        ts = spec.start_ts + i / spec.pps
        if spec.src_mode == "random":
            addr = base | rng.getrandbits(host_bits)
            while host_bits == 32 and _reserved(addr):
                addr = rng.getrandbits(32)
            src = '"' + int_to_ip(addr) + '"'
        else:
            src = fixed_src
        lines.append(f'{{"ts": {ts!r}, "sig": {sig_part}, "src": {src}, "dst": {dst_part}}}\n')
    return "".join(lines)


@dataclass(frozen=True)
class ScenarioStep:
    vertex: str
    ts: float
    src: str
    dst: str


@dataclass
class ScenarioSpec:
    steps: list[ScenarioStep] = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.steps, self.steps[1:]):
            if not b.ts > a.ts:
                raise ScenarioError("scenario step timestamps must be strictly increasing")

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        return cls([ScenarioStep(str(s["vertex"]), float(s["ts"]), s["src"], s["dst"])
                    for s in doc.get("steps", [])])


def _render_step(step: ScenarioStep, graph: AttackGraph) -> dict:
    vertex = graph.exploits.get(step.vertex)
    if vertex is None:
        raise ScenarioError(f"scenario vertex {step.vertex!r} not in attack graph")
    rec = {"ts": step.ts, "sig": f"scenario:{vertex.vuln}", "src": step.src,
           "dst": step.dst, "vuln": vertex.vuln}
    probe = Alert(0, step.ts, rec["sig"], step.src, step.dst, vertex.vuln)
    mapped = map_alert(probe, graph)
    if mapped != step.vertex:
        raise ScenarioError(
            f"scenario step at ts={step.ts} maps to {mapped!r}, not {step.vertex!r}"
        )
    return rec


def interleave_scenario(flood: str, scenario: ScenarioSpec, graph: AttackGraph) -> str:
    """Merge scenario alerts into a flood stream by timestamp, flood first on ties."""
    if not scenario.steps:
        return flood
    flood_lines = flood.splitlines(keepends=True)
    flood_ts = [json.loads(line)["ts"] for line in flood_lines]
    if not flood_ts or not (flood_ts[0] <= scenario.steps[0].ts
                            and scenario.steps[-1].ts <= flood_ts[-1]):
        raise ScenarioError("scenario timestamps must fall within the flood's time span")
    rendered = [json.dumps(_render_step(step, graph)) + "\n" for step in scenario.steps]

    merged = []
    i = 0
    for step, line in zip(scenario.steps, rendered):
        while i < len(flood_lines) and flood_ts[i] <= step.ts:
            merged.append(flood_lines[i])
            i += 1
        merged.append(line)
    merged.extend(flood_lines[i:])
    return "".join(merged)


@dataclass
class BenchReport:
    control: RunStats
    treatment: RunStats
    reduction_ratio: float
    bytes_ratio: float
    scenario_preserved: bool

    def to_dict(self) -> dict:
        return {
            "control": self.control.to_dict(),
            "treatment": self.treatment.to_dict(),
            "reduction_ratio": self.reduction_ratio,
            "bytes_ratio": self.bytes_ratio,
            "scenario_preserved": self.scenario_preserved,
        }


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else float("inf")
    return a / b


def run_benchmark(graph: AttackGraph, stream: str,
                  config: Optional[PipelineConfig] = None, **params) -> BenchReport:
    """Run the same stream unthrottled (control) and throttled (treatment).

    Throttle settings come from ``config`` or keyword overrides
    (``rate``, ``burst``, ``fallback_rate``, ``fallback_burst``, ``mode``).
    The control sets every rate and burst to at least the stream length,
    so nothing can be suppressed.
    """
    settings = dict(rate=2.0, burst=20.0, fallback_rate=2.0, fallback_burst=20.0, mode="stop")
    if config is not None:
        settings.update(rate=config.rate, burst=config.burst,
                        fallback_rate=config.fallback_rate,
                        fallback_burst=config.fallback_burst, mode=config.hypothesis_mode)
    settings.update(params)

    unbounded = float(max(1, stream.count("\n") + 1))
    control, _, control_graph = run_stream(
        graph, stream, rate=unbounded, burst=unbounded, fallback_rate=unbounded,
        fallback_burst=unbounded, mode=settings["mode"])
    treatment, _, treatment_graph = run_stream(graph, stream, **settings)

    control_edges = {(e.src, e.dst) for e in control_graph.edges_of(CORRELATION)}
    treatment_edges = {(e.src, e.dst) for e in treatment_graph.edges_of(CORRELATION)}
    return BenchReport(
        control=control,
        treatment=treatment,
        reduction_ratio=_ratio(control.alerts_out, treatment.alerts_out),
        bytes_ratio=_ratio(control.bytes_out, treatment.bytes_out),
        scenario_preserved=control_edges <= treatment_edges,
    )
