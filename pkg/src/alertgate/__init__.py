"""Throttled attack-graph correlation for IDS alert streams."""

from alertgate.attack_graph import (
    Alert,
    AttackGraph,
    ConditionVertex,
    ExploitVertex,
    HostSpec,
    load_attack_graph,
    map_alert,
)
from alertgate.correlator import (
    HYPOTHESIZE,
    STOP,
    CorrelationEvent,
    CorrelationGraph,
    QueueGraph,
    correlate_bruteforce,
    snapshot_correlation_graph,
)
from alertgate.errors import (
    AlertGateError,
    GraphValidationError,
    InvalidParameterError,
    ParseError,
    ScenarioError,
    TimeRegressionError,
)
from alertgate.floodbench import (
    BenchReport,
    FloodSpec,
    ScenarioSpec,
    ScenarioStep,
    generate_flood,
    interleave_scenario,
    run_benchmark,
)
from alertgate.pipeline import (
    Pipeline,
    PipelineConfig,
    RunStats,
    SignatureFilterBank,
    parse_alert_line,
    read_correlation_graph,
    run_pipeline,
    run_stream,
    write_correlation_graph,
)
from alertgate.throttle import RunLengthRecord, Throttle, TokenBucket, Verdict

__version__ = "0.1.0"
