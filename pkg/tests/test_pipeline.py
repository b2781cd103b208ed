import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alertgate import (
    FloodSpec,
    ParseError,
    Pipeline,
    PipelineConfig,
    ScenarioSpec,
    ScenarioStep,
    TimeRegressionError,
    generate_flood,
    interleave_scenario,
    load_attack_graph,
    parse_alert_line,
    read_correlation_graph,
    run_pipeline,
    run_stream,
    write_correlation_graph,
)
from alertgate.correlator import CorrelationGraph, Edge, Node
from alertgate.errors import InvalidParameterError
from conftest import DATA


def records(log):
    return [json.loads(line) for line in log.splitlines()]


def line(ts, sig="icmp", src="1.2.3.4", dst="5.6.7.8", **extra):
    return json.dumps({"ts": ts, "sig": sig, "src": src, "dst": dst, **extra}) + "\n"


class TestParse:
    def test_basic(self):
        a = parse_alert_line(line(0.0, "icmp-flood"), 7)
        assert (a.id, a.ts, a.sig, a.src, a.dst, a.vuln) == (7, 0.0, "icmp-flood", "1.2.3.4", "5.6.7.8", None)

    def test_vuln_and_bytes(self):
        a = parse_alert_line(line(1, vuln="CVE-X", msg="hi").encode(), 1)
        assert a.vuln == "CVE-X" and a.msg == "hi" and isinstance(a.ts, float)

    def test_missing_dst(self):
        with pytest.raises(ParseError, match="dst"):
            parse_alert_line('{"ts": 0, "sig": "s", "src": "1.2.3.4"}', 1, lineno=4)

    @pytest.mark.parametrize("text", ['{"ts": "x", "sig": "s", "src": "1.1.1.1", "dst": "1.1.1.1"}',
                                      '{"ts": 0, "sig": "s", "src": "1.1.1", "dst": "1.1.1.1"}',
                                      "[1, 2]", "{broken"])
    def test_malformed(self, text):
        with pytest.raises(ParseError, match="line 3"):
            parse_alert_line(text, 1, lineno=3)


class TestRun:
    def test_empty_input(self, chain):
        stats, log, graph = run_stream(chain, "")
        assert (stats.alerts_in, stats.alerts_out, stats.suppressed, stats.bytes_out) == (0, 0, 0, 0)
        assert log == "" and graph.nodes == []

    def test_backlog_written_before_admitting_alert(self, chain):
        stream = "".join(line(0.0) for _ in range(25)) + line(1.0)
        stats, log, _ = run_stream(chain, stream)
        recs = records(log)
        assert [r["type"] for r in recs[20:]] == ["repeat", "alert"]
        assert recs[20]["count"] == 5 and recs[20]["msg"] == "last message repeated 5 times"
        assert recs[21]["id"] == 26
        assert stats.alerts_out + stats.suppressed == stats.alerts_in == 26

    @pytest.mark.slow
    def test_full_scale_unmapped_flood(self, chain):
        flood = generate_flood(FloodSpec(300741, 7343, sig="icmp-flood", dst="10.9.9.9"))
        stats, log, _ = run_stream(chain, flood)
        # 20 burst + 2/s over the 40.96 s span
        assert stats.alerts_out <= 20 + 2 * 41
        assert stats.alerts_out + stats.suppressed == 300741
        repeats = [r for r in records(log) if r["type"] == "repeat"]
        assert sum(r["count"] for r in repeats) == stats.suppressed

    @pytest.mark.slow
    def test_chain_survives_flood(self, chain):
        flood = generate_flood(FloodSpec(300741, 7343, sig="sid:1002", dst="10.0.0.2",
                                         src_mode="random", seed=5))
        scenario = ScenarioSpec([ScenarioStep("e1", 5.0, "198.51.100.9", "10.0.0.1"),
                                 ScenarioStep("e2", 15.0, "198.51.100.9", "10.0.0.2"),
                                 ScenarioStep("e3", 25.0, "198.51.100.9", "10.0.0.3")])
        stream = interleave_scenario(flood, scenario, chain)
        stats, _, graph = run_stream(chain, stream)
        vertex = {n.id: n.vertex for n in graph.nodes}
        pairs = {(vertex[e.src], vertex[e.dst]) for e in graph.edges_of("correlation")}
        assert {("e1", "e2"), ("e2", "e3")} <= pairs
        assert stats.alerts_out + stats.suppressed == stats.alerts_in

    def test_time_regression_aborts_with_alert_id(self, chain):
        stream = line(10.0) + line(9.5) + line(8.0)
        with pytest.raises(TimeRegressionError, match="alert 3"):
            run_stream(chain, stream)

    def test_lazy_filter_bank(self, chain):
        stream = "".join(line(i * 0.1, sig=f"s{i % 4}") for i in range(40)) + line(5, sig="sid:1001", dst="10.0.0.1")
        p = Pipeline(chain)
        p.run(io.BytesIO(stream.encode()), io.StringIO())
        assert len(p.bank) == 4

    def test_bad_parameters(self, chain):
        with pytest.raises(InvalidParameterError):
            Pipeline(chain, rate=0)
        with pytest.raises(InvalidParameterError):
            Pipeline(chain, fallback_burst=0.5)
        with pytest.raises(InvalidParameterError):
            PipelineConfig("g", "a", "b", hypothesis_mode="guess")


@pytest.fixture(scope="module")
def chain_graph():
    return load_attack_graph((DATA / "chain_graph.json").read_text())


@st.composite
def mixed_streams(draw):
    n = draw(st.integers(0, 300))
    rng = random.Random(draw(st.integers(0, 10**6)))
    ts, out = 0.0, []
    for _ in range(n):
        ts += rng.choice([0.0, 0.0, 0.01, 0.3, 2.0])
        kind = rng.random()
        if kind < 0.4:
            k = rng.choice("123")
            out.append(line(ts, f"sid:100{k}", dst=f"10.0.0.{k}"))
        else:
            out.append(line(ts, rng.choice(["icmp", "scan", "ping"]), src=f"1.2.3.{rng.randint(1, 9)}"))
    return "".join(out), n


@given(mixed_streams(), st.sampled_from(["stop", "hypothesize"]),
       st.floats(0.1, 5), st.integers(1, 10))
@settings(max_examples=120, deadline=None)
def test_conservation_and_order(chain_graph, case, mode, rate, burst):
    stream, n = case
    stats, log, graph = run_stream(chain_graph, stream, rate=rate, burst=burst,
                                   fallback_rate=rate, fallback_burst=burst, mode=mode)
    assert stats.alerts_in == n
    assert stats.alerts_out + stats.suppressed == n
    recs = records(log)
    ids = [r["id"] for r in recs if r["type"] == "alert"]
    assert ids == sorted(ids) and len(ids) == stats.alerts_out
    assert sum(r["count"] for r in recs if r["type"] == "repeat") == stats.suppressed
    assert stats.bytes_out == len(log)
    assert read_correlation_graph(write_correlation_graph(graph)) == graph


@given(mixed_streams())
@settings(max_examples=60, deadline=None)
def test_unbounded_rate_is_identity(chain_graph, case):
    stream, n = case
    big = max(n, 1)
    stats, log, _ = run_stream(chain_graph, stream, rate=big, burst=big,
                               fallback_rate=big, fallback_burst=big)
    assert stats.alerts_out == n and stats.suppressed == 0
    assert all(r["type"] == "alert" for r in records(log))


@given(mixed_streams())
@settings(max_examples=40, deadline=None)
def test_deterministic_output(chain_graph, case):
    stream, _ = case
    _, log1, g1 = run_stream(chain_graph, stream, mode="hypothesize")
    _, log2, g2 = run_stream(chain_graph, stream, mode="hypothesize")
    assert log1 == log2
    assert write_correlation_graph(g1) == write_correlation_graph(g2)
    assert write_correlation_graph(g1, "dot") == write_correlation_graph(g2, "dot")


class TestGraphFormats:
    def chain_graph_output(self, chain):
        stream = (line(1, "sid:1001", dst="10.0.0.1") + line(2, "sid:1002", dst="10.0.0.2")
                  + line(3, "sid:1003", dst="10.0.0.3"))
        return run_stream(chain, stream)[2]

    def test_empty(self):
        doc = json.loads(write_correlation_graph(CorrelationGraph()))
        assert doc == {"nodes": [], "edges": []}

    def test_chain_native(self, chain):
        g = self.chain_graph_output(chain)
        doc = json.loads(write_correlation_graph(g))
        alert_nodes = [n for n in doc["nodes"] if n["kind"] == "alert"]
        corr = [e for e in doc["edges"] if e["kind"] == "correlation"]
        assert len(alert_nodes) == 3 and len(corr) == 2
        assert read_correlation_graph(write_correlation_graph(g)) == g

    def test_chain_dot(self, chain):
        dot = write_correlation_graph(self.chain_graph_output(chain), "dot")
        assert dot.startswith("digraph")
        assert dot.count('[label="correlation"]') == 2
        assert sum('"a' in l and "label=" in l and "->" not in l for l in dot.splitlines()) == 3

    def test_dot_marks_hypotheses_and_repeats(self):
        g = CorrelationGraph(
            [Node("a1", "alert", "e2", ts=0.0), Node("h1:e1", "hypothesis", "e1"),
             Node("s0", "suppression", "e2", ts=0.0, count=5)],
            [Edge("hypothesis", "h1:e1", "a1"), Edge("suppression", "s0", "a1")],
        )
        dot = write_correlation_graph(g, "dot")
        assert "repeated 5 times" in dot
        assert "style=dashed" in next(l for l in dot.splitlines() if l.strip().startswith('"h1:e1" ['))

    def test_read_rejects_dangling_edge(self):
        with pytest.raises(Exception):
            read_correlation_graph('{"nodes": [], "edges": [{"kind": "correlation", "src": "a", "dst": "b"}]}')


class TestFiles:
    def test_run_pipeline_writes_outputs(self, tmp_path, chain_text):
        (tmp_path / "g.json").write_text(chain_text)
        (tmp_path / "in.jsonl").write_text("".join(line(0.0) for _ in range(30)))
        cfg = PipelineConfig(graph_path=str(tmp_path / "g.json"), input_path=str(tmp_path / "in.jsonl"),
                             output_alert_path=str(tmp_path / "out.jsonl"),
                             output_graph_path=str(tmp_path / "cg.json"), dot_path=str(tmp_path / "cg.dot"))
        stats = run_pipeline(cfg)
        assert (stats.alerts_in, stats.alerts_out, stats.suppressed) == (30, 20, 10)
        assert stats.bytes_out == (tmp_path / "out.jsonl").stat().st_size
        assert stats.bytes_in == (tmp_path / "in.jsonl").stat().st_size
        assert (tmp_path / "cg.dot").read_text().startswith("digraph")
        read_correlation_graph((tmp_path / "cg.json").read_text())

    def test_stdin(self, tmp_path, chain_text, monkeypatch):
        (tmp_path / "g.json").write_text(chain_text)

        class FakeStdin:
            buffer = io.BytesIO(line(0.0).encode())

        monkeypatch.setattr("sys.stdin", FakeStdin)
        cfg = PipelineConfig(graph_path=str(tmp_path / "g.json"),
                             output_alert_path=str(tmp_path / "out.jsonl"),
                             output_graph_path=str(tmp_path / "cg.json"))
        assert run_pipeline(cfg).alerts_out == 1
