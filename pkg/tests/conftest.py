from pathlib import Path

import pytest

from alertgate import Alert, load_attack_graph

DATA = Path(__file__).parent / "data"


@pytest.fixture
def chain_text():
    return (DATA / "chain_graph.json").read_text()


@pytest.fixture
def chain(chain_text):
    return load_attack_graph(chain_text)


@pytest.fixture
def diamond():
    # e1 enables c1 and c2; c1 -> e2 -> c3, c2 -> e3 -> c4; c3, c4 -> e4
    return load_attack_graph("""{
      "exploits": [
        {"id": "e1", "vuln": "V1", "src": "*", "dst": "*"},
        {"id": "e2", "vuln": "V2", "src": "*", "dst": "*"},
        {"id": "e3", "vuln": "V3", "src": "*", "dst": "*"},
        {"id": "e4", "vuln": "V4", "src": "*", "dst": "*"}
      ],
      "conditions": [
        {"id": "c1", "predicate": "p1", "host": "*"},
        {"id": "c2", "predicate": "p2", "host": "*"},
        {"id": "c3", "predicate": "p3", "host": "*"},
        {"id": "c4", "predicate": "p4", "host": "*"}
      ],
      "edges": [["e1", "c1"], ["e1", "c2"], ["c1", "e2"], ["c2", "e3"],
                ["e2", "c3"], ["e3", "c4"], ["c3", "e4"], ["c4", "e4"]]
    }""")


def chain_alert(aid, vertex, ts, src="192.0.2.7"):
    n = vertex[1:]
    return Alert(aid, float(ts), f"sid:100{n}", src, f"10.0.0.{n}", f"CVE-{n}")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
