"""
Correlating alerts on an attack graph
=====================================

The chain graph has three exploits, each enabling the next:
c0 -> e1 -> c1 -> e2 -> c2 -> e3.  Every exploit vertex keeps only its
latest alert, and correlation walks a tree precomputed per vertex.
"""

from pathlib import Path

from alertgate import Alert, QueueGraph, load_attack_graph, map_alert, snapshot_correlation_graph
from alertgate.pipeline import write_correlation_graph

here = Path(__file__).parent
graph = load_attack_graph((here / "data" / "chain_graph.json").read_text())
print(graph)

qg = QueueGraph(graph, rate=2, burst=20)
print("backward tree of e3:", qg.backward_tree("e3").order)
print("forward tree of e1: ", qg.forward_tree("e1").order)

# alerts are mapped to exploit vertices by vulnerability (or signature) and hosts
a1 = Alert(1, 1.0, "sid:1001", "198.51.100.9", "10.0.0.1")
a3 = Alert(2, 5.0, "sid:1003", "198.51.100.9", "10.0.0.3")
print("a1 maps to", map_alert(a1, graph), "| a3 maps to", map_alert(a3, graph))

###############################################################################
# The e2 step was never seen.  In "stop" mode the walk ends at the empty
# queue; in "hypothesize" mode it infers the missing step and continues.

for mode in ("stop", "hypothesize"):
    qg = QueueGraph(graph, rate=2, burst=20)
    qg.process_alert("e1", a1, mode)
    events, _ = qg.process_alert("e3", a3, mode)
    print(f"{mode:>11}:", [(e.kind, e.src_vertex, e.dst_vertex) for e in events])

# the output correlation graph, as Graphviz input (hypotheses drawn dashed)
print(write_correlation_graph(snapshot_correlation_graph(qg), "dot"))
