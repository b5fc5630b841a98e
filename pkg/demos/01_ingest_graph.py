"""
Repost logs and the influence graph
===================================

Generate a small synthetic repost log, write it as TSV, read it back and
build the static influence graph from the graph window.
"""
import tempfile
from pathlib import Path

import numpy as np

from cascade_diversity.graph import build_graph, graph_stats
from cascade_diversity.ingest import Window, filter_window, group_cascades, read_events
from cascade_diversity.synth import SynthConfig, generate

cfg = SynthConfig(k=6, nodes_per_community=100, p_in=0.08, p_out=0.004, n_cascades=300, seed=1)
corpus = generate(cfg)

tmp = Path(tempfile.mkdtemp())
corpus.write(tmp / "events.tsv", tmp / "truth.csv")
print((tmp / "events.tsv").read_text().splitlines()[:3])

parsed = read_events(tmp / "events.tsv")
print("events:", len(parsed.events), "malformed:", parsed.malformed)

# graph edges come from (parent -> reposter) pairs inside the graph window
g = build_graph(filter_window(parsed.events, Window(*cfg.graph_window)))
print(graph_stats(g).report())

# out-neighbours of node 0, straight from the CSR arrays
print(g.uids[0], "->", [g.uids[v] for v in g.out_neighbors(0)][:10])
print("mean out-degree", np.mean(g.out_degree()))

# cascades live in the later window
groups = group_cascades(filter_window(parsed.events, Window(*cfg.cascade_window)))
print(groups.summary())
