"""
Which features matter
=====================

Selection frequencies from randomized L1 logistic regressions on the
structural features.
"""
import numpy as np

from cascade_diversity.ingest import Window
from cascade_diversity.learn.stability import stability_weights
from cascade_diversity.pipeline import PipelineConfig, featurize, prepare
from cascade_diversity.synth import SynthConfig, generate

cfg = SynthConfig(seed=5)
pc = PipelineConfig(Window(*cfg.graph_window), Window(*cfg.cascade_window))
g, p, cascades = prepare(generate(cfg).events(), pc)
_, feats = featurize(cascades, g, p, pc)
fa = feats["A"]

w = stability_weights(fa.values, fa.labels(500), fa.names, runs=100, seed=0)
for i in np.argsort(-w.weights):
    mark = "*" if w.selected[i] else " "
    print(f"{mark} {fa.names[i]:<24s} {w.weights[i]:.2f}")
print(w.runs - w.discarded, "fits used")
