"""
Snapshots and structural diversity
==================================

Take one cascade, look at it after m adopters, split its frontier by
exposure recency and compute the community-based measures.
"""
from cascade_diversity.cascade import snapshot
from cascade_diversity.features import measure_snapshot
from cascade_diversity.ingest import Window
from cascade_diversity.pipeline import PipelineConfig, prepare
from cascade_diversity.synth import SynthConfig, generate

cfg = SynthConfig(k=10, nodes_per_community=200, p_in=0.05, p_out=0.002, n_cascades=400,
                  beta=0.08, seed=3)
pc = PipelineConfig(Window(*cfg.graph_window), Window(*cfg.cascade_window))
g, p, cascades = prepare(generate(cfg).events(), pc)

c = max(cascades, key=lambda c: c.final_size)
print(c.mid, "final size", c.final_size)

for m in (10, 30, 50):
    if m > c.final_size:
        break
    s = snapshot(c, g, m, lam=1800)
    print(f"m={m}: {len(s.adopters)} adopters, {len(s.frontiers)} frontiers "
          f"({len(s.lambda_frontiers)} fresh, {len(s.lambda_nonadopters)} stale)")
    ms = measure_snapshot(s, c, p)
    print("   K", ms.k_adopters, ms.k_frontiers, ms.k_nonadopters,
          " gini %.3f %.3f %.3f" % (ms.gini_adopters, ms.gini_frontiers, ms.gini_nonadopters),
          " avgtime %.0fs" % ms.avgtime)

# absolute semantics: fresh means exposed within lambda of the original post
s = snapshot(c, g, min(50, c.final_size), lam=1800, semantics="absolute")
print("absolute:", len(s.lambda_frontiers), "fresh,", len(s.lambda_nonadopters), "stale")
