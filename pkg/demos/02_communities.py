"""
Louvain communities
===================

Recover the planted blocks of a stochastic block model and compare with
the truth via the adjusted Rand index.
"""
import numpy as np
from sklearn.metrics import adjusted_rand_score

from cascade_diversity.community import louvain
from cascade_diversity.synth import SynthConfig, gen_sbm

g, planted = gen_sbm(SynthConfig(k=8, nodes_per_community=150, p_in=0.06, p_out=0.002, seed=2))
print("nodes", g.node_count, "edges", g.edge_count)

p = louvain(g, seed=0)
print("communities", p.k, "modularity %.4f" % p.modularity)
print("ARI vs planted %.3f" % adjusted_rand_score(planted, p.assignment))

# community sizes
print(np.sort(np.bincount(p.assignment))[::-1])

# a different seed changes the visiting order, not (here) the answer
p2 = louvain(g, seed=7)
print("seed 7: k=%d Q=%.4f" % (p2.k, p2.modularity))
