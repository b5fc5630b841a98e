"""
Predicting virality
===================

Features at 30 and 50 adopters against the average-time baseline, then
the training threshold sweep with the test threshold held at 500.
"""
from cascade_diversity.ingest import Window
from cascade_diversity.learn import ForestParams, cross_validate, sweep_thresholds
from cascade_diversity.pipeline import PipelineConfig, featurize, prepare
from cascade_diversity.synth import SynthConfig, generate

cfg = SynthConfig(seed=4)  # default planted corpus, ~2% viral
pc = PipelineConfig(Window(*cfg.graph_window), Window(*cfg.cascade_window))
g, p, cascades = prepare(generate(cfg).events(), pc)
_, feats = featurize(cascades, g, p, pc)
fa, fc = feats["A"], feats["C"]
print("rows reaching m=50:", fa.values.shape[0], "viral:", int(fa.labels(500).sum()))

cv = dict(folds=10, repeats=2, params=ForestParams(n_trees=100), seed=0)
for name, fm in (("A", fa), ("C", fc)):
    rep = cross_validate(fm.values, fm.final_sizes, 500, 500, **cv)
    print(name, "P %.2f R %.2f F1 %.2f" % (rep.mean("precision"), rep.mean("recall"), rep.mean("f1")))

# higher training threshold: fewer but surer viral predictions
for row in sweep_thresholds(fa.values, fa.final_sizes, [(t, 500) for t in (300, 500, 700)], **cv):
    r = row.report
    print(f"TH_tr={row.th_tr}: P {r.mean('precision'):.2f} R {r.mean('recall'):.2f} "
          f"recalled size {r.mean('recalled_avg_size'):.0f}")
