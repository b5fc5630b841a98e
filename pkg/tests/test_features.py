import numpy as np
import pytest
from hypothesis import given, strategies as st

from cascade_diversity.cascade import build_cascade, snapshot
from cascade_diversity.community import CommunityPartition
from cascade_diversity.errors import ParameterError
from cascade_diversity.features import (
    A_FEATURES,
    FeatureMatrix,
    assemble_features,
    avg_time_to_adoption,
    count_communities,
    extract_measures,
    feature_names,
    gini_impurity,
    measure_snapshot,
    measurement_report,
    overlap,
    report_csv,
)
from cascade_diversity.graph import InfluenceGraph
from cascade_diversity.ingest import RepostEvent


def part(*labels):
    return CommunityPartition(np.array(labels, dtype=np.int64), max(labels) + 1, 0.0)


def cascade(g, offsets, uids=None):
    uids = uids or g.uids[: len(offsets)]
    evs = [RepostEvent("m", uids[0], 1000, None)]
    evs += [RepostEvent("m", u, 1000 + t, uids[0]) for u, t in zip(uids[1:], offsets[1:])]
    return build_cascade(evs, g)


def test_count_communities():
    p = part(0, 1, 1, 4, 3, 3, 3, 3, 3)
    assert count_communities([], p) == 0
    assert count_communities([4, 5, 6, 7, 8], p) == 1
    assert count_communities([0, 1, 2, 3], p) == 3
    assert count_communities([0, -1], p) == 1


def test_gini():
    p = part(0, 0, 1, 1, 2, 2, 2)
    assert gini_impurity([0, 1], p) == 0.0
    assert gini_impurity([0, 1, 2, 3], p) == pytest.approx(0.5)
    assert gini_impurity([4, 5, 6, 2], p) == pytest.approx(0.375)
    assert gini_impurity([], p) == 0.0


def test_overlap():
    p = part(1, 2, 2, 3)
    assert overlap([0, 1], [2, 3], p) == 1
    assert overlap([0], [3], p) == 0
    assert overlap([0, 1, 3], [0, 1, 3], p) == count_communities([0, 1, 3], p)


def test_avg_time():
    g = InfluenceGraph.from_edges(list("abc"), [], [])
    assert avg_time_to_adoption(cascade(g, [0, 60, 120]), 3) == 90
    assert avg_time_to_adoption(cascade(g, [0, 0, 0]), 3) == 0
    assert avg_time_to_adoption(cascade(g, [0, 45]), 2) == 45
    with pytest.raises(ParameterError):
        avg_time_to_adoption(cascade(g, [0, 45]), 1)


def test_measure_fixture():
    g = InfluenceGraph.from_edges(list("abcd"), [0, 0, 1], [1, 2, 3])
    p = part(0, 0, 1, 1)
    c = cascade(g, [0, 600])
    ms = measure_snapshot(snapshot(c, g, 2, 1800), c, p)
    assert (ms.k_adopters, ms.k_frontiers, ms.overlap_af, ms.gini_frontiers) == (1, 1, 0, 0.0)
    # F-bar empty
    assert ms.k_nonadopters == 0 and ms.gini_nonadopters == 0.0
    assert ms.overlap_an == 0 and ms.overlap_fn == 0
    assert "gini_nonadopters" in ms.degenerate
    m1 = measure_snapshot(snapshot(c, g, 1), c, p)
    assert m1.gini_adopters == 0.0 and m1.avgtime == 0.0


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40))
def test_gini_upper_bound(labels):
    p = part(*labels)
    nodes = list(range(len(labels)))
    k = count_communities(nodes, p)
    gi = gini_impurity(nodes, p)
    assert 0 <= gi < 1
    assert gi <= 1 - 1 / k + 1e-12
    counts = np.bincount(labels)
    counts = counts[counts > 0]
    if np.all(counts == counts[0]):
        assert gi == pytest.approx(1 - 1 / k)
    else:
        assert gi < 1 - 1 / k


@given(
    st.lists(st.integers(0, 6), min_size=1, max_size=30),
    st.lists(st.integers(0, 29), max_size=15),
    st.lists(st.integers(0, 29), max_size=15),
)
def test_overlap_symmetry(labels, a, b):
    p = part(*labels)
    n = len(labels)
    a = [x for x in a if x < n]
    b = [x for x in b if x < n]
    assert overlap(a, b, p) == overlap(b, a, p)
    assert overlap(a, a, p) == count_communities(a, p)
    assert overlap(a, b, p) <= min(count_communities(a, p), count_communities(b, p))


def star_world(n_cascades=6):
    # hub 0 feeds 1..40, community = node % 4
    n = 41
    g = InfluenceGraph.from_edges([f"v{i}" for i in range(n)], [0] * 40, range(1, 41))
    p = part(*[i % 4 for i in range(n)])
    cascades = []
    for j in range(n_cascades):
        size = 30 + 10 * j
        uids = [f"v{i}" for i in range(min(size, n))] + [f"x{j}_{i}" for i in range(max(0, size - n))]
        evs = [RepostEvent(f"m{j}", uids[0], 0, None)]
        evs += [RepostEvent(f"m{j}", u, 7 * i, uids[0]) for i, u in enumerate(uids[1:], 1)]
        cascades.append(build_cascade(evs, g))
    return g, p, cascades


def test_group_columns():
    assert feature_names("C") == ("avgtime_m50",)
    names = feature_names("A")
    assert len(names) == 22
    assert names[:11] == tuple(f"{n}_m30" for n in A_FEATURES)
    assert names[11:] == tuple(f"{n}_m50" for n in A_FEATURES)


def test_assemble_excludes_short_cascades():
    g, p, cascades = star_world()
    measures = extract_measures(cascades, g, p, sizes=(30, 50))
    fm = assemble_features(cascades, measures, "A")
    assert fm.excluded == 2  # sizes 30 and 40 never reach m=50
    assert fm.values.shape == (4, 22)
    fc = assemble_features(cascades, measures, "C")
    assert fc.names == ("avgtime_m50",)
    assert np.allclose(fc.values[:, 0], [avg_time_to_adoption(c, 50) for c in cascades[2:]])


def test_features_csv_round_trip_and_threads(tmp_path):
    g, p, cascades = star_world()
    m1 = extract_measures(cascades, g, p, sizes=(30, 50), threads=1)
    m4 = extract_measures(cascades, g, p, sizes=(30, 50), threads=4)
    assemble_features(cascades, m1, "A").to_csv(tmp_path / "a.csv")
    assemble_features(cascades, m4, "A").to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    back = FeatureMatrix.from_csv(tmp_path / "a.csv")
    assert back.group == "A" and back.names == feature_names("A")
    orig = assemble_features(cascades, m1, "A")
    assert np.array_equal(back.values, orig.values)
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header.startswith("mid,final_size,label,k_frontiers_m30")


def test_report_quartiles():
    g, p, cascades = star_world()
    measures = extract_measures(cascades, g, p, sizes=(30, 50))
    rows = measurement_report(cascades, measures, threshold=80, sizes=(30, 50))
    by = {(r["measure"], r["m"], r["class"]): r for r in rows}
    viral = by[("k_adopters", 30, "viral")]
    assert viral["n"] == 1
    assert viral["min"] == viral["q1"] == viral["median"] == viral["q3"] == viral["max"]
    # star hub: frontier communities identical across cascades at m=30
    const = by[("size_frontiers", 30, "nonviral")]
    assert const["q1"] == const["median"] == const["q3"]
    t = by[("avgtime", 30, "nonviral")]
    assert t["mean"] == pytest.approx(np.mean([7 * 15 / 60] * 5))
    text = report_csv(rows)
    assert text.splitlines()[1] == "measure,m,class,min,q1,median,q3,max,mean"
