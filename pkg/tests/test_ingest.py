import io

import pytest
from hypothesis import given, strategies as st

from cascade_diversity.errors import ParameterError, ParseError
from cascade_diversity.ingest import (
    RepostEvent,
    Window,
    filter_window,
    group_cascades,
    parse_events,
    read_events,
    serialize_events,
)


def test_parse_root_and_repost():
    res = parse_events(["m1\tu1\t100\t\n", "m1\tu2\t160\tu1\n"])
    assert res.events == [
        RepostEvent("m1", "u1", 100, None),
        RepostEvent("m1", "u2", 160, "u1"),
    ]
    assert res.malformed == 0


def test_parse_empty():
    res = parse_events([])
    assert res.events == [] and res.diagnostics == []


def test_parse_reports_bad_timestamp_with_line_number():
    lines = [f"m{i}\tu{i}\t{i}\t\n" for i in range(200)]
    lines[57] = "m57\tu57\tnoon\t\n"
    res = parse_events(lines)
    assert len(res.events) == 199
    assert res.diagnostics[0][0] == 58
    assert "noon" in res.diagnostics[0][1]


def test_parse_aborts_above_error_rate():
    lines = ["m1\tu1\t1\t\n", "bad line\n"]
    with pytest.raises(ParseError, match="line 2"):
        parse_events(lines)
    res = parse_events(lines, max_error_rate=0.6)
    assert res.malformed == 1


def test_read_events_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_events(tmp_path / "nope.tsv")


uid = st.text(alphabet="abcxyz019_", min_size=1, max_size=6)
event = st.builds(
    RepostEvent,
    uid,
    uid,
    st.integers(0, 2**40),
    st.one_of(st.none(), uid),
)


@given(st.lists(event, max_size=30))
def test_parse_serialize_round_trip(events):
    text = "".join(serialize_events(events))
    assert parse_events(io.StringIO(text)).events == events


def test_window_bounds():
    evs = [RepostEvent("m", f"u{t}", t) for t in (50, 100, 150)]
    assert [e.ts for e in filter_window(evs, Window(100, 150))] == [100]
    assert filter_window(evs, Window(0, 1000)) == evs
    assert filter_window(evs, Window(200, 300)) == []
    with pytest.raises(ParameterError):
        Window(5, 5)
    assert Window.parse("3:9") == Window(3, 9)


def test_group_interleaved_and_sorted():
    evs = [
        RepostEvent("m2", "b", 30, None),
        RepostEvent("m1", "a", 10, None),
        RepostEvent("m1", "c", 40, "a"),
        RepostEvent("m2", "d", 35, "b"),
        RepostEvent("m1", "b", 20, "a"),
    ]
    out = group_cascades(evs)
    assert list(out.groups) == ["m1", "m2"]
    assert [e.uid for e in out.groups["m1"]] == ["a", "b", "c"]
    assert [e.uid for e in out.groups["m2"]] == ["b", "d"]


def test_group_drops_duplicate_adoption():
    evs = [
        RepostEvent("m1", "u1", 0, None),
        RepostEvent("m1", "u2", 5, "u1"),
        RepostEvent("m1", "u2", 9, "u1"),
    ]
    out = group_cascades(evs)
    assert [e.ts for e in out.groups["m1"]] == [0, 5]
    assert out.duplicates_dropped == 1


def test_group_drops_originator_self_repost():
    evs = [RepostEvent("m1", "u1", 0, None), RepostEvent("m1", "u1", 3, "u1")]
    out = group_cascades(evs)
    assert len(out.groups["m1"]) == 1
    assert out.self_reposts_dropped == 1


def test_rootless_cascade_flagged_and_excluded():
    evs = [
        RepostEvent("m1", "u2", 5, "u1"),
        RepostEvent("m1", "u3", 7, "u2"),
        RepostEvent("m2", "v1", 1, None),
    ]
    out = group_cascades(evs)
    assert out.rootless == ["m1"]
    assert list(out.groups) == ["m2"]
    kept = group_cascades(evs, allow_rootless=True)
    assert kept.groups["m1"][0] == RepostEvent("m1", "u2", 5, None)
    assert len(kept.groups["m1"]) == 2


@given(st.lists(event, max_size=40))
def test_group_invariants(events):
    out = group_cascades(events, allow_rootless=True)
    for mid, evs in out.groups.items():
        keys = [(e.ts, e.uid) for e in evs]
        assert keys == sorted(keys)
        uids = [e.uid for e in evs]
        assert len(uids) == len(set(uids))
        assert all(e.mid == mid for e in evs)
        roots = [e for e in evs if e.parent_uid is None]
        assert roots and all(roots[0].ts <= e.ts for e in evs)
