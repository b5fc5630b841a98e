"""Repost log parsing, windowing and per-cascade grouping.

The canonical on-disk format is a UTF-8 TSV with one event per line::

    mid<TAB>uid<TAB>ts<TAB>parent_uid

``parent_uid`` is empty for the original post of a cascade.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

from .errors import ParameterError, ParseError

logger = logging.getLogger(__name__)


class RepostEvent(NamedTuple):
    mid: str
    uid: str
    ts: int
    parent_uid: Optional[str] = None

    @property
    def is_root(self) -> bool:
        return self.parent_uid is None


@dataclass(frozen=True)
class Window:
    """Half-open timestamp interval ``[start_ts, end_ts)``."""

    start_ts: int
    end_ts: int

    def __post_init__(self):
        if not self.start_ts < self.end_ts:
            raise ParameterError(
                f"window start {self.start_ts} must be < end {self.end_ts}"
            )

    def __contains__(self, ts: int) -> bool:
        return self.start_ts <= ts < self.end_ts

    @classmethod
    def parse(cls, text: str) -> "Window":
        """Parse ``"start:end"``."""
        try:
            start, end = text.split(":")
            return cls(int(start), int(end))
        except ValueError as exc:
            raise ParameterError(f"bad window {text!r}, expected START:END") from exc

    def __str__(self) -> str:
        return f"{self.start_ts}:{self.end_ts}"


@dataclass
class ParseResult:
    events: list[RepostEvent]
    lines_read: int = 0
    diagnostics: list[tuple[int, str]] = field(default_factory=list)

    @property
    def malformed(self) -> int:
        return len(self.diagnostics)


def _parse_line(line: str) -> RepostEvent:
    cols = line.split("\t")
    if len(cols) == 3:
        cols.append("")
    if len(cols) != 4:
        raise ValueError(f"expected 4 tab-separated columns, got {len(cols)}")
    mid, uid, ts_text, parent = cols
    if not mid or not uid:
        raise ValueError("empty mid or uid")
    try:
        ts = int(ts_text)
    except ValueError:
        raise ValueError(f"non-integer timestamp {ts_text!r}") from None
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    return RepostEvent(mid, uid, ts, parent or None)


def parse_events(lines: Iterable[str], max_error_rate: float = 0.01) -> ParseResult:
    """Parse TSV event lines in file order.

    Blank lines are skipped. Each malformed line produces a line-numbered
    diagnostic on the module logger; if the malformed fraction exceeds
    ``max_error_rate`` a :class:`ParseError` is raised after the full scan.
    """
    result = ParseResult(events=[])
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        result.lines_read += 1
        try:
            result.events.append(_parse_line(line))
        except ValueError as exc:
            msg = str(exc)
            result.diagnostics.append((lineno, msg))
            logger.warning("line %d: %s", lineno, msg)
    if result.lines_read and result.malformed / result.lines_read > max_error_rate:
        raise ParseError(
            f"{result.malformed} of {result.lines_read} lines malformed, "
            f"above the {max_error_rate:.2%} limit (first at line "
            f"{result.diagnostics[0][0]}: {result.diagnostics[0][1]})"
        )
    return result


def read_events(path: str | Path, max_error_rate: float = 0.01) -> ParseResult:
    with open(path, encoding="utf-8", newline="\n") as fh:
        return parse_events(fh, max_error_rate=max_error_rate)


def serialize_events(events: Iterable[RepostEvent]) -> Iterator[str]:
    for ev in events:
        yield f"{ev.mid}\t{ev.uid}\t{ev.ts}\t{ev.parent_uid or ''}\n"


def write_events(events: Iterable[RepostEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(serialize_events(events))


def filter_window(events: Iterable[RepostEvent], window: Window) -> list[RepostEvent]:
    lo, hi = window.start_ts, window.end_ts
    return [ev for ev in events if lo <= ev.ts < hi]


@dataclass
class CascadeGroups:
    """Output of :func:`group_cascades`.

    ``groups`` maps mid to its events sorted by ``(ts, uid)``, in sorted mid
    order. The first event with no parent is the root.
    """

    groups: dict[str, list[RepostEvent]]
    duplicates_dropped: int = 0
    self_reposts_dropped: int = 0
    early_reposts_dropped: int = 0
    rootless: list[str] = field(default_factory=list)

    def summary(self) -> dict[str, int]:
        return {
            "cascades": len(self.groups),
            "duplicates_dropped": self.duplicates_dropped,
            "self_reposts_dropped": self.self_reposts_dropped,
            "early_reposts_dropped": self.early_reposts_dropped,
            "rootless": len(self.rootless),
        }


def _event_key(ev: RepostEvent):
    # a root sorts ahead of a repost by the same user at the same second
    return (ev.ts, ev.uid, ev.parent_uid is not None)


def group_cascades(
    events: Iterable[RepostEvent], allow_rootless: bool = False
) -> CascadeGroups:
    """Group events by mid, sort, and clean each cascade.

    Per cascade: a user's first adoption wins and later ones are dropped,
    reposts by the originator are dropped, and reposts stamped before the
    original post are dropped. A cascade without an original post is
    listed in ``rootless`` and excluded unless ``allow_rootless``, in which
    case its earliest event becomes the root.
    """
    by_mid: dict[str, list[RepostEvent]] = defaultdict(list)
    for ev in events:
        by_mid[ev.mid].append(ev)

    out = CascadeGroups(groups={})
    for mid in sorted(by_mid):
        evs = sorted(by_mid[mid], key=_event_key)
        root_pos = next((i for i, ev in enumerate(evs) if ev.parent_uid is None), None)
        if root_pos is None:
            out.rootless.append(mid)
            if not allow_rootless:
                continue
            root_pos = 0
            evs[0] = evs[0]._replace(parent_uid=None)
        root = evs[root_pos]
        early = [ev for ev in evs[:root_pos] if ev.ts < root.ts]
        out.early_reposts_dropped += len(early)
        kept = [root]
        seen = {root.uid}
        for i, ev in enumerate(evs):
            if i == root_pos or (i < root_pos and ev.ts < root.ts):
                continue
            if ev.uid == root.uid:
                out.self_reposts_dropped += 1
                continue
            if ev.uid in seen:
                out.duplicates_dropped += 1
                continue
            seen.add(ev.uid)
            kept.append(ev)
        kept.sort(key=lambda ev: (ev.ts, ev.uid))
        out.groups[mid] = kept
    if out.rootless:
        logger.info(
            "%d rootless cascades %s",
            len(out.rootless),
            "kept" if allow_rootless else "excluded",
        )
    return out
