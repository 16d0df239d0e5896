"""Event-log ingestion.

The input is a CSV stream with header ``defect_id,release_id,kind,time``.
``kind`` is either ``discovery`` or ``rediscovery``; ``time`` is years since
the release went live (a nonnegative float), or an ISO-8601 date when a
general-availability date per release is supplied. Lines starting with ``#``
are comments. From a parsed log we derive the two samples everything else
consumes: per-defect rediscovery counts inside an observation window, and the
pooled interarrival gaps of rediscovery events inside a window.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping, Union

from .errors import DataError

DISCOVERY = "discovery"
REDISCOVERY = "rediscovery"
_KINDS = (DISCOVERY, REDISCOVERY)
_HEADER = ["defect_id", "release_id", "kind", "time"]
_DAYS_PER_YEAR = 365.25

#: Deterministic epsilon added to break ties between equal event times.
TIE_JITTER = 1e-9

Source = Union[str, bytes, os.PathLike, IO[bytes], IO[str]]


@dataclass(frozen=True)
class DefectEvent:
    """One row of the event log."""

    defect_id: str
    release_id: str
    kind: str
    time: float

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise DataError(f"unknown event kind {self.kind!r}")
        if not self.time >= 0.0:
            raise DataError(f"event time must be >= 0, got {self.time!r}")


@dataclass(frozen=True)
class Window:
    """Half-open observation window [s, t) in years."""

    s: float
    t: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.s < self.t):
            raise DataError(f"window requires 0 <= s < t, got [{self.s}, {self.t})")

    @property
    def span(self) -> float:
        return self.t - self.s


@dataclass(frozen=True)
class EventLog:
    """Validated, canonically ordered event collection."""

    events: tuple[DefectEvent, ...]
    releases: frozenset[str]

    def for_release(self, release_id: str) -> list[DefectEvent]:
        if release_id not in self.releases:
            raise DataError(f"unknown release {release_id!r}")
        return [e for e in self.events if e.release_id == release_id]


@dataclass(frozen=True)
class RediscoverySample:
    """Per-defect rediscovery counts for one release and window."""

    release_id: str
    window: Window
    counts: tuple[int, ...]
    n_defects: int

    def __post_init__(self) -> None:
        if self.n_defects != len(self.counts):
            raise DataError("n_defects must equal len(counts)")
        if any(c < 0 for c in self.counts):
            raise DataError("rediscovery counts must be nonnegative")


@dataclass(frozen=True)
class InterarrivalSample:
    """Gaps between consecutive rediscovery events pooled across defects."""

    release_id: str
    window: Window
    gaps: tuple[float, ...]
    arrival_rate_lambda: float
    warning: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if any(g <= 0.0 for g in self.gaps):
            raise DataError("interarrival gaps must be strictly positive")


def _open_text(source: Source) -> Iterable[str]:
    if isinstance(source, bytes):
        try:
            return io.StringIO(source.decode("utf-8-sig"))
        except UnicodeDecodeError as exc:
            raise DataError(f"input is not valid UTF-8: {exc}") from exc
    if isinstance(source, os.PathLike):
        return open(source, "r", encoding="utf-8-sig", newline="")
    if isinstance(source, str):
        # A string is CSV text, not a path; use load_events() for paths.
        return io.StringIO(source.removeprefix("﻿"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            return _open_text(data)
        return io.StringIO(data.removeprefix("﻿"))
    raise DataError(f"unsupported event source type {type(source).__name__}")


def _parse_time(
    text: str, release_id: str, line_num: int, ga_dates: Mapping[str, date] | None
) -> float:
    try:
        value = float(text)
    except ValueError:
        if ga_dates is None:
            raise DataError(f"line {line_num}: cannot parse time {text!r}") from None
        try:
            when = date.fromisoformat(text.strip())
        except ValueError:
            raise DataError(f"line {line_num}: cannot parse time {text!r}") from None
        ga = ga_dates.get(release_id)
        if ga is None:
            raise DataError(
                f"line {line_num}: no GA date configured for release {release_id!r}"
            )
        value = (when - ga).days / _DAYS_PER_YEAR
    if not value >= 0.0:
        raise DataError(f"line {line_num}: time must be >= 0, got {text!r}")
    return value


def parse_events(source: Source, ga_dates: Mapping[str, date] | None = None) -> EventLog:
    """Parse and validate a CSV event stream into an EventLog.

    Raises DataError naming the offending line or defect id for: malformed
    rows, unknown kinds, negative or unparseable times, duplicate discovery
    events, rediscoveries earlier than their defect's discovery, and
    rediscoveries for defects that never have a discovery row.
    """
    stream = _open_text(source)
    reader = csv.reader(stream)
    events: list[DefectEvent] = []
    header_seen = False
    try:
        for row in reader:
            line_num = reader.line_num
            if not row or (row[0].startswith("#")):
                continue
            if not header_seen:
                if [c.strip() for c in row] != _HEADER:
                    raise DataError(
                        f"line {line_num}: expected header {','.join(_HEADER)!r}"
                    )
                header_seen = True
                continue
            if len(row) != 4:
                raise DataError(f"line {line_num}: expected 4 columns, got {len(row)}")
            defect_id, release_id, kind, time_text = (c.strip() for c in row)
            if not defect_id or not release_id:
                raise DataError(f"line {line_num}: empty defect_id or release_id")
            if kind not in _KINDS:
                raise DataError(f"unknown event kind {kind!r} at line {line_num}")
            time = _parse_time(time_text, release_id, line_num, ga_dates)
            events.append(DefectEvent(defect_id, release_id, kind, time))
    finally:
        if hasattr(stream, "close"):
            stream.close()
    if not header_seen:
        raise DataError("empty input: missing header row")

    # Per-defect consistency. A defect is keyed by (release_id, defect_id);
    # the same defect_id may legitimately appear under several releases.
    discoveries: dict[tuple[str, str], float] = {}
    for e in events:
        if e.kind != DISCOVERY:
            continue
        key = (e.release_id, e.defect_id)
        if key in discoveries:
            raise DataError(f"duplicate discovery for defect {e.defect_id!r}")
        discoveries[key] = e.time
    for e in events:
        if e.kind != REDISCOVERY:
            continue
        disc = discoveries.get((e.release_id, e.defect_id))
        if disc is None:
            raise DataError(f"rediscovery without discovery for defect {e.defect_id!r}")
        if e.time < disc:
            raise DataError(f"rediscovery before discovery for defect {e.defect_id!r}")

    events.sort(key=lambda e: (e.release_id, e.defect_id, e.time, e.kind != DISCOVERY))
    return EventLog(events=tuple(events), releases=frozenset(e.release_id for e in events))


def load_events(path: os.PathLike | str, ga_dates: Mapping[str, date] | None = None) -> EventLog:
    """Parse an event CSV from a filesystem path."""
    try:
        with open(path, "rb") as fh:
            return parse_events(fh.read(), ga_dates=ga_dates)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def write_events(log: EventLog) -> str:
    """Serialize a log back to canonical CSV text (round-trips via parse_events)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_HEADER)
    for e in log.events:
        writer.writerow([e.defect_id, e.release_id, e.kind, repr(e.time)])
    return out.getvalue()


def window_counts(log: EventLog, release_id: str, window: Window) -> RediscoverySample:
    """Per-defect rediscovery counts D_i over the window.

    A defect contributes one entry if its discovery time is < window.t; its
    count is the number of its rediscovery events with time in [s, t). The
    defect's own discovery event is never counted.
    """
    events = log.for_release(release_id)
    counts: dict[str, int] = {}
    for e in events:
        if e.kind == DISCOVERY and e.time < window.t:
            counts[e.defect_id] = 0
    for e in events:
        if e.kind == REDISCOVERY and window.s <= e.time < window.t:
            if e.defect_id in counts:
                counts[e.defect_id] += 1
    ordered = tuple(counts[d] for d in sorted(counts))
    return RediscoverySample(release_id, window, ordered, len(ordered))


def total_rediscoveries(sample: RediscoverySample) -> int:
    """U(s, t): total rediscoveries across all defects in the window."""
    return sum(sample.counts)


def interarrival_times(
    log: EventLog,
    release_id: str,
    window: Window,
    tie_policy: str = "jitter",
) -> InterarrivalSample:
    """Gaps between consecutive rediscovery events pooled over all defects.

    Events are ordered by time; equal timestamps are either spread by a
    deterministic epsilon (``jitter``, the default: the j-th event of a tied
    run gets +j*1e-9) or rejected (``reject``). The arrival rate is the event
    count divided by the window span, independent of the tie policy.
    """
    if tie_policy not in ("jitter", "reject"):
        raise DataError(f"unknown tie policy {tie_policy!r}")
    times = sorted(
        e.time
        for e in log.for_release(release_id)
        if e.kind == REDISCOVERY and window.s <= e.time < window.t
    )
    rate = len(times) / window.span
    if len(times) < 2:
        return InterarrivalSample(
            release_id, window, (), rate, warning="fewer than 2 events in window"
        )
    adjusted: list[float] = []
    run_start = 0
    for i, t in enumerate(times):
        if i > 0 and t == times[i - 1]:
            if tie_policy == "reject":
                raise DataError(f"tied event times at t={t!r} in release {release_id!r}")
        else:
            run_start = i
        adjusted.append(t + TIE_JITTER * (i - run_start))
    gaps = tuple(b - a for a, b in zip(adjusted, adjusted[1:]))
    return InterarrivalSample(release_id, window, gaps, rate)
