"""Grouping events into sessions and symbolizing product actions.

Each product action maps to a small integer symbol; a plain pageview (no
action) is a view. Events are grouped purely by session hash and ordered
by server timestamp, with input order breaking ties.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import DataError
from .ingest import RawEvent

VIEW, DETAIL, CLICK, ADD, REMOVE, PURCHASE = 1, 2, 3, 4, 5, 6

#: Symbols that can appear after truncation at the first purchase.
TRUNCATED_ALPHABET = (VIEW, DETAIL, CLICK, ADD, REMOVE)
FULL_ALPHABET = TRUNCATED_ALPHABET + (PURCHASE,)

_SYMBOL_FOR_ACTION = {
    None: VIEW,
    "detail": DETAIL,
    "click": CLICK,
    "add": ADD,
    "remove": REMOVE,
    "purchase": PURCHASE,
}


def symbolize(action: str | None) -> int:
    """Map a product action (or None for a plain pageview) to its symbol."""
    try:
        return _SYMBOL_FOR_ACTION[action]
    except KeyError:
        raise DataError(f"unknown product action {action!r}") from None


@dataclass(frozen=True, slots=True)
class Session:
    """One session's chronologically ordered events and their symbols."""

    session_id: str
    symbols: tuple[int, ...]
    timestamps_ms: tuple[int, ...]
    url_hashes: tuple[str, ...]
    events: tuple[RawEvent, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.symbols)
        if n == 0:
            raise DataError(f"session {self.session_id!r} is empty")
        if len(self.timestamps_ms) != n or len(self.url_hashes) != n:
            raise DataError(f"session {self.session_id!r} has mismatched field lengths")
        if any(b < a for a, b in zip(self.timestamps_ms, self.timestamps_ms[1:])):
            raise DataError(f"session {self.session_id!r} timestamps are not sorted")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def duration_ms(self) -> int:
        return self.timestamps_ms[-1] - self.timestamps_ms[0]


def sessionize(events: Iterable[RawEvent]) -> list[Session]:
    """Group events by session id, sort by timestamp (stable), and symbolize.

    Output sessions are ordered by session id so the result is canonical
    regardless of input row order.
    """
    grouped: dict[str, list[RawEvent]] = {}
    for event in events:
        grouped.setdefault(event.session_id, []).append(event)

    sessions = []
    for session_id in sorted(grouped):
        ordered = sorted(grouped[session_id], key=lambda e: e.timestamp_ms)
        sessions.append(Session(
            session_id=session_id,
            symbols=tuple(symbolize(e.product_action) for e in ordered),
            timestamps_ms=tuple(e.timestamp_ms for e in ordered),
            url_hashes=tuple(e.url_hash for e in ordered),
            events=tuple(ordered),
        ))
    return sessions


_SESSION_COLUMNS = ("session_id", "symbols", "timestamps_ms", "url_hashes")


def write_sessions(sessions: Iterable[Session], destination: str | Path | IO,
                   meta: dict[str, str] | None = None) -> None:
    """Persist sessions as one record per session, lists space-separated."""
    from .fileio import meta_line, open_for_write

    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("sessions", meta))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_SESSION_COLUMNS)
        for session in sessions:
            writer.writerow([
                session.session_id,
                " ".join(str(s) for s in session.symbols),
                " ".join(str(t) for t in session.timestamps_ms),
                " ".join(session.url_hashes),
            ])


def read_sessions(source: str | Path | IO) -> list[Session]:
    from .fileio import open_for_read

    with open_for_read(source) as handle:
        rows = csv.reader(_skip_comments(handle))
        header = next(rows, None)
        if header != list(_SESSION_COLUMNS):
            raise DataError(f"unexpected sessions header {header!r}")
        sessions = []
        for row in rows:
            if len(row) != 4:
                raise DataError(f"bad session record: {row!r}")
            sessions.append(Session(
                session_id=row[0],
                symbols=tuple(int(s) for s in row[1].split()),
                timestamps_ms=tuple(int(t) for t in row[2].split()),
                url_hashes=tuple(row[3].split()),
            ))
    return sessions


def _skip_comments(lines: Iterable[str]) -> Iterable[str]:
    return (line for line in lines if not line.startswith("#"))


def symbol_counts(symbols: Sequence[int]) -> dict[int, int]:
    """Occurrences of each symbol value, for diagnostics."""
    counts: dict[int, int] = {}
    for s in symbols:
        counts[s] = counts.get(s, 0) + 1
    return counts
