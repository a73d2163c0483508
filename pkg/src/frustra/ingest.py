"""Parsing and normalization of raw clickstream files.

Input is delimited text with a header row. A schema mapping translates the
five logical columns to whatever the export calls them. Malformed rows are
counted per reason and skipped; the batch never aborts on a bad row.
"""

from __future__ import annotations

import csv
import gzip
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import ConfigError

#: Logical column names, in canonical serialization order.
LOGICAL_COLUMNS = (
    "session_id_hash",
    "event_type",
    "product_action",
    "server_timestamp_epoch_ms",
    "hashed_url",
)

#: Recognized product actions after case-folding. An empty cell means a
#: plain pageview and maps to ``None``.
KNOWN_ACTIONS = frozenset({"detail", "click", "add", "remove", "purchase"})


@dataclass(frozen=True, slots=True)
class RawEvent:
    """One clickstream row."""

    session_id: str
    event_type: str
    product_action: str | None
    timestamp_ms: int
    url_hash: str


@dataclass
class ParseStats:
    """Row accounting for one parse run. accepted + rejected == rows_read."""

    rows_read: int = 0
    rows_accepted: int = 0
    rejected_malformed_row: int = 0
    rejected_bad_timestamp: int = 0
    rejected_unknown_action: int = 0
    rejected_empty_field: int = 0

    @property
    def rows_rejected(self) -> int:
        return (self.rejected_malformed_row + self.rejected_bad_timestamp
                + self.rejected_unknown_action + self.rejected_empty_field)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class CorpusSummary:
    """Aggregate view of a parsed event collection."""

    total_events: int = 0
    distinct_sessions: int = 0
    timestamp_min_ms: int | None = None
    timestamp_max_ms: int | None = None
    action_histogram: dict[str, int] = field(default_factory=dict)


def read_schema(path: str | Path) -> dict[str, str]:
    """Read a ``logical = actual`` column mapping file.

    Unlisted logical columns default to their own name. Unknown logical
    names are a configuration error.
    """
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'logical = actual', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in LOGICAL_COLUMNS:
            raise ConfigError(f"{path}:{lineno}: unknown logical column {key!r}")
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty mapping for {key!r}")
        mapping[key] = value
    return mapping


def _open_text(source: str | Path | IO) -> tuple[IO, bool]:
    """Return a text-mode handle for a path, byte stream, or text stream."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.suffix == ".gz":
            return gzip.open(path, "rt", encoding="utf-8", newline=""), True
        return open(path, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def _parse_timestamp(text: str) -> int | None:
    """Epoch-ms parse. Fractional text is accepted and truncated to whole ms."""
    text = text.strip()
    if not text:
        return None
    try:
        value = int(text)
    except ValueError:
        try:
            as_float = float(text)
        except ValueError:
            return None
        if not math.isfinite(as_float):
            return None
        value = int(as_float)
    return value if value > 0 else None


def parse_events(source: str | Path | IO, schema: Mapping[str, str] | None = None,
                 delimiter: str = ",") -> tuple[list[RawEvent], ParseStats]:
    """Parse delimited clickstream text into events plus row accounting.

    Well-formed rows become :class:`RawEvent`; malformed rows increment one
    rejection counter and are skipped. Missing header columns raise
    :class:`ConfigError` before any row is consumed.
    """
    column_names = {logical: (schema or {}).get(logical, logical) for logical in LOGICAL_COLUMNS}
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("input has no header row") from None
        positions = {}
        for logical, actual in column_names.items():
            try:
                positions[logical] = header.index(actual)
            except ValueError:
                raise ConfigError(f"missing column {actual!r} (for {logical!r}) in header") from None
        width = max(positions.values()) + 1

        stats = ParseStats()
        events: list[RawEvent] = []
        for row in reader:
            stats.rows_read += 1
            if len(row) < width:
                stats.rejected_malformed_row += 1
                continue
            session_id = row[positions["session_id_hash"]].strip()
            url_hash = row[positions["hashed_url"]].strip()
            if not session_id or not url_hash:
                stats.rejected_empty_field += 1
                continue
            timestamp_ms = _parse_timestamp(row[positions["server_timestamp_epoch_ms"]])
            if timestamp_ms is None:
                stats.rejected_bad_timestamp += 1
                continue
            action_text = row[positions["product_action"]].strip().casefold()
            if not action_text:
                action = None
            elif action_text in KNOWN_ACTIONS:
                action = action_text
            else:
                stats.rejected_unknown_action += 1
                continue
            events.append(RawEvent(
                session_id=session_id,
                event_type=row[positions["event_type"]].strip(),
                product_action=action,
                timestamp_ms=timestamp_ms,
                url_hash=url_hash,
            ))
            stats.rows_accepted += 1
        return events, stats
    finally:
        if owned:
            handle.close()


def write_events(events: Iterable[RawEvent], destination: str | Path | IO) -> None:
    """Serialize events in the canonical column order (comma-delimited)."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            _write_event_rows(events, handle)
    else:
        _write_event_rows(events, destination)


def _write_event_rows(events: Iterable[RawEvent], handle: IO) -> None:
    writer = csv.writer(handle, delimiter=",", lineterminator="\n")
    writer.writerow(LOGICAL_COLUMNS)
    for event in events:
        writer.writerow([
            event.session_id,
            event.event_type,
            event.product_action or "",
            event.timestamp_ms,
            event.url_hash,
        ])


def validate_corpus(events: Iterable[RawEvent]) -> CorpusSummary:
    """Summarize an event collection: counts, timestamp range, action histogram."""
    summary = CorpusSummary()
    sessions: set[str] = set()
    histogram: dict[str, int] = {}
    for event in events:
        summary.total_events += 1
        sessions.add(event.session_id)
        key = event.product_action or "view"
        histogram[key] = histogram.get(key, 0) + 1
        if summary.timestamp_min_ms is None or event.timestamp_ms < summary.timestamp_min_ms:
            summary.timestamp_min_ms = event.timestamp_ms
        if summary.timestamp_max_ms is None or event.timestamp_ms > summary.timestamp_max_ms:
            summary.timestamp_max_ms = event.timestamp_ms
    summary.distinct_sessions = len(sessions)
    summary.action_histogram = dict(sorted(histogram.items()))
    return summary
