"""Frustration rules, session labeling, purchase truncation, and filters.

Five signals are computed on the full session:

* rage bursts: three or more events on the same (url, symbol) pair within a
  two-second window, counted as maximal disjoint bursts via a greedy
  left-to-right scan;
* U-turns: an A -> B -> A page pattern where the return leg takes at most
  two seconds and the middle event is not a cart or purchase action;
* cart churn: an add followed later by a remove, with no purchase anywhere;
* search struggle: three or more search-result clicks with no add and no
  purchase;
* long wander: more than twenty minutes of activity with five or more
  detail views and no add or purchase.

A session is frustrated when any signal fires. The modeled sequence is the
session truncated strictly before its first purchase so classifiers cannot
shortcut on the purchase symbol; labeling itself always sees everything.

All thresholds are configuration with these defaults.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import ConfigError, DataError
from .fileio import meta_line, open_for_read, open_for_write, read_key_value_file
from .sessions import ADD, CLICK, DETAIL, PURCHASE, REMOVE, Session

_CART_OR_PURCHASE = (ADD, REMOVE, PURCHASE)


@dataclass(frozen=True, slots=True)
class RuleConfig:
    """Thresholds for the five rules and the length filter."""

    rage_min_events: int = 3
    rage_window_ms: int = 2000
    uturn_window_ms: int = 2000
    search_min_clicks: int = 3
    wander_min_duration_ms: int = 1_200_000
    wander_min_details: int = 5
    min_length: int = 2
    max_length: int = 1000

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"rule threshold {f.name} must be a positive integer, got {value!r}")
        if self.min_length > self.max_length:
            raise ConfigError("min_length must not exceed max_length")

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleConfig":
        raw = read_key_value_file(path)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown rule keys: {sorted(unknown)}")
        try:
            values = {k: int(v) for k, v in raw.items()}
        except ValueError as exc:
            raise ConfigError(f"rule thresholds must be integers: {exc}") from None
        return cls(**values)

    def to_file(self, path: str | Path) -> None:
        with open_for_write(path) as handle:
            for f in fields(self):
                handle.write(f"{f.name} = {getattr(self, f.name)}\n")


@dataclass(frozen=True, slots=True)
class FrustrationSignals:
    rage_bursts: int
    u_turns: int
    cart_churn: bool
    search_struggle: bool
    long_wander: bool

    @property
    def any(self) -> bool:
        return (self.rage_bursts > 0 or self.u_turns > 0 or self.cart_churn
                or self.search_struggle or self.long_wander)


@dataclass(frozen=True, slots=True)
class LabeledSession:
    """A session's signals, binary label, and purchase-truncated sequence."""

    session_id: str
    signals: FrustrationSignals
    label: int
    truncated_symbols: tuple[int, ...]
    truncated_timestamps_ms: tuple[int, ...]
    first_event_ms: int


@dataclass
class FilterStats:
    kept: int = 0
    dropped_short: int = 0
    dropped_long: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"kept": self.kept, "dropped_short": self.dropped_short,
                "dropped_long": self.dropped_long}


def detect_rage_bursts(session: Session, config: RuleConfig = RuleConfig()) -> int:
    """Count maximal disjoint bursts of repeated (url, symbol) events.

    Scanning is greedy left to right within each (url, symbol) group: a
    burst extends as far as the window allows, and consumed events are not
    reused by later bursts.
    """
    groups: dict[tuple[str, int], list[int]] = {}
    for url, symbol, ts in zip(session.url_hashes, session.symbols, session.timestamps_ms):
        groups.setdefault((url, symbol), []).append(ts)

    bursts = 0
    for times in groups.values():
        i, n = 0, len(times)
        while i < n:
            j = i
            while j + 1 < n and times[j + 1] - times[i] <= config.rage_window_ms:
                j += 1
            if j - i + 1 >= config.rage_min_events:
                bursts += 1
                i = j + 1
            else:
                i += 1
    return bursts


def detect_u_turns(session: Session, config: RuleConfig = RuleConfig()) -> int:
    """Count A -> B -> A returns within the window; overlapping patterns all count."""
    urls, symbols, times = session.url_hashes, session.symbols, session.timestamps_ms
    count = 0
    for i in range(1, len(session) - 1):
        if (urls[i - 1] == urls[i + 1] and urls[i] != urls[i - 1]
                and times[i + 1] - times[i] <= config.uturn_window_ms
                and symbols[i] not in _CART_OR_PURCHASE):
            count += 1
    return count


def detect_cart_churn(session: Session) -> bool:
    """True when a remove follows an add and the session never purchases."""
    symbols = session.symbols
    if PURCHASE in symbols:
        return False
    try:
        first_add = symbols.index(ADD)
    except ValueError:
        return False
    return REMOVE in symbols[first_add + 1:]


def detect_search_struggle(session: Session, config: RuleConfig = RuleConfig()) -> bool:
    symbols = session.symbols
    if ADD in symbols or PURCHASE in symbols:
        return False
    return symbols.count(CLICK) >= config.search_min_clicks


def detect_long_wander(session: Session, config: RuleConfig = RuleConfig()) -> bool:
    symbols = session.symbols
    if ADD in symbols or PURCHASE in symbols:
        return False
    return (session.duration_ms > config.wander_min_duration_ms
            and symbols.count(DETAIL) >= config.wander_min_details)


def compute_signals(session: Session, config: RuleConfig = RuleConfig()) -> FrustrationSignals:
    return FrustrationSignals(
        rage_bursts=detect_rage_bursts(session, config),
        u_turns=detect_u_turns(session, config),
        cart_churn=detect_cart_churn(session),
        search_struggle=detect_search_struggle(session, config),
        long_wander=detect_long_wander(session, config),
    )


def label_and_truncate(session: Session, config: RuleConfig = RuleConfig()) -> LabeledSession:
    """Label from the full session, then cut strictly before the first purchase."""
    signals = compute_signals(session, config)
    symbols = session.symbols
    if PURCHASE in symbols:
        cut = symbols.index(PURCHASE)
    else:
        cut = len(symbols)
    return LabeledSession(
        session_id=session.session_id,
        signals=signals,
        label=int(signals.any),
        truncated_symbols=symbols[:cut],
        truncated_timestamps_ms=session.timestamps_ms[:cut],
        first_event_ms=session.timestamps_ms[0],
    )


def preprocess_filter(labeled: Iterable[LabeledSession],
                      config: RuleConfig = RuleConfig()) -> tuple[list[LabeledSession], FilterStats]:
    """Drop sessions whose truncated length is out of bounds."""
    stats = FilterStats()
    kept: list[LabeledSession] = []
    for item in labeled:
        n = len(item.truncated_symbols)
        if n < config.min_length:
            stats.dropped_short += 1
        elif n > config.max_length:
            stats.dropped_long += 1
        else:
            kept.append(item)
            stats.kept += 1
    return kept, stats


def label_sessions(sessions: Iterable[Session],
                   config: RuleConfig = RuleConfig()) -> tuple[list[LabeledSession], FilterStats]:
    """Label, truncate, and filter a session collection in one pass."""
    return preprocess_filter((label_and_truncate(s, config) for s in sessions), config)


_LABELED_COLUMNS = ("session_id", "label", "rage_bursts", "u_turns", "cart_churn",
                    "search_struggle", "long_wander", "symbols", "timestamps_ms",
                    "first_event_ms")


def write_labeled(labeled: Iterable[LabeledSession], destination: str | Path | IO,
                  meta: dict[str, str] | None = None) -> None:
    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("labeled", meta))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_LABELED_COLUMNS)
        for item in labeled:
            s = item.signals
            writer.writerow([
                item.session_id, item.label, s.rage_bursts, s.u_turns,
                int(s.cart_churn), int(s.search_struggle), int(s.long_wander),
                " ".join(str(v) for v in item.truncated_symbols),
                " ".join(str(t) for t in item.truncated_timestamps_ms),
                item.first_event_ms,
            ])


def read_labeled(source: str | Path | IO) -> list[LabeledSession]:
    with open_for_read(source) as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows, None)
        if header != list(_LABELED_COLUMNS):
            raise DataError(f"unexpected labeled-session header {header!r}")
        out = []
        for row in rows:
            if len(row) != len(_LABELED_COLUMNS):
                raise DataError(f"bad labeled record: {row!r}")
            signals = FrustrationSignals(
                rage_bursts=int(row[2]), u_turns=int(row[3]),
                cart_churn=bool(int(row[4])), search_struggle=bool(int(row[5])),
                long_wander=bool(int(row[6])),
            )
            out.append(LabeledSession(
                session_id=row[0],
                signals=signals,
                label=int(row[1]),
                truncated_symbols=tuple(int(v) for v in row[7].split()),
                truncated_timestamps_ms=tuple(int(v) for v in row[8].split()),
                first_event_ms=int(row[9]),
            ))
    return out


def with_rule_overrides(config: RuleConfig, overrides: dict[str, int]) -> RuleConfig:
    known = {f.name for f in fields(RuleConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown rule keys: {sorted(unknown)}")
    return replace(config, **overrides)


def symbols_for_modeling(labeled: Sequence[LabeledSession]) -> list[tuple[int, ...]]:
    return [item.truncated_symbols for item in labeled]
