"""Seeded synthetic clickstream generator with planted behavioral archetypes.

Each archetype deterministically produces (or, for near-miss variants,
deliberately just misses) one frustration rule at the default thresholds,
giving every generated session a known intended label. Sessions draw from
per-session RNG streams derived from (seed, session index), so generation
order cannot change content. Timestamps fall in a configurable window
spanning eighteen days in December 2018.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .fileio import meta_line, open_for_read, open_for_write, read_key_value_file
from .ingest import RawEvent
from .sessions import ADD, CLICK, DETAIL, PURCHASE, REMOVE, VIEW

RULE_ARCHETYPES = ("rage_clicker", "u_turner", "cart_churner", "search_struggler", "wanderer")
ARCHETYPES = ("buyer", "browser") + RULE_ARCHETYPES

DEFAULT_WINDOW_START_MS = 1_544_227_200_000  # 2018-12-08T00:00:00Z
DEFAULT_WINDOW_END_MS = 1_545_696_000_000    # 2018-12-25T00:00:00Z

_ACTION_FOR_SYMBOL = {VIEW: None, DETAIL: "detail", CLICK: "click",
                      ADD: "add", REMOVE: "remove", PURCHASE: "purchase"}

#: (gap from previous event in ms, symbol, url)
_Step = tuple[int, int, str]


@dataclass(frozen=True, slots=True)
class ArchetypeSpec:
    name: str
    weight: float
    near_miss: bool = False

    def __post_init__(self) -> None:
        if self.name not in ARCHETYPES:
            raise ConfigError(f"unknown archetype {self.name!r}")
        if self.near_miss and self.name not in RULE_ARCHETYPES:
            raise ConfigError(f"archetype {self.name!r} has no near-miss variant")
        if self.weight < 0:
            raise ConfigError(f"archetype weight must be non-negative, got {self.weight}")

    @property
    def intended_label(self) -> int:
        return int(self.name in RULE_ARCHETYPES and not self.near_miss)


@dataclass(frozen=True, slots=True)
class ManifestEntry:
    session_id: str
    archetype: str
    near_miss: bool
    intended_label: int


def default_mix() -> list[ArchetypeSpec]:
    """All archetypes plus every near-miss variant, weights summing to 1."""
    specs = [ArchetypeSpec("buyer", 0.20), ArchetypeSpec("browser", 0.20)]
    specs += [ArchetypeSpec(name, 0.08) for name in RULE_ARCHETYPES]
    specs += [ArchetypeSpec(name, 0.04, near_miss=True) for name in RULE_ARCHETYPES]
    return specs


def parse_mix(path: str | Path) -> list[ArchetypeSpec]:
    """Read ``name = weight`` lines; ``<name>_near_miss`` selects the variant."""
    specs = []
    for key, value in read_key_value_file(path).items():
        near = key.endswith("_near_miss")
        name = key[:-len("_near_miss")] if near else key
        try:
            weight = float(value)
        except ValueError:
            raise ConfigError(f"bad weight {value!r} for {key!r}") from None
        specs.append(ArchetypeSpec(name, weight, near_miss=near))
    return specs


def _validate_mix(specs: Sequence[ArchetypeSpec]) -> np.ndarray:
    if not specs:
        raise ConfigError("archetype mix is empty")
    weights = np.array([s.weight for s in specs], dtype=np.float64)
    if abs(weights.sum() - 1.0) > 1e-6:
        raise ConfigError(f"archetype weights must sum to 1, got {weights.sum()!r}")
    return np.cumsum(weights)


def generate(specs: Sequence[ArchetypeSpec], n_sessions: int, seed: int,
             window_start_ms: int = DEFAULT_WINDOW_START_MS,
             window_end_ms: int = DEFAULT_WINDOW_END_MS,
             ) -> tuple[list[RawEvent], list[ManifestEntry]]:
    """Emit events in the ingest schema plus a session -> archetype manifest."""
    if n_sessions < 1:
        raise DataError(f"n_sessions must be >= 1, got {n_sessions}")
    if window_end_ms - window_start_ms < 7_200_000:
        raise ConfigError("timestamp window must span at least two hours")
    cumulative = _validate_mix(specs)

    events: list[RawEvent] = []
    manifest: list[ManifestEntry] = []
    for k in range(n_sessions):
        rng = np.random.default_rng([seed, k])
        draw = min(int(np.searchsorted(cumulative, rng.random(), side="right")),
                   len(specs) - 1)
        spec = specs[draw]
        session_id = hashlib.sha1(f"{seed}:{k}".encode()).hexdigest()

        url_counter = iter(range(10_000))

        def fresh_url() -> str:
            return hashlib.sha1(f"{seed}:{k}:{next(url_counter)}".encode()).hexdigest()[:16]

        steps = _BUILDERS[spec.name](rng, fresh_url, spec.near_miss)
        start = int(rng.integers(window_start_ms, window_end_ms - 3_600_000))
        ts = start
        for gap, symbol, url in steps:
            ts += gap
            events.append(RawEvent(
                session_id=session_id,
                event_type="pageview" if symbol == VIEW else "event_product",
                product_action=_ACTION_FOR_SYMBOL[symbol],
                timestamp_ms=ts,
                url_hash=url,
            ))
        manifest.append(ManifestEntry(session_id, spec.name, spec.near_miss,
                                      spec.intended_label))
    return events, manifest


def _base_steps(rng: np.random.Generator, fresh_url, n: int,
                p_detail: float = 0.4) -> list[_Step]:
    """Casual browsing on distinct pages: short span, no repeated urls."""
    steps = []
    for i in range(n):
        gap = 0 if i == 0 else int(rng.integers(2000, 45_001))
        symbol = DETAIL if rng.random() < p_detail else VIEW
        steps.append((gap, symbol, fresh_url()))
    return steps


def _gen_buyer(rng, fresh_url, near_miss: bool) -> list[_Step]:
    steps = _base_steps(rng, fresh_url, int(rng.integers(2, 7)))
    steps.append((int(rng.integers(2000, 45_001)), ADD, fresh_url()))
    for _ in range(int(rng.integers(0, 3))):
        steps.append((int(rng.integers(2000, 45_001)), VIEW, fresh_url()))
    steps.append((int(rng.integers(2000, 60_001)), PURCHASE, fresh_url()))
    if rng.random() < 0.3:
        steps.append((int(rng.integers(2000, 45_001)), VIEW, fresh_url()))
    return steps


def _gen_browser(rng, fresh_url, near_miss: bool) -> list[_Step]:
    return _base_steps(rng, fresh_url, int(rng.integers(2, 14)))


def _gen_rage_clicker(rng, fresh_url, near_miss: bool) -> list[_Step]:
    steps = _base_steps(rng, fresh_url, int(rng.integers(2, 9)))
    target = fresh_url()
    if near_miss and rng.random() < 0.5:
        size, lo, hi = 2, 50, 350        # one repeat short of a burst
    elif near_miss:
        size, lo, hi = 3, 1100, 1500     # three repeats spread past the window
    else:
        size, lo, hi = int(rng.integers(3, 7)), 50, 350
    for i in range(size):
        gap = int(rng.integers(2000, 30_001)) if i == 0 else int(rng.integers(lo, hi + 1))
        steps.append((gap, VIEW, target))
    return steps


def _gen_u_turner(rng, fresh_url, near_miss: bool) -> list[_Step]:
    steps = _base_steps(rng, fresh_url, int(rng.integers(2, 7)))
    page_a, page_b = fresh_url(), fresh_url()
    middle_symbol = VIEW
    return_gap = int(rng.integers(200, 1501))
    if near_miss and rng.random() < 0.5:
        return_gap = int(rng.integers(2100, 6001))   # returns too late
    elif near_miss:
        middle_symbol = ADD                          # cart action voids the pattern
    steps.append((int(rng.integers(2000, 45_001)), VIEW, page_a))
    steps.append((int(rng.integers(2000, 30_001)), middle_symbol, page_b))
    steps.append((return_gap, VIEW, page_a))
    return steps


def _gen_cart_churner(rng, fresh_url, near_miss: bool) -> list[_Step]:
    steps = _base_steps(rng, fresh_url, int(rng.integers(2, 7)))
    product = fresh_url()
    variant = int(rng.integers(0, 3)) if near_miss else -1
    if variant == 0:      # remove precedes the only add
        steps.append((int(rng.integers(2000, 30_001)), REMOVE, product))
        steps.append((int(rng.integers(2000, 30_001)), ADD, fresh_url()))
    elif variant == 1:    # churn-shaped but the session purchases
        steps.append((int(rng.integers(2000, 30_001)), ADD, product))
        steps.append((int(rng.integers(2000, 60_001)), REMOVE, product))
        steps.append((int(rng.integers(2000, 60_001)), PURCHASE, fresh_url()))
    elif variant == 2:    # abandoned add, nothing removed
        steps.append((int(rng.integers(2000, 30_001)), ADD, product))
    else:
        steps.append((int(rng.integers(2000, 30_001)), ADD, product))
        steps.append((int(rng.integers(2000, 60_001)), REMOVE, product))
    return steps


def _gen_search_struggler(rng, fresh_url, near_miss: bool) -> list[_Step]:
    steps = _base_steps(rng, fresh_url, int(rng.integers(2, 6)))
    variant = int(rng.integers(0, 2)) if near_miss else -1
    clicks = 2 if variant == 0 else int(rng.integers(3, 7))
    for _ in range(clicks):
        steps.append((int(rng.integers(3000, 30_001)), CLICK, fresh_url()))
    if variant == 1:      # an add disqualifies the struggle
        steps.append((int(rng.integers(3000, 30_001)), ADD, fresh_url()))
    return steps


def _gen_wanderer(rng, fresh_url, near_miss: bool) -> list[_Step]:
    variant = int(rng.integers(0, 3)) if near_miss else -1
    details = 4 if variant == 1 else int(rng.integers(5, 10))
    views = int(rng.integers(1, 6))
    symbols = [DETAIL] * details + [VIEW] * views
    symbols = [symbols[i] for i in rng.permutation(len(symbols))]

    if variant == 0:      # nineteen minutes: just under the wander threshold
        target_span = 1_140_000
    else:
        target_span = int(rng.integers(1_500_000, 1_800_001))
    raw = rng.integers(60_000, 240_001, size=len(symbols) - 1)
    gaps = np.maximum(1, raw * target_span // raw.sum())

    steps: list[_Step] = [(0, symbols[0], fresh_url())]
    for symbol, gap in zip(symbols[1:], gaps):
        steps.append((int(gap), symbol, fresh_url()))
    if variant == 2:      # an add disqualifies the wander
        steps.append((int(rng.integers(2000, 30_001)), ADD, fresh_url()))
    return steps


_BUILDERS = {
    "buyer": _gen_buyer,
    "browser": _gen_browser,
    "rage_clicker": _gen_rage_clicker,
    "u_turner": _gen_u_turner,
    "cart_churner": _gen_cart_churner,
    "search_struggler": _gen_search_struggler,
    "wanderer": _gen_wanderer,
}

_MANIFEST_COLUMNS = ("session_id", "archetype", "near_miss", "intended_label")


def write_manifest(manifest: Iterable[ManifestEntry], destination: str | Path | IO,
                   meta: dict[str, str] | None = None) -> None:
    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("manifest", meta))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_MANIFEST_COLUMNS)
        for entry in manifest:
            writer.writerow([entry.session_id, entry.archetype,
                             int(entry.near_miss), entry.intended_label])


def read_manifest(source: str | Path | IO) -> list[ManifestEntry]:
    with open_for_read(source) as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows, None)
        if header != list(_MANIFEST_COLUMNS):
            raise DataError(f"unexpected manifest header {header!r}")
        return [ManifestEntry(row[0], row[1], bool(int(row[2])), int(row[3]))
                for row in rows]
