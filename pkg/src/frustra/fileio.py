"""Small file helpers: atomic writes and comment-aware readers.

Writers stream to ``<path>.partial`` and rename into place on success, so
an interrupted stage leaves only a clearly marked partial file behind.
"""

from __future__ import annotations

import contextlib
import os
from pathlib import Path
from typing import IO, Iterator


@contextlib.contextmanager
def open_for_write(destination: str | Path | IO) -> Iterator[IO]:
    """Yield a text handle for ``destination``; paths are written atomically."""
    if not isinstance(destination, (str, Path)):
        yield destination
        return
    final = Path(destination)
    final.parent.mkdir(parents=True, exist_ok=True)
    partial = final.with_name(final.name + ".partial")
    handle = open(partial, "w", encoding="utf-8", newline="")
    try:
        yield handle
    except BaseException:
        handle.close()
        raise
    handle.close()
    os.replace(partial, final)


@contextlib.contextmanager
def open_for_read(source: str | Path | IO) -> Iterator[IO]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            yield handle
    else:
        yield source


def meta_line(kind: str, meta: dict[str, str]) -> str:
    parts = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
    return f"# frustra {kind} v1 {parts}\n" if parts else f"# frustra {kind} v1\n"


def parse_meta_line(line: str) -> dict[str, str]:
    """Parse the ``k=v`` pairs out of a ``# frustra <kind> v1 k=v ...`` line."""
    meta: dict[str, str] = {}
    for token in line.lstrip("# ").split():
        if "=" in token:
            key, _, value = token.partition("=")
            meta[key] = value
    return meta


def read_key_value_file(path: str | Path) -> dict[str, str]:
    """Read a plain ``key = value`` config file, ignoring blanks and comments."""
    from .errors import ConfigError

    result: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        result[key.strip()] = value.strip()
    return result
