"""Cell values and the normalization rules shared by matching, indexing and joins."""

from __future__ import annotations

import re
from functools import lru_cache
from typing import NamedTuple, Optional

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_EDGE_PUNCT = "\"'`,.;:!?()[]{}"


def parse_number(text: str) -> Optional[float]:
    """Return the numeric value of ``text`` or None if it is not a plain number."""
    s = text.strip()
    if not s or not _NUMBER_RE.match(s):
        return None
    return float(s)


def canon_number(value: float) -> str:
    """Canonical decimal spelling: no trailing zeros, so 497 and 497.0 collide."""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def normalize_text(text: str) -> str:
    """Trim, collapse inner whitespace and casefold; the key used for matching."""
    return " ".join(text.split()).casefold()


class Cell(NamedTuple):
    """One table cell: raw text, numeric value when parseable, and its match key."""

    raw: str
    number: Optional[float]
    key: str


def make_cell(raw: str) -> Cell:
    number = parse_number(raw)
    key = canon_number(number) if number is not None else normalize_text(raw)
    return Cell(raw, number, key)


@lru_cache(maxsize=65536)
def tokenize(text: str, fold: bool = True) -> tuple[str, ...]:
    """Split into word tokens, stripping edge punctuation and canonicalizing numbers."""
    out = []
    for piece in text.split():
        tok = piece.strip(_EDGE_PUNCT)
        if not tok:
            continue
        number = parse_number(tok)
        if number is not None:
            out.append(canon_number(number))
        else:
            out.append(tok.casefold() if fold else tok)
    return tuple(out)
