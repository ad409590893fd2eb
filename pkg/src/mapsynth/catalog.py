"""CSV-backed relational catalog: relations, column statistics, inverted index.

A catalog is loaded once from a JSON schema config plus CSV files and is
immutable afterwards, so every later stage (matching, enumeration, validation)
can read it concurrently without coordination.
"""

from __future__ import annotations

import csv
import datetime
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence

from . import constraints
from .constraints import DEFAULT_MATCH, MatchOptions, ValuePredicate
from .values import Cell, canon_number, make_cell, normalize_text, tokenize

DEFAULT_TOP_K = 1000

_INT_RE = re.compile(r"[+-]?\d+\Z")


class CatalogError(ValueError):
    """Bad schema config, unreadable CSV data, or referential problems."""


class ColumnRef(NamedTuple):
    relation: str
    column: str

    def __str__(self) -> str:
        return f"{self.relation}.{self.column}"


class JoinEdge(NamedTuple):
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class Relation:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column_index(self, column: str) -> int:
        return self.columns.index(column)

    def column_cells(self, column: str) -> list[Cell]:
        i = self.column_index(column)
        return [row[i] for row in self.rows]


@dataclass(frozen=True)
class ColumnStats:
    """Per-column statistics gathered when the catalog is loaded.

    min_value/max_value are exposed only for int/decimal columns.
    numeric_floor/numeric_ceiling cover every numeric-parseable cell even in
    text columns, which keeps range matching a necessary condition rather than
    an accidental filter.
    """

    relation: str
    column: str
    inferred_type: str
    min_value: Optional[float]
    max_value: Optional[float]
    numeric_floor: Optional[float]
    numeric_ceiling: Optional[float]
    max_length: int
    row_count: int
    distinct_count: int
    value_frequencies: dict[str, int] = field(repr=False)
    tracked_complete: bool = True


@dataclass(frozen=True)
class InvertedIndex:
    """Postings from normalized cell keys (and word tokens) to cell locations."""

    cells: dict[str, frozenset[tuple[str, str, int]]]
    tokens: dict[str, frozenset[tuple[str, str, int]]]


@dataclass(frozen=True)
class Catalog:
    name: str
    relations: dict[str, Relation]
    join_edges: tuple[JoinEdge, ...]
    index: InvertedIndex
    stats: dict[ColumnRef, ColumnStats]

    def columns(self) -> Iterator[ColumnRef]:
        for rel in self.relations.values():
            for col in rel.columns:
                yield ColumnRef(rel.name, col)

    def cell(self, ref: ColumnRef, row: int) -> Cell:
        rel = self.relations[ref.relation]
        return rel.rows[row][rel.column_index(ref.column)]


def _is_iso_date(raw: str) -> bool:
    try:
        datetime.date.fromisoformat(raw.strip())
        return True
    except ValueError:
        return False


def _is_iso_time(raw: str) -> bool:
    try:
        datetime.time.fromisoformat(raw.strip())
        return True
    except ValueError:
        return False


def compute_column_stats(relation: str, column: str, cells: Sequence[Cell],
                         top_k: int = DEFAULT_TOP_K) -> ColumnStats:
    """Infer the most specific type all non-empty cells satisfy and collect
    range, length, cardinality and top-K frequency statistics."""
    non_empty = [c for c in cells if c.raw.strip()]
    if not non_empty:
        inferred = "text"
    elif all(_INT_RE.match(c.raw.strip()) for c in non_empty):
        inferred = "int"
    elif all(c.number is not None for c in non_empty):
        inferred = "decimal"
    elif all(_is_iso_date(c.raw) for c in non_empty):
        inferred = "date"
    elif all(_is_iso_time(c.raw) for c in non_empty):
        inferred = "time"
    else:
        inferred = "text"

    numbers = [c.number for c in cells if c.number is not None]
    floor = min(numbers) if numbers else None
    ceiling = max(numbers) if numbers else None
    numeric_type = inferred in ("int", "decimal")

    counts = Counter(c.key for c in cells)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tracked = dict(ranked[:top_k])

    return ColumnStats(
        relation=relation,
        column=column,
        inferred_type=inferred,
        min_value=floor if numeric_type else None,
        max_value=ceiling if numeric_type else None,
        numeric_floor=floor,
        numeric_ceiling=ceiling,
        max_length=max((len(c.raw) for c in cells), default=0),
        row_count=len(cells),
        distinct_count=len(counts),
        value_frequencies=tracked,
        tracked_complete=len(counts) <= top_k,
    )


def _parse_column_ref(text: str) -> ColumnRef:
    rel, sep, col = text.partition(".")
    if not sep or not rel or not col:
        raise CatalogError(f"join edge endpoint {text!r} must look like relation.column")
    return ColumnRef(rel, col)


def build_catalog(name: str,
                  tables: Sequence[tuple[str, Sequence[str], Sequence[Sequence[str]]]],
                  edges: Sequence[tuple[str, str]],
                  top_k: int = DEFAULT_TOP_K) -> Catalog:
    """Assemble a catalog from in-memory tables; the CSV loader ends up here."""
    if not tables:
        raise CatalogError("catalog has no relations")

    relations: dict[str, Relation] = {}
    for rel_name, columns, rows in tables:
        if rel_name in relations:
            raise CatalogError(f"duplicate relation name {rel_name!r}")
        columns = tuple(columns)
        if len(set(columns)) != len(columns):
            raise CatalogError(f"relation {rel_name!r} repeats a column name")
        built_rows = []
        for n, row in enumerate(rows):
            if len(row) != len(columns):
                raise CatalogError(
                    f"relation {rel_name!r} row {n + 1} has {len(row)} cells, "
                    f"expected {len(columns)}")
            built_rows.append(tuple(make_cell(v) for v in row))
        relations[rel_name] = Relation(rel_name, columns, tuple(built_rows))

    join_edges = []
    for left_text, right_text in edges:
        left, right = _parse_column_ref(left_text), _parse_column_ref(right_text)
        for ref in (left, right):
            if ref.relation not in relations:
                raise CatalogError(f"join edge references unknown relation {ref.relation!r}")
            if ref.column not in relations[ref.relation].columns:
                raise CatalogError(f"join edge references unknown column {ref}")
        join_edges.append(JoinEdge(left, right))

    stats: dict[ColumnRef, ColumnStats] = {}
    cell_postings: dict[str, set] = {}
    token_postings: dict[str, set] = {}
    for rel in relations.values():
        for col_idx, col in enumerate(rel.columns):
            cells = [row[col_idx] for row in rel.rows]
            stats[ColumnRef(rel.name, col)] = compute_column_stats(
                rel.name, col, cells, top_k)
            for row_idx, cell in enumerate(cells):
                loc = (rel.name, col, row_idx)
                cell_postings.setdefault(cell.key, set()).add(loc)
                for tok in tokenize(cell.raw):
                    token_postings.setdefault(tok, set()).add(loc)

    index = InvertedIndex(
        cells={k: frozenset(v) for k, v in cell_postings.items()},
        tokens={k: frozenset(v) for k, v in token_postings.items()},
    )
    return Catalog(name, relations, tuple(join_edges), index, stats)


def load_catalog(config_path: str | Path, data_dir: str | Path | None = None,
                 top_k: int = DEFAULT_TOP_K) -> Catalog:
    """Load a catalog from a JSON schema config.

    Config shape::

        {"name": "mondial-mini",
         "relations": [{"name": "lake", "csv": "lake.csv",
                        "columns": ["name", "area", "depth"]}],
         "join_edges": [{"left": "lake.name", "right": "geo_lake.lake"}]}

    CSV files are RFC-4180 with a header row; the header must match the
    declared column list. Paths are relative to ``data_dir`` (default: the
    config file's directory).
    """
    config_path = Path(config_path)
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CatalogError(f"cannot read catalog config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed catalog config {config_path}: {exc}") from exc

    base = Path(data_dir) if data_dir is not None else config_path.parent
    rel_entries = config.get("relations") or []
    if not rel_entries:
        raise CatalogError("catalog has no relations")

    tables = []
    for entry in rel_entries:
        rel_name = entry.get("name")
        csv_name = entry.get("csv")
        if not rel_name or not csv_name:
            raise CatalogError("every relation needs a name and a csv path")
        csv_path = base / csv_name
        if not csv_path.exists():
            raise CatalogError(f"missing CSV file {csv_path} for relation {rel_name!r}")
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CatalogError(f"CSV file {csv_path} is empty") from None
            declared = entry.get("columns")
            if declared is not None and list(declared) != header:
                raise CatalogError(
                    f"relation {rel_name!r}: CSV header {header} does not match "
                    f"declared columns {list(declared)}")
            rows = [row for row in reader]
        tables.append((rel_name, header, rows))

    edges = [(e["left"], e["right"]) for e in config.get("join_edges", [])]
    name = config.get("name") or config_path.parent.name
    return build_catalog(name, tables, edges, top_k)


def lookup_value(catalog: Catalog, pred: ValuePredicate,
                 options: MatchOptions = DEFAULT_MATCH) -> set[ColumnRef]:
    """Columns holding at least one cell that matches an equality predicate.

    Index postings give the candidate locations (normalized keys never miss a
    true match); each candidate cell is then rechecked with the real predicate
    semantics, so the result is exact under the active match options.
    """
    if pred.op != "=":
        raise ValueError("index lookups take equality predicates only")
    lit = pred.constant
    key = canon_number(lit.number) if lit.number is not None else normalize_text(lit.text)
    candidates: set[tuple[str, str, int]] = set(catalog.index.cells.get(key, ()))
    if options.mode == "token":
        toks = tokenize(lit.text)
        if toks:
            postings = [catalog.index.tokens.get(t, frozenset()) for t in toks]
            common = set(postings[0])
            for p in postings[1:]:
                common &= p
            candidates |= common

    hit: set[ColumnRef] = set()
    for rel_name, col, row_idx in sorted(candidates):
        ref = ColumnRef(rel_name, col)
        if ref in hit:
            continue
        cell = catalog.cell(ref, row_idx)
        if constraints.eval_value_predicate(pred, cell, options):
            hit.add(ref)
    return hit
