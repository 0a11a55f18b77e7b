"""Core domain types: labels, tables, statements, datasets and evidence."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional


class Label(enum.Enum):
    ENTAILED = "entailed"
    REFUTED = "refuted"
    NEUTRAL = "neutral"

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown label {text!r}") from None

    def __str__(self) -> str:
        return self.value

    @property
    def is_neutral(self) -> bool:
        return self is Label.NEUTRAL


BINARY_LABELS = (Label.ENTAILED, Label.REFUTED)


@dataclass(frozen=True)
class Table:
    """A premise table. ``rows`` holds body rows only; the header is separate."""

    id: str
    caption: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))

    @property
    def n_cols(self) -> int:
        return len(self.header)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, c: int) -> tuple[str, ...]:
        return tuple(row[c] for row in self.rows)


@dataclass(frozen=True)
class Statement:
    id: str
    table_id: str
    text: str
    gold: Optional[Label] = None


@dataclass(frozen=True, order=True)
class CellCoord:
    row: int
    col: int


@dataclass(frozen=True)
class EvidencePrediction:
    """One evidence model's output for one statement."""

    statement_id: str
    model_id: str
    predicted_label: Label
    cells: frozenset[CellCoord] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.predicted_label not in BINARY_LABELS:
            raise ValueError(
                f"evidence label must be entailed or refuted, got {self.predicted_label}"
            )
        object.__setattr__(self, "cells", frozenset(self.cells))

    @property
    def columns(self) -> frozenset[int]:
        return frozenset(c.col for c in self.cells)


class Dataset:
    """Tables keyed by id plus statements.

    Statements are kept sorted by id so that the in-memory order matches the
    canonical on-disk order; "dataset order" everywhere means id order.
    Treat instances as immutable.
    """

    def __init__(self, tables: Iterable[Table] | Mapping[str, Table], statements: Iterable[Statement]):
        if isinstance(tables, Mapping):
            tables = tables.values()
        table_list = list(tables)
        by_id: dict[str, Table] = {}
        for t in sorted(table_list, key=lambda t: t.id):
            by_id.setdefault(t.id, t)
        self.tables: Mapping[str, Table] = MappingProxyType(by_id)
        self.statements: tuple[Statement, ...] = tuple(sorted(statements, key=lambda s: s.id))
        # duplicates cannot live in the mapping but must still be reported
        self.duplicate_table_ids = _duplicates(t.id for t in table_list)
        self._index = {s.id: s for s in self.statements}
        if len(self._index) != len(self.statements):
            # keep the first occurrence; validate_dataset reports the rest
            self._index = {}
            for s in self.statements:
                self._index.setdefault(s.id, s)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return dict(self.tables) == dict(other.tables) and self.statements == other.statements

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.statements)

    def __repr__(self) -> str:
        return f"Dataset(tables={len(self.tables)}, statements={len(self.statements)})"

    def table_of(self, s: Statement) -> Table:
        return self.tables[s.table_id]

    def statement(self, statement_id: str) -> Statement:
        return self._index[statement_id]

    def __contains__(self, statement_id: object) -> bool:
        return statement_id in self._index

    def by_table(self) -> dict[str, list[Statement]]:
        groups: dict[str, list[Statement]] = {}
        for s in self.statements:
            groups.setdefault(s.table_id, []).append(s)
        return groups


def _duplicates(ids: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return dups


@dataclass(frozen=True)
class Violation:
    """A broken invariant. ``ref`` is the offending table or statement id."""

    ref: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.ref}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def validate_table(t: Table) -> list[Violation]:
    out = []
    if not t.id:
        out.append(Violation("<table>", "empty-id"))
    if len(t.header) < 1:
        out.append(Violation(t.id, "empty-header"))
    for i, row in enumerate(t.rows):
        if len(row) != len(t.header):
            out.append(
                Violation(t.id, "ragged-row", f"row {i} has {len(row)} cells, header has {len(t.header)}")
            )
    return out


def validate_dataset(d: Dataset) -> list[Violation]:
    violations: list[Violation] = []
    for tid in d.duplicate_table_ids:
        violations.append(Violation(tid, "duplicate-table-id"))
    for t in d.tables.values():
        violations.extend(validate_table(t))
    seen: set[str] = set()
    for s in d.statements:
        ref = s.id or "<statement>"
        if not s.id:
            violations.append(Violation(ref, "empty-id"))
        elif s.id in seen:
            violations.append(Violation(ref, "duplicate-statement-id"))
        seen.add(s.id)
        if not s.text:
            violations.append(Violation(ref, "empty-text"))
        if s.table_id not in d.tables:
            violations.append(Violation(ref, "dangling-table-ref", f"table {s.table_id!r} not found"))
    return violations


def evidence_violations(p: EvidencePrediction, t: Table) -> list[Violation]:
    out = []
    for cell in sorted(p.cells):
        if not (0 <= cell.row < t.n_rows and 0 <= cell.col < t.n_cols):
            out.append(
                Violation(
                    p.statement_id,
                    "cell-out-of-bounds",
                    f"model {p.model_id}: ({cell.row},{cell.col}) outside {t.n_rows}x{t.n_cols} table {t.id}",
                )
            )
    return out
