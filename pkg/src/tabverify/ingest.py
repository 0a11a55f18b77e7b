"""Readers and canonical writers for dataset, logit and evidence files.

File formats (all UTF-8, one record per line):

``*.tvd``
    JSON objects tagged by ``kind``::

        {"kind":"table","id":"t1","caption":"...","header":["a","b"],"rows":[["1","2"]]}
        {"kind":"statement","id":"s1","table_id":"t1","text":"...","gold":"entailed"}

    ``gold`` is optional. A ``null`` header is replaced by ``col0..colN``.
    Canonical output lists tables then statements, each sorted by id.

``*.logits``
    ``<statement_id> <logit>`` per line, one model per file.

``*.evd``
    JSON objects ``{"statement_id","model_id","predicted_label","cells":[[r,c],...]}``
    where ``r`` is a 0-based body-row index.
"""

from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Union

from .data_model import (
    CellCoord,
    Dataset,
    EvidencePrediction,
    Label,
    Statement,
    Table,
    Violation,
    evidence_violations,
    validate_dataset,
)
from .errors import ParseError, ValidationError

PathLike = Union[str, "os.PathLike[str]"]

TABLE_KEYS = ("kind", "id", "caption", "header", "rows")
STATEMENT_KEYS = ("kind", "id", "table_id", "text", "gold")
EVIDENCE_KEYS = ("statement_id", "model_id", "predicted_label", "cells")


class Stage(enum.IntEnum):
    STAGE1 = 1
    STAGE2 = 2

    @classmethod
    def parse(cls, value: object) -> "Stage":
        text = str(value).strip().lower().removeprefix("stage")
        try:
            return cls(int(text))
        except ValueError:
            raise ValueError(f"unknown stage {value!r}; expected 1 or 2") from None


@dataclass(frozen=True)
class ScoreSet:
    """Logits from one model for one cascade stage."""

    stage: Stage
    model_id: str
    scores: Mapping[str, float]

    def __post_init__(self) -> None:
        bad = [sid for sid, v in self.scores.items() if not sid or not math.isfinite(v)]
        if bad:
            raise ValueError(f"empty id or non-finite logit for {bad[:5]}")

    def __len__(self) -> int:
        return len(self.scores)


# -- generic helpers ---------------------------------------------------------


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def iter_lines(path: PathLike) -> Iterator[tuple[int, str | None, str | None]]:
    """Yield ``(lineno, text, decode_error)``, skipping blank lines."""
    raw = Path(path).read_bytes()
    for n, chunk in enumerate(raw.split(b"\n"), start=1):
        try:
            line = chunk.decode("utf-8")
        except UnicodeDecodeError as e:
            yield n, None, f"invalid UTF-8 ({e.reason})"
            continue
        if line.strip():
            yield n, line.rstrip("\r"), None


def _dumps(obj: object) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _is_str_list(x: object) -> bool:
    return isinstance(x, list) and all(isinstance(v, str) for v in x)


# -- datasets ------------------------------------------------------------------


def _parse_table(rec: dict) -> Table:
    missing = [k for k in ("id", "header", "rows") if k not in rec]
    if missing:
        raise ValueError(f"table record missing required field(s) {missing}")
    caption = rec.get("caption", "")
    if not isinstance(rec["id"], str) or not isinstance(caption, str):
        raise ValueError("table id and caption must be strings")
    rows = rec["rows"]
    if not isinstance(rows, list) or not all(_is_str_list(r) for r in rows):
        raise ValueError("rows must be a list of lists of strings")
    header = rec["header"]
    if header is None:
        if not rows:
            raise ValueError("cannot synthesize a header for a table without rows")
        header = [f"col{i}" for i in range(len(rows[0]))]
    elif not _is_str_list(header):
        raise ValueError("header must be a list of strings or null")
    return Table(rec["id"], caption, tuple(header), tuple(tuple(r) for r in rows))


def _parse_statement(rec: dict) -> Statement:
    missing = [k for k in ("id", "table_id", "text") if k not in rec]
    if missing:
        raise ValueError(f"statement record missing required field(s) {missing}")
    for k in ("id", "table_id", "text"):
        if not isinstance(rec[k], str):
            raise ValueError(f"{k} must be a string")
    gold = rec.get("gold")
    if gold is not None:
        if not isinstance(gold, str):
            raise ValueError("gold must be a string")
        gold = Label.parse(gold)
    return Statement(rec["id"], rec["table_id"], rec["text"], gold)


def parse_dataset_records(path: PathLike) -> tuple[list[Table], list[Statement], list[tuple[int, str]]]:
    """Parse every record; bad lines are reported, never silently dropped."""
    tables: list[Table] = []
    statements: list[Statement] = []
    problems: list[tuple[int, str]] = []
    for n, line, err in iter_lines(path):
        if err is not None:
            problems.append((n, err))
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            kind = rec.get("kind")
            allowed = TABLE_KEYS if kind == "table" else STATEMENT_KEYS
            if kind not in ("table", "statement"):
                raise ValueError(f"unknown record kind {kind!r}")
            extra = sorted(set(rec) - set(allowed))
            if extra:
                raise ValueError(f"unexpected field(s) {extra}")
            if kind == "table":
                tables.append(_parse_table(rec))
            else:
                statements.append(_parse_statement(rec))
        except ValueError as e:  # json.JSONDecodeError is a ValueError
            problems.append((n, str(e)))
    return tables, statements, problems


def load_dataset(path: PathLike) -> Dataset:
    tables, statements, problems = parse_dataset_records(path)
    if problems:
        raise ParseError(str(path), problems)
    d = Dataset(tables, statements)
    violations = validate_dataset(d)
    if violations:
        raise ValidationError(violations, str(path))
    return d


def dataset_to_text(d: Dataset) -> str:
    lines = []
    for t in d.tables.values():
        lines.append(
            _dumps(
                {
                    "kind": "table",
                    "id": t.id,
                    "caption": t.caption,
                    "header": list(t.header),
                    "rows": [list(r) for r in t.rows],
                }
            )
        )
    for s in d.statements:
        rec: dict[str, object] = {"kind": "statement", "id": s.id, "table_id": s.table_id, "text": s.text}
        if s.gold is not None:
            rec["gold"] = s.gold.value
        lines.append(_dumps(rec))
    return "".join(line + "\n" for line in lines)


def write_dataset(d: Dataset, path: PathLike) -> None:
    violations = validate_dataset(d)
    if violations:
        raise ValidationError(violations, "refusing to write invalid dataset")
    atomic_write_text(path, dataset_to_text(d))


# -- logits --------------------------------------------------------------------


def load_scoreset(path: PathLike, stage: Stage | int, model_id: str | None = None) -> ScoreSet:
    stage = Stage(stage)
    if model_id is None:
        model_id = Path(path).stem
    scores: dict[str, float] = {}
    problems: list[tuple[int, str]] = []
    for n, line, err in iter_lines(path):
        if err is not None:
            problems.append((n, err))
            continue
        parts = line.split()
        if len(parts) != 2:
            problems.append((n, f"expected '<statement_id> <logit>', got {len(parts)} field(s)"))
            continue
        sid, raw = parts
        try:
            value = float(raw)
        except ValueError:
            problems.append((n, f"unparseable logit {raw!r}"))
            continue
        if not math.isfinite(value):
            problems.append((n, f"non-finite logit {raw!r} for {sid}"))
            continue
        if sid in scores:
            problems.append((n, f"duplicate statement id {sid!r}"))
            continue
        scores[sid] = value
    if problems:
        raise ParseError(str(path), problems)
    return ScoreSet(stage, model_id, scores)


def scoreset_to_text(ss: ScoreSet) -> str:
    # repr() of a float is the shortest string that round-trips
    return "".join(f"{sid} {float(ss.scores[sid])!r}\n" for sid in sorted(ss.scores))


def write_scoreset(ss: ScoreSet, path: PathLike) -> None:
    atomic_write_text(path, scoreset_to_text(ss))


# -- evidence ------------------------------------------------------------------


def _parse_evidence(rec: object) -> EvidencePrediction:
    if not isinstance(rec, dict):
        raise ValueError("record is not an object")
    missing = [k for k in EVIDENCE_KEYS if k not in rec]
    if missing:
        raise ValueError(f"evidence record missing required field(s) {missing}")
    extra = sorted(set(rec) - set(EVIDENCE_KEYS))
    if extra:
        raise ValueError(f"unexpected field(s) {extra}")
    if not isinstance(rec["statement_id"], str) or not isinstance(rec["model_id"], str):
        raise ValueError("statement_id and model_id must be strings")
    if not isinstance(rec["predicted_label"], str):
        raise ValueError("predicted_label must be a string")
    cells = []
    if not isinstance(rec["cells"], list):
        raise ValueError("cells must be a list of [row, col] pairs")
    for c in rec["cells"]:
        if not (
            isinstance(c, list)
            and len(c) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in c)
        ):
            raise ValueError(f"bad cell {c!r}; expected [row, col] integers")
        cells.append(CellCoord(c[0], c[1]))
    return EvidencePrediction(
        rec["statement_id"], rec["model_id"], Label.parse(rec["predicted_label"]), frozenset(cells)
    )


def load_evidence_predictions(path: PathLike, dataset: Dataset) -> list[EvidencePrediction]:
    preds: list[EvidencePrediction] = []
    problems: list[tuple[int, str]] = []
    for n, line, err in iter_lines(path):
        if err is not None:
            problems.append((n, err))
            continue
        try:
            preds.append(_parse_evidence(json.loads(line)))
        except ValueError as e:
            problems.append((n, str(e)))
    if problems:
        raise ParseError(str(path), problems)
    violations: list[Violation] = []
    for p in preds:
        if p.statement_id not in dataset:
            violations.append(Violation(p.statement_id, "unknown-statement", f"model {p.model_id}"))
            continue
        table = dataset.table_of(dataset.statement(p.statement_id))
        violations.extend(evidence_violations(p, table))
    if violations:
        raise ValidationError(violations, str(path))
    return preds


def evidence_to_text(preds: Iterable[EvidencePrediction]) -> str:
    lines = []
    for p in sorted(preds, key=lambda p: (p.statement_id, p.model_id)):
        lines.append(
            _dumps(
                {
                    "statement_id": p.statement_id,
                    "model_id": p.model_id,
                    "predicted_label": p.predicted_label.value,
                    "cells": [[c.row, c.col] for c in sorted(p.cells)],
                }
            )
        )
    return "".join(line + "\n" for line in lines)


def write_evidence_predictions(preds: Iterable[EvidencePrediction], path: PathLike) -> None:
    atomic_write_text(path, evidence_to_text(preds))
