"""Artificial neutral statements and the balanced Stage-1 training set.

Two sources of neutrals:

* random pairing: a training statement is attached to some other table;
* column removal: a column that the evidence ensemble agrees supports the
  statement is deleted from its table (never column 0, which usually holds
  the row names).

Randomness comes from :class:`random.Random` (Mersenne Twister) seeded with the
caller's integer, so outputs are reproducible within this implementation.
"""

from __future__ import annotations

import enum
import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .data_model import BINARY_LABELS, Dataset, EvidencePrediction, Label, Statement, Table


class NeutralSource(enum.Enum):
    RANDOM_PAIRING = "random-pairing"
    COLUMN_REMOVAL = "column-removal"


@dataclass(frozen=True)
class Provenance:
    original_statement_id: str
    original_table_id: str
    removed_col: Optional[int] = None


@dataclass(frozen=True)
class NeutralExample:
    statement: Statement
    source: NeutralSource
    provenance: Provenance
    derived_table: Optional[Table] = None

    def __post_init__(self) -> None:
        if self.statement.gold is not Label.NEUTRAL:
            raise ValueError("neutral examples must carry the neutral label")
        if self.source is NeutralSource.RANDOM_PAIRING:
            if self.statement.table_id == self.provenance.original_table_id:
                raise ValueError("random pairing must land on a foreign table")
            if self.derived_table is not None:
                raise ValueError("random pairing has no derived table")
        else:
            if self.derived_table is None or self.provenance.removed_col is None:
                raise ValueError("column removal needs a derived table and a removed column")
            if self.provenance.removed_col < 1:
                raise ValueError("column 0 is never removed")

    @property
    def key(self) -> tuple[str, str, int]:
        p = self.provenance
        return (p.original_statement_id, p.original_table_id, -1 if p.removed_col is None else p.removed_col)


def _pair(d: Dataset, n: int, rng: random.Random) -> list[NeutralExample]:
    table_ids = sorted(d.tables)
    if len(table_ids) < 2:
        raise ValueError(f"random pairing needs at least 2 tables, dataset has {len(table_ids)}")
    if n > 0 and not d.statements:
        raise ValueError("random pairing needs at least one statement")
    out = []
    for k in range(n):
        s = d.statements[rng.randrange(len(d.statements))]
        foreign = [t for t in table_ids if t != s.table_id]
        target = foreign[rng.randrange(len(foreign))]
        out.append(
            NeutralExample(
                Statement(f"{s.id}#rp{k}", target, s.text, Label.NEUTRAL),
                NeutralSource.RANDOM_PAIRING,
                Provenance(s.id, s.table_id),
            )
        )
    return out


def pair_random_neutrals(d: Dataset, n: int, seed: int) -> list[NeutralExample]:
    """Draw ``n`` (statement, foreign table) pairs uniformly, with replacement."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return _pair(d, n, random.Random(seed))


def extract_evidence_columns(
    t: Table, gold: Label, preds: Sequence[EvidencePrediction]
) -> set[int]:
    """Columns a strict majority of the ensemble marked as evidence.

    Nothing is extracted unless a strict majority of models also predicted the
    gold entailment label. Column 0 is never returned.
    """
    if gold not in BINARY_LABELS:
        raise ValueError(f"gold label must be entailed or refuted, got {gold}")
    if not preds:
        raise ValueError("ensemble must contain at least one prediction")
    ids = {p.statement_id for p in preds}
    if len(ids) > 1:
        raise ValueError(f"predictions mix statement ids {sorted(ids)}")
    n = len(preds)
    correct = sum(p.predicted_label is gold for p in preds)
    if 2 * correct <= n:
        return set()
    votes: Counter[int] = Counter()
    for p in preds:
        votes.update(p.columns)
    return {c for c, v in votes.items() if c >= 1 and c < t.n_cols and 2 * v > n}


def remove_column(t: Table, c: int) -> Table:
    if t.n_cols < 2:
        raise ValueError(f"table {t.id} has a single column; nothing removable")
    if c == 0:
        raise ValueError("the first column is never removed")
    if not 1 <= c < t.n_cols:
        raise ValueError(f"column {c} out of range for table {t.id} with {t.n_cols} columns")
    return Table(
        f"{t.id}#drop{c}",
        t.caption,
        t.header[:c] + t.header[c + 1 :],
        tuple(row[:c] + row[c + 1 :] for row in t.rows),
    )


def _dedupe_evidence(evidence: Iterable[EvidencePrediction]) -> dict[str, list[EvidencePrediction]]:
    by_key: dict[tuple[str, str], EvidencePrediction] = {}
    for p in evidence:
        key = (p.statement_id, p.model_id)
        prev = by_key.get(key)
        if prev is not None and prev != p:
            raise ValueError(f"conflicting evidence for statement {key[0]!r} from model {key[1]!r}")
        by_key[key] = p
    grouped: dict[str, list[EvidencePrediction]] = {}
    for (sid, _), p in sorted(by_key.items()):
        grouped.setdefault(sid, []).append(p)
    return grouped


def gen_column_removal_neutrals(
    d: Dataset,
    evidence: Iterable[EvidencePrediction],
    gold_map: Optional[Mapping[str, Label]] = None,
) -> list[NeutralExample]:
    """One neutral per (statement, extracted evidence column), sorted by key.

    Identical predictions repeated across evidence files count once; the same
    model disagreeing with itself is an error. ``gold_map`` defaults to the
    dataset's own gold labels. Statements without a binary gold are skipped.
    """
    if gold_map is None:
        gold_map = {s.id: s.gold for s in d.statements if s.gold is not None}
    out: dict[tuple[str, str, int], NeutralExample] = {}
    for sid, preds in _dedupe_evidence(evidence).items():
        gold = gold_map.get(sid)
        if gold not in BINARY_LABELS:
            continue
        s = d.statement(sid)
        t = d.table_of(s)
        for c in sorted(extract_evidence_columns(t, gold, preds)):
            derived = remove_column(t, c)
            ex = NeutralExample(
                Statement(f"{s.id}#cr{c}", derived.id, s.text, Label.NEUTRAL),
                NeutralSource.COLUMN_REMOVAL,
                Provenance(s.id, t.id, c),
                derived,
            )
            out.setdefault(ex.key, ex)
    return [out[k] for k in sorted(out)]


def neutrals_to_dataset(examples: Sequence[NeutralExample], base: Dataset) -> Dataset:
    """Pack neutral examples with every table they reference."""
    tables = {}
    for ex in examples:
        t = ex.derived_table or base.tables[ex.statement.table_id]
        tables[t.id] = t
    return Dataset(tables.values(), [ex.statement for ex in examples])


_CR_ID = re.compile(r"^(?P<orig>.+)#cr(?P<col>\d+)$")
_DROP_ID = re.compile(r"^(?P<orig>.+)#drop(?P<col>\d+)$")


def neutrals_from_dataset(pool: Dataset) -> list[NeutralExample]:
    """Recover column-removal examples from a pool file written by this module."""
    out = []
    for s in pool.statements:
        m, t = _CR_ID.match(s.id), _DROP_ID.match(s.table_id)
        if m is None or t is None or m["col"] != t["col"]:
            raise ValueError(f"pool statement {s.id!r} on {s.table_id!r} is not a column-removal neutral")
        out.append(
            NeutralExample(
                Statement(s.id, s.table_id, s.text, Label.NEUTRAL),
                NeutralSource.COLUMN_REMOVAL,
                Provenance(m["orig"], t["orig"], int(m["col"])),
                pool.tables[s.table_id],
            )
        )
    return out


def build_stage1_trainset(d: Dataset, removal_pool: Sequence[NeutralExample], seed: int) -> Dataset:
    """Originals as the non-neutral class plus an equal number of neutrals.

    Of the ``n`` negatives, ``n // 2`` come from random pairing and the rest are
    drawn with replacement from ``removal_pool``. Originals keep their
    entailed/refuted gold, both of which count as non-neutral.
    """
    bad = [s.id for s in d.statements if s.gold not in BINARY_LABELS]
    if bad:
        raise ValueError(f"stage-1 positives must be entailed/refuted; offending ids {bad[:5]}")
    if not removal_pool:
        raise ValueError("removal pool is empty")
    if any(ex.source is not NeutralSource.COLUMN_REMOVAL for ex in removal_pool):
        raise ValueError("removal pool may only hold column-removal examples")
    rng = random.Random(seed)
    n = len(d.statements)
    n_pair = n // 2
    negatives = _pair(d, n_pair, rng)

    pool = sorted(removal_pool, key=lambda ex: ex.key)
    used: Counter[str] = Counter()
    for _ in range(n - n_pair):
        ex = pool[rng.randrange(len(pool))]
        base_id = ex.statement.id
        k = used[base_id]
        used[base_id] += 1
        sid = base_id if k == 0 else f"{base_id}-dup{k}"
        negatives.append(
            NeutralExample(
                Statement(sid, ex.statement.table_id, ex.statement.text, Label.NEUTRAL),
                ex.source,
                ex.provenance,
                ex.derived_table,
            )
        )

    tables = dict(d.tables)
    for ex in negatives:
        if ex.derived_table is not None:
            tables[ex.derived_table.id] = ex.derived_table
    return Dataset(tables.values(), list(d.statements) + [ex.statement for ex in negatives])
