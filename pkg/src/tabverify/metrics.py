"""Per-table micro-F1 (2-way and 3-way), confusion matrices, precision/recall."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Optional, Sequence

from .data_model import Dataset, Label
from .errors import CoverageError, DataError


class Mode(enum.Enum):
    TWO_WAY = "2way"
    THREE_WAY = "3way"


class Aggregation(enum.Enum):
    PER_TABLE = "per-table"
    GLOBAL = "global"


def round_half_up(x: float, places: int) -> Decimal:
    """Round via the shortest decimal repr, so 0.125 -> 0.13 and 97.05 -> 97.1."""
    return Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt_pct(x: Optional[float], places: int = 2) -> str:
    return "-" if x is None else f"{round_half_up(x, places):.{places}f}"


def _counts(gold: Sequence[Label], pred: Sequence[Label], mode: Mode) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        if mode is Mode.TWO_WAY:
            if g is Label.NEUTRAL:
                continue
            if p is g:
                tp += 1
            elif p is Label.NEUTRAL:
                fn += 1
            else:
                fp += 1
                fn += 1
        elif p is g:
            tp += 1
        else:
            fp += 1
            fn += 1
    return tp, fp, fn


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def per_table_f1(gold: Sequence[Label], pred: Sequence[Label], mode: Mode) -> Optional[float]:
    """Micro F1 pooled over the three labels (3-way) or over entailed/refuted.

    In 2-way mode gold-neutral statements are dropped; a neutral prediction on
    a remaining statement is a miss for its gold class but a false alarm for
    nobody. Returns None when 2-way filtering leaves nothing.
    """
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predictions")
    if mode is Mode.TWO_WAY and all(g is Label.NEUTRAL for g in gold):
        return None
    if mode is Mode.THREE_WAY and not gold:
        return None
    return _f1(*_counts(gold, pred, mode))


@dataclass(frozen=True)
class TableScore:
    f1_2way: Optional[float]
    f1_3way: float
    counted_2way: int


@dataclass(frozen=True)
class EvalReport:
    """Fractions in ``per_table``; aggregates are percentages (unrounded)."""

    per_table: Mapping[str, TableScore]
    aggregate_2way: float
    aggregate_3way: float
    aggregation: Aggregation = Aggregation.PER_TABLE


def _mean(xs: Sequence[float]) -> float:
    # no defined tables (e.g. an all-neutral gold set in 2-way mode) scores 0
    return sum(xs) / len(xs) if xs else 0.0


def _aligned(d: Dataset, preds) -> dict[str, Label]:
    if isinstance(preds, Mapping):
        labels = dict(preds)
    else:
        labels = {p.statement_id: p.label for p in preds}
    missing = [s.id for s in d.statements if s.id not in labels]
    if missing:
        raise CoverageError(f"no prediction for {len(missing)} statement(s), e.g. {missing[:5]}")
    no_gold = [s.id for s in d.statements if s.gold is None]
    if no_gold:
        raise DataError(f"{len(no_gold)} statement(s) lack gold labels, e.g. {no_gold[:5]}")
    return labels


def evaluate(d: Dataset, preds, agg: Aggregation = Aggregation.PER_TABLE) -> EvalReport:
    """Score predictions (Prediction objects or an id -> Label mapping).

    Per-table aggregation averages the defined per-table scores with equal
    weight; global aggregation pools every statement into one computation.
    """
    labels = _aligned(d, preds)
    per_table = {}
    for tid, stmts in sorted(d.by_table().items()):
        gold = [s.gold for s in stmts]
        pred = [labels[s.id] for s in stmts]
        per_table[tid] = TableScore(
            per_table_f1(gold, pred, Mode.TWO_WAY),
            per_table_f1(gold, pred, Mode.THREE_WAY),
            sum(g is not Label.NEUTRAL for g in gold),
        )
    if Aggregation(agg) is Aggregation.PER_TABLE:
        two = _mean([v.f1_2way for v in per_table.values() if v.f1_2way is not None])
        three = _mean([v.f1_3way for v in per_table.values()])
    else:
        gold = [s.gold for s in d.statements]
        pred = [labels[s.id] for s in d.statements]
        two = per_table_f1(gold, pred, Mode.TWO_WAY) or 0.0
        three = per_table_f1(gold, pred, Mode.THREE_WAY) or 0.0
    return EvalReport(per_table, 100 * two, 100 * three, Aggregation(agg))


# -- confusion matrices ----------------------------------------------------------

NON_NEUTRAL = "Non-neutral"
NEUTRAL = "Neutral"
REFUTED = "Refuted"
ENTAILED = "Entailed"
STAGE1_CLASSES = (NON_NEUTRAL, NEUTRAL)
STAGE2_CLASSES = (REFUTED, ENTAILED)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i][j]``: statements of gold class i predicted as class j."""

    classes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))


def confusion(gold: Sequence[str], pred: Sequence[str], classes: Sequence[str]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predictions")
    index = {c: i for i, c in enumerate(classes)}
    grid = [[0] * len(classes) for _ in classes]
    for g, p in zip(gold, pred):
        if g not in index or p not in index:
            raise ValueError(f"label outside class set {list(classes)}: gold={g!r} pred={p!r}")
        grid[index[g]][index[p]] += 1
    return ConfusionMatrix(tuple(classes), tuple(tuple(r) for r in grid))


def _stage1_name(label: Label) -> str:
    return NEUTRAL if label is Label.NEUTRAL else NON_NEUTRAL


def stage1_confusion(gold: Sequence[Label], pred: Sequence[Label]) -> ConfusionMatrix:
    return confusion([_stage1_name(g) for g in gold], [_stage1_name(p) for p in pred], STAGE1_CLASSES)


def stage2_confusion(gold: Sequence[Label], pred: Sequence[Label]) -> ConfusionMatrix:
    """Entailed/refuted matrix over statements both gold and predicted non-neutral."""
    names = {Label.REFUTED: REFUTED, Label.ENTAILED: ENTAILED}
    pairs = [(names[g], names[p]) for g, p in zip(gold, pred) if g in names and p in names]
    return confusion([g for g, _ in pairs], [p for _, p in pairs], STAGE2_CLASSES)


@dataclass(frozen=True)
class ClassPR:
    cls: str
    precision: float
    recall: float


def precision_recall(m: ConfusionMatrix) -> list[ClassPR]:
    """Per-class precision and recall as percentages; 0 on empty denominators."""
    out = []
    for i, c in enumerate(m.classes):
        row = sum(m.counts[i])
        col = sum(r[i] for r in m.counts)
        hit = m.counts[i][i]
        out.append(ClassPR(c, 100 * hit / col if col else 0.0, 100 * hit / row if row else 0.0))
    return out


def format_confusion(m: ConfusionMatrix, sep: str = "\t") -> str:
    """Table-style layout: one row per gold class with recall, then precisions."""
    prs = precision_recall(m)
    lines = [sep.join(["gold\\pred", *m.classes, "Recall"])]
    for c, row, pr in zip(m.classes, m.counts, prs):
        lines.append(sep.join([c, *map(str, row), fmt_pct(pr.recall, 1)]))
    lines.append(sep.join(["Precision", *(fmt_pct(pr.precision, 1) for pr in prs)]))
    return "\n".join(lines) + "\n"
