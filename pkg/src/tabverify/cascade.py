"""Two-stage cascade over median-ensembled logits.

Stage 1 fires (non-neutral) when its ensemble logit is strictly above
``tau1``; only then does Stage 2 decide entailed (logit strictly above
``tau2``) versus refuted.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .data_model import Dataset, Label
from .errors import CoverageError, ParseError
from .ingest import PathLike, ScoreSet, iter_lines, atomic_write_text
from .metrics import Aggregation, evaluate

DEFAULT_TAU = 4.0


def median(xs: Sequence[float]) -> float:
    if not xs:
        raise ValueError("median of an empty sequence")
    if not all(math.isfinite(x) for x in xs):
        raise ValueError("median needs finite values")
    return statistics.median(xs)


def iqr_half(xs: Sequence[float]) -> float:
    """Half the inter-quartile range, quartiles as medians of the two halves.

    For odd lengths the overall median belongs to neither half.
    """
    if len(xs) < 2:
        raise ValueError("iqr_half needs at least 2 values")
    s = sorted(xs)
    h = len(s) // 2
    lower, upper = s[:h], s[len(s) - h :]
    return (statistics.median(upper) - statistics.median(lower)) / 2


def threshold_decide(logit: float, tau: float) -> bool:
    return logit > tau


@dataclass(frozen=True)
class CascadeConfig:
    tau1: float = DEFAULT_TAU
    tau2: float = DEFAULT_TAU

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau1) and math.isfinite(self.tau2)):
            raise ValueError("thresholds must be finite")


def cascade_predict(s1: float, s2: float, cfg: CascadeConfig) -> Label:
    if not threshold_decide(s1, cfg.tau1):
        return Label.NEUTRAL
    return Label.ENTAILED if threshold_decide(s2, cfg.tau2) else Label.REFUTED


@dataclass(frozen=True)
class Prediction:
    statement_id: str
    stage1_logit: float
    stage2_logit: float
    label: Label


def ensemble_logits(sets: Sequence[ScoreSet], d: Dataset) -> dict[str, float]:
    if not sets:
        raise CoverageError("no score sets supplied for a stage")
    out = {}
    for s in d.statements:
        try:
            out[s.id] = median([ss.scores[s.id] for ss in sets])
        except KeyError:
            missing = next(ss.model_id for ss in sets if s.id not in ss.scores)
            raise CoverageError(f"model {missing!r} has no logit for statement {s.id!r}") from None
    return out


def predict_all(
    stage1_sets: Sequence[ScoreSet],
    stage2_sets: Sequence[ScoreSet],
    cfg: CascadeConfig,
    d: Dataset,
) -> list[Prediction]:
    e1 = ensemble_logits(stage1_sets, d)
    e2 = ensemble_logits(stage2_sets, d)
    return [
        Prediction(s.id, e1[s.id], e2[s.id], cascade_predict(e1[s.id], e2[s.id], cfg))
        for s in d.statements
    ]


@dataclass(frozen=True)
class SweepRow:
    tau1: float
    tau2: float
    f1_2way: float
    f1_3way: float


def sweep(
    stage1_sets: Sequence[ScoreSet],
    stage2_sets: Sequence[ScoreSet],
    d: Dataset,
    grid: Iterable[tuple[float, float]],
    agg: Aggregation = Aggregation.PER_TABLE,
) -> list[SweepRow]:
    """Evaluate the cascade at every ``(tau1, tau2)`` grid point, in grid order."""
    e1 = ensemble_logits(stage1_sets, d)
    e2 = ensemble_logits(stage2_sets, d)
    rows = []
    for tau1, tau2 in grid:
        cfg = CascadeConfig(tau1, tau2)
        labels = {sid: cascade_predict(e1[sid], e2[sid], cfg) for sid in e1}
        report = evaluate(d, labels, agg)
        rows.append(SweepRow(tau1, tau2, report.aggregate_2way, report.aggregate_3way))
    return rows


# -- prediction files ------------------------------------------------------------


def predictions_to_text(preds: Iterable[Prediction]) -> str:
    return "".join(
        f"{p.statement_id} {p.label.value} {p.stage1_logit!r} {p.stage2_logit!r}\n" for p in preds
    )


def write_predictions(preds: Iterable[Prediction], path: PathLike) -> None:
    atomic_write_text(path, predictions_to_text(preds))


def load_predictions(path: PathLike) -> list[Prediction]:
    out, problems, seen = [], [], set()
    for n, line, err in iter_lines(path):
        if err is not None:
            problems.append((n, err))
            continue
        parts = line.split()
        try:
            if len(parts) != 4:
                raise ValueError(f"expected 4 fields, got {len(parts)}")
            sid, label, s1, s2 = parts
            if sid in seen:
                raise ValueError(f"duplicate statement id {sid!r}")
            p = Prediction(sid, float(s1), float(s2), Label.parse(label))
            if not (math.isfinite(p.stage1_logit) and math.isfinite(p.stage2_logit)):
                raise ValueError("non-finite logit")
        except ValueError as e:
            problems.append((n, str(e)))
            continue
        seen.add(sid)
        out.append(p)
    if problems:
        raise ParseError(str(path), problems)
    return out
