"""Stage logits: external model files or built-in non-ML baselines.

The baselines let the whole cascade run without any model:

* majority: a constant logit of ``+/-MAJORITY_LOGIT``;
* lexical overlap: a bounded score in ``[-OVERLAP_SCALE, OVERLAP_SCALE]``
  from the share of statement tokens found in the table.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .data_model import Dataset, Statement, Table
from .errors import ConfigError, CoverageError
from .ingest import ScoreSet, Stage, load_scoreset

MAJORITY_LOGIT = 1e6
OVERLAP_SCALE = 8.0
NEGATION_LEXICON = frozenset({"no", "not", "none", "never", "without", "fewer", "less"})

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN.findall(text.lower())


def table_tokens(t: Table) -> frozenset[str]:
    toks = set(tokenize(t.caption))
    for h in t.header:
        toks.update(tokenize(h))
    for row in t.rows:
        for cell in row:
            toks.update(tokenize(cell))
    return frozenset(toks)


class ScorerKind(enum.Enum):
    EXTERNAL_FILE = "external"
    MAJORITY = "majority"
    LEXICAL_OVERLAP = "overlap"


@dataclass(frozen=True)
class ScorerSpec:
    kind: ScorerKind
    stage: Stage
    path: Optional[Path] = None
    positive: bool = True
    model_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is ScorerKind.EXTERNAL_FILE and self.path is None:
            raise ConfigError("external scorer needs a logits file path")

    @property
    def name(self) -> str:
        if self.model_id:
            return self.model_id
        if self.kind is ScorerKind.EXTERNAL_FILE:
            return Path(self.path).stem
        if self.kind is ScorerKind.MAJORITY:
            return "majority" if self.positive else "majority-neg"
        return "overlap"


def score_majority(d: Dataset, stage: Stage, positive: bool = True, model_id: str = "majority") -> ScoreSet:
    value = MAJORITY_LOGIT if positive else -MAJORITY_LOGIT
    return ScoreSet(Stage(stage), model_id, {s.id: value for s in d.statements})


def _overlap_logit(statement_tokens: set[str], ttoks: frozenset[str], stage: Stage) -> float:
    if not statement_tokens:
        return -OVERLAP_SCALE / 2 if stage is Stage.STAGE1 else 0.0
    size = len(statement_tokens)
    if stage is Stage.STAGE1:
        covered = len(statement_tokens & ttoks) / size
        return OVERLAP_SCALE * (covered - 0.5)
    negations = statement_tokens & NEGATION_LEXICON
    positive_hits = len((statement_tokens - NEGATION_LEXICON) & ttoks) / size
    return OVERLAP_SCALE * (positive_hits - len(negations) / size)


def score_overlap(s: Statement, t: Table, stage: Stage) -> float:
    """Deterministic lexical stand-in for a trained stage classifier.

    Stage 1: ``8 * (J - 0.5)`` with ``J`` the fraction of the statement's
    distinct tokens present in the table (caption, header and cells).
    Stage 2: ``8 * (J+ - J-)`` where ``J+`` is the fraction of statement
    tokens outside the negation lexicon that appear in the table and ``J-`` the
    fraction that are negation words.
    """
    if s.table_id != t.id:
        raise ValueError(f"statement {s.id} is bound to {s.table_id}, not {t.id}")
    return _overlap_logit(set(tokenize(s.text)), table_tokens(t), Stage(stage))


def score_overlap_all(d: Dataset, stage: Stage, model_id: str = "overlap") -> ScoreSet:
    cache: dict[str, frozenset[str]] = {}
    scores = {}
    for s in d.statements:
        if s.table_id not in cache:
            cache[s.table_id] = table_tokens(d.tables[s.table_id])
        scores[s.id] = _overlap_logit(set(tokenize(s.text)), cache[s.table_id], Stage(stage))
    return ScoreSet(Stage(stage), model_id, scores)


def run_scorer(spec: ScorerSpec, d: Dataset) -> ScoreSet:
    if spec.kind is ScorerKind.EXTERNAL_FILE:
        if not Path(spec.path).exists():
            raise ConfigError(f"logits file not found: {spec.path}")
        return load_scoreset(spec.path, spec.stage, spec.name)
    if spec.kind is ScorerKind.MAJORITY:
        return score_majority(d, spec.stage, spec.positive, spec.name)
    return score_overlap_all(d, spec.stage, spec.name)


def check_coverage(ss: ScoreSet, d: Dataset) -> None:
    missing = [s.id for s in d.statements if s.id not in ss.scores]
    if missing:
        raise CoverageError(
            f"stage {int(ss.stage)} model {ss.model_id!r} has no logit for {len(missing)} "
            f"statement(s), e.g. {missing[:5]}"
        )
    extra = sorted(set(ss.scores) - {s.id for s in d.statements})
    if extra:
        raise CoverageError(
            f"stage {int(ss.stage)} model {ss.model_id!r} scores {len(extra)} unknown "
            f"statement(s), e.g. {extra[:5]}"
        )


def collect_scores(specs: Iterable[ScorerSpec], d: Dataset) -> dict[Stage, list[ScoreSet]]:
    """Run every scorer and group the complete ScoreSets by stage."""
    groups: dict[Stage, list[ScoreSet]] = {Stage.STAGE1: [], Stage.STAGE2: []}
    for spec in specs:
        ss = run_scorer(spec, d)
        check_coverage(ss, d)
        groups[ss.stage].append(ss)
    for stage, sets in groups.items():
        if not sets:
            raise ConfigError(f"no scorers configured for stage {int(stage)}")
    return groups
