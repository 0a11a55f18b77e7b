"""Keyword-group error slicing.

Each statement falls into exactly one group: the single base group whose
keywords it contains, "Multiple of the above" when it hits several, or
"Other" when it hits none. For every group we report its share of the
data, its accuracy, a majority-class baseline and its contribution to the
total error rate, ``ER = size * (1 - acc)``, so the ER column sums to the
overall error.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Hashable, Mapping, Optional, Sequence

from .data_model import Dataset, Label, Statement
from .errors import ConfigError
from .ingest import PathLike
from .metrics import fmt_pct
from .scoring import tokenize

MULTIPLE = "Multiple of the above"
OTHER = "Other"
OVERALL = "Overall"
RESERVED = frozenset({MULTIPLE, OTHER, OVERALL})


@dataclass(frozen=True)
class KeywordGroups:
    groups: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.groups]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate keyword group names in {names}")
        clash = RESERVED.intersection(names)
        if clash:
            raise ConfigError(f"reserved group name(s) {sorted(clash)}")
        for name, kws in self.groups:
            bad = [k for k in kws if k != k.lower() or not k]
            if bad:
                raise ConfigError(f"group {name!r}: keywords must be non-empty lowercase, got {bad}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.groups] + [MULTIPLE, OTHER]

    @classmethod
    def from_mapping(cls, m: Mapping[str, Sequence[str]]) -> "KeywordGroups":
        return cls(tuple((name, frozenset(kws)) for name, kws in m.items()))


def parse_keywords(text: str, source: str = "<keywords>") -> KeywordGroups:
    groups: list[tuple[str, frozenset[str]]] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        if not sep or not name.strip():
            raise ConfigError(f"{source}:{n}: expected '<group>: kw1, kw2, ...'")
        kws = [k.strip() for k in rest.split(",") if k.strip()]
        groups.append((name.strip(), frozenset(kws)))
    return KeywordGroups(tuple(groups))


def load_keywords(path: Optional[PathLike] = None) -> KeywordGroups:
    """Read a ``groups.kw`` file; the packaged default when ``path`` is None."""
    if path is None:
        text = resources.files("tabverify").joinpath("data/groups.kw").read_text(encoding="utf-8")
        return parse_keywords(text, "groups.kw")
    return parse_keywords(Path(path).read_text(encoding="utf-8"), str(path))


def assign_group(s: Statement | str, kg: KeywordGroups) -> str:
    text = s.text if isinstance(s, Statement) else s
    toks = set(tokenize(text))
    hits = [name for name, kws in kg.groups if toks & kws]
    if not hits:
        return OTHER
    return hits[0] if len(hits) == 1 else MULTIPLE


@dataclass(frozen=True)
class SliceRow:
    group: str
    count: int
    size_pct: float
    acc_pct: float
    baseline_pct: float
    er_pct: float


def er_contribution(size_pct: float, acc_pct: float) -> float:
    """Share of the whole set that is an error inside this group, in percent."""
    return size_pct * (100.0 - acc_pct) / 100.0


def _row(name: str, items: Sequence[tuple[Hashable, bool]], total: int) -> SliceRow:
    n = len(items)
    if n == 0 or total == 0:
        return SliceRow(name, 0, 0.0, 0.0, 0.0, 0.0)
    correct = sum(ok for _, ok in items)
    majority = Counter(g for g, _ in items).most_common(1)[0][1]
    size = 100.0 * n / total
    acc = 100.0 * correct / n
    # (n - correct) / total directly, rather than via rounded size/acc
    er = 100.0 * (n - correct) / total
    return SliceRow(name, n, size, acc, 100.0 * majority / n, er)


def _report(
    statements: Sequence[Statement],
    outcome: Mapping[str, tuple[Hashable, bool]],
    kg: KeywordGroups,
) -> list[SliceRow]:
    total = len(statements)
    buckets: dict[str, list[tuple[Hashable, bool]]] = {name: [] for name in kg.names}
    for s in statements:
        buckets[assign_group(s, kg)].append(outcome[s.id])
    everything = [outcome[s.id] for s in statements]
    return [_row(OVERALL, everything, total)] + [_row(name, buckets[name], total) for name in kg.names]


def _labels(preds) -> dict[str, Label]:
    if isinstance(preds, Mapping):
        return dict(preds)
    return {p.statement_id: p.label for p in preds}


def _gold_statements(d: Dataset) -> list[Statement]:
    missing = [s.id for s in d.statements if s.gold is None]
    if missing:
        raise ValueError(f"{len(missing)} statement(s) lack gold labels, e.g. {missing[:5]}")
    return list(d.statements)


def slice_report(d: Dataset, preds, kg: KeywordGroups) -> list[SliceRow]:
    """Overall row followed by one row per group, 3-class correctness."""
    labels = _labels(preds)
    stmts = _gold_statements(d)
    outcome = {s.id: (s.gold, labels[s.id] is s.gold) for s in stmts}
    return _report(stmts, outcome, kg)


def keyword_probe(d: Dataset, preds, word: str) -> tuple[float, float, float]:
    """(size %, accuracy %, ER %) of statements containing ``word``."""
    labels = _labels(preds)
    stmts = _gold_statements(d)
    word = word.lower()
    hits = [(s.gold, labels[s.id] is s.gold) for s in stmts if word in tokenize(s.text)]
    row = _row(word, hits, len(stmts))
    return row.size_pct, row.acc_pct, row.er_pct


def stage_slice_views(d: Dataset, preds, kg: KeywordGroups) -> dict[str, list[SliceRow]]:
    """Slice reports for the full 3-class decision and for each stage alone.

    The Stage-2 view only covers statements that are non-neutral in both gold
    and prediction, since Stage 2 never sees the others.
    """
    labels = _labels(preds)
    stmts = _gold_statements(d)
    overall = {s.id: (s.gold, labels[s.id] is s.gold) for s in stmts}
    stage1 = {
        s.id: (s.gold.is_neutral, s.gold.is_neutral == labels[s.id].is_neutral) for s in stmts
    }
    s2_stmts = [s for s in stmts if not s.gold.is_neutral and not labels[s.id].is_neutral]
    stage2 = {s.id: (s.gold, labels[s.id] is s.gold) for s in s2_stmts}
    return {
        "overall": _report(stmts, overall, kg),
        "stage1": _report(stmts, stage1, kg),
        "stage2": _report(s2_stmts, stage2, kg),
    }


def format_slices(rows: Sequence[SliceRow], sep: str = "\t") -> str:
    lines = [sep.join(["group", "n", "size", "acc", "baseline", "er"])]
    for r in rows:
        lines.append(
            sep.join(
                [r.group, str(r.count)]
                + [fmt_pct(v, 1) for v in (r.size_pct, r.acc_pct, r.baseline_pct, r.er_pct)]
            )
        )
    return "\n".join(lines) + "\n"
