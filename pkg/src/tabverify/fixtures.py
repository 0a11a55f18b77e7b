"""Deterministic synthetic tables, statements and evidence for demos and tests.

Statements are built from templates over the table contents so that the
lexical-overlap scorer has something to work with: entailed/refuted ones
quote cells of their own table, neutral ones mention columns that do not
exist.
"""

from __future__ import annotations

import random
from typing import Sequence

from .data_model import CellCoord, Dataset, EvidencePrediction, Label, Statement, Table

_SYSTEMS = ["Baseline", "Ours", "BERT", "TAPAS", "LSTM", "CNN", "SVM", "Oracle", "Random", "Ensemble"]
_METRICS = ["accuracy", "precision", "recall", "F1", "BLEU", "loss", "runtime", "parameters", "error", "score"]
_UNSEEN = ["latency", "memory", "energy", "throughput", "cost", "variance", "perplexity", "speed"]

_ENTAILED = [
    "The {metric} of {row} is {value}",
    "{row} has a {metric} of {value}",
    "{row} reaches {value} {metric} which is higher than {other}",
    "The best {metric} is obtained by {best}",
    "{row} does not have a {metric} of {wrong}",
]
_REFUTED = [
    "The {metric} of {row} is {wrong}",
    "{row} has a {metric} of {wrong}",
    "The best {metric} is obtained by {notbest}",
    "{row} does not have a {metric} of {value}",
    "The total number of different systems is {wrongcount}",
]
_NEUTRAL = [
    "The {unseen} of {row} is {value}",
    "{row} has lower {unseen} than {other}",
    "The {unseen} is highest for {row}",
    "There are {count} different {unseen} settings",
]


def make_table(table_id: str, rng: random.Random, n_rows: int = 4, n_cols: int = 4) -> Table:
    rows_names = rng.sample(_SYSTEMS, n_rows)
    metrics = rng.sample(_METRICS, n_cols - 1)
    rows = [[name] + [f"{rng.uniform(10, 99):.1f}" for _ in metrics] for name in rows_names]
    return Table(table_id, f"Results for {table_id}", ("System", *metrics), tuple(tuple(r) for r in rows))


def _fill(template: str, t: Table, rng: random.Random) -> tuple[str, CellCoord]:
    r = rng.randrange(t.n_rows)
    c = rng.randrange(1, t.n_cols)
    col = [float(v) for v in t.column(c)]
    best = max(range(t.n_rows), key=lambda i: col[i])
    notbest = (best + 1) % t.n_rows
    lower = [i for i in range(t.n_rows) if col[i] < col[r]]
    other = t.rows[lower[0]][0] if lower else t.rows[(r + 1) % t.n_rows][0]
    text = template.format(
        metric=t.header[c],
        row=t.rows[r][0],
        value=t.rows[r][c],
        wrong=f"{float(t.rows[r][c]) + rng.choice([-7.5, 3.2, 11.0]):.1f}",
        other=other,
        best=t.rows[best][0],
        notbest=t.rows[notbest][0],
        unseen=rng.choice(_UNSEEN),
        count=rng.randint(2, 9),
        wrongcount=t.n_rows + rng.randint(1, 3),
    )
    return text, CellCoord(r, c)


def make_dataset(
    n_tables: int,
    n_statements: int,
    seed: int,
    neutral_frac: float = 0.0,
    prefix: str = "",
) -> Dataset:
    """Tables ``{prefix}t000..`` and statements ``{prefix}s0000..`` with gold labels."""
    rng = random.Random(seed)
    tables = [make_table(f"{prefix}t{i:03d}", rng, rng.randint(3, 5), rng.randint(3, 5)) for i in range(n_tables)]
    statements = []
    for k in range(n_statements):
        t = tables[k % n_tables]
        roll = rng.random()
        if roll < neutral_frac:
            gold, templates = Label.NEUTRAL, _NEUTRAL
        elif rng.random() < 0.6:
            gold, templates = Label.ENTAILED, _ENTAILED
        else:
            gold, templates = Label.REFUTED, _REFUTED
        text, _ = _fill(rng.choice(templates), t, rng)
        statements.append(Statement(f"{prefix}s{k:04d}", t.id, text, gold))
    return Dataset(tables, statements)


def make_evidence(d: Dataset, n_models: int, seed: int, accuracy: float = 0.8) -> list[EvidencePrediction]:
    """Noisy ensemble outputs: each model mostly gets the label and one evidence cell right."""
    rng = random.Random(seed)
    out = []
    for s in d.statements:
        if s.gold not in (Label.ENTAILED, Label.REFUTED):
            continue
        t = d.table_of(s)
        anchor = CellCoord(rng.randrange(t.n_rows), rng.randrange(1, t.n_cols))
        other = Label.REFUTED if s.gold is Label.ENTAILED else Label.ENTAILED
        for m in range(n_models):
            label = s.gold if rng.random() < accuracy else other
            cells = {CellCoord(anchor.row, 0)}
            if rng.random() < accuracy:
                cells.add(anchor)
            if rng.random() < 0.3:
                cells.add(CellCoord(rng.randrange(t.n_rows), rng.randrange(t.n_cols)))
            out.append(EvidencePrediction(s.id, f"qa{m}", label, frozenset(cells)))
    return out


def random_labels(n: int, rng: random.Random, choices: Sequence[Label] = tuple(Label)) -> list[Label]:
    return [rng.choice(list(choices)) for _ in range(n)]
