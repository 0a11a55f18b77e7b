"""Exit criteria for the package.

Run with ``pytest tests/test_acceptance.py``; a one-line PASS/FAIL summary per
criterion is printed at the end of the session.
"""

import filecmp
import random
import statistics
import time
from fractions import Fraction

import pytest

from oracles import brute_f1
from tabverify.cascade import CascadeConfig, iqr_half, median, predict_all, sweep, threshold_decide
from tabverify.cli import main
from tabverify.data_model import Dataset, Label, Statement, Table, validate_dataset
from tabverify.fixtures import make_dataset, make_evidence
from tabverify.ingest import ScoreSet, Stage, dataset_to_text, load_dataset, write_dataset, write_evidence_predictions
from tabverify.metrics import (
    Mode,
    evaluate,
    fmt_pct,
    per_table_f1,
    precision_recall,
    stage1_confusion,
    stage2_confusion,
)
from tabverify.slices import er_contribution
from tabverify.synth import gen_column_removal_neutrals, neutrals_to_dataset, pair_random_neutrals

E, R, N = Label.ENTAILED, Label.REFUTED, Label.NEUTRAL
criterion = pytest.mark.criterion


def _expand(matrix, classes):
    gold, pred = [], []
    for i, row in enumerate(matrix):
        for j, n in enumerate(row):
            gold += [classes[i]] * n
            pred += [classes[j]] * n
    return gold, pred


# -- AC1 ---------------------------------------------------------------------------


@criterion(1, "confusion fixtures reproduce published precision/recall to 1 decimal, < 1 s")
def test_ac1_confusion_fixtures():
    start = time.perf_counter()
    gold, pred = _expand([[449, 14], [58, 35]], [E, N])
    m1 = stage1_confusion(gold, pred)
    gold, pred = _expand([[153, 53], [36, 207]], [R, E])
    m2 = stage2_confusion(gold, pred)
    assert m1.counts == ((449, 14), (58, 35))
    assert m2.counts == ((153, 53), (36, 207))

    def rendered(m):
        prs = precision_recall(m)
        return [fmt_pct(p.recall, 1) for p in prs], [fmt_pct(p.precision, 1) for p in prs]

    assert rendered(m1) == (["97.0", "37.6"], ["88.6", "71.4"])
    assert rendered(m2) == (["74.3", "85.2"], ["81.0", "79.6"])
    assert time.perf_counter() - start < 1.0


# -- AC2 ---------------------------------------------------------------------------

# (group, size %, acc %, published ER %)
SLICE_TABLES = {
    "overall": [
        ("Overall", 100.0, 71.0, 29.0),
        ("Superlatives", 15.8, 73.9, 4.1),
        ("Aggregations", 13.8, 61.0, 5.4),
        ("Comparatives", 12.2, 58.8, 5.0),
        ("Negations", 3.1, 82.4, 0.5),
        ("Multiple of the above", 5.9, 72.7, 1.6),
        ("Other", 49.1, 75.1, 12.2),
    ],
    "stage1": [
        ("Overall", 100.0, 87.1, 12.9),
        ("Superlatives", 15.8, 90.9, 1.4),
        ("Aggregations", 13.8, 88.3, 1.6),
        ("Comparatives", 12.2, 80.9, 2.3),
        ("Negations", 3.1, 88.2, 0.4),
        ("Multiple of the above", 5.9, 93.9, 0.4),
        ("Other", 49.1, 86.1, 6.8),
    ],
    "stage2": [
        ("Overall", 100.0, 80.2, 19.8),
        ("Superlatives", 16.9, 80.3, 3.3),
        ("Aggregations", 14.0, 66.7, 4.7),
        ("Comparatives", 11.6, 71.2, 3.3),
        ("Negations", 2.4, 90.9, 0.2),
        ("Multiple of the above", 6.2, 75.0, 1.6),
        ("Other", 48.8, 86.3, 6.7),
    ],
}


@criterion(2, "ER formula reproduces every published slice ER cell within 0.1, < 1 s")
def test_ac2_er_decomposition_fixtures():
    start = time.perf_counter()
    for name, rows in SLICE_TABLES.items():
        for group, size, acc, er in rows:
            assert abs(er_contribution(size, acc) - er) <= 0.1 + 1e-9, (name, group)
        overall = rows[0]
        total = sum(er_contribution(size, acc) for _, size, acc, _ in rows[1:])
        assert abs(total - overall[3]) <= 0.1 + 1e-9, name
        assert abs(sum(size for _, size, _, _ in rows[1:]) - 100.0) <= 0.1 + 1e-9, name
    assert time.perf_counter() - start < 1.0


# -- AC3 ---------------------------------------------------------------------------


@criterion(3, "stage1-trainset on 4,506 statements emits 9,012 at exact 50/50, deterministic, < 10 s")
def test_ac3_stage1_trainset(tmp_path):
    d = make_dataset(981, 4506, seed=2021, prefix="x")
    assert len(d) == 4506 and validate_dataset(d) == []
    write_dataset(d, tmp_path / "train.tvd")
    write_evidence_predictions(make_evidence(d, 5, seed=7), tmp_path / "train.evd")
    base = ["--dataset", tmp_path / "train.tvd"]
    assert main([str(a) for a in ["synth-neutrals", *base, "--kind", "column-removal",
                                  "--evidence", tmp_path / "train.evd", "--out", tmp_path / "pool.tvd"]]) == 0
    assert len(load_dataset(tmp_path / "pool.tvd")) > 0

    outs = []
    for k in range(2):
        out = tmp_path / f"stage1_{k}.tvd"
        start = time.perf_counter()
        code = main([str(a) for a in ["stage1-trainset", *base, "--pool", tmp_path / "pool.tvd",
                                      "--seed", 13, "--out", out]])
        elapsed = time.perf_counter() - start
        assert code == 0 and elapsed < 10.0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    train = load_dataset(outs[0])
    neutral = sum(s.gold is N for s in train.statements)
    assert len(train) == 9012
    assert neutral == 4506 and len(train) - neutral == 4506


# -- AC4 ---------------------------------------------------------------------------


def _random_instance(rng):
    tables = []
    for _ in range(rng.randint(1, 4)):
        n = rng.randint(1, 8)
        gold = [rng.choice([E, R, N]) for _ in range(n)]
        pred = [rng.choice([E, R, N]) for _ in range(n)]
        tables.append((gold, pred))
    return tables


@criterion(4, "per_table_f1 equals a brute-force TP/FP/FN enumerator on 1,000 random instances")
def test_ac4_metric_oracle_equivalence():
    rng = random.Random(4)
    checked = 0
    for _ in range(1000):
        for gold, pred in _random_instance(rng):
            for mode, two in ((Mode.THREE_WAY, False), (Mode.TWO_WAY, True)):
                want = brute_f1(gold, pred, two)
                got = per_table_f1(gold, pred, mode)
                if want is None:
                    assert got is None
                else:
                    assert got == float(want) or abs(got - float(want)) <= 1e-12
                    checked += 1
    assert checked > 1000


# -- AC5 ---------------------------------------------------------------------------


def _random_dataset(rng, n_tables=None):
    n_tables = n_tables or rng.randint(1, 6)
    tables = [Table(f"t{i}", "", ("c",), ()) for i in range(n_tables)]
    statements = []
    for i in range(n_tables):
        for j in range(rng.randint(1, 10)):
            statements.append(Statement(f"t{i}s{j}", f"t{i}", "x", rng.choice([E, R, N])))
    return Dataset(tables, statements)


@criterion(5, "majority baselines equal mean per-table class fractions within 1e-12 (100 datasets)")
def test_ac5_majority_baseline_property():
    rng = random.Random(5)
    for _ in range(100):
        d = _random_dataset(rng)
        groups = d.by_table().values()
        counts = {l: sum(s.gold is l for s in d.statements) for l in Label}
        majority = max(Label, key=lambda l: (counts[l], l.value))
        rep = evaluate(d, {s.id: majority for s in d.statements})
        want3 = sum(Fraction(sum(s.gold is majority for s in g), len(g)) for g in groups) / len(groups)
        assert abs(rep.aggregate_3way - 100 * float(want3)) <= 1e-12

        rep = evaluate(d, {s.id: E for s in d.statements})
        fracs = []
        for g in groups:
            non_neutral = [s for s in g if s.gold is not N]
            if non_neutral:
                fracs.append(Fraction(sum(s.gold is E for s in non_neutral), len(non_neutral)))
        want2 = sum(fracs) / len(fracs) if fracs else Fraction(0)
        assert abs(rep.aggregate_2way - 100 * float(want2)) <= 1e-12


# -- AC6 ---------------------------------------------------------------------------


def _random_sets(d, rng, n_models, stage):
    return [
        ScoreSet(stage, f"m{k}", {s.id: rng.uniform(-10, 10) for s in d.statements}) for k in range(n_models)
    ]


@criterion(6, "strict thresholds, monotone counts over 100-point sweeps, tau1=+1e9 gives 2-way F1 0")
def test_ac6_cascade_threshold_properties():
    assert threshold_decide(4.0, 4.0) is False
    assert threshold_decide(4.0 + 1e-12, 4.0) is True
    cfg = CascadeConfig(4.0, 4.0)
    assert predict_all(
        [ScoreSet(Stage.STAGE1, "a", {"s": 4.0})], [ScoreSet(Stage.STAGE2, "b", {"s": 9.0})], cfg,
        Dataset([Table("t", "", ("c",), ())], [Statement("s", "t", "x", E)]),
    )[0].label is N

    rng = random.Random(6)
    d = _random_dataset(rng, n_tables=6)
    s1, s2 = _random_sets(d, rng, 5, Stage.STAGE1), _random_sets(d, rng, 5, Stage.STAGE2)
    taus = [-12 + 24 * k / 99 for k in range(100)]

    neutral_counts = [
        sum(p.label is N for p in predict_all(s1, s2, CascadeConfig(t, 0.0), d)) for t in taus
    ]
    assert all(a <= b for a, b in zip(neutral_counts, neutral_counts[1:]))
    assert neutral_counts[0] == 0 and neutral_counts[-1] == len(d)

    non_entailed = [
        sum(p.label is not E for p in predict_all(s1, s2, CascadeConfig(0.0, t), d)) for t in taus
    ]
    assert all(a <= b for a, b in zip(non_entailed, non_entailed[1:]))

    (row,) = sweep(s1, s2, d, [(1e9, 0.0)])
    assert row.f1_2way == 0.0


# -- AC7 ---------------------------------------------------------------------------


@criterion(7, "median/IQR ensemble properties and permutation/duplication invariance of predict_all")
def test_ac7_ensemble_properties():
    rng = random.Random(7)
    for _ in range(200):
        xs = [rng.uniform(-50, 50) for _ in range(5)]
        assert median(xs) == sorted(xs)[2]
        ints = [rng.randint(-100, 100) for _ in range(rng.randint(1, 9))]
        c = rng.randint(-100, 100)
        assert median([x + c for x in ints]) == median(ints) + c
        dyadic = [x / 8 for x in ints]
        assert median([x + 0.25 for x in dyadic]) == median(dyadic) + 0.25
    assert iqr_half([70, 71, 72, 73, 74]) == 1.5

    d = _random_dataset(rng, n_tables=5)
    s1, s2 = _random_sets(d, rng, 5, Stage.STAGE1), _random_sets(d, rng, 5, Stage.STAGE2)
    cfg = CascadeConfig(0.5, -0.5)
    ref = predict_all(s1, s2, cfg, d)
    for _ in range(20):
        p1, p2 = s1[:], s2[:]
        rng.shuffle(p1)
        rng.shuffle(p2)
        assert predict_all(p1, p2, cfg, d) == ref
    assert predict_all(s1 + s1, s2 + s2, cfg, d) == ref
    for p in ref:
        assert p.stage1_logit == statistics.median(ss.scores[p.statement_id] for ss in s1)


# -- AC8 ---------------------------------------------------------------------------


@criterion(8, "synthesis invariants on 100 random datasets; equal seeds give identical bytes")
def test_ac8_synthesis_invariants():
    rng = random.Random(8)
    for k in range(100):
        d = make_dataset(rng.randint(2, 6), rng.randint(4, 40), seed=rng.randrange(10**6))
        evidence = make_evidence(d, rng.choice([3, 4, 5]), seed=k)
        for ex in gen_column_removal_neutrals(d, evidence):
            orig = d.tables[ex.provenance.original_table_id]
            derived, c = ex.derived_table, ex.provenance.removed_col
            assert c >= 1
            assert derived.header[0] == orig.header[0] and derived.column(0) == orig.column(0)
            header = derived.header[:c] + (orig.header[c],) + derived.header[c:]
            rows = tuple(r[:c] + (orig.rows[i][c],) + r[c:] for i, r in enumerate(derived.rows))
            assert (header, rows) == (orig.header, orig.rows)

        seed = rng.randrange(10**6)
        pairs = pair_random_neutrals(d, 25, seed)
        for ex in pairs:
            assert ex.statement.table_id != d.statement(ex.provenance.original_statement_id).table_id
        packed = neutrals_to_dataset(pairs, d)
        assert validate_dataset(packed) == []
        assert dataset_to_text(packed) == dataset_to_text(neutrals_to_dataset(pair_random_neutrals(d, 25, seed), d))


# -- AC9 ---------------------------------------------------------------------------


def _pipeline(demo, out):
    dev, train = demo / "dev.tvd", demo / "train.tvd"
    steps = [
        ["validate", "--dataset", dev],
        ["validate", "--dataset", train],
        ["synth-neutrals", "--dataset", train, "--kind", "column-removal",
         "--evidence", demo / "train.evd", "--out", out / "pool.tvd"],
        ["synth-neutrals", "--dataset", train, "--kind", "random", "--seed", 3, "--out", out / "random.tvd"],
        ["stage1-trainset", "--dataset", train, "--pool", out / "pool.tvd", "--seed", 3,
         "--out", out / "stage1_train.tvd"],
        ["score", "--dataset", dev, "--stage", 1, "--scorer", "overlap", "--out", out / "s1_overlap.logits"],
        ["score", "--dataset", dev, "--stage", 1, "--scorer", "majority", "--out", out / "s1_majority.logits"],
        ["score", "--dataset", dev, "--stage", 2, "--scorer", "overlap", "--out", out / "s2_overlap.logits"],
        ["score", "--dataset", dev, "--stage", 2, "--scorer", "majority", "--out", out / "s2_majority.logits"],
        ["predict", "--dataset", dev, "--stage1-logits", out / "s1_overlap.logits",
         "--stage2-logits", out / "s2_overlap.logits", out / "s2_majority.logits",
         "--tau1", 0, "--tau2", 0, "--out", out / "dev.pred"],
        ["evaluate", "--dataset", dev, "--predictions", out / "dev.pred", "--out", out / "eval"],
        ["slices", "--dataset", dev, "--predictions", out / "dev.pred", "--probe", "different",
         "--out", out / "slices"],
        ["sweep", "--dataset", dev, "--stage1-logits", out / "s1_overlap.logits", out / "s1_majority.logits",
         "--stage2-logits", out / "s2_overlap.logits", "--tau1-grid=-2,0,2", "--tau2-grid=-2,0,2",
         "--out", out / "sweep.tsv"],
    ]
    for argv in steps:
        assert main([str(a) for a in argv]) == 0, argv


def _same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(_same_tree(a / s, b / s) for s in cmp.common_dirs)


@criterion(9, "bundled 5-table/40-statement fixture runs the whole CLI pipeline in < 5 s, deterministically")
def test_ac9_end_to_end_smoke(tmp_path, demo_dir):
    dev = load_dataset(demo_dir / "dev.tvd")
    assert (len(dev.tables), len(dev)) == (5, 40)
    start = time.perf_counter()
    _pipeline(demo_dir, tmp_path / "run1")
    assert time.perf_counter() - start < 5.0
    _pipeline(demo_dir, tmp_path / "run2")
    assert _same_tree(tmp_path / "run1", tmp_path / "run2")
    assert len((tmp_path / "run1" / "sweep.tsv").read_text().splitlines()) == 10
    assert len(load_dataset(tmp_path / "run1" / "stage1_train.tvd")) == 80
