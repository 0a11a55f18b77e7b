"""Command-line entry point.

Every subcommand wraps one pipeline step. Options can also come from an INI
run config (``--config run.ini``); keys are the long option names with
dashes replaced by underscores, in any section, and command-line flags
override them. Exit status: 0 ok, 2 configuration error, 3 data error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .cascade import CascadeConfig, DEFAULT_TAU, predict_all, sweep, load_predictions, write_predictions
from .data_model import validate_dataset, Dataset
from .errors import ConfigError, DataError, ParseError
from .ingest import (
    Stage,
    atomic_write_text,
    load_dataset,
    load_evidence_predictions,
    load_scoreset,
    parse_dataset_records,
    write_dataset,
    write_scoreset,
)
from .metrics import (
    Aggregation,
    fmt_pct,
    evaluate,
    format_confusion,
    stage1_confusion,
    stage2_confusion,
)
from .scoring import ScorerKind, ScorerSpec, check_coverage, run_scorer
from .slices import format_slices, keyword_probe, load_keywords, stage_slice_views
from .synth import (
    build_stage1_trainset,
    gen_column_removal_neutrals,
    neutrals_from_dataset,
    neutrals_to_dataset,
    pair_random_neutrals,
)

DEFAULTS = {
    "seed": 0,
    "tau1": DEFAULT_TAU,
    "tau2": DEFAULT_TAU,
    "agg": Aggregation.PER_TABLE.value,
    "kind": "random",
    "scorer": "overlap",
    "stage1_logits": [],
    "stage2_logits": [],
    "evidence": [],
    "probe": [],
    "negative": False,
}
LIST_KEYS = {"stage1_logits", "stage2_logits", "evidence", "probe"}
FLOAT_KEYS = {"tau1", "tau2"}
INT_KEYS = {"seed", "n", "ensemble_size", "stage"}


@dataclass
class RunConfig:
    command: str
    dataset: Optional[Path] = None
    out: Optional[Path] = None
    seed: int = 0
    tau1: float = DEFAULT_TAU
    tau2: float = DEFAULT_TAU
    agg: str = Aggregation.PER_TABLE.value
    stage1_logits: list[Path] = field(default_factory=list)
    stage2_logits: list[Path] = field(default_factory=list)
    ensemble_size: Optional[int] = None
    keywords: Optional[Path] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        for p in [self.dataset, self.keywords, *self.stage1_logits, *self.stage2_logits]:
            if p is not None and not Path(p).exists():
                raise ConfigError(f"path does not exist: {p}")
        if self.ensemble_size is not None:
            if self.ensemble_size < 1:
                raise ConfigError("ensemble_size must be >= 1")
            for stage, paths in (("stage1", self.stage1_logits), ("stage2", self.stage2_logits)):
                if paths and len(paths) != self.ensemble_size:
                    raise ConfigError(
                        f"{stage}: expected {self.ensemble_size} logits files, got {len(paths)}"
                    )


def _read_config(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            values[key.replace("-", "_")] = raw
    return values


def _coerce(key: str, raw: str):
    try:
        if key in LIST_KEYS:
            return raw.split()
        if key in FLOAT_KEYS:
            return float(raw)
        if key in INT_KEYS:
            return int(raw)
        if key == "negative":
            return raw.strip().lower() in ("1", "true", "yes", "on")
    except ValueError:
        raise ConfigError(f"config key {key!r}: bad value {raw!r}") from None
    return raw


def _merge(args: argparse.Namespace, known_keys: set[str]) -> argparse.Namespace:
    cfg = _read_config(args.config) if args.config else {}
    unknown = sorted(set(cfg) - known_keys)
    if unknown:
        raise ConfigError(f"unknown config key(s) {unknown}")
    merged = vars(args).copy()
    for key, raw in cfg.items():
        if key in merged and merged[key] is None:
            merged[key] = _coerce(key, raw)
    for key, value in DEFAULTS.items():
        if key in merged and merged[key] is None:
            merged[key] = value
    return argparse.Namespace(**merged)


def _run_config(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    rc = RunConfig(
        command=args.command,
        dataset=Path(ns["dataset"]) if ns.get("dataset") else None,
        out=Path(ns["out"]) if ns.get("out") else None,
        seed=ns.get("seed") or 0,
        tau1=ns.get("tau1", DEFAULT_TAU),
        tau2=ns.get("tau2", DEFAULT_TAU),
        agg=ns.get("agg", Aggregation.PER_TABLE.value),
        stage1_logits=[Path(p) for p in ns.get("stage1_logits") or []],
        stage2_logits=[Path(p) for p in ns.get("stage2_logits") or []],
        ensemble_size=ns.get("ensemble_size"),
        keywords=Path(ns["keywords"]) if ns.get("keywords") else None,
        extra=ns,
    )
    rc.validate()
    return rc


def _require(args: argparse.Namespace, *keys: str) -> None:
    missing = [k for k in keys if not getattr(args, k, None)]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


# -- commands --------------------------------------------------------------------


def cmd_validate(args, rc: RunConfig) -> int:
    tables, statements, problems = parse_dataset_records(rc.dataset)
    if problems:
        raise ParseError(str(rc.dataset), problems)
    d = Dataset(tables, statements)
    violations = validate_dataset(d)
    for v in violations:
        print(v)
    if violations:
        print(f"INVALID: {len(violations)} violation(s)", file=sys.stderr)
        return 3
    print(f"OK: {len(d.tables)} tables, {len(d.statements)} statements")
    return 0


def cmd_synth(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    if args.kind == "random":
        n = args.n if args.n is not None else len(d)
        examples = pair_random_neutrals(d, n, rc.seed)
    else:
        if not args.evidence:
            raise ConfigError("column-removal needs --evidence files")
        evidence = [p for path in args.evidence for p in load_evidence_predictions(path, d)]
        examples = gen_column_removal_neutrals(d, evidence)
    out = neutrals_to_dataset(examples, d)
    write_dataset(out, rc.out)
    print(f"wrote {len(examples)} {args.kind} neutrals to {rc.out}")
    return 0


def cmd_trainset(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    if args.pool:
        pool = neutrals_from_dataset(load_dataset(args.pool))
    elif args.evidence:
        evidence = [p for path in args.evidence for p in load_evidence_predictions(path, d)]
        pool = gen_column_removal_neutrals(d, evidence)
    else:
        raise ConfigError("stage1-trainset needs --pool or --evidence")
    train = build_stage1_trainset(d, pool, rc.seed)
    write_dataset(train, rc.out)
    n_neutral = sum(s.gold is not None and s.gold.is_neutral for s in train.statements)
    print(
        f"wrote {len(train)} statements ({len(train) - n_neutral} non-neutral, "
        f"{n_neutral} neutral) to {rc.out}"
    )
    return 0


def cmd_score(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    kind = ScorerKind(args.scorer)
    spec = ScorerSpec(
        kind,
        Stage(args.stage),
        Path(args.logits) if args.logits else None,
        positive=not args.negative,
        model_id=args.model_id,
    )
    ss = run_scorer(spec, d)
    check_coverage(ss, d)
    write_scoreset(ss, rc.out)
    print(f"wrote {len(ss)} stage-{int(ss.stage)} logits ({spec.name}) to {rc.out}")
    return 0


def _score_sets(rc: RunConfig, d: Dataset):
    if not rc.stage1_logits or not rc.stage2_logits:
        raise ConfigError("need --stage1-logits and --stage2-logits")
    s1 = [load_scoreset(p, Stage.STAGE1) for p in rc.stage1_logits]
    s2 = [load_scoreset(p, Stage.STAGE2) for p in rc.stage2_logits]
    for ss in s1 + s2:
        check_coverage(ss, d)
    return s1, s2


def cmd_predict(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    s1, s2 = _score_sets(rc, d)
    preds = predict_all(s1, s2, CascadeConfig(rc.tau1, rc.tau2), d)
    write_predictions(preds, rc.out)
    print(f"wrote {len(preds)} predictions to {rc.out}")
    return 0


def _load_labels(path):
    return {p.statement_id: p.label for p in load_predictions(path)}


def cmd_evaluate(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    labels = _load_labels(args.predictions)
    report = evaluate(d, labels, Aggregation(rc.agg))
    rows = ["table_id\tn_2way\tf1_2way\tf1_3way"]
    records = []
    for tid, ts in report.per_table.items():
        rows.append(
            f"{tid}\t{ts.counted_2way}\t"
            f"{fmt_pct(None if ts.f1_2way is None else 100 * ts.f1_2way)}\t{fmt_pct(100 * ts.f1_3way)}"
        )
        records.append(
            {"table_id": tid, "f1_2way": ts.f1_2way, "f1_3way": ts.f1_3way, "counted_2way": ts.counted_2way}
        )
    summary = f"aggregate ({report.aggregation.value})\t-\t{fmt_pct(report.aggregate_2way)}\t{fmt_pct(report.aggregate_3way)}"
    rows.append(summary)
    records.append(
        {
            "aggregation": report.aggregation.value,
            "aggregate_2way": report.aggregate_2way,
            "aggregate_3way": report.aggregate_3way,
        }
    )
    gold = [s.gold for s in d.statements]
    pred = [labels[s.id] for s in d.statements]
    conf = (
        "# stage 1\n" + format_confusion(stage1_confusion(gold, pred))
        + "# stage 2\n" + format_confusion(stage2_confusion(gold, pred))
    )
    table = "\n".join(rows) + "\n"
    if rc.out is not None:
        atomic_write_text(rc.out / "eval.tsv", table)
        atomic_write_text(rc.out / "eval.jsonl", "".join(json.dumps(r) + "\n" for r in records))
        atomic_write_text(rc.out / "confusion.tsv", conf)
    print(f"f1_2way={fmt_pct(report.aggregate_2way)} f1_3way={fmt_pct(report.aggregate_3way)}")
    if rc.out is None:
        sys.stdout.write(table + conf)
    return 0


def cmd_slices(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    labels = _load_labels(args.predictions)
    kg = load_keywords(rc.keywords)
    views = stage_slice_views(d, labels, kg)
    parts = []
    for name, rows in views.items():
        parts.append(f"# {name}\n" + format_slices(rows))
    if args.probe:
        lines = ["word\tsize\tacc\ter"]
        for word in args.probe:
            size, acc, er = keyword_probe(d, labels, word)
            lines.append(f"{word}\t{fmt_pct(size, 1)}\t{fmt_pct(acc, 1)}\t{fmt_pct(er, 1)}")
        parts.append("# probes\n" + "\n".join(lines) + "\n")
    text = "".join(parts)
    if rc.out is not None:
        atomic_write_text(rc.out / "slices.tsv", text)
        print(f"wrote slice report to {rc.out / 'slices.tsv'}")
    else:
        sys.stdout.write(text)
    return 0


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_grid(args) -> list[tuple[float, float]]:
    if args.grid:
        points = []
        for chunk in args.grid.split(";"):
            xs = _floats(chunk)
            if len(xs) != 2:
                raise ConfigError(f"grid point {chunk!r} must be 'tau1,tau2'")
            points.append((xs[0], xs[1]))
        return points
    if args.tau1_grid and args.tau2_grid:
        return list(itertools.product(_floats(args.tau1_grid), _floats(args.tau2_grid)))
    raise ConfigError("sweep needs --grid or both --tau1-grid and --tau2-grid")


def cmd_sweep(args, rc: RunConfig) -> int:
    d = load_dataset(rc.dataset)
    s1, s2 = _score_sets(rc, d)
    rows = sweep(s1, s2, d, parse_grid(args), Aggregation(rc.agg))
    lines = ["tau1\ttau2\tf1_2way\tf1_3way"]
    for r in rows:
        lines.append(f"{r.tau1!r}\t{r.tau2!r}\t{fmt_pct(r.f1_2way)}\t{fmt_pct(r.f1_3way)}")
    _emit("\n".join(lines) + "\n", rc.out)
    return 0


# -- parser ----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, out_help: Optional[str]) -> None:
    p.add_argument("--config", help="INI run config; flags override its values")
    p.add_argument("--dataset", help="dataset file (.tvd)")
    if out_help:
        p.add_argument("--out", help=out_help)


def _logits(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stage1-logits", nargs="+", metavar="PATH", help="Stage-1 logits files, one per model")
    p.add_argument("--stage2-logits", nargs="+", metavar="PATH", help="Stage-2 logits files, one per model")
    p.add_argument("--ensemble-size", type=int, help="expected number of logits files per stage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabverify", description="Two-stage table entailment pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check a dataset file against all invariants")
    _common(p, None)
    p.set_defaults(func=cmd_validate, required=("dataset",))

    p = sub.add_parser("synth-neutrals", help="generate artificial neutral statements")
    _common(p, "output dataset (.tvd)")
    p.add_argument("--kind", choices=["random", "column-removal"], help="neutral source (default random)")
    p.add_argument("--n", type=int, help="number of random pairings (default: dataset size)")
    p.add_argument("--evidence", nargs="+", metavar="PATH", help="evidence prediction files (.evd)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.set_defaults(func=cmd_synth, required=("dataset", "out"))

    p = sub.add_parser("stage1-trainset", help="build the balanced Stage-1 training set")
    _common(p, "output dataset (.tvd)")
    p.add_argument("--pool", help="column-removal neutrals from synth-neutrals (.tvd)")
    p.add_argument("--evidence", nargs="+", metavar="PATH", help="build the pool from evidence files instead")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.set_defaults(func=cmd_trainset, required=("dataset", "out"))

    p = sub.add_parser("score", help="write one model's logits for one stage")
    _common(p, "output logits file (.logits)")
    p.add_argument("--stage", type=int, choices=[1, 2], help="cascade stage")
    p.add_argument("--scorer", choices=[k.value for k in ScorerKind], help="scorer kind (default overlap)")
    p.add_argument("--negative", action="store_const", const=True, help="majority scorer emits -1e6")
    p.add_argument("--logits", help="input logits file for the external scorer")
    p.add_argument("--model-id", help="model id recorded for the scores")
    p.set_defaults(func=cmd_score, required=("dataset", "out", "stage"))

    p = sub.add_parser("predict", help="median-ensemble the logits and run the cascade")
    _common(p, "output predictions file (.pred)")
    _logits(p)
    p.add_argument("--tau1", type=float, help=f"Stage-1 threshold (default {DEFAULT_TAU})")
    p.add_argument("--tau2", type=float, help=f"Stage-2 threshold (default {DEFAULT_TAU})")
    p.set_defaults(func=cmd_predict, required=("dataset", "out"))

    p = sub.add_parser("evaluate", help="per-table micro F1 and confusion matrices")
    _common(p, "output directory for eval.tsv, eval.jsonl and confusion.tsv")
    p.add_argument("--predictions", help="predictions file (.pred)")
    p.add_argument("--agg", choices=[a.value for a in Aggregation], help="cross-table aggregation")
    p.set_defaults(func=cmd_evaluate, required=("dataset", "predictions"))

    p = sub.add_parser("slices", help="keyword-group accuracy / error-rate breakdown")
    _common(p, "output directory for slices.tsv")
    p.add_argument("--predictions", help="predictions file (.pred)")
    p.add_argument("--keywords", help="keyword groups file (default: packaged groups.kw)")
    p.add_argument("--probe", nargs="+", metavar="WORD", help="single-word probes, e.g. 'different'")
    p.set_defaults(func=cmd_slices, required=("dataset", "predictions"))

    p = sub.add_parser("sweep", help="evaluate a grid of (tau1, tau2) thresholds")
    _common(p, "output table (.tsv); stdout when omitted")
    _logits(p)
    p.add_argument("--grid", help="points as 't1,t2;t1,t2;...'")
    p.add_argument("--tau1-grid", help="comma-separated tau1 values (crossed with --tau2-grid)")
    p.add_argument("--tau2-grid", help="comma-separated tau2 values")
    p.add_argument("--agg", choices=[a.value for a in Aggregation], help="cross-table aggregation")
    p.set_defaults(func=cmd_sweep, required=("dataset",))
    return parser


def _all_option_keys(parser: argparse.ArgumentParser) -> set[str]:
    keys: set[str] = set()
    for action in parser._subparsers._group_actions:  # type: ignore[union-attr]
        for sp in action.choices.values():
            keys.update(a.dest for a in sp._actions if a.dest not in ("help", "config"))
    return keys - {"func", "required", "command"}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge(args, _all_option_keys(parser))
        _require(args, *args.required)
        rc = _run_config(args)
        return args.func(args, rc)
    except (ConfigError, DataError, ValueError, KeyError, OSError) as e:
        category, code = _categorize(e)
        print(f"tabverify: error[{category}]: {e}", file=sys.stderr)
        return code


def _categorize(e: Exception) -> tuple[str, int]:
    if isinstance(e, ConfigError):
        return "config", 2
    if isinstance(e, OSError):
        return "io", 4
    return "data", 3


if __name__ == "__main__":
    sys.exit(main())
