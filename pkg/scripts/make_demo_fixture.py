"""Regenerate the bundled demo fixture under src/tabverify/data/demo/."""

from pathlib import Path

from tabverify.fixtures import make_dataset, make_evidence
from tabverify.ingest import write_dataset, write_evidence_predictions

OUT = Path(__file__).resolve().parent.parent / "src" / "tabverify" / "data" / "demo"


def main() -> None:
    train = make_dataset(5, 40, seed=2021, prefix="train-")
    dev = make_dataset(5, 40, seed=9, neutral_frac=0.2, prefix="dev-")
    write_dataset(train, OUT / "train.tvd")
    write_evidence_predictions(make_evidence(train, n_models=5, seed=3), OUT / "train.evd")
    write_dataset(dev, OUT / "dev.tvd")


if __name__ == "__main__":
    main()
