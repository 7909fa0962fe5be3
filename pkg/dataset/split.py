import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from config import Config
from utils.errors import MissingFile, TooFewRecords
from utils.seeding import rng_for

SPLIT_NAME = "split.json"


@dataclass(frozen=True)
class Split:
    train_ids: tuple
    test_ids: tuple

    def to_dict(self):
        return {"train": list(self.train_ids), "test": list(self.test_ids)}

    def subset(self, name):
        if name == "train":
            return set(self.train_ids)
        if name == "test":
            return set(self.test_ids)
        return set(self.train_ids) | set(self.test_ids)


def split_dataset(manifest, ratio=None, seed=0):
    """
    Seeded global shuffle, then the first round(ratio * N) ids train
    (half rounds up). Both id lists keep manifest order.
    """
    ratio = Config.SPLIT_RATIO if ratio is None else float(ratio)
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"split ratio must lie in [0, 1], got {ratio}")
    ids = manifest.ids if hasattr(manifest, "ids") else list(manifest)
    n = len(ids)
    if n < 2:
        raise TooFewRecords(f"need at least 2 records to split, got {n}")
    n_train = int(np.floor(ratio * n + 0.5))
    order = rng_for(seed, "split").permutation(n)
    train = set(order[:n_train].tolist())
    return Split(
        train_ids=tuple(ids[i] for i in range(n) if i in train),
        test_ids=tuple(ids[i] for i in range(n) if i not in train),
    )


def save_split(split, path, provenance=None):
    payload = split.to_dict()
    if provenance is not None:
        payload = {"provenance": provenance, **payload}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_split(path):
    path = Path(path)
    if path.is_dir():
        path = path / SPLIT_NAME
    if not path.exists():
        raise MissingFile(f"split not found: {path}")
    obj = json.loads(path.read_text())
    return Split(tuple(obj["train"]), tuple(obj["test"]))
