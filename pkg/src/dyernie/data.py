"""Quadruple datasets: TSV ingestion, vocabularies, reciprocal augmentation,
negative sampling and timestamp scaling.

Quadruple arrays are ``int64`` arrays of shape ``(N, 4)`` with columns
``(subject, predicate, object, timestamp)``.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA = ("subject", "predicate", "object", "timestamp")


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True)
class RawFact:
    subject: str
    predicate: str
    object: str
    timestamp: object  # datetime.date or int


def parse_timestamp(text: str):
    """ISO-8601 date or integer literal."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        raise DataError(f"timestamp {text!r} is neither an ISO date nor an integer") from None


def load_tsv(path, schema=SCHEMA) -> list[RawFact]:
    """Read ``subject<TAB>predicate<TAB>object<TAB>timestamp`` lines.

    ``schema`` names the column order; extra trailing columns are ignored.
    """
    if sorted(schema) != sorted(SCHEMA):
        raise ValueError(f"schema must be a permutation of {SCHEMA}")
    cols = [schema.index(name) for name in SCHEMA]
    facts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
            s, p, o, t = (fields[c].strip() for c in cols)
            try:
                ts = parse_timestamp(t)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            facts.append(RawFact(s, p, o, ts))
    if not facts:
        raise DataError(f"{path}: no facts")
    return facts


class Vocab:
    """Bidirectional label <-> index map."""

    def __init__(self, labels):
        self.labels = list(labels)
        self.index = {label: i for i, label in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate labels in vocabulary")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label):
        return self.index[label]

    def __contains__(self, label):
        return label in self.index

    def label(self, i: int) -> str:
        return self.labels[i]

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.labels == other.labels

    def save(self, path):
        Path(path).write_text("".join(f"{label}\n" for label in self.labels), encoding="utf-8")

    @classmethod
    def load(cls, path):
        text = Path(path).read_text(encoding="utf-8")
        return cls(text.split("\n")[:-1] if text else [])


@dataclass(frozen=True)
class TimeScale:
    mode: str = "normalized"
    denom: float = 1.0

    def __post_init__(self):
        if self.mode not in ("normalized", "raw"):
            raise ValueError(f"unknown time scale mode {self.mode!r}")

    @classmethod
    def for_timestamps(cls, num_timestamps: int, mode: str = "normalized") -> "TimeScale":
        return cls(mode, float(max(num_timestamps - 1, 1)) if mode == "normalized" else 1.0)


def time_value(t, scale: TimeScale):
    """Real time coordinate fed to the entity dynamics."""
    t = np.asarray(t, dtype=np.float64)
    return t / scale.denom if scale.mode == "normalized" else t


@dataclass
class Dataset:
    entities: Vocab
    predicates: Vocab
    timestamps: Vocab
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    _filters: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_raw_predicates(self) -> int:
        return len(self.predicates)

    @property
    def num_timestamps(self) -> int:
        return len(self.timestamps)

    def split(self, name: str) -> np.ndarray:
        return {"train": self.train, "valid": self.valid, "test": self.test}[name]

    def summary(self) -> dict:
        n = {k: int(len(self.split(k))) for k in ("train", "valid", "test")}
        return {
            "entities": self.num_entities,
            "predicates": self.num_raw_predicates,
            "timestamps": self.num_timestamps,
            "facts": sum(n.values()),
            "train": n["train"],
            "valid": n["valid"],
            "test": n["test"],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    def to_tsv(self, directory) -> dict:
        """Write non-empty splits as labelled TSVs; returns ``{split: path}``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name in ("train", "valid", "test"):
            quads = self.split(name)
            if len(quads) == 0:
                continue
            path = directory / f"{name}.tsv"
            with open(path, "w", encoding="utf-8") as fh:
                for s, p, o, t in quads.tolist():
                    fh.write(f"{self.entities.labels[s]}\t{self.predicates.labels[p]}\t"
                             f"{self.entities.labels[o]}\t{self.timestamps.labels[t]}\n")
            paths[name] = path
        return paths

    def all_quads(self, reciprocal: bool = True) -> np.ndarray:
        quads = np.concatenate([self.train, self.valid, self.test])
        return augment_reciprocal(quads, self.num_raw_predicates) if reciprocal else quads


def build_dataset(train, valid=(), test=(), vocabs=None) -> Dataset:
    """Encode raw facts; vocabularies cover the union of all splits.

    Entities and predicates are indexed by first appearance (train, then
    valid, then test); timestamps are sorted chronologically. With
    ``vocabs`` (``{"entities", "predicates", "timestamps"}`` -> Vocab, e.g.
    from a checkpoint) those indices are used instead and unknown labels
    are an error.
    """
    splits = [list(train), list(valid), list(test)]
    if vocabs is not None:
        ents, preds = vocabs["entities"].index, vocabs["predicates"].index
        t_index = {parse_timestamp(label): i for i, label in enumerate(vocabs["timestamps"].labels)}
        for facts in splits:
            for f in facts:
                for label, table, what in ((f.subject, ents, "entity"), (f.object, ents, "entity"),
                                           (f.predicate, preds, "predicate"), (f.timestamp, t_index, "timestamp")):
                    if label not in table:
                        raise DataError(f"unknown {what} {str(label)!r}")
        ordered = list(t_index)
    else:
        ents, preds, times = {}, {}, set()
        for facts in splits:
            for f in facts:
                ents.setdefault(f.subject, len(ents))
                ents.setdefault(f.object, len(ents))
                preds.setdefault(f.predicate, len(preds))
                times.add(f.timestamp)
        kinds = {type(t) for t in times}
        if len(kinds) > 1:
            raise DataError("mixed date and integer timestamps")
        ordered = sorted(times)
        t_index = {t: i for i, t in enumerate(ordered)}

    def encode(facts):
        arr = np.array(
            [(ents[f.subject], preds[f.predicate], ents[f.object], t_index[f.timestamp]) for f in facts],
            dtype=np.int64,
        )
        return arr.reshape(-1, 4)

    return Dataset(
        entities=Vocab(ents),
        predicates=Vocab(preds),
        timestamps=Vocab(str(t) for t in ordered),
        train=encode(splits[0]),
        valid=encode(splits[1]),
        test=encode(splits[2]),
    )


def load_dataset(train_path, valid_path=None, test_path=None, vocabs=None) -> Dataset:
    return build_dataset(
        load_tsv(train_path),
        load_tsv(valid_path) if valid_path else (),
        load_tsv(test_path) if test_path else (),
        vocabs=vocabs,
    )


def from_arrays(train, valid, test, num_entities, num_predicates, num_timestamps) -> Dataset:
    """Dataset over already-encoded quadruples with synthetic labels."""
    return Dataset(
        entities=Vocab(f"e{i}" for i in range(num_entities)),
        predicates=Vocab(f"r{i}" for i in range(num_predicates)),
        timestamps=Vocab(str(i) for i in range(num_timestamps)),
        train=np.asarray(train, dtype=np.int64).reshape(-1, 4),
        valid=np.asarray(valid, dtype=np.int64).reshape(-1, 4),
        test=np.asarray(test, dtype=np.int64).reshape(-1, 4),
    )


def reciprocal(p, num_raw_predicates: int):
    """Index of the inverse predicate (an involution on ``0..2P-1``)."""
    return (np.asarray(p) + num_raw_predicates) % (2 * num_raw_predicates)


def augment_reciprocal(quads, num_raw_predicates: int) -> np.ndarray:
    """Append ``(o, p + P, s, t)`` for every ``(s, p, o, t)``."""
    quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    inv = quads[:, [2, 1, 0, 3]].copy()
    inv[:, 1] = reciprocal(inv[:, 1], num_raw_predicates)
    return np.concatenate([quads, inv])


def sample_negatives(quads, n: int, num_entities: int, rng: np.random.Generator) -> np.ndarray:
    """Object corruptions drawn uniformly from all entities but the gold one.

    ``quads`` may be a single quadruple or an ``(B, 4)`` array; returns an
    array of shape ``(B, n, 4)`` (``(n, 4)`` for a single quadruple).
    """
    if num_entities < 2:
        raise DataError("negative sampling needs at least two entities")
    if n < 1:
        raise ValueError("n must be >= 1")
    quads = np.asarray(quads, dtype=np.int64)
    single = quads.ndim == 1
    quads = quads.reshape(-1, 4)
    objs = corrupt_objects(quads[:, 2], n, num_entities, rng)
    out = np.repeat(quads[:, None, :], n, axis=1)
    out[:, :, 2] = objs
    return out[0] if single else out


def corrupt_objects(gold, n: int, num_entities: int, rng: np.random.Generator) -> np.ndarray:
    """``(B, n)`` entity indices uniform over ``E \\ {gold}``."""
    gold = np.asarray(gold, dtype=np.int64)
    draws = rng.integers(0, num_entities - 1, size=(len(gold), n))
    return draws + (draws >= gold[:, None])


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a tuple of integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))
