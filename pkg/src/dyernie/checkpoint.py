"""On-disk checkpoints.

A checkpoint directory holds

* ``manifest.json``: format version, signature string, sizes, variants,
  time scale, seed, training state and the vocabulary file names;
* ``params.bin``: little-endian float64 blocks in the order initial,
  velocity, bias_s, bias_o, diag, translation, then amplitude, frequency,
  phase for periodic variants. Rows are in index order with coordinates
  contiguous;
* ``entities.txt``, ``predicates.txt``, ``timestamps.txt``: one label per
  line in index order.

Nothing time-dependent is written, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import TimeScale, Vocab
from .model import BLOCK_ORDER, PERIODIC_BLOCKS, ModelConfig, Params
from .product import Signature

FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    params: Params
    config: ModelConfig
    num_raw_predicates: int
    num_timestamps: int
    seed: int = 0
    epoch: int = 0
    best_valid_mrr: float | None = None
    vocabs: dict = field(default_factory=dict)  # name -> Vocab

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "signature": str(self.config.signature),
            "num_entities": self.params.num_entities,
            "num_raw_predicates": self.num_raw_predicates,
            "num_timestamps": self.num_timestamps,
            "repr_variant": self.config.repr_variant,
            "score_variant": self.config.score_variant,
            "time_scale": {"mode": self.config.time_scale.mode, "denom": self.config.time_scale.denom},
            "seed": self.seed,
            "state": {
                "epoch": self.epoch,
                "best_valid_mrr": self.best_valid_mrr,
                "rng": {"bit_generator": "Philox", "key": [self.seed, self.epoch]},
            },
            "vocab_files": {name: f"{name}.txt" for name in sorted(self.vocabs)},
        }


def _block_shapes(num_entities, num_predicates, dim, periodic):
    shapes = {
        "initial": (num_entities, dim),
        "velocity": (num_entities, dim),
        "bias_s": (num_entities,),
        "bias_o": (num_entities,),
        "diag": (num_predicates, dim),
        "translation": (num_predicates, dim),
    }
    if periodic:
        shapes.update({k: (num_entities, dim) for k in PERIODIC_BLOCKS})
    return [(k, shapes[k]) for k in BLOCK_ORDER if k in shapes]


def save_checkpoint(ckpt: Checkpoint, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    blob = b"".join(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes() for _, arr in ckpt.params.ordered())
    (directory / "params.bin").write_bytes(blob)
    for name, vocab in ckpt.vocabs.items():
        vocab.save(directory / f"{name}.txt")
    (directory / "manifest.json").write_text(json.dumps(ckpt.manifest(), indent=2, sort_keys=True) + "\n")
    return directory


def load_checkpoint(directory) -> Checkpoint:
    directory = Path(directory)
    man = json.loads((directory / "manifest.json").read_text())
    if man.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {man.get('format_version')!r}")
    ts = man["time_scale"]
    config = ModelConfig(
        signature=Signature.parse(man["signature"]),
        repr_variant=man["repr_variant"],
        score_variant=man["score_variant"],
        time_scale=TimeScale(ts["mode"], float(ts["denom"])),
    )
    flat = np.frombuffer((directory / "params.bin").read_bytes(), dtype=_DTYPE)
    shapes = _block_shapes(man["num_entities"], 2 * man["num_raw_predicates"],
                           config.signature.total_dim, config.periodic)
    expected = sum(int(np.prod(s)) for _, s in shapes)
    if flat.size != expected:
        raise ValueError(f"params.bin holds {flat.size} values, manifest implies {expected}")
    blocks, pos = {}, 0
    for name, shape in shapes:
        n = int(np.prod(shape))
        blocks[name] = flat[pos:pos + n].reshape(shape).astype(np.float64)
        pos += n
    vocabs = {name: Vocab.load(directory / fname) for name, fname in man.get("vocab_files", {}).items()}
    state = man.get("state", {})
    return Checkpoint(
        params=Params(blocks),
        config=config,
        num_raw_predicates=man["num_raw_predicates"],
        num_timestamps=man["num_timestamps"],
        seed=man.get("seed", 0),
        epoch=state.get("epoch", 0),
        best_valid_mrr=state.get("best_valid_mrr"),
        vocabs=vocabs,
    )
