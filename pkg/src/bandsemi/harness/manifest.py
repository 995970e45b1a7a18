"""Reproducibility plumbing: seed derivation, deterministic CSVs, manifests.

Within one build, identical (config, master seed) inputs produce
byte-identical data CSVs.  Floats are serialized with repr (shortest
round-trip form), line endings are LF, decimal separator is '.'.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

RNG_ALGORITHM = (
    "numpy PCG64; stream seed = SplitMix64 chain folding (master_seed, index...) "
    "as seed_i = splitmix64(seed_{i-1} XOR (index_i + 1) * 0x9E3779B97F4A7C15)"
)


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix integer indices into the master seed; documented, stable mix.

    Each index advances a SplitMix64 chain, so (case, replica) streams are
    decorrelated and independent of execution order.
    """
    x = master_seed & _MASK64
    for index in indices:
        x = _splitmix64(x ^ (((index + 1) * _GOLDEN) & _MASK64))
    return x


def format_cell(value) -> str:
    """Deterministic CSV cell: repr for floats, str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    return path


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Sidecar record of one run: config echo, seeds, outputs with checksums."""

    command: str
    config: dict
    master_seed: int
    rng_algorithm: str = RNG_ALGORITHM
    artifact_version: str = ""
    started_at: str = ""
    finished_at: str = ""
    seeds: list[dict] = field(default_factory=list)
    files: dict[str, str] = field(default_factory=dict)

    def register_file(self, path: Path) -> None:
        path = Path(path)
        self.files[path.name] = sha256_file(path)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "rng_algorithm": self.rng_algorithm,
            "artifact_version": self.artifact_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "seeds": self.seeds,
            "files": self.files,
        }
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return path
