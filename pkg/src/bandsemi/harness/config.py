"""Experiment configuration.

Flat text format: `key = value` lines plus repeatable `[size]` blocks, '#'
comments.  Every key can be overridden from the command line.  Example:

    scheme = curie_weiss
    beta = 0.5
    replicas = 20
    moments = 1,2,3,4
    seed = 20260809
    bandwidth = gamma:0.6
    n_values = 200,800,3200

    # explicit (n, b) cases instead of n_values + bandwidth rule:
    [size]
    n = 100
    b = 99
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from ..bandmatrix import BandSpec

SCHEMES = ("wigner", "curie_weiss", "gaussian")
MAX_MOMENT_ORDER = 10


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent settings."""


def parse_config_text(text: str) -> tuple[dict, list[tuple[str, dict]]]:
    """Parse the flat key=value format with repeatable section blocks."""
    top: dict[str, str] = {}
    sections: list[tuple[str, dict]] = []
    current = top
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            block: dict[str, str] = {}
            sections.append((line[1:-1].strip(), block))
            current = block
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        current[key.strip()] = value.strip()
    return top, sections


def resolve_bandwidth(n: int, rule: str) -> int:
    """Turn a bandwidth rule into a valid bandwidth for dimension n.

    Rules: "n" (full matrix), "gamma:G" (floor(n^G) rounded down to the
    nearest valid odd value, clamped to n), or a fixed integer / "fixed:B".
    """
    rule = str(rule).strip()
    if rule == "n":
        return n
    if rule.startswith("gamma:"):
        gamma = float(rule.split(":", 1)[1])
        b = int(math.floor(n**gamma))
        if b >= n:
            return n
        if b % 2 == 0:
            b -= 1
        return max(b, 1)
    if rule.startswith("fixed:"):
        return int(rule.split(":", 1)[1])
    try:
        return int(rule)
    except ValueError as exc:
        raise ConfigError(f"unrecognized bandwidth rule {rule!r}") from exc


def _parse_int_list(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(part) for part in str(value).split(",") if part.strip())


@dataclass
class ExperimentConfig:
    """Scheme, sizes, replication and output settings of one experiment."""

    scheme: str
    sizes: tuple[tuple[int, int], ...]
    replicas: int
    moments: tuple[int, ...]
    seed: int
    out_dir: Path
    threads: int = 1
    dist: str = "standard_normal"
    beta: float = 0.5
    alpha: float = 0.75
    off_diag: float | None = None  # gaussian only; None = worst admissible value
    bandwidth_rule: str = "n"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.sizes:
            raise ConfigError("no (n, b) sizes configured")
        for n, b in self.sizes:
            BandSpec(n, b)  # raises on invalid combinations
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if not self.moments:
            raise ConfigError("at least one moment order required")
        for k in self.moments:
            if not 0 <= k <= MAX_MOMENT_ORDER:
                raise ConfigError(f"moment order {k} outside [0, {MAX_MOMENT_ORDER}]")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        self.out_dir = Path(self.out_dir)

    def echo(self) -> dict:
        """Plain-dict form for the run manifest."""
        return {
            "scheme": self.scheme,
            "sizes": [list(size) for size in self.sizes],
            "replicas": self.replicas,
            "moments": list(self.moments),
            "seed": self.seed,
            "out_dir": str(self.out_dir),
            "threads": self.threads,
            "dist": self.dist,
            "beta": self.beta,
            "alpha": self.alpha,
            "off_diag": self.off_diag,
            "bandwidth_rule": self.bandwidth_rule,
        }


def build_config(config_file: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Merge file values with command-line overrides (overrides win)."""
    top: dict = {}
    sections: list[tuple[str, dict]] = []
    if config_file is not None:
        text = Path(config_file).read_text()
        top, sections = parse_config_text(text)
    values = dict(top)
    for key, value in overrides.items():
        if value is not None:
            values[key] = value

    scheme = values.get("scheme")
    if scheme is None:
        raise ConfigError("scheme is required (config key 'scheme' or --scheme)")

    bandwidth_rule = str(values.get("bandwidth", values.get("bandwidth_rule", "n")))
    sizes: list[tuple[int, int]] = []
    for name, block in sections:
        if name != "size":
            raise ConfigError(f"unknown section [{name}]")
        if "n" not in block:
            raise ConfigError("[size] block requires key 'n'")
        n = int(block["n"])
        b = int(block["b"]) if "b" in block else resolve_bandwidth(n, bandwidth_rule)
        sizes.append((n, b))
    if "n_values" in values:
        for n in _parse_int_list(values["n_values"]):
            sizes.append((n, resolve_bandwidth(n, bandwidth_rule)))
    if not sizes:
        raise ConfigError("no sizes: provide n_values or [size] blocks")

    off_diag = values.get("off_diag")
    if off_diag in (None, "auto", ""):
        off_diag = None
    else:
        off_diag = float(off_diag)

    return ExperimentConfig(
        scheme=str(scheme),
        sizes=tuple(sizes),
        replicas=int(values.get("replicas", 20)),
        moments=_parse_int_list(values.get("moments", "1,2,3,4")),
        seed=int(values.get("seed", 0)),
        out_dir=Path(values.get("out_dir", "runs")),
        threads=int(values.get("threads", 1)),
        dist=str(values.get("dist", "standard_normal")),
        beta=float(values.get("beta", 0.5)),
        alpha=float(values.get("alpha", 0.75)),
        off_diag=off_diag,
        bandwidth_rule=bandwidth_rule,
    )
