"""Only-Defects-Matter test channels: P(y | k) for a pool holding k defectives."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .numerics import binary_entropy

ROW_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Noiseless:
    pass


@dataclass(frozen=True)
class BSC:
    """Noiseless OR outcome passed through a binary symmetric channel."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"BSC flip probability must lie in [0, 1/2), got {self.p}")


@dataclass(frozen=True)
class Dilution:
    """Each defective in the pool is missed independently: P(0 | k) = (1 - u)^k."""

    u: float

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"dilution probability must lie in [0, 1], got {self.u}")


@dataclass(frozen=True)
class GenericODM:
    """Row k of ``table`` is (P(0 | k), P(1 | k)) for k = 0..k_max."""

    table: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in row) for row in self.table)
        object.__setattr__(self, "table", rows)
        if not rows:
            raise ValueError("empty transition table")
        for k, row in enumerate(rows):
            if len(row) != 2 or min(row) < 0 or abs(row[0] + row[1] - 1.0) > ROW_TOLERANCE:
                raise ValueError(f"row {k} is not a distribution over {{0, 1}}: {row}")

    @property
    def k_max(self) -> int:
        return len(self.table) - 1


Channel = Union[Noiseless, BSC, Dilution, GenericODM]


def prob_positive(ch: Channel, k: int) -> float:
    """P(Y = 1 | K = k)."""
    if k < 0:
        raise ValueError(f"defective count must be >= 0, got {k}")
    if isinstance(ch, Noiseless):
        return 1.0 if k >= 1 else 0.0
    if isinstance(ch, BSC):
        return 1.0 - ch.p if k >= 1 else ch.p
    if isinstance(ch, Dilution):
        return 1.0 - (1.0 - ch.u) ** k
    if isinstance(ch, GenericODM):
        if k > ch.k_max:
            raise ValueError(f"k={k} outside table range 0..{ch.k_max}")
        return ch.table[k][1]
    raise TypeError(f"unknown channel {ch!r}")


def transition_prob(ch: Channel, k: int, y: int) -> float:
    """P(y | k) for y in {0, 1}."""
    if y not in (0, 1):
        raise ValueError(f"test outcome must be 0 or 1, got {y}")
    p1 = prob_positive(ch, k)  # also validates k
    if isinstance(ch, Dilution) and y == 0:
        return (1.0 - ch.u) ** k
    if isinstance(ch, GenericODM):
        return ch.table[k][y]
    if isinstance(ch, BSC):
        return ch.p if y != int(k >= 1) else 1.0 - ch.p
    return p1 if y == 1 else 1.0 - p1


def capacity_bsc(p: float) -> float:
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"need 0 <= p <= 1/2, got {p}")
    return 1.0 - binary_entropy(p)


def sample_output(ch: Channel, k: int, rng: np.random.Generator) -> int:
    """Draw Y given K = k using exactly one uniform variate from ``rng``."""
    draw = rng.random()
    return int(draw < prob_positive(ch, k))


def sample_outputs(ch: Channel, ks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``sample_output``: one uniform per entry of ``ks``, in order."""
    ks = np.asarray(ks)
    draws = rng.random(ks.shape)
    if isinstance(ch, Noiseless):
        p1 = (ks >= 1).astype(float)
    elif isinstance(ch, BSC):
        p1 = np.where(ks >= 1, 1.0 - ch.p, ch.p)
    elif isinstance(ch, Dilution):
        p1 = 1.0 - (1.0 - ch.u) ** ks
    else:
        p1 = np.array([prob_positive(ch, int(k)) for k in ks.ravel()]).reshape(ks.shape)
    return (draws < p1).astype(np.int8)


def parse_channel_table(lines: Iterable[str]) -> GenericODM:
    """One line per k = 0, 1, ...: ``P(0|k) P(1|k)``; ``#`` comments and blanks skipped."""
    rows = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two probabilities")
        rows.append((float(parts[0]), float(parts[1])))
    return GenericODM(tuple(rows))


def load_channel_table(path: str | Path) -> GenericODM:
    with open(path) as fh:
        return parse_channel_table(fh)
