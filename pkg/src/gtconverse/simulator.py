"""Seeded Monte Carlo runs of concrete group testing algorithms.

Empirical success rates from here must sit below every applicable converse;
that comparison is the main end-to-end check of the bounds module.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .channels import Channel, Noiseless, sample_outputs
from .sources import SourceModel, sample

WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class AdaptiveBinarySplit:
    pass


@dataclass(frozen=True)
class NonAdaptiveBernoulliCOMP:
    design_density: float

    def __post_init__(self):
        if not 0.0 <= self.design_density <= 1.0:
            raise ValueError(f"design density must lie in [0, 1], got {self.design_density}")


Algorithm = Union[AdaptiveBinarySplit, NonAdaptiveBernoulliCOMP]


@dataclass(frozen=True)
class SimConfig:
    source: SourceModel
    channel: Channel
    algorithm: Algorithm
    T_budget: int
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.T_budget < 0:
            raise ValueError("T_budget must be >= 0")
        if isinstance(self.algorithm, AdaptiveBinarySplit) and not isinstance(
            self.channel, Noiseless
        ):
            raise ValueError("adaptive binary splitting is only defined for the noiseless channel")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit value")


@dataclass(frozen=True)
class SimOutcome:
    successes: int
    trials: int

    @property
    def empirical_p(self) -> float:
        return self.successes / self.trials

    @property
    def wilson_center(self) -> float:
        n, z2 = self.trials, WILSON_Z**2
        return (self.empirical_p + z2 / (2 * n)) / (1 + z2 / n)

    @property
    def wilson_halfwidth(self) -> float:
        n, z = self.trials, WILSON_Z
        p = self.empirical_p
        return z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))

    def merge(self, other: "SimOutcome") -> "SimOutcome":
        return SimOutcome(self.successes + other.successes, self.trials + other.trials)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator keyed by (seed, trial index), whatever the run order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def adaptive_binary_split_tests(u: np.ndarray) -> int:
    """Tests the noiseless adaptive binary splitter needs to finish on ``u``.

    The candidate list holds every item not yet resolved. Each round tests
    the whole list; a negative ends the search. On a positive, the list is
    halved repeatedly, testing the first half each time, until a single
    defective remains; it is removed along with every item seen in a
    negative pool.
    """
    u = np.asarray(u, dtype=bool)
    cand = np.arange(u.size)
    tests = 0
    while True:
        tests += 1
        if cand.size == 0 or not u[cand].any():
            return tests
        pool = cand
        cleared = []
        while pool.size > 1:
            half = pool[: (pool.size + 1) // 2]
            tests += 1
            if u[half].any():
                pool = half
            else:
                cleared.append(half)
                pool = pool[half.size:]
        drop = np.concatenate([pool, *cleared])
        cand = cand[~np.isin(cand, drop)]


def run_adaptive_binary_split(u: np.ndarray, T_budget: int) -> tuple[bool, int]:
    """(success, tests_used) within a budget of ``T_budget`` noiseless tests."""
    needed = adaptive_binary_split_tests(u)
    if needed <= T_budget:
        return True, needed
    return False, T_budget


def run_comp(
    u: np.ndarray,
    design_density: float,
    T_budget: int,
    channel: Channel,
    rng: np.random.Generator,
    design: np.ndarray | None = None,
) -> bool:
    """Non-adaptive Bernoulli design decoded by COMP.

    Items that appear in any negative test are cleared; everything else is
    declared defective. ``design`` (T x N booleans) overrides the random
    matrix, e.g. the identity for individual testing.
    """
    u = np.asarray(u, dtype=bool)
    if design is None:
        design = rng.random((T_budget, u.size)) < design_density
    else:
        design = np.asarray(design, dtype=bool)
        if design.shape[1] != u.size:
            raise ValueError("design matrix width must equal the number of items")
    counts = design.astype(np.int64) @ u.astype(np.int64)
    outcomes = sample_outputs(channel, counts, rng)
    cleared = design[outcomes == 0].any(axis=0)
    return bool(np.array_equal(~cleared, u))


def _trial_success(cfg: SimConfig, trial: int) -> bool:
    rng = trial_rng(cfg.seed, trial)
    u = sample(cfg.source, rng)
    if isinstance(cfg.algorithm, AdaptiveBinarySplit):
        return run_adaptive_binary_split(u, cfg.T_budget)[0]
    return run_comp(u, cfg.algorithm.design_density, cfg.T_budget, cfg.channel, rng)


def run_trials(cfg: SimConfig, start: int, stop: int) -> SimOutcome:
    hits = sum(_trial_success(cfg, t) for t in range(start, stop))
    return SimOutcome(hits, stop - start)


def monte_carlo(cfg: SimConfig, workers: int = 1) -> SimOutcome:
    """Run ``cfg.trials`` independent trials; the result does not depend on ``workers``."""
    if workers <= 1:
        return run_trials(cfg, 0, cfg.trials)
    edges = np.linspace(0, cfg.trials, workers + 1).astype(int)
    chunks = [(int(a), int(b)) for a, b in zip(edges, edges[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_trials, [cfg] * len(chunks), *zip(*chunks)))
    out = SimOutcome(0, 0)
    for part in parts:
        out = out.merge(part)
    return out


def adaptive_success_curve(
    source: SourceModel, T_values, trials: int, seed: int = 0
) -> list[SimOutcome]:
    """Monte Carlo outcomes of adaptive binary splitting at several budgets.

    Trial i draws the same defectivity vector for every budget, so running
    the splitter once per trial and comparing its test count against each
    budget gives exactly what ``monte_carlo`` returns budget by budget.
    """
    needed = np.array(
        [adaptive_binary_split_tests(sample(source, trial_rng(seed, t))) for t in range(trials)]
    )
    return [SimOutcome(int((needed <= T).sum()), trials) for T in T_values]
