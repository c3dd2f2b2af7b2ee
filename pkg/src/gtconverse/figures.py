"""Plot-ready data for the five reference figures.

Each builder takes keyword overrides and returns ``(header, rows)``. Bound
columns are clamped to [0, 1].
"""

from __future__ import annotations

import math
from typing import Any

from .bounds import (
    AdaptiveNoisyConfig,
    bja_bound,
    bsc_adaptive_bound,
    bsc_nonadaptive_bound,
    fano_bound,
    gaussian_approx_at_tests,
    iid_curp_bound,
    rate_at_target,
)
from .numerics import log2_choose
from .simulator import adaptive_success_curve
from .sources import CombinatorialUniform

FIGURE_IDS = (
    "fig1-bsc-nonadaptive",
    "fig2-rates",
    "fig3-noiseless-adaptive",
    "fig4-bernoulli",
    "fig5-bsc-adaptive",
)
ALIASES = {fid.split("-", 1)[0]: fid for fid in FIGURE_IDS}

DEFAULTS: dict[str, dict[str, Any]] = {
    "fig1-bsc-nonadaptive": {"N": 500, "K": 10, "p": 0.11, "t_min": 70, "t_max": 165},
    "fig2-rates": {
        "p": 0.11,
        "target": 0.999,
        "k_exponent": 0.37,
        "n_grid": (100, 200, 500, 1000, 2000, 5000),
    },
    "fig3-noiseless-adaptive": {
        "configs": ((10, 500), (30, 9699)),
        "t_min": None,
        "t_max": None,
        "trials": 1000,
        "seed": 0,
    },
    "fig4-bernoulli": {"N": 500, "p": 1 / 50, "t_min": 0, "t_max": 100},
    "fig5-bsc-adaptive": {"N": 500, "K": 10, "p": 0.11, "t_min": 70, "t_max": 165},
}

Rows = list[list[Any]]


def resolve_figure_id(name: str) -> str:
    if name in FIGURE_IDS:
        return name
    if name in ALIASES:
        return ALIASES[name]
    raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURE_IDS)}")


def fig1(N, K, p, t_min, t_max) -> tuple[list[str], Rows]:
    log2_M = log2_choose(N, K)
    rows = [
        [T, bsc_nonadaptive_bound(T, log2_M, p).clamped, fano_bound(T, "comb-bsc", N, K, p).clamped]
        for T in range(t_min, t_max + 1)
    ]
    return ["T", "np_bound", "fano_bound"], rows


def fig2(p, target, k_exponent, n_grid) -> tuple[list[str], Rows]:
    rows = []
    for N in n_grid:
        K = math.ceil(N**k_exponent)
        T, rate = rate_at_target(N, K, p, target)
        rows.append([N, K, T, rate])
    return ["N", "K", "T_min", "rate"], rows


def fig3_t_range(N: int, K: int) -> range:
    magic = log2_choose(N, K)
    return range(math.floor(0.8 * magic), math.ceil(1.3 * magic) + 1)


def fig3(configs, t_min, t_max, trials, seed) -> tuple[list[str], Rows]:
    rows = []
    for K, N in configs:
        if t_min is None and t_max is None:
            Ts = fig3_t_range(N, K)
        else:
            default = fig3_t_range(N, K)
            Ts = range(default.start if t_min is None else t_min, (default.stop - 1 if t_max is None else t_max) + 1)
        curve = adaptive_success_curve(CombinatorialUniform(N, K), Ts, trials, seed)
        for T, out in zip(Ts, curve):
            rows.append([
                K,
                N,
                T,
                bja_bound(T, N, K).clamped,
                fano_bound(T, "comb", N, K).clamped,
                out.empirical_p,
                out.wilson_halfwidth,
            ])
    return ["K", "N", "T", "bja_bound", "fano_chan", "empirical_split", "wilson_halfwidth"], rows


def fig4(N, p, t_min, t_max) -> tuple[list[str], Rows]:
    rows = [
        [
            T,
            iid_curp_bound(N, p, T).clamped,
            fano_bound(T, "prob", N, p=p).clamped,
            gaussian_approx_at_tests(N, p, T),
        ]
        for T in range(t_min, t_max + 1)
    ]
    return ["T", "curp_bound", "fano_li", "gaussian_approx"], rows


def fig5(N, K, p, t_min, t_max) -> tuple[list[str], Rows]:
    log2_M = log2_choose(N, K)
    rows = []
    for T in range(t_min, t_max + 1):
        rows.append([
            T,
            bsc_adaptive_bound(AdaptiveNoisyConfig(T, log2_M, p)).clamped,
            bsc_nonadaptive_bound(T, log2_M, p).clamped,
            fano_bound(T, "comb-bsc", N, K, p).clamped,
        ])
    return ["T", "adaptive_bound", "np_bound", "fano_bound"], rows


BUILDERS = {
    "fig1-bsc-nonadaptive": fig1,
    "fig2-rates": fig2,
    "fig3-noiseless-adaptive": fig3,
    "fig4-bernoulli": fig4,
    "fig5-bsc-adaptive": fig5,
}


def build_figure(figure_id: str, **overrides) -> tuple[list[str], Rows]:
    fid = resolve_figure_id(figure_id)
    params = dict(DEFAULTS[fid])
    unknown = set(overrides) - set(params)
    if unknown:
        raise ValueError(f"{fid} does not take {sorted(unknown)}; known: {sorted(params)}")
    params.update(overrides)
    return BUILDERS[fid](**params)
