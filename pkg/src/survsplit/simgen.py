"""Synthetic survival data.

``gen_poisson_bench`` draws integer times with a tunable number of distinct
event times for timing runs. ``gen_ph`` draws exponential proportional-hazards
data and returns the true survival probability at a horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .data import SurvivalDataset
from .errors import ConfigError

CALIBRATION_TOLERANCE = 0.15
_MAX_POISSON_MEAN = 1e15


@dataclass(frozen=True)
class PoissonBenchConfig:
    n: int
    p: int
    target_M: int
    censor_rate: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be >= 1")
        if self.target_M < 1:
            raise ConfigError("target_M must be >= 1")
        if not 0.0 <= self.censor_rate < 1.0:
            raise ConfigError("censor_rate must lie in [0, 1)")


def _poisson_draw(cfg: PoissonBenchConfig, lam: float) -> SurvivalDataset:
    rng = np.random.default_rng([cfg.seed, 0])
    X = rng.uniform(size=(cfg.n, cfg.p))
    T = rng.poisson(lam, size=cfg.n)
    censored = rng.uniform(size=cfg.n) < cfg.censor_rate
    # censored units observe a uniform time on {0, ..., T}
    redraw = np.floor(rng.uniform(size=cfg.n) * (T + 1))
    times = np.where(censored, redraw, T).astype(np.float64)
    return SurvivalDataset(X, times, (~censored).astype(np.int64))


def _distinct_events(data: SurvivalDataset) -> int:
    return int(data.failure_times.size)


def gen_poisson_bench(cfg: PoissonBenchConfig, max_steps: int = 60) -> SurvivalDataset:
    """Timing-benchmark data with about ``target_M`` distinct event times.

    Covariates are i.i.d. Uniform(0, 1) and carry no signal. The Poisson mean
    starts at ``target_M`` and is doubled or halved until it brackets the
    target, then bisected (geometric midpoints) on the same random stream
    until the realized count is within 15%.

    Raises
    ------
    ConfigError
        If no Poisson mean reaches the tolerance within ``max_steps``.
    """
    target = cfg.target_M
    lo_ok = target * (1 - CALIBRATION_TOLERANCE)
    hi_ok = target * (1 + CALIBRATION_TOLERANCE)

    def within(m):
        return lo_ok <= m <= hi_ok

    lam = float(target)
    data = _poisson_draw(cfg, lam)
    m = _distinct_events(data)
    lo = hi = None
    for _ in range(max_steps):
        if within(m):
            return data
        if m < target:
            lo = lam
        else:
            hi = lam
        if lo is None:
            lam = hi / 2.0
        elif hi is None:
            lam = lo * 2.0
        else:
            lam = math.sqrt(lo * hi)
        if lam > _MAX_POISSON_MEAN:
            break
        data = _poisson_draw(cfg, lam)
        m = _distinct_events(data)
    if within(m):
        return data
    raise ConfigError(
        f"could not calibrate Poisson mean for target_M={target} (last distinct count {m})"
    )


@dataclass(frozen=True)
class PHConfig:
    """Exponential proportional-hazards design.

    Covariates are i.i.d. Uniform(0, 1); the hazard of row ``x`` is
    ``baseline * exp(x @ coef)``. ``coef`` defaults to ``(1, -1, 0.5, 0, ...)``.
    """

    n: int = 5000
    p: int = 10
    baseline: float = 1.0
    coef: tuple = field(default=())
    censor_rate: float = 0.3
    horizon: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be >= 1")
        if not self.baseline > 0:
            raise ConfigError("baseline rate must be positive")
        if not 0.0 <= self.censor_rate < 1.0:
            raise ConfigError("censor_rate must lie in [0, 1)")
        if self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        if self.coef and len(self.coef) != self.p:
            raise ConfigError("coef must have p entries")

    @property
    def coefficients(self) -> np.ndarray:
        if self.coef:
            return np.asarray(self.coef, dtype=np.float64)
        beta = np.zeros(self.p)
        beta[:3] = [1.0, -1.0, 0.5][: self.p]
        return beta


def censoring_rate_for(hazards: np.ndarray, fraction: float) -> float:
    """Exponential censoring rate ``c`` with ``mean(c / (c + hazard)) == fraction``."""
    if fraction <= 0:
        return 0.0

    def excess(c):
        return np.mean(c / (c + hazards)) - fraction

    hi = float(hazards.max())
    while excess(hi) < 0:
        hi *= 2.0
    return brentq(excess, 0.0, hi, xtol=1e-12)


def gen_ph(cfg: PHConfig):
    """Return ``(dataset, true S(horizon; x_i) per row)``."""
    rng = np.random.default_rng([cfg.seed, 1])
    X = rng.uniform(size=(cfg.n, cfg.p))
    hazard = cfg.baseline * np.exp(X @ cfg.coefficients)
    T = rng.exponential(1.0 / hazard)
    c = censoring_rate_for(hazard, cfg.censor_rate)
    if c > 0:
        C = rng.exponential(1.0 / c, size=cfg.n)
        times = np.minimum(T, C)
        events = (T <= C).astype(np.int64)
    else:
        times = T
        events = np.ones(cfg.n, dtype=np.int64)
    truth = np.exp(-hazard * cfg.horizon)
    return SurvivalDataset(X, times, events), truth
