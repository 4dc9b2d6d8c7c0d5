"""Per-user activity distributions and Hoerl-curve fitting.

The Hoerl function ``f(x) = a * b**x * x**c`` becomes linear after taking
logs, ``ln f = ln a + x ln b + c ln x``, so fitting is an ordinary linear
least-squares problem with no starting point or iteration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, EmptyCommunityError, RankDeficiencyError
from .model import Community


class Metric(str, enum.Enum):
    TAG_ASSIGNMENTS = "tag_assignments"
    LIBRARY_SIZE = "library_size"
    VOCABULARY_SIZE = "vocabulary_size"

    @classmethod
    def parse(cls, name: "str | Metric") -> "Metric":
        if isinstance(name, Metric):
            return name
        aliases = {"assignments": cls.TAG_ASSIGNMENTS, "library": cls.LIBRARY_SIZE, "vocabulary": cls.VOCABULARY_SIZE}
        return aliases.get(name) or cls(name)


@dataclass(frozen=True)
class HoerlParams:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"Hoerl parameters need a > 0 and b > 0, got a={self.a}, b={self.b}")

    @classmethod
    def parse(cls, text: str) -> "HoerlParams":
        try:
            a, b, c = (float(v) for v in text.split(","))
        except ValueError:
            raise ConfigError(f"bad Hoerl parameters {text!r}; expected a,b,c") from None
        return cls(a, b, c)


@dataclass(frozen=True)
class RankDistribution:
    metric: Metric
    points: tuple[tuple[int, int], ...]

    @property
    def ranks(self) -> np.ndarray:
        return np.array([r for r, _ in self.points], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points], dtype=np.int64)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class FitReport:
    params: HoerlParams
    r2_log: float
    n_points: int

    def to_dict(self) -> dict:
        return {"a": self.params.a, "b": self.params.b, "c": self.params.c,
                "r2_log": self.r2_log, "n_points": self.n_points}


def user_metric(c: Community, metric: Metric | str) -> np.ndarray:
    """Metric value per user, indexed by user ordinal."""
    metric = Metric.parse(metric)
    if metric is Metric.TAG_ASSIGNMENTS:
        return c.user_activity()
    sets = c.user_items if metric is Metric.LIBRARY_SIZE else c.user_tags
    return np.array([len(s) for s in sets], dtype=np.int64)


def rank_distribution(c: Community, metric: Metric | str) -> RankDistribution:
    metric = Metric.parse(metric)
    if c.num_users == 0:
        raise EmptyCommunityError("rank distribution of an empty community")
    values = user_metric(c, metric)
    # stable sort on -value keeps ascending ordinal among ties
    order = np.argsort(-values, kind="stable")
    return RankDistribution(metric, tuple((r, int(values[u])) for r, u in enumerate(order, start=1)))


def correlation_r2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Squared Pearson correlation of two equal-length sequences."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise DegenerateInputError("need two sequences of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("correlation undefined for a constant sequence")
    r2 = float(dx @ dy) ** 2 / (sxx * syy)
    return min(r2, 1.0)


def eval_hoerl(p: HoerlParams, x) -> float | np.ndarray:
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValueError("Hoerl function is defined for x > 0 only")
    out = p.a * np.power(p.b, x_arr) * np.power(x_arr, p.c)
    return float(out) if out.ndim == 0 else out


def fit_hoerl_points(x: Sequence[float], y: Sequence[float]) -> FitReport:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise RankDeficiencyError(f"need at least 3 points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("ranks and values must be positive")
    design = np.column_stack([np.ones_like(x), x, np.log(x)])
    if np.linalg.matrix_rank(design) < 3:
        raise RankDeficiencyError("design matrix is singular (fewer than 3 distinct ranks?)")
    target = np.log(y)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    ss_res = float(resid @ resid)
    dev = target - target.mean()
    ss_tot = float(dev @ dev)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        # flat data: a perfect fit is the only sensible reading
        r2 = 1.0 if ss_res <= 1e-18 * len(x) else -math.inf
    params = HoerlParams(float(math.exp(coef[0])), float(math.exp(coef[1])), float(coef[2]))
    return FitReport(params, r2, len(x))


def fit_hoerl(dist: RankDistribution) -> FitReport:
    return fit_hoerl_points(dist.ranks, dist.values)
