"""Transforms from p-values onto a summable evidence scale, with truncation.

Every p-value transform here is strictly decreasing in p, so a large
transformed value always means strong evidence.  Transforms with a
singularity at p = 1 (Pearson, Liptak, Cauchy) clamp their argument at
``1 - 2**-52`` so that a single p-value of exactly 1 cannot produce an
infinite matrix entry.

Truncation maps every entry below a threshold to a common ground value,
leaving the rest untouched.  On the evidence scale this keeps the strongest
signals; composing a combiner with an evidence-scale truncation rule is the
same as truncating the p-values first (large p to a ground p) and then
transforming.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .statmatrix import StatisticMatrix

__all__ = [
    "Combiner",
    "TruncationRule",
    "apply_combiner",
    "truncate",
    "threshold_from_rank",
    "COMBINER_KINDS",
]

_P_HIGH = 1.0 - 2.0 ** -52

COMBINER_KINDS = (
    "identity",
    "fisher",
    "pearson",
    "liptak",
    "edgington",
    "cauchy",
    "generalized_mean",
)


def _check_pvalues(p: np.ndarray):
    if np.any(p <= 0.0) or np.any(p > 1.0):
        bad = p[(p <= 0.0) | (p > 1.0)].flat[0]
        raise ValueError(f"p-values must lie in (0, 1], got {bad}")


@dataclass(frozen=True)
class Combiner:
    """Elementwise evidence transform.

    Parameters
    ----------
    kind : str
        One of ``COMBINER_KINDS``.
    power : float, optional
        Exponent for the ``generalized_mean`` family.  ``power == 0`` falls
        back to the Fisher transform; for other kinds it must be omitted.
    """

    kind: str
    power: float = None

    def __post_init__(self):
        if self.kind not in COMBINER_KINDS:
            raise ValueError(f"unknown combiner kind {self.kind!r}")
        if self.kind == "generalized_mean":
            if self.power is None:
                raise ValueError("generalized_mean requires a power")
            object.__setattr__(self, "power", float(self.power))
        elif self.power is not None:
            raise ValueError(f"{self.kind} takes no power argument")

    @classmethod
    def parse(cls, token: str) -> "Combiner":
        """Parse a CLI token such as ``fisher`` or ``vw:-1``."""
        token = token.strip().lower()
        if ":" in token:
            head, _, tail = token.partition(":")
            if head in ("vw", "generalized_mean"):
                try:
                    return cls("generalized_mean", float(tail))
                except ValueError:
                    raise ValueError(f"bad combiner power {tail!r}") from None
            raise ValueError(f"unknown combiner {token!r}")
        if token in ("vw", "generalized_mean"):
            raise ValueError(f"{token!r} needs a power, e.g. {token}:-1")
        return cls(token)

    def label(self) -> str:
        if self.kind == "generalized_mean":
            return f"vw:{self.power:g}"
        return self.kind

    def transform(self, values) -> np.ndarray:
        """Apply the transform elementwise to an array of p-values."""
        p = np.asarray(values, dtype=float)
        if self.kind == "identity":
            if not np.isfinite(p).all():
                raise ValueError("identity combiner requires finite entries")
            return p.copy()
        _check_pvalues(p)
        if self.kind == "fisher":
            return -np.log(p)
        if self.kind == "pearson":
            return np.log1p(-np.minimum(p, _P_HIGH))
        if self.kind == "liptak":
            return _scipy_stats.norm.isf(np.minimum(p, _P_HIGH))
        if self.kind == "edgington":
            return -p
        if self.kind == "cauchy":
            return np.tan((0.5 - np.minimum(p, _P_HIGH)) * np.pi)
        r = self.power
        if r == 0.0:
            return -np.log(p)
        if r < 0.0:
            return p ** r
        return -(p ** r)


def apply_combiner(stats: StatisticMatrix, combiner: Combiner) -> StatisticMatrix:
    """Transform every entry of a statistic matrix onto the evidence scale."""
    return StatisticMatrix(combiner.transform(stats.values), names=stats.names)


@dataclass(frozen=True)
class TruncationRule:
    """Evidence-scale truncation: entries below ``threshold`` become ``ground``.

    ``ground`` must not exceed ``threshold``; with that, truncated matrices
    have every entry either equal to ``ground`` or at least ``threshold``.
    """

    threshold: float
    ground: float = 0.0

    def __post_init__(self):
        t, g = float(self.threshold), float(self.ground)
        if not (np.isfinite(t) and np.isfinite(g)):
            raise ValueError("threshold and ground must be finite")
        if g > t:
            raise ValueError(f"ground {g} exceeds threshold {t}")
        object.__setattr__(self, "threshold", t)
        object.__setattr__(self, "ground", g)


def truncate(stats: StatisticMatrix, rule: TruncationRule) -> StatisticMatrix:
    """Replace entries below the rule's threshold with its ground value."""
    values = np.where(stats.values >= rule.threshold, stats.values, rule.ground)
    return StatisticMatrix(values, names=stats.names)


def threshold_from_rank(stats: StatisticMatrix, rank: int) -> float:
    """The ``rank``-th greatest entry of the whole matrix (duplicates counted)."""
    flat = stats.values.ravel()
    if not 1 <= rank <= flat.size:
        raise ValueError(f"rank must lie in 1..{flat.size}, got {rank}")
    return float(np.partition(flat, flat.size - rank)[flat.size - rank])
