"""Exhaustive closed-testing reference, tractable up to a dozen hypotheses.

Builds the rejection status of all 2^m hypothesis sets with incremental row
sums (each set's sums extend the sums of the set without its lowest member),
then answers overlap queries by scanning the surviving (non-rejected) masks.
Used as the ground truth that the shortcut engine is checked against.
"""

import numpy as np

from .statmatrix import CenteredMatrix, TestConfig, validate_subset

__all__ = [
    "RejectionTable",
    "max_nonrejected_overlap",
    "all_overlapping_rejected",
]

_MAX_HYPS = 12
_MAX_TRANSFORMS = 64


def _popcount(masks: np.ndarray) -> np.ndarray:
    try:
        return np.bitwise_count(masks)
    except AttributeError:  # numpy < 2.0
        out = np.zeros_like(masks)
        work = masks.copy()
        while work.any():
            out += work & 1
            work >>= 1
        return out


class RejectionTable:
    """Rejection status of every hypothesis set of one centered matrix."""

    def __init__(self, centered: CenteredMatrix, cfg: TestConfig):
        if cfg.n_transforms != centered.n_transforms:
            raise ValueError("config and matrix disagree on the number of rows")
        m = centered.n_hyps
        if m > _MAX_HYPS:
            raise ValueError(f"exhaustive table supports at most {_MAX_HYPS} columns, got {m}")
        if centered.n_transforms > _MAX_TRANSFORMS:
            raise ValueError(
                f"exhaustive table supports at most {_MAX_TRANSFORMS} rows, "
                f"got {centered.n_transforms}"
            )
        self.n_hyps = m
        self.cfg = cfg
        n_sets = 1 << m
        values = centered.values
        sums = np.zeros((n_sets, centered.n_transforms))
        for mask in range(1, n_sets):
            low = mask & -mask
            sums[mask] = sums[mask ^ low] + values[:, low.bit_length() - 1]
        rank = cfg.crit_rank
        quantiles = np.partition(sums, rank - 1, axis=1)[:, rank - 1]
        self.quantiles = quantiles
        # The empty set is never rejected; its all-zero sums give quantile 0.
        self.rejected = quantiles > 0.0
        self._masks = np.arange(n_sets, dtype=np.uint32)

    def _subset_mask(self, subset) -> int:
        cols = validate_subset(subset, self.n_hyps)
        mask = 0
        for i in cols:
            mask |= 1 << i
        return mask

    def max_nonrejected_overlap(self, subset) -> int:
        """Largest overlap with ``subset`` among surviving sets (0 via the empty set)."""
        smask = self._subset_mask(subset)
        surviving = self._masks[~self.rejected]
        return int(_popcount(surviving & np.uint32(smask)).max())

    def all_overlapping_rejected(self, subset, min_overlap: int) -> bool:
        """Whether every set sharing at least ``min_overlap`` members with
        ``subset`` is rejected.  The empty set makes this False for
        ``min_overlap <= 0``."""
        smask = self._subset_mask(subset)
        size = int(_popcount(np.uint32(smask)))
        if min_overlap <= 0:
            return False
        if min_overlap > size:
            return True
        overlap = _popcount(self._masks & np.uint32(smask))
        candidates = overlap >= min_overlap
        return bool(np.all(self.rejected[candidates]))

    def min_quantile(self, subset, min_overlap: int, size: int) -> float:
        """Smallest subset quantile among sets of ``size`` members overlapping
        ``subset`` by at least ``min_overlap``; NaN when no such set exists."""
        smask = self._subset_mask(subset)
        overlap = _popcount(self._masks & np.uint32(smask))
        pick = (overlap >= min_overlap) & (_popcount(self._masks) == size)
        if not pick.any():
            return float("nan")
        return float(self.quantiles[pick].min())


def max_nonrejected_overlap(centered: CenteredMatrix, subset, cfg: TestConfig) -> int:
    return RejectionTable(centered, cfg).max_nonrejected_overlap(subset)


def all_overlapping_rejected(centered: CenteredMatrix, subset, min_overlap: int, cfg: TestConfig) -> bool:
    return RejectionTable(centered, cfg).all_overlapping_rejected(subset, min_overlap)
