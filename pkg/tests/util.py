"""Random problem factory shared by the randomized and acceptance tests."""

import warnings

import numpy as np

from sumtdp import StatisticMatrix, TestConfig

ALPHA_CHOICES = (0.05, 0.2, 0.4)


def random_instance(rng, min_hyps=3, max_hyps=12, min_transforms=4,
                    max_transforms=64, alphas=ALPHA_CHOICES):
    """Draw a random statistic matrix plus config.

    Half the draws use small integers so ties between columns and between
    transformation rows are common; the rest are Gaussian.  A random subset
    of columns gets an additive shift in the observed row so instances mix
    rejected and non-rejected intersections.
    """
    m = int(rng.integers(min_hyps, max_hyps + 1))
    b = int(rng.integers(min_transforms, max_transforms + 1))
    alpha = float(rng.choice(alphas))
    if rng.random() < 0.5:
        values = rng.integers(-3, 7, size=(b, m)).astype(float)
    else:
        values = rng.normal(size=(b, m))
    n_sig = int(rng.integers(0, m + 1))
    if n_sig:
        cols = rng.choice(m, size=n_sig, replace=False)
        values[0, cols] += rng.uniform(1.0, 6.0, size=n_sig)
    stats = StatisticMatrix(values)
    with warnings.catch_warnings():
        # small alpha * b cells legitimately have zero power; fine here
        warnings.simplefilter("ignore", UserWarning)
        cfg = TestConfig(alpha=alpha, n_transforms=b)
    return stats, cfg


def random_subset(rng, m, allow_empty=False):
    lo = 0 if allow_empty else 1
    k = int(rng.integers(lo, m + 1))
    if k == 0:
        return ()
    return tuple(sorted(int(j) for j in rng.choice(m, size=k, replace=False)))
