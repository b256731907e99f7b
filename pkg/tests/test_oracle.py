"""Exhaustive rejection table against direct per-set enumeration."""

from itertools import combinations

import numpy as np
import pytest

from sumtdp import (
    RejectionTable,
    StatisticMatrix,
    TestConfig,
    all_overlapping_rejected,
    center,
    max_nonrejected_overlap,
    reject,
    subset_quantile,
)
from tests.util import random_instance, random_subset


class TestToyTable:
    def test_max_overlap(self, toy_centered, toy_cfg):
        table = RejectionTable(toy_centered, toy_cfg)
        assert table.max_nonrejected_overlap((0, 1)) == 1

    def test_all_overlapping(self, toy_centered, toy_cfg):
        table = RejectionTable(toy_centered, toy_cfg)
        assert not table.all_overlapping_rejected((0, 1), 1)
        assert table.all_overlapping_rejected((0, 1), 2)

    def test_module_wrappers(self, toy_centered, toy_cfg):
        assert max_nonrejected_overlap(toy_centered, (0, 1), toy_cfg) == 1
        assert all_overlapping_rejected(toy_centered, (0, 1), 2, toy_cfg)

    def test_quantiles_match_direct(self, toy_centered, toy_cfg):
        table = RejectionTable(toy_centered, toy_cfg)
        m = toy_centered.n_hyps
        for mask in range(1, 1 << m):
            sub = tuple(i for i in range(m) if mask >> i & 1)
            direct = subset_quantile(toy_centered, sub, toy_cfg)
            assert table.quantiles[mask] == pytest.approx(direct)
            assert table.rejected[mask] == reject(toy_centered, sub, toy_cfg)

    def test_empty_set_never_rejected(self, toy_centered, toy_cfg):
        table = RejectionTable(toy_centered, toy_cfg)
        assert not table.rejected[0]
        assert table.quantiles[0] == 0.0


class TestAgainstEnumeration:
    def test_overlap_counts(self):
        rng = np.random.default_rng(20)
        for _ in range(15):
            stats, cfg = random_instance(rng, max_hyps=7, max_transforms=24)
            cen = center(stats)
            table = RejectionTable(cen, cfg)
            m = stats.n_hyps
            sub = random_subset(rng, m)
            best = 0
            for mask in range(1, 1 << m):
                vset = frozenset(i for i in range(m) if mask >> i & 1)
                if not reject(cen, tuple(sorted(vset)), cfg):
                    best = max(best, len(vset & set(sub)))
            assert table.max_nonrejected_overlap(sub) == best

    def test_all_overlapping_consistent_with_max(self):
        rng = np.random.default_rng(21)
        for _ in range(15):
            stats, cfg = random_instance(rng, max_hyps=7, max_transforms=24)
            table = RejectionTable(center(stats), cfg)
            sub = random_subset(rng, stats.n_hyps)
            q = table.max_nonrejected_overlap(sub)
            for z in range(0, len(sub) + 2):
                assert table.all_overlapping_rejected(sub, z) == (z > q)

    def test_min_quantile_brute_force(self):
        rng = np.random.default_rng(22)
        stats, cfg = random_instance(rng, max_hyps=6, max_transforms=16)
        cen = center(stats)
        table = RejectionTable(cen, cfg)
        m = stats.n_hyps
        sub = random_subset(rng, m)
        for size in range(1, m + 1):
            for z in range(1, len(sub) + 1):
                vals = [
                    subset_quantile(cen, v, cfg)
                    for v in combinations(range(m), size)
                    if len(set(v) & set(sub)) >= z
                ]
                got = table.min_quantile(sub, z, size)
                if not vals:
                    assert np.isnan(got)
                else:
                    assert got == pytest.approx(min(vals))


class TestLimits:
    def test_too_many_columns(self):
        stats = StatisticMatrix(np.zeros((4, 13)))
        cfg = TestConfig(0.4, 4)
        with pytest.raises(ValueError, match="12 columns"):
            RejectionTable(center(stats), cfg)

    def test_too_many_rows(self):
        stats = StatisticMatrix(np.zeros((65, 3)))
        cfg = TestConfig(0.4, 65)
        with pytest.raises(ValueError, match="64 rows"):
            RejectionTable(center(stats), cfg)

    def test_row_count_mismatch(self, toy_centered):
        with pytest.raises(ValueError, match="disagree"):
            RejectionTable(toy_centered, TestConfig(0.4, 7))
