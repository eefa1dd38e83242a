"""Tests for the partition of unity, collage assembly, and rule application."""

import math

import numpy as np
import pytest

from gausscollage import (
    IntegrationError,
    RateParams,
    bump_partition,
    collage_direct,
    collage_partition,
    gaussian_density,
    integrate,
)
from gausscollage.wce import base_family_factory


def smolyak_family(d, alpha, psi):
    return base_family_factory("smolyak", d, alpha, psi)


class TestBumpPartition:
    def test_value_one_at_cell_center(self):
        for d in (1, 2, 3):
            part = bump_partition(1.5, d)
            k = np.zeros(d)
            assert part.phi(k, k) == 1.0
            k2 = np.arange(1.0, d + 1.0)
            assert part.phi(k2, k2) == 1.0

    def test_sums_to_one(self):
        rng = np.random.RandomState(21)
        for d in (1, 2, 3):
            part = bump_partition(1.3, d)
            for _ in range(200):
                x = rng.uniform(-4, 4, size=d)
                assert abs(part.sum_at(x) - 1.0) <= 1e-12

    def test_vanishes_on_cell_boundary(self):
        part = bump_partition(1.5, 2)
        k = np.array([1.0, -2.0])
        # a point on each face of the support box
        for axis in (0, 1):
            for side in (-1.0, 1.0):
                x = k + np.array([0.1, -0.2])
                x[axis] = k[axis] + side * 0.75
                assert part.phi(k, x) == 0.0

    def test_range_and_support(self):
        part = bump_partition(1.9, 2)
        rng = np.random.RandomState(5)
        for _ in range(200):
            x = rng.uniform(-3, 3, size=2)
            v = part.phi(np.array([0.0, 0.0]), x)
            assert 0.0 <= v <= 1.0
            if np.any(np.abs(x) >= 0.95):
                assert v == 0.0

    def test_rejects_bad_theta(self):
        for theta in (1.0, 2.0, 0.5, 2.5):
            with pytest.raises(ValueError):
                bump_partition(theta, 1)


class TestCollageDirect:
    def test_unit_budget_gives_empty_rule(self):
        params = RateParams(alpha=2, p=2.0, a=2.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 2, 3), 1.0, params, 1 / 6)
        assert len(rule) == 0
        assert integrate(rule, lambda x: math.exp(x[0])) == 0.0

    def test_center_weight_is_density(self):
        # a single-node base at the cube center with unit weight turns into g(k)
        params = RateParams(alpha=1, p=2.0, a=1.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 1, 0), 40.0, params, 1 / 6)
        at_origin = np.where((rule.cells[:, 0] == 0) & (np.abs(rule.nodes[:, 0]) < 1e-15))[0]
        assert len(at_origin) == 1
        base_m = int(rule.schedule.budget((0,)))
        base = smolyak_family(1, 1, 0)(base_m)
        j = int(rule.base_index[at_origin[0]])
        expected = base.weights[j] * gaussian_density(np.array([0.0]))
        assert rule.weights[at_origin[0]] == pytest.approx(expected, rel=1e-15)

    def test_budget_and_ball(self):
        for d in (1, 2):
            params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=d)
            rule = collage_direct(smolyak_family(d, 2, 3), 2000.0, params, 1 / 6)
            assert 0 < len(rule) <= 2000
            assert rule.max_node_radius() <= rule.ball_radius_bound() + 1e-12
            assert rule.ball_radius_bound() == pytest.approx(
                math.sqrt(d) / 2 + rule.schedule.xi
            )

    def test_weights_recompute(self):
        params = RateParams(alpha=2, p=2.0, a=2.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 2, 3), 600.0, params, 1 / 6)
        cache = {}
        for i in range(len(rule)):
            k = tuple(int(v) for v in rule.cells[i])
            m = int(rule.schedule.budget(k))
            if m not in cache:
                cache[m] = smolyak_family(1, 2, 3)(m)
            base = cache[m]
            j = int(rule.base_index[i])
            expected = base.weights[j] * gaussian_density(rule.nodes[i])
            if expected != 0.0:
                assert rule.weights[i] == pytest.approx(expected, rel=1e-15)
            else:
                assert rule.weights[i] == 0.0

    def test_rejects_small_n(self):
        params = RateParams(alpha=1, p=2.0, a=1.0, b=0.0, d=1)
        with pytest.raises(ValueError):
            collage_direct(smolyak_family(1, 1, 3), 0.5, params, 1 / 6)


class TestCollagePartition:
    def test_weights_recompute(self):
        theta = 1.5
        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=1)
        rule = collage_partition(smolyak_family(1, 2, 3), 300.0, theta, params, 1 / 6)
        assert len(rule) > 0
        part = bump_partition(theta, 1)
        cache = {}
        for i in range(len(rule)):
            k = tuple(int(v) for v in rule.cells[i])
            m = int(rule.schedule.budget(k))
            if m not in cache:
                cache[m] = smolyak_family(1, 2, 3)(m)
            base = cache[m]
            j = int(rule.base_index[i])
            x = rule.nodes[i]
            expected = (
                theta * base.weights[j] * gaussian_density(x) * part.phi(np.array(k, float), x)
            )
            if expected != 0.0:
                assert rule.weights[i] == pytest.approx(expected, rel=1e-14)
            else:
                assert rule.weights[i] == 0.0

    def test_support_edge_weight_zero(self):
        # a base node on the cube boundary dilates onto the support boundary
        theta = 1.5
        params = RateParams(alpha=1, p=2.0, a=1.0, b=0.0, d=1)
        rule = collage_partition(smolyak_family(1, 1, 0), 500.0, theta, params, 1 / 6)
        edge = np.abs(np.abs(rule.nodes[:, 0] - rule.cells[:, 0]) - theta / 2) < 1e-15
        assert edge.any()
        assert np.all(rule.weights[edge] == 0.0)

    def test_ball_bound(self):
        theta = 1.9
        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=2)
        rule = collage_partition(smolyak_family(2, 2, 0), 2000.0, theta, params, 1 / 6)
        assert rule.max_node_radius() <= theta * math.sqrt(2) / 2 + rule.schedule.xi + 1e-12
        assert len(rule) <= 2000

    def test_converges_on_smooth_integrand(self):
        # also pins the dilation Jacobian: with theta^(d-1) missing, the
        # weight sums would head to 1/theta instead of 1
        params = RateParams(alpha=2, p=2.0, a=2.0, b=0.0, d=1)
        fam = smolyak_family(1, 2, 3)
        errs = []
        for n in (2048.0, 8192.0, 32768.0):
            rule = collage_partition(fam, n, 1.5, params, 1 / 6)
            errs.append(abs(integrate(rule, lambda x: math.exp(x[0])) - math.exp(0.5)))
        assert errs[2] < errs[0] / 100
        assert errs[2] < 1e-8
        final = collage_partition(fam, 32768.0, 1.5, params, 1 / 6)
        assert final.weight_sum() == pytest.approx(1.0, abs=1e-6)

    def test_rejects_bad_theta(self):
        params = RateParams(alpha=1, p=2.0, a=1.0, b=0.0, d=1)
        for theta in (1.0, 2.0):
            with pytest.raises(ValueError):
                collage_partition(smolyak_family(1, 1, 3), 100.0, theta, params, 1 / 6)


class TestIntegrate:
    def test_constant_returns_weight_sum(self):
        params = RateParams(alpha=2, p=2.0, a=2.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 2, 3), 400.0, params, 1 / 6)
        assert integrate(rule, lambda x: 1.0) == pytest.approx(rule.weight_sum(), abs=1e-15)

    def test_gaussian_moment_d1(self):
        params = RateParams(alpha=2, p=2.0, a=2.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 2, 3), 1024.0, params, 1 / 6)
        val = integrate(rule, lambda x: math.exp(x[0]))
        assert val == pytest.approx(math.exp(0.5), abs=1e-3)

    def test_monotone_saturation(self):
        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=1)
        fam = smolyak_family(1, 2, 3)
        errs = []
        for j in range(5, 13):
            rule = collage_direct(fam, float(2**j), params, 1 / 6)
            errs.append(abs(integrate(rule, lambda x: math.exp(x[0])) - math.exp(0.5)))
        for i in range(2, len(errs)):
            assert max(errs[i:]) < errs[i - 2]

    def test_reports_offending_node(self):
        params = RateParams(alpha=1, p=2.0, a=1.0, b=0.0, d=1)
        rule = collage_direct(smolyak_family(1, 1, 0), 50.0, params, 1 / 6)

        def bad(x):
            if x[0] > 0.9:
                raise FloatingPointError("boom")
            return 1.0

        with pytest.raises(IntegrationError) as err:
            integrate(rule, bad)
        assert err.value.node[0] > 0.9

    def test_deterministic(self):
        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=2)
        rule = collage_direct(smolyak_family(2, 2, 0), 800.0, params, 1 / 6)
        f = lambda x: math.cos(x[0]) * math.cos(x[1])
        assert integrate(rule, f) == integrate(rule, f)


class TestCollageSerialization:
    def test_csv_has_provenance_columns(self, tmp_path):
        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=2)
        rule = collage_direct(smolyak_family(2, 2, 0), 300.0, params, 1 / 6)
        path = tmp_path / "rule.csv"
        rule.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "x1,x2,weight,cell_k1,cell_k2,base_index"

    def test_json_has_schedule(self, tmp_path):
        import json

        params = RateParams(alpha=2, p=2.0, a=1.0, b=0.0, d=1)
        rule = collage_partition(smolyak_family(1, 2, 3), 120.0, 1.5, params, 1 / 6)
        path = tmp_path / "rule.json"
        rule.to_json(path)
        data = json.loads(path.read_text())
        assert data["domain"] == "gaussian-Rd"
        assert data["variant"] == "partition"
        assert len(data["cells"]) == len(rule)
        assert len(data["base_index"]) == len(rule)
        assert data["schedule"]["d"] == 1
