"""Tests for the Hermite machinery: polynomials, crosses, norms, kernel."""

import math
from fractions import Fraction

import numpy as np
import pytest

from gausscollage import (
    HermiteSeries,
    count_hyperbolic_cross,
    gauss_hermite,
    hermite_coefficients,
    hermite_eval,
    hermite_eval_multi,
    hnorm,
    hyperbolic_cross,
    kernel_eval,
    sobolev_norm_oracle,
    truncate,
    xi_for_budget,
)
from gausscollage.hermite import CoefficientConvergenceWarning


def explicit_hermite_coefficients(k):
    """Exact monomial coefficients of the unnormalized polynomial, low to high."""
    prev = [Fraction(1)]
    if k == 0:
        return prev
    cur = [Fraction(0), Fraction(1)]
    for j in range(1, k):
        nxt = [Fraction(0)] + cur  # multiply by x
        for i, c in enumerate(prev):
            nxt[i] -= j * c
        prev, cur = cur, nxt
    return cur


def explicit_hermite(k, x):
    coeffs = explicit_hermite_coefficients(k)
    acc = Fraction(0)
    xf = Fraction(x).limit_denominator(10**12) if not isinstance(x, Fraction) else x
    for c in reversed(coeffs):
        acc = acc * xf + c
    return float(acc) / math.sqrt(math.factorial(k))


class TestHermiteEval:
    def test_low_degrees(self):
        assert hermite_eval(0, 3.7) == 1.0
        assert hermite_eval(1, 2.0) == 2.0
        assert hermite_eval(2, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert hermite_eval(2, 0.0) == pytest.approx(-1.0 / math.sqrt(2), rel=1e-15)

    def test_recurrence_matches_explicit_polynomials(self):
        rng = np.random.RandomState(2)
        xs = rng.uniform(-5, 5, size=100)
        for k in range(0, 11):
            for x in xs[:20]:
                ref = explicit_hermite(k, float(x))
                val = hermite_eval(k, float(x))
                assert val == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_overflow_reported(self):
        with pytest.raises(OverflowError):
            hermite_eval(400, 300.0)

    def test_rejects_bad_degree(self):
        with pytest.raises(ValueError):
            hermite_eval(-1, 0.0)


class TestHermiteMulti:
    def test_zero_index(self):
        assert hermite_eval_multi((0, 0, 0), (0.3, -1.2, 9.0)) == 1.0

    def test_degree_one_product(self):
        a, b = 0.7, -2.3
        assert hermite_eval_multi((1, 1), (a, b)) == pytest.approx(a * b, rel=1e-15)

    def test_orthonormality_quick(self):
        x, w = gauss_hermite(40)
        vals = np.array([[hermite_eval(k, xi) for xi in x] for k in range(8)])
        gram = (vals * w) @ vals.T
        np.testing.assert_allclose(gram, np.eye(8), atol=1e-12)


class TestGaussHermite:
    def test_against_numpy(self):
        from numpy.polynomial.hermite_e import hermegauss

        for n in (3, 8, 21):
            x, w = gauss_hermite(n)
            xr, wr = hermegauss(n)
            np.testing.assert_allclose(x, xr, atol=1e-12)
            np.testing.assert_allclose(w, wr / math.sqrt(2 * math.pi), atol=1e-13)

    def test_moments(self):
        x, w = gauss_hermite(12)
        assert w.sum() == pytest.approx(1.0, abs=1e-13)
        assert w @ x**2 == pytest.approx(1.0, abs=1e-12)
        assert w @ x**4 == pytest.approx(3.0, abs=1e-11)

    def test_symmetry(self):
        x, _ = gauss_hermite(9)
        np.testing.assert_array_equal(x, -x[::-1])
        assert x[4] == 0.0


class TestHyperbolicCross:
    def test_singleton(self):
        for d in (1, 2, 5):
            cross = hyperbolic_cross(1.0, d)
            assert len(cross) == 1
            assert cross.indices.tolist() == [[0] * d]

    def test_d2_xi4(self):
        cross = hyperbolic_cross(4.0, 2)
        assert len(cross) == 8
        expected = {(0, 0), (0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0), (1, 1)}
        assert {tuple(row) for row in cross.indices} == expected

    def test_downward_closed(self):
        cross = hyperbolic_cross(12.0, 3)
        have = {tuple(row) for row in cross.indices}
        for k in have:
            for axis in range(3):
                if k[axis] > 0:
                    smaller = tuple(v - 1 if i == axis else v for i, v in enumerate(k))
                    assert smaller in have

    def test_count_matches_enumeration(self):
        for d in (1, 2, 3):
            for xi in (1, 3, 7, 20):
                assert count_hyperbolic_cross(xi, d) == len(hyperbolic_cross(xi, d))

    def test_growth_band(self):
        # |G(xi)| ~ xi log^(d-1) xi: the normalized ratio stays in a fixed band
        for d in (1, 2, 3):
            ratios = []
            for xi in (10, 100, 1000, 10000):
                ratios.append(count_hyperbolic_cross(xi, d) / (xi * math.log(xi) ** (d - 1)))
            assert 0.2 <= min(ratios) and max(ratios) <= 3.0
            assert max(ratios) / min(ratios) <= 4.0

    def test_cap(self):
        with pytest.raises(ValueError):
            hyperbolic_cross(10**4, 4, cap=1000)


class TestXiForBudget:
    def test_unit(self):
        for d in (1, 2, 4):
            assert xi_for_budget(1, d) == 1

    def test_d2_example(self):
        assert count_hyperbolic_cross(4, 2) == 8
        assert count_hyperbolic_cross(5, 2) == 10
        assert xi_for_budget(8, 2) == 4
        assert xi_for_budget(9, 2) == 4

    def test_defining_property(self):
        rng = np.random.RandomState(17)
        for _ in range(50):
            d = int(rng.randint(1, 4))
            n = int(rng.randint(1, 5000))
            xi = xi_for_budget(n, d)
            assert count_hyperbolic_cross(xi, d) <= n
            assert count_hyperbolic_cross(xi + 1, d) > n


def random_series(rng, d, max_index=9, terms=12):
    coeffs = {}
    for _ in range(terms):
        k = tuple(int(v) for v in rng.randint(0, max_index + 1, size=d))
        coeffs[k] = float(rng.randn())
    return HermiteSeries(d, coeffs)


class TestTruncate:
    def test_projection_identity(self):
        rng = np.random.RandomState(7)
        f = random_series(rng, 2)
        once = truncate(f, 6.0)
        twice = truncate(once, 6.0)
        assert once.coeffs == twice.coeffs

    def test_inside_support_unchanged(self):
        f = HermiteSeries(2, {(1, 1): 2.0, (0, 3): -1.0})
        assert truncate(f, 4.0).coeffs == f.coeffs

    def test_parseval_tail(self):
        rng = np.random.RandomState(8)
        for _ in range(30):
            d = int(rng.randint(1, 3))
            f = random_series(rng, d)
            xi = float(rng.randint(1, 30))
            kept = truncate(f, xi)
            tail_sq = math.fsum(
                v * v for k, v in f.items_sorted() if k not in kept.coeffs
            )
            identity = hnorm(f, 0.0) ** 2 - hnorm(kept, 0.0) ** 2
            assert abs(identity - tail_sq) <= 1e-14 * max(1.0, tail_sq)

    def test_projection_bound_constant_one(self):
        rng = np.random.RandomState(9)
        for _ in range(50):
            d = int(rng.randint(1, 3))
            alpha = int(rng.randint(1, 3))
            f = random_series(rng, d)
            xi = float(rng.randint(1, 20))
            kept = truncate(f, xi)
            tail_sq = hnorm(f, 0.0) ** 2 - hnorm(kept, 0.0) ** 2
            assert tail_sq <= xi ** (-alpha) * hnorm(f, alpha) ** 2


class TestNorms:
    def test_hnorm_examples(self):
        assert hnorm(HermiteSeries(1, {}), 1.0) == 0.0
        assert hnorm(HermiteSeries(1, {(2,): 1.0}), 1.0) == pytest.approx(math.sqrt(3), rel=1e-15)
        assert hnorm(HermiteSeries(2, {(1, 1): 1.0}), 2.0) == pytest.approx(4.0, rel=1e-15)

    def test_hnorm_zero_is_l2(self):
        rng = np.random.RandomState(10)
        f = random_series(rng, 2)
        assert hnorm(f, 0.0) == pytest.approx(f.l2_norm(), rel=1e-15)

    def test_oracle_examples(self):
        assert sobolev_norm_oracle(HermiteSeries(1, {(2,): 1.0}), 1) == pytest.approx(
            math.sqrt(3), rel=1e-15
        )
        for alpha in (1, 2, 3):
            assert sobolev_norm_oracle(HermiteSeries(1, {(0,): 1.0}), alpha) == 1.0

    def test_oracle_matches_differentiate_then_parseval(self):
        rng = np.random.RandomState(12)
        for _ in range(40):
            d = int(rng.randint(1, 3))
            alpha = int(rng.randint(1, 3))
            f = random_series(rng, d)
            total = 0.0
            for r in np.ndindex(*([alpha + 1] * d)):
                deriv = {}
                for k, v in f.coeffs.items():
                    if all(kj >= rj for kj, rj in zip(k, r)):
                        shifted = tuple(kj - rj for kj, rj in zip(k, r))
                        factor = math.prod(
                            math.sqrt(math.perm(kj, rj)) for kj, rj in zip(k, r)
                        )
                        deriv[shifted] = deriv.get(shifted, 0.0) + factor * v
                total += math.fsum(v * v for v in deriv.values())
            assert sobolev_norm_oracle(f, alpha) ** 2 == pytest.approx(total, rel=1e-10)

    def test_equivalence_band(self):
        rng = np.random.RandomState(13)
        for d in (1, 2):
            for alpha in (1, 2):
                # per-coordinate bounds of (sum_r perm(k,r)) / (k+1)^alpha
                per_axis = [
                    sum(math.perm(k, r) for r in range(min(alpha, k) + 1)) / (k + 1) ** alpha
                    for k in range(0, 200)
                ]
                lo, hi = min(per_axis) ** d, max(per_axis) ** d
                for _ in range(25):
                    f = random_series(rng, d)
                    ratio = sobolev_norm_oracle(f, alpha) ** 2 / hnorm(f, alpha) ** 2
                    assert lo - 1e-12 <= ratio <= hi + 1e-12


class TestHermiteCoefficients:
    def test_recovers_basis_function(self):
        f = lambda x: hermite_eval(3, float(x[0]))
        series = hermite_coefficients(f, 1, 5, 8)
        for k, v in series.items_sorted():
            target = 1.0 if k == (3,) else 0.0
            assert v == pytest.approx(target, abs=1e-10)

    def test_linear_and_quadratic(self):
        s1 = hermite_coefficients(lambda x: float(x[0]), 1, 4, 8)
        assert s1.coeffs[(1,)] == pytest.approx(1.0, abs=1e-12)
        assert all(abs(v) < 1e-12 for k, v in s1.coeffs.items() if k != (1,))
        s2 = hermite_coefficients(lambda x: float(x[0]) ** 2, 1, 4, 8)
        assert s2.coeffs[(0,)] == pytest.approx(1.0, abs=1e-12)
        assert s2.coeffs[(2,)] == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_d2_product(self):
        f = lambda x: float(x[0]) * float(x[1])
        series = hermite_coefficients(f, 2, 3, 6)
        assert series.coeffs[(1, 1)] == pytest.approx(1.0, abs=1e-11)

    def test_warns_on_nonconverged(self):
        with pytest.warns(CoefficientConvergenceWarning):
            hermite_coefficients(lambda x: abs(float(x[0])), 1, 4, 6)

    def test_validation(self):
        with pytest.raises(ValueError):
            hermite_coefficients(lambda x: 1.0, 1, 5, 4)


class TestKernel:
    def test_symmetry_exact(self):
        assert kernel_eval(0.4, -1.3, 2.0, 60) == kernel_eval(-1.3, 0.4, 2.0, 60)

    def test_single_term(self):
        assert kernel_eval(0.7, -0.2, 2.0, 0) == 1.0

    def test_trace_converges_to_zeta(self):
        # with quadrature exact to degree 2m, the trace equals the partial zeta
        # sum, which climbs to zeta(2) = pi^2/6 as m grows
        traces = []
        for m in (12, 25, 50):
            x, w = gauss_hermite(m + 1)
            trace = math.fsum(w[i] * kernel_eval(x[i], x[i], 2.0, m) for i in range(len(x)))
            partial = math.fsum((k + 1.0) ** -2 for k in range(m + 1))
            assert trace == pytest.approx(partial, abs=1e-9)
            assert abs(trace - math.pi**2 / 6) <= 1.5 / (m + 1)
            traces.append(trace)
        assert traces[0] < traces[1] < traces[2] < math.pi**2 / 6

    def test_d2_factorizes(self):
        x = np.array([0.3, -0.8])
        y = np.array([1.1, 0.2])
        prod = kernel_eval(x[0], y[0], 2.5, 40) * kernel_eval(x[1], y[1], 2.5, 40)
        assert kernel_eval(x, y, 2.5, 40) == pytest.approx(prod, rel=1e-14)

    def test_rejects_low_alpha(self):
        with pytest.raises(ValueError):
            kernel_eval(0.0, 0.0, 1.0, 10)


class TestSeriesSerialization:
    def test_json_sorted(self, tmp_path):
        import json

        f = HermiteSeries(2, {(3, 0): 1.0, (0, 1): -2.0, (1, 1): 0.5})
        path = tmp_path / "series.json"
        f.to_json(path)
        data = json.loads(path.read_text())
        assert data["d"] == 2
        ks = [tuple(entry["k"]) for entry in data["coeffs"]]
        assert ks == sorted(ks)
