"""Single-level Smolyak interpolation and quadrature."""

import itertools

import numpy as np
import pytest

from hermgrid.errors import EmptyIndexSet, NotDownwardClosed
from hermgrid.hermite import gauss_hermite_rule, hermite_eval
from hermgrid.indexset import IndexSet, MultiIndex, degree_weight
from hermgrid.smolyak import (
    HermitePolynomial,
    combination_coeffs,
    evaluation_point_count,
    interpolant_eval,
    interpolate,
    l2_norm,
    quadrature,
    sparse_grid_points,
    zero_polynomial,
)

from util import monomial_map, pad, random_downward_closed, tensor_moment

mi = MultiIndex.from_dict


def ladder(n, dim=0):
    """1-d index ladder {0, 1, ..., n} in the given dimension."""
    return IndexSet(
        [MultiIndex()] + [mi({dim: k}) for k in range(1, n + 1)]
    )


class TestCombination:
    def test_single_member(self):
        terms = combination_coeffs(IndexSet([MultiIndex()])).terms
        assert terms == {MultiIndex(): 1}

    def test_univariate_ladder_telescopes(self):
        terms = combination_coeffs(ladder(2)).terms
        assert terms == {mi({0: 2}): 1}

    def test_cross(self):
        lam = IndexSet([MultiIndex(), mi({0: 1}), mi({1: 1})])
        terms = combination_coeffs(lam).terms
        assert terms == {MultiIndex(): -1, mi({0: 1}): 1, mi({1: 1}): 1}

    def test_coefficients_sum_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            lam = random_downward_closed(rng, 3, 20)
            assert sum(combination_coeffs(lam).terms.values()) == 1

    def test_requires_downward_closed_nonempty(self):
        with pytest.raises(NotDownwardClosed):
            combination_coeffs(IndexSet([mi({0: 1})]))
        with pytest.raises(EmptyIndexSet):
            combination_coeffs(IndexSet([]))


class TestSparseGrid:
    def test_origin_only(self):
        grid = sparse_grid_points(IndexSet([MultiIndex()]))
        assert len(grid.points) == 1
        np.testing.assert_array_equal(grid.points[0], [0.0])

    def test_union_vs_evaluation_points(self):
        grid = sparse_grid_points(ladder(1))
        assert sorted(float(p[0]) for p in grid.points) == pytest.approx([-1.0, 0.0, 1.0])
        assert sorted(float(p[0]) for p in grid.evaluation_points) == pytest.approx([-1.0, 1.0])

    def test_five_point_union(self):
        grid = sparse_grid_points(ladder(2))
        got = sorted(float(p[0]) for p in grid.points)
        expected = sorted([0.0, -1.0, 1.0, -np.sqrt(3), np.sqrt(3)])
        np.testing.assert_allclose(got, expected, atol=1e-14)

    def test_point_count_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            lam = random_downward_closed(rng, 3, 20)
            expansion = combination_coeffs(lam)
            bound = sum(degree_weight(nu, 1.0, 1.0) for nu in expansion.terms)
            assert evaluation_point_count(lam) <= bound + 1e-9


class TestInterpolate:
    def test_constant(self):
        poly = interpolate(IndexSet([MultiIndex()]), lambda y: 3.0)
        assert poly.coefficients.keys() == {MultiIndex()}
        assert poly.eval([0.4])[0] == pytest.approx(3.0)

    def test_square_in_hermite_basis(self):
        poly = interpolate(ladder(2), lambda y: y[0] ** 2)
        assert poly.coefficient(MultiIndex())[0] == pytest.approx(1.0, abs=1e-12)
        assert poly.coefficient(mi({0: 2}))[0] == pytest.approx(np.sqrt(2), rel=1e-12)
        assert abs(poly.coefficient(mi({0: 1}))[0]) < 1e-14
        assert interpolant_eval(poly, [2.0])[0] == pytest.approx(4.0, rel=1e-12)

    def test_truncation_error_against_dense_quadrature(self):
        # distance of H_3 to its degree-2 interpolant, measured two ways
        target = lambda y: hermite_eval(3, float(y[0]))
        poly = interpolate(ladder(2), target)
        diff_sq = poly.plus(
            HermitePolynomial({mi({0: 3}): np.array([-1.0])}, 1), sign=1.0
        )
        parseval = diff_sq.l2_norm()
        rule = gauss_hermite_rule(40)
        vals = np.array([target([x]) - poly.eval([x])[0] for x in rule.nodes])
        dense = np.sqrt(np.sum(rule.weights * vals ** 2))
        assert parseval == pytest.approx(dense, rel=1e-10)

    def test_lagrange_form_agreement(self):
        lam = IndexSet(
            [MultiIndex(), mi({0: 1}), mi({1: 1}), mi({0: 1, 1: 1}), mi({0: 2})]
        )
        u = lambda y: float(np.sin(y[0]) + y[1] ** 2 + 0.3 * y[0] * y[1])
        poly = interpolate(lam, u)
        expansion = combination_coeffs(lam)
        rng = np.random.default_rng(2)
        for _ in range(20):
            y = rng.uniform(-3, 3, 2)
            direct = 0.0
            for nu, sigma in expansion.terms.items():
                axes = [gauss_hermite_rule(e).nodes for _, e in nu.entries]
                term = 0.0
                for combo in itertools.product(*[range(a.size) for a in axes]):
                    point = np.zeros(2)
                    weight = 1.0
                    for (dim, _), pick, nodes in zip(nu.entries, combo, axes):
                        point[dim] = nodes[pick]
                        for other in range(nodes.size):
                            if other != pick:
                                weight *= (y[dim] - nodes[other]) / (
                                    nodes[pick] - nodes[other]
                                )
                    term += u(point) * weight
                direct += sigma * term
            assert poly.eval(y)[0] == pytest.approx(direct, rel=1e-10, abs=1e-10)

    def test_polynomial_reproduction_randomized(self):
        rng = np.random.default_rng(17)
        for _ in range(8):
            lam = random_downward_closed(rng, 3, 15)
            coeffs = {nu: rng.uniform(-2, 2) for nu in lam}

            def u(y):
                return sum(c * monomial_map(nu)(y)[0] for nu, c in coeffs.items())

            poly = interpolate(lam, u)
            scale = 1.0 + sum(abs(c) for c in coeffs.values())
            for _ in range(20):
                y = rng.uniform(-3, 3, 3)
                assert abs(poly.eval(y)[0] - u(y)) <= 1e-9 * scale

    def test_vector_outputs_componentwise(self):
        poly = interpolate(ladder(2), lambda y: [y[0] ** 2, 2.0])
        np.testing.assert_allclose(
            poly.coefficient(mi({0: 2})), [np.sqrt(2), 0.0], atol=1e-13
        )
        np.testing.assert_allclose(poly.eval([1.5]), [2.25, 2.0], rtol=1e-12)

    def test_interpolant_eval_examples(self):
        assert interpolant_eval(
            HermitePolynomial({MultiIndex(): np.array([2.5])}, 1), [9.9]
        )[0] == pytest.approx(2.5)
        poly = HermitePolynomial(
            {mi({0: 2}): np.array([np.sqrt(2)]), MultiIndex(): np.array([1.0])}, 1
        )
        assert interpolant_eval(poly, [2.0])[0] == pytest.approx(4.0)
        lin = HermitePolynomial({mi({0: 1}): np.array([1.0])}, 1)
        assert interpolant_eval(lin, [-1.5])[0] == pytest.approx(-1.5)


class TestQuadrature:
    def test_odd_monomial_outside_set(self):
        assert quadrature(IndexSet([MultiIndex()]), lambda y: y[0])[0] == 0.0

    def test_second_moment(self):
        assert quadrature(ladder(2), lambda y: y[0] ** 2)[0] == pytest.approx(1.0)

    def test_lognormal_moment(self):
        got = quadrature(ladder(10), lambda y: np.exp(0.5 * y[0]))[0]
        assert got == pytest.approx(np.exp(0.125), abs=1e-10)

    def test_exactness_on_set_and_unit_exponents(self):
        rng = np.random.default_rng(23)
        for _ in range(8):
            lam = random_downward_closed(rng, 3, 15)
            for nu in lam:
                got = quadrature(lam, monomial_map(nu))[0]
                assert got == pytest.approx(tensor_moment(nu), abs=1e-9)
            # indices with a unit exponent are integrated exactly even outside
            probe = mi({0: 1, 1: 2})
            got = quadrature(lam, monomial_map(probe))[0]
            assert got == pytest.approx(0.0, abs=1e-9)

    def test_matches_constant_coefficient(self):
        rng = np.random.default_rng(31)
        for _ in range(6):
            lam = random_downward_closed(rng, 2, 12)
            u = lambda y: float(np.exp(0.3 * pad(y, 2)[0]) * np.cos(0.5 * pad(y, 2)[1]))
            q = quadrature(lam, u)[0]
            c = interpolate(lam, u).coefficient(MultiIndex())[0]
            assert abs(q - c) <= 1e-12


class TestNorms:
    def test_examples(self):
        assert l2_norm(HermitePolynomial({MultiIndex(): np.array([3.0])}, 1)) == 3.0
        poly = HermitePolynomial(
            {MultiIndex(): np.array([1.0]), mi({0: 2}): np.array([np.sqrt(2)])}, 1
        )
        assert l2_norm(poly) == pytest.approx(np.sqrt(3.0), rel=1e-14)
        assert l2_norm(zero_polynomial()) == 0.0

    def test_interpolant_norm_bounded_by_degree_weight(self):
        rng = np.random.default_rng(41)
        for _ in range(6):
            lam = random_downward_closed(rng, 2, 12)
            entries = {
                0: int(rng.integers(0, 4)),
                1: int(rng.integers(0, 4)),
            }
            mu = MultiIndex.from_dict({d: e for d, e in entries.items() if e})
            if mu.order > 6:
                continue
            target = lambda y: float(
                np.prod([hermite_eval(e, y[d]) for d, e in mu.entries] or [1.0])
            )
            poly = interpolate(lam, target)
            assert poly.l2_norm() <= degree_weight(mu, 3.0, 1.0) * (1 + 1e-10)


class TestCsv:
    def test_roundtrip(self):
        poly = HermitePolynomial(
            {MultiIndex(): np.array([1.0, -2.0]), mi({0: 2, 3: 1}): np.array([0.25, 3.5])},
            2,
        )
        text = poly.to_csv()
        assert text.splitlines()[0] == "nu,coeff_0,coeff_1"
        back = HermitePolynomial.from_csv(text)
        assert back.output_dim == 2
        assert set(back.coefficients) == set(poly.coefficients)
        for nu in poly.coefficients:
            np.testing.assert_array_equal(back.coefficient(nu), poly.coefficient(nu))
