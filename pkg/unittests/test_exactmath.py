import os
import sys
# Add the parent directory of the 'src' directory to sys.path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import unittest
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from src.errors import StructuralError
from src.exactmath import (
    MultiPoly,
    RationalMatrix,
    coefficient_of,
    ldlt,
    poly_mul,
    poly_pow,
    solve_linear,
    substitute,
)

RING = ("a", "b", "c")


def polys(ring=RING, max_exp=2, max_terms=5):
    monomials = st.tuples(*[st.integers(0, max_exp)] * len(ring))
    return st.dictionaries(monomials, st.integers(-100, 100), max_size=max_terms).map(
        lambda terms: MultiPoly(ring, terms))


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def symmetric_matrices(draw, max_size=8):
    n = draw(st.integers(1, max_size))
    entries = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            entries[i][j] = entries[j][i] = draw(rationals)
    return RationalMatrix(entries)


@st.composite
def gram_products(draw, max_size=8):
    n = draw(st.integers(1, max_size))
    k = draw(st.integers(1, n))
    m = RationalMatrix([[draw(rationals) for _ in range(n)] for _ in range(k)])
    return m.transpose() @ m


def reconstruct(result):
    return result.L @ RationalMatrix.diagonal(result.d) @ result.L.transpose()


class TestPolynomials(unittest.TestCase):

    def setUp(self):
        self.a = MultiPoly.variable(RING, "a")
        self.b = MultiPoly.variable(RING, "b")

    def test_binomial_square(self):
        square = poly_mul(self.a + self.b, self.a + self.b)
        self.assertEqual(square, self.a * self.a + self.a * self.b * 2 + self.b * self.b)

    def test_multiplicative_identity(self):
        p = self.a * 3 - self.b + 7
        self.assertEqual(poly_mul(MultiPoly.constant(RING, 1), p), p)

    def test_ring_mismatch(self):
        with self.assertRaises(StructuralError):
            poly_mul(self.a, MultiPoly.variable(("a",), "a"))

    def test_covariance_form_square(self):
        ring = ("L11", "L12", "L22", "t1", "t2")
        v = {name: MultiPoly.variable(ring, name) for name in ring}
        form = v["L11"] * v["t1"] ** 2 + v["L12"] * v["t1"] * v["t2"] * 2 + v["L22"] * v["t2"] ** 2
        square = poly_mul(form, form)
        expected = v["L11"] * v["L22"] * 2 + v["L12"] ** 2 * 4
        # coefficient of t1^2 t2^2 collected by hand
        collected = MultiPoly.zero(ring)
        for monomial, coeff in square.items():
            if monomial[3:] == (2, 2):
                collected = collected + MultiPoly.monomial(ring, monomial[:3] + (0, 0), coeff)
        self.assertEqual(collected, expected)

    def test_power_zero(self):
        self.assertEqual(poly_pow(self.a + 5, 0), MultiPoly.constant(RING, 1))

    def test_power_two(self):
        self.assertEqual(poly_pow(self.a + 1, 2), self.a * self.a + self.a * 2 + 1)

    def test_multinomial_coefficient(self):
        ring = ("t1", "t2")
        t1, t2 = MultiPoly.variable(ring, "t1"), MultiPoly.variable(ring, "t2")
        cube = poly_pow(t1 * t1 + t2 * t2, 3)
        self.assertEqual(coefficient_of(cube, (2, 4)), 3)

    def test_capped_power_keeps_low_terms(self):
        ring = ("t1", "t2")
        t1, t2 = MultiPoly.variable(ring, "t1"), MultiPoly.variable(ring, "t2")
        base = t1 + t2 + 1
        capped = poly_pow(base, 4, cap={"t1": 2})
        full = poly_pow(base, 4)
        for monomial, coeff in full.items():
            if monomial[0] <= 2:
                self.assertEqual(coefficient_of(capped, monomial), coeff)
        self.assertTrue(all(m[0] <= 2 for m in capped.terms))

    def test_coefficient_of(self):
        p = self.a * self.a + self.a * self.b * 2
        self.assertEqual(coefficient_of(p, (1, 1, 0)), 2)
        self.assertEqual(coefficient_of(self.a * self.a, (0, 2, 0)), 0)

    def test_no_zero_coefficients_stored(self):
        p = (self.a + self.b) - self.b
        self.assertEqual(len(p), 1)
        self.assertTrue((self.a - self.a).is_zero())

    def test_to_string(self):
        p = self.a * self.a * 1474200 - self.b * 3 + 94500
        self.assertEqual(p.to_string(), "94500 - 3*b + 1474200*a^2")


class TestSubstitute(unittest.TestCase):

    def test_square_of_shift(self):
        m = MultiPoly.variable(("m",), "m")
        p = MultiPoly.variable(("p",), "p")
        result = substitute(m * m, "m", p * p + 1)
        self.assertEqual(result, p ** 4 + p * p * 2 + 1)

    def test_linear(self):
        m = MultiPoly.variable(("m",), "m")
        p = MultiPoly.variable(("p",), "p")
        self.assertEqual(substitute(m * 2 + 1, "m", p * p + 1), p * p * 2 + 3)

    def test_unknown_variable(self):
        ring = ("a", "b")
        p = MultiPoly.variable(ring, "a") + MultiPoly.variable(ring, "b")
        with self.assertRaises(StructuralError):
            substitute(p, "c", MultiPoly.constant(ring, 1))

    @settings(max_examples=100, deadline=None)
    @given(polys(("a", "m")), polys(("a", "p"), max_terms=3), rationals, rationals)
    def test_substitute_then_evaluate(self, p, q, alpha, beta):
        composed = substitute(p, "m", q)
        direct = p.evaluate({"a": alpha, "m": q.evaluate({"a": alpha, "p": beta})})
        self.assertEqual(composed.evaluate({"a": alpha, "p": beta}), direct)


class TestRingLaws(unittest.TestCase):

    @settings(max_examples=60, deadline=None)
    @given(polys(), polys(), polys())
    def test_distributive(self, p, q, r):
        self.assertEqual((p + q) * r, p * r + q * r)

    @settings(max_examples=60, deadline=None)
    @given(polys(), polys(), polys())
    def test_associative(self, p, q, r):
        self.assertEqual((p * q) * r, p * (q * r))


class TestLdlt(unittest.TestCase):

    def test_identity(self):
        result = ldlt(RationalMatrix.identity(2))
        self.assertEqual(result.L, RationalMatrix.identity(2))
        self.assertEqual(result.d, (1, 1))
        self.assertTrue(result.is_psd)

    def test_one_elimination_step(self):
        result = ldlt(RationalMatrix([[2, 1], [1, 2]]))
        self.assertEqual(result.d, (2, Fraction(3, 2)))
        self.assertTrue(result.is_psd)

    def test_indefinite(self):
        result = ldlt(RationalMatrix([[0, 1], [1, 0]]))
        self.assertEqual(result.verdict, "indefinite")

    def test_negative_pivot(self):
        self.assertFalse(ldlt(RationalMatrix([[1, 0], [0, -1]])).is_psd)

    def test_singular_psd(self):
        result = ldlt(RationalMatrix([[1, 1], [1, 1]]))
        self.assertTrue(result.is_psd)
        self.assertEqual(result.d, (1, 0))

    def test_non_symmetric(self):
        with self.assertRaises(StructuralError):
            ldlt(RationalMatrix([[1, 2], [3, 4]]))

    @settings(max_examples=100, deadline=None)
    @given(symmetric_matrices())
    def test_reconstruction(self, A):
        result = ldlt(A)
        if result.complete:
            self.assertEqual(A.symmetric_permutation(result.permutation), reconstruct(result))

    @settings(max_examples=100, deadline=None)
    @given(gram_products(), st.lists(rationals, min_size=8, max_size=8))
    def test_psd_products(self, A, x):
        result = ldlt(A)
        self.assertTrue(result.is_psd)
        self.assertEqual(A.symmetric_permutation(result.permutation), reconstruct(result))
        self.assertGreaterEqual(A.quadratic_form(x[:A.rows]), 0)


class TestSolveLinear(unittest.TestCase):

    def test_identity(self):
        solution = solve_linear(RationalMatrix.identity(3), [1, Fraction(1, 2), -4])
        self.assertTrue(solution.consistent)
        self.assertEqual(solution.x, (1, Fraction(1, 2), -4))

    def test_minimum_norm(self):
        solution = solve_linear(RationalMatrix([[1, 1]]), [2])
        self.assertEqual(solution.x, (1, 1))
        self.assertEqual(solution.rank, 1)

    def test_inconsistent(self):
        solution = solve_linear(RationalMatrix([[1], [1]]), [1, 2])
        self.assertFalse(solution.consistent)
        self.assertIsNone(solution.x)


if __name__ == "__main__":
    unittest.main()
