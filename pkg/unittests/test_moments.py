import os
import sys
# Add the parent directory of the 'src' directory to sys.path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import random
import unittest
from fractions import Fraction

from src.errors import DomainError, ResourceError, StructuralError
from src.exactmath import MultiPoly
from src.moments import (
    Construction,
    CovarianceForm,
    SymbolicExponent,
    covariance,
    double_factorial,
    exponent_vector,
    gaussian_moment,
    moment_by_coefficient,
    moment_by_wick,
    normalized_power_moment,
    symbolic_moment,
)


def symbolic_form(n):
    """Covariance form whose entries are free variables L{k}{l}, k <= l."""
    names = [f"L{k}{l}" for k in range(1, n + 1) for l in range(k, n + 1)]
    entries = [[None] * n for _ in range(n)]
    for k in range(n):
        for l in range(k, n):
            entries[k][l] = entries[l][k] = MultiPoly.variable(names, f"L{k + 1}{l + 1}")
    return CovarianceForm(ring=tuple(names), entries=tuple(tuple(row) for row in entries))


def random_construction(rng, n):
    rows = []
    for k in range(n):
        row = []
        for j in range(n):
            if j > k:
                row.append(0)
            elif j == k:
                row.append(Fraction(rng.choice([1, 2, 3]), rng.choice([1, 2])))
            elif rng.random() < 0.5:
                row.append(f"x{k + 1}{j + 1}")
            else:
                row.append(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
        rows.append(tuple(row))
    return Construction(tuple(rows))


class TestDoubleFactorial(unittest.TestCase):

    def test_values(self):
        self.assertEqual(double_factorial(-1), 1)
        self.assertEqual(double_factorial(5), 15)
        self.assertEqual(double_factorial(7), 105)

    def test_rejects_even_and_small(self):
        for bad in (4, 0, -3):
            with self.assertRaises(DomainError):
                double_factorial(bad)


class TestExponentVector(unittest.TestCase):

    def test_rejects_zero_and_empty(self):
        with self.assertRaises(DomainError):
            exponent_vector([1, 0])
        with self.assertRaises(DomainError):
            exponent_vector([])


class TestMomentByCoefficient(unittest.TestCase):

    def test_fourth_power(self):
        cov = symbolic_form(1)
        L11 = MultiPoly.variable(cov.ring, "L11")
        self.assertEqual(moment_by_coefficient(cov, (2,)), L11 * L11 * 3)

    def test_two_squares(self):
        cov = symbolic_form(2)
        v = {name: MultiPoly.variable(cov.ring, name) for name in cov.ring}
        self.assertEqual(moment_by_coefficient(cov, (1, 1)), v["L11"] * v["L22"] + v["L12"] * v["L12"] * 2)

    def test_independent_coordinates(self):
        ring = ("d1", "d2", "d3")
        zero = MultiPoly.zero(ring)
        diag = [MultiPoly.variable(ring, name) for name in ring]
        entries = tuple(tuple(diag[k] if k == l else zero for l in range(3)) for k in range(3))
        cov = CovarianceForm(ring=ring, entries=entries)
        m = (2, 1, 3)
        expected = MultiPoly.constant(ring, 1)
        for k, mk in enumerate(m):
            expected = expected * diag[k] ** mk * double_factorial(2 * mk - 1)
        self.assertEqual(moment_by_coefficient(cov, m), expected)

    def test_dimension_mismatch(self):
        with self.assertRaises(StructuralError):
            moment_by_coefficient(symbolic_form(2), (1, 1, 1))

    def test_permutation_equivariance(self):
        cov = symbolic_form(3)
        perm = (2, 0, 1)
        m = (1, 2, 1)
        permuted = CovarianceForm(
            ring=cov.ring,
            entries=tuple(tuple(cov.entries[perm[k]][perm[l]] for l in range(3)) for k in range(3)),
        )
        self.assertEqual(moment_by_coefficient(permuted, tuple(m[p] for p in perm)),
                         moment_by_coefficient(cov, m))


class TestMomentByWick(unittest.TestCase):

    def test_fourth_moment(self):
        self.assertEqual(moment_by_wick(Construction(((1,),)), (2,)), MultiPoly.constant((), 3))

    def test_mixed(self):
        c = Construction(((1, 0), ("a", 1)))
        a = MultiPoly.variable(c.ring, "a")
        self.assertEqual(moment_by_wick(c, (1, 1)), a * a * 3 + 1)

    def test_odd_total_is_zero(self):
        cov = covariance(Construction(((1, 0), ("a", 1))))
        self.assertTrue(gaussian_moment(cov, (2, 1)).is_zero())

    def test_budget(self):
        with self.assertRaises(ResourceError):
            moment_by_wick(Construction(((1,),)), (13,))
        with self.assertRaises(ResourceError):
            moment_by_wick(Construction(((1,),)), (3,), budget=4)

    def test_agrees_with_coefficient_extraction(self):
        rng = random.Random(20240601)
        for _ in range(200):
            n = rng.randint(1, 4)
            m = [1] * n
            for _ in range(rng.randint(0, 6 - n)):
                m[rng.randrange(n)] += 1
            c = random_construction(rng, n)
            self.assertEqual(moment_by_wick(c, m), moment_by_coefficient(covariance(c), m), msg=c.describe())

    def test_row_scaling(self):
        rng = random.Random(7)
        for _ in range(10):
            c = random_construction(rng, 3)
            scale = Fraction(rng.randint(1, 9), rng.randint(1, 9))
            rows = list(c.rows)
            rows[1] = tuple(cell * scale if not isinstance(cell, str) else cell for cell in rows[1])
            if any(isinstance(cell, str) for cell in c.rows[1]):
                continue
            scaled = Construction(tuple(rows))
            m = (1, 2, 1)
            self.assertEqual(moment_by_wick(scaled, m), moment_by_wick(c, m).scale(scale ** 4))


class TestSymbolicMoment(unittest.TestCase):

    def test_pure_power(self):
        c = Construction(((1,),))
        result = symbolic_moment(c, (1,), SymbolicExponent())
        self.assertEqual(result, MultiPoly.constant(("m",), 1))

    def test_normalized_powers(self):
        ring = ("m",)
        m = MultiPoly.variable(ring, "m")
        self.assertEqual(normalized_power_moment(0, ring), MultiPoly.constant(ring, 1))
        self.assertEqual(normalized_power_moment(1, ring), m * 2 + 1)
        self.assertEqual(normalized_power_moment(2, ring), (m * 2 + 1) * (m * 2 + 3))

    def test_impure_row(self):
        c = Construction(((1, "a"), (0, 1)))
        with self.assertRaises(DomainError):
            symbolic_moment(c, (1, 1), SymbolicExponent())

    def test_matches_concrete_exponents(self):
        c = Construction(((1, 0, 0), ("a", 1, 0), ("b", 1, 0)))
        normalized = symbolic_moment(c, (1, 3, 2), SymbolicExponent())
        for value in range(1, 7):
            concrete = moment_by_coefficient(covariance(c), (value, 3, 2))
            specialized = normalized.partial_evaluate({"m": value}).scale(double_factorial(2 * value - 1))
            self.assertEqual(specialized, concrete)


if __name__ == "__main__":
    unittest.main()
