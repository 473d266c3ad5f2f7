import os
import sys
# Add the parent directory of the 'src' directory to sys.path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import unittest
from fractions import Fraction

from src.newton import full_basis, half_newton_points, in_convex_hull, prune_diagonal

TRIANGLE = [(0, 0), (2, 0), (0, 2)]
MOTZKIN = [(4, 2), (2, 4), (2, 2), (0, 0)]


class TestConvexHull(unittest.TestCase):

    def test_interior_point(self):
        self.assertTrue(in_convex_hull((Fraction(1, 2), Fraction(1, 2)), TRIANGLE))

    def test_edge_point(self):
        self.assertTrue(in_convex_hull((1, 1), TRIANGLE))

    def test_outside(self):
        self.assertFalse(in_convex_hull((2, 2), TRIANGLE))
        self.assertFalse(in_convex_hull((-1, 0), TRIANGLE))

    def test_vertex(self):
        self.assertTrue(in_convex_hull((2, 0), TRIANGLE))

    def test_no_vertices(self):
        self.assertFalse(in_convex_hull((0, 0), []))

    def test_segment_in_three_dimensions(self):
        segment = [(0, 0, 0), (2, 2, 2)]
        self.assertTrue(in_convex_hull((1, 1, 1), segment))
        self.assertFalse(in_convex_hull((1, 1, 0), segment))


class TestHalfNewtonPoints(unittest.TestCase):

    def test_two_quartics(self):
        self.assertEqual(half_newton_points([(4, 0), (0, 4)]), [(0, 2), (1, 1), (2, 0)])

    def test_single_square(self):
        self.assertEqual(half_newton_points([(2,)]), [(1,)])

    def test_motzkin(self):
        self.assertEqual(half_newton_points(MOTZKIN), [(0, 0), (1, 1), (1, 2), (2, 1)])

    def test_empty(self):
        self.assertEqual(half_newton_points([]), [])


class TestFullBasis(unittest.TestCase):

    def test_count(self):
        self.assertEqual(len(full_basis(2, 5)), 21)

    def test_order(self):
        self.assertEqual(full_basis(2, 1), [(0, 0), (0, 1), (1, 0)])


class TestPruneDiagonal(unittest.TestCase):

    def test_drops_unreachable_point(self):
        self.assertEqual(prune_diagonal([(0, 0), (1, 1)], {(0, 0), (1, 1)}), [(0, 0)])

    def test_keeps_cross_products(self):
        basis = [(0, 2), (1, 1), (2, 0)]
        self.assertEqual(prune_diagonal(basis, {(0, 4), (4, 0)}), basis)

    def test_repeats_until_stable(self):
        self.assertEqual(prune_diagonal([(0,), (1,), (2,)], {(0,), (2,)}), [(0,), (1,)])


if __name__ == "__main__":
    unittest.main()
