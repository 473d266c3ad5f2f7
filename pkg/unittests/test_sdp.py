import os
import sys
# Add the parent directory of the 'src' directory to sys.path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import unittest

import numpy as np

from src.errors import ResourceError, StructuralError
from src.sdp import SdpProblem, SdpStatus, SolverSettings, solve

SOLVED = (SdpStatus.OPTIMAL, SdpStatus.NEAR_OPTIMAL)


def unit(n, i, j):
    matrix = np.zeros((n, n))
    matrix[i, j] = matrix[j, i] = 1.0
    return matrix


def random_feasible_problem(rng, n):
    """Trace constraint plus random ones, all satisfied by a Gram matrix with eigenvalues >= 1."""
    M = rng.standard_normal((n, n))
    G0 = M @ M.T + np.eye(n)
    constraints = [(np.eye(n), float(np.trace(G0)))]
    for _ in range(rng.integers(1, n + 1)):
        A = rng.standard_normal((n, n))
        A = A + A.T
        constraints.append((A, float(np.sum(A * G0))))
    return SdpProblem(dim=n, constraints=constraints)


class TestSolve(unittest.TestCase):

    def test_pinned_diagonal(self):
        problem = SdpProblem(dim=2, constraints=[(unit(2, 0, 0), 1.0), (unit(2, 1, 1), 1.0)])
        solution = solve(problem)
        self.assertIn(solution.status, SOLVED)
        self.assertAlmostEqual(solution.t, 1.0, places=6)
        self.assertTrue(np.allclose(solution.G, np.eye(2), atol=1e-6))

    def test_one_by_one(self):
        solution = solve(SdpProblem(dim=1, constraints=[(unit(1, 0, 0), 2.0)]))
        self.assertIn(solution.status, SOLVED)
        self.assertAlmostEqual(float(solution.G[0, 0]), 2.0, places=8)

    def test_negative_square_is_infeasible(self):
        solution = solve(SdpProblem(dim=1, constraints=[(unit(1, 0, 0), -1.0)]))
        self.assertEqual(solution.status, SdpStatus.INFEASIBLE)
        self.assertLess(solution.dual_margin, 0)

    def test_random_feasible_problems(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            problem = random_feasible_problem(rng, int(rng.integers(2, 7)))
            _, rhs = problem.stacked()
            solution = solve(problem)
            self.assertIn(solution.status, SOLVED)
            self.assertLessEqual(solution.primal_residual, 1e-8 * (1 + np.abs(rhs).max()))
            self.assertGreaterEqual(solution.t, 1.0 - 1e-4)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(3)
        problem = random_feasible_problem(rng, 4)
        scaled = SdpProblem(dim=4, constraints=[(a, 1000.0 * b) for a, b in problem.constraints])
        plain, big = solve(problem), solve(scaled)
        self.assertIn(plain.status, SOLVED)
        self.assertIn(big.status, SOLVED)
        self.assertAlmostEqual(plain.t, big.t / 1000.0, delta=1e-5 * (1 + abs(plain.t)))

    def test_duplicate_constraint_removed(self):
        problem = SdpProblem(dim=2, constraints=[
            (unit(2, 0, 0), 1.0), (unit(2, 0, 0), 1.0), (unit(2, 1, 1), 1.0)])
        solution = solve(problem)
        self.assertEqual(solution.removed_constraints, 1)
        self.assertIn(solution.status, SOLVED)

    def test_inconsistent_duplicates(self):
        problem = SdpProblem(dim=2, constraints=[(unit(2, 0, 0), 1.0), (unit(2, 0, 0), 2.0)])
        self.assertEqual(solve(problem).status, SdpStatus.INFEASIBLE)


class TestValidation(unittest.TestCase):

    def test_gram_size_cap(self):
        problem = SdpProblem(dim=3, constraints=[(np.eye(3), 3.0)])
        with self.assertRaises(ResourceError):
            solve(problem, settings=SolverSettings(max_dim=2))

    def test_non_symmetric_constraint(self):
        with self.assertRaises(StructuralError):
            SdpProblem(dim=2, constraints=[(np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0)])

    def test_wrong_shape(self):
        with self.assertRaises(StructuralError):
            SdpProblem(dim=2, constraints=[(np.eye(3), 1.0)])

    def test_no_constraints(self):
        with self.assertRaises(StructuralError):
            solve(SdpProblem(dim=2, constraints=[]))


if __name__ == "__main__":
    unittest.main()
