"""
Dense primal-dual interior-point solver for the Gram-matrix SDP.

Problem: maximize t subject to G - t*I PSD and <A_i, G> = b_i.

It is solved in the standard form over X (N x N, PSD) and a scalar s >= 0 with
G = X + (s - T) I, where T exceeds -lambda_min of the least-norm solution of the constraints:

    minimize -s   subject to   <A_i, X> + tr(A_i) s = b_i + T tr(A_i)

Search directions use Nesterov-Todd scaling with a predictor-corrector choice of the centering
parameter. At the end, G is projected back onto the affine constraint set in floating point, and
the reported margin is lambda_min(G) of the returned matrix.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from src.errors import ResourceError, StructuralError


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-9
    max_iterations: int = 200
    step_fraction: float = 0.98
    max_dim: int = 400


@dataclass
class SdpProblem:
    """Maximize t with G - t I PSD and <A_i, G> = b_i; constraints are (A_i, b_i) pairs."""

    dim: int
    constraints: List[Tuple[np.ndarray, float]]

    def __post_init__(self):
        for index, (matrix, _) in enumerate(self.constraints):
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (self.dim, self.dim):
                raise StructuralError(f"constraint {index} has shape {matrix.shape}, expected N={self.dim}")
            if not np.array_equal(matrix, matrix.T):
                raise StructuralError(f"constraint {index} is not symmetric")

    def stacked(self):
        matrices = np.array([np.asarray(a, dtype=float) for a, _ in self.constraints])
        rhs = np.array([float(b) for _, b in self.constraints])
        return matrices.reshape(len(self.constraints), self.dim, self.dim), rhs


@dataclass
class SdpSolution:
    G: np.ndarray
    t: float
    primal_residual: float
    duality_gap: float
    status: SdpStatus
    iterations: int = 0
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    removed_constraints: int = 0
    dual_margin: Optional[float] = None


def _independent_rows(vecs, rhs):
    """Indices of a maximal independent subset of rows, and whether the dropped rows are consistent."""
    m = vecs.shape[0]
    if m == 0:
        return np.arange(0), True
    _, r, pivots = linalg.qr(vecs.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return np.arange(0), not np.any(rhs)
    rank = int(np.sum(diag > 1e-10 * diag[0]))
    keep = np.sort(pivots[:rank])
    dropped = np.setdiff1d(np.arange(m), keep)
    consistent = True
    if dropped.size:
        coeffs, *_ = linalg.lstsq(vecs[keep].T, vecs[dropped].T)
        predicted = coeffs.T @ rhs[keep]
        consistent = bool(np.allclose(predicted, rhs[dropped], rtol=1e-9, atol=1e-9 * (1 + np.abs(rhs).max())))
    return keep, consistent


def _max_step(mat, direction):
    lower = linalg.cholesky(mat, lower=True)
    half = linalg.solve_triangular(lower, direction, lower=True)
    scaled = linalg.solve_triangular(lower, half.T, lower=True)
    smallest = linalg.eigvalsh((scaled + scaled.T) / 2).min()
    return np.inf if smallest >= 0 else -1.0 / smallest


def _max_step_scalar(value, direction):
    return np.inf if direction >= 0 else -value / direction


def _polish(G, matrices, rhs):
    vecs = matrices.reshape(len(rhs), -1)
    residual = rhs - vecs @ G.ravel()
    correction, *_ = np.linalg.lstsq(vecs, residual, rcond=None)
    G = G + correction.reshape(G.shape)
    return (G + G.T) / 2


def _interior_point(A, tau, bh, settings):
    m, n, _ = A.shape
    eye = np.eye(n)
    flat = A.reshape(m, -1)
    norms = np.sqrt(np.sum(flat ** 2, axis=1) + tau ** 2)
    xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(bh)) / (1 + norms)))
    zeta = max(10.0, np.sqrt(n), np.max(norms), 1.0)
    X, s = xi * eye, xi
    Z, zs = zeta * eye, zeta
    y = np.zeros(m)

    def apply(mat):
        return flat @ mat.ravel()

    def adjoint(vec):
        return (vec @ flat).reshape(n, n)

    best = None
    status = SdpStatus.NUMERICAL_FAILURE
    iteration = 0
    for iteration in range(1, settings.max_iterations + 1):
        rp = bh - apply(X) - tau * s
        Rd = -Z - adjoint(y)
        rds = -1.0 - zs - tau @ y
        mu = (np.sum(X * Z) + s * zs) / (n + 1)
        pobj, dobj = -s, bh @ y
        rel_p = np.linalg.norm(rp) / (1 + np.linalg.norm(bh))
        rel_d = np.sqrt(np.sum(Rd ** 2) + rds ** 2) / 2
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        score = max(rel_p, rel_d, gap)
        if best is None or score < best[0]:
            best = (score, X.copy(), s, y.copy(), Z.copy(), zs, iteration)
        if score <= settings.tol:
            status = SdpStatus.OPTIMAL
            break
        try:
            lx = linalg.cholesky(X, lower=True)
            lz = linalg.cholesky(Z, lower=True)
            _, sv, vt = linalg.svd(lz.T @ lx)
            scale = (lx @ vt.T) / np.sqrt(sv)
            W = scale @ scale.T
            ws = s / zs
            AW = np.matmul(A, W)
            schur = AW.reshape(m, -1) @ AW.transpose(0, 2, 1).reshape(m, -1).T
            schur = (schur + schur.T) / 2 + ws * np.outer(tau, tau)
            factor = linalg.cho_factor(schur)
            z_inv = linalg.cho_solve((lz, True), eye)
        except (linalg.LinAlgError, ValueError):
            break

        WRdW = W @ Rd @ W

        def direction(sigma):
            Rc = sigma * mu * z_inv - X
            rcs = sigma * mu / zs - s
            rhs = rp - apply(Rc - WRdW) - tau * (rcs - ws * rds)
            dy = linalg.cho_solve(factor, rhs)
            dZ = Rd - adjoint(dy)
            dzs = rds - tau @ dy
            dX = Rc - W @ dZ @ W
            dX = (dX + dX.T) / 2
            ds = rcs - ws * dzs
            return dX, ds, dy, (dZ + dZ.T) / 2, dzs

        def steps(dX, ds, dZ, dzs):
            alpha_p = min(1.0, settings.step_fraction * min(_max_step(X, dX), _max_step_scalar(s, ds)))
            alpha_d = min(1.0, settings.step_fraction * min(_max_step(Z, dZ), _max_step_scalar(zs, dzs)))
            return alpha_p, alpha_d

        try:
            dX, ds, dy, dZ, dzs = direction(0.0)
            alpha_p, alpha_d = steps(dX, ds, dZ, dzs)
            mu_aff = (np.sum((X + alpha_p * dX) * (Z + alpha_d * dZ))
                      + (s + alpha_p * ds) * (zs + alpha_d * dzs)) / (n + 1)
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
            dX, ds, dy, dZ, dzs = direction(sigma)
            alpha_p, alpha_d = steps(dX, ds, dZ, dzs)
        except (linalg.LinAlgError, ValueError):
            break
        if max(alpha_p, alpha_d) < 1e-12:
            break
        X = X + alpha_p * dX
        X = (X + X.T) / 2
        s = s + alpha_p * ds
        y = y + alpha_d * dy
        Z = Z + alpha_d * dZ
        Z = (Z + Z.T) / 2
        zs = zs + alpha_d * dzs

    if status is not SdpStatus.OPTIMAL:
        score, X, s, y, Z, zs, _ = best
        if score <= max(1e-6, np.sqrt(settings.tol)):
            status = SdpStatus.NEAR_OPTIMAL
    gap = abs(-s - bh @ y) / (1 + abs(s) + abs(bh @ y))
    return X, s, y, Z, status, iteration, gap


def solve(problem, tol=None, settings=None):
    """
    Solve an ``SdpProblem``.

    Args:
    problem (SdpProblem): Constraints and Gram size.
    tol (float, optional): Overrides ``settings.tol``.
    settings (SolverSettings, optional): Iteration parameters.

    Returns:
    SdpSolution: The approximate Gram matrix and its margin. A negative margin backed by a PSD
        dual combination S = sum w_i A_i with b.w < 0 is reported as ``infeasible``.
    """
    settings = settings or SolverSettings()
    if tol is not None:
        settings = SolverSettings(tol=tol, max_iterations=settings.max_iterations,
                                  step_fraction=settings.step_fraction, max_dim=settings.max_dim)
    n = problem.dim
    if n < 1:
        raise StructuralError("SDP needs a Gram size of at least 1")
    if n > settings.max_dim:
        raise ResourceError(f"Gram size {n} exceeds the cap of {settings.max_dim}")
    if not problem.constraints:
        raise StructuralError("SDP needs at least one constraint")

    matrices, rhs = problem.stacked()
    vecs = matrices.reshape(len(rhs), -1)
    keep, consistent = _independent_rows(vecs, rhs)
    removed = len(rhs) - len(keep)
    if not consistent:
        return SdpSolution(G=np.zeros((n, n)), t=-np.inf, primal_residual=np.inf,
                           duality_gap=np.inf, status=SdpStatus.INFEASIBLE,
                           dual=np.zeros(len(rhs)), removed_constraints=removed)

    A, b = matrices[keep], rhs[keep]
    least, *_ = np.linalg.lstsq(vecs[keep], b, rcond=None)
    least = least.reshape(n, n)
    shift = 1.0 + np.linalg.norm((least + least.T) / 2)
    tau = np.trace(A, axis1=1, axis2=2)
    bh = b + shift * tau
    row_norms = np.sqrt(np.sum(A.reshape(len(b), -1) ** 2, axis=1) + tau ** 2)
    X, s, y_scaled, Z, status, iterations, gap = _interior_point(
        A / row_norms[:, None, None], tau / row_norms, bh / row_norms, settings)
    y_kept = y_scaled / row_norms

    G = X + (s - shift) * np.eye(n)
    G = _polish((G + G.T) / 2, matrices, rhs)
    t = float(linalg.eigvalsh(G).min())
    residual = float(np.max(np.abs(vecs @ G.ravel() - rhs)))
    dual = np.zeros(len(rhs))
    dual[keep] = y_kept

    margin = None
    if status in (SdpStatus.OPTIMAL, SdpStatus.NEAR_OPTIMAL):
        weights = -y_kept
        combination = np.einsum("k,kij->ij", weights, A)
        trace = float(np.trace(combination))
        if trace > 0:
            margin = float(b @ weights) / trace
            smallest = float(linalg.eigvalsh((combination + combination.T) / 2).min())
            threshold = max(1e-7, 100 * settings.tol) * (1 + np.abs(rhs).max())
            if t < -threshold and margin < -threshold and smallest >= -1e-9 * trace:
                status = SdpStatus.INFEASIBLE
    if status is SdpStatus.OPTIMAL and residual > settings.tol * (1 + np.abs(rhs).max()):
        status = SdpStatus.NEAR_OPTIMAL
    return SdpSolution(G=G, t=t, primal_residual=residual, duality_gap=float(gap), status=status,
                       iterations=iterations, dual=dual, removed_constraints=removed, dual_margin=margin)
