"""Basis pursuit denoising: ``min ||x||_1  s.t. ||A x - y||_2 <= sigma``.

:func:`convex_opt` is the production solver (ADMM with exact projections
onto the residual ball and a duality-gap stopping rule).
:func:`oracle_solve` is an exhaustive grid search for ``n <= 3`` used only
to cross-check it.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._backend import active_backend, pick
from .errors import (InfeasibleError, InvalidDimensionError,
                     InvalidParameterError, NoConvergenceError)

__all__ = ["SolverProblem", "SolverSolution", "Factorization", "factorize",
           "convex_opt", "oracle_solve", "constrained_solve",
           "write_history_csv"]


@dataclass
class SolverProblem:
    """One instance of the l1-ball problem.

    ``feasibility_tol=None`` means ``1e-6 * max(1, ||y||_2)``.
    """

    A: np.ndarray
    y: np.ndarray
    sigma: float
    feasibility_tol: float = None
    optimality_tol: float = 1e-4
    max_iter: int = 10_000

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if self.A.ndim != 2 or self.y.ndim != 1 or self.A.shape[0] != self.y.shape[0]:
            raise InvalidDimensionError(
                f"A is {self.A.shape} but y has length {self.y.shape}")
        if not self.sigma >= 0:
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma}")
        self.sigma = float(self.sigma)
        if self.feasibility_tol is None:
            self.feasibility_tol = 1e-6 * max(1.0, float(np.linalg.norm(self.y)))

    @property
    def shape(self):
        return self.A.shape


@dataclass
class SolverSolution:
    x_star: np.ndarray
    residual_norm: float
    l1_norm: float
    iterations: int
    converged: bool
    info: dict = field(default_factory=dict)


@dataclass
class Factorization:
    """Thin SVD of the row-normalised matrix ``A / sqrt(m)``.

    Cached so that the real and imaginary solves of a round share it.
    """

    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray
    scale: float
    shape: tuple


def factorize(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    scale = 1.0 / np.sqrt(m)
    U, s, Vt = np.linalg.svd(A * scale, full_matrices=False)
    if s.size and s[0] > 0:
        keep = s > s[0] * max(m, n) * np.finfo(float).eps * 10
    else:
        keep = np.zeros(s.shape, dtype=bool)
    return Factorization(np.ascontiguousarray(U[:, keep]), s[keep].copy(),
                         np.ascontiguousarray(Vt[keep]), scale, (m, n))


def _residual(A, x, y):
    return float(np.linalg.norm(A @ x - y))


def convex_opt(problem, factorization=None, backend=None, relax=1.6,
               check_every=10):
    """Solve ``min ||x||_1`` subject to ``||A x - y||_2 <= sigma``.

    The matrix is internally normalised to ``A / sqrt(m)`` (with ``y`` and
    ``sigma`` scaled alike) which leaves the minimiser unchanged.

    Parameters
    ----------
    problem : SolverProblem
    factorization : Factorization, optional
        Reuse an SVD from :func:`factorize` computed on ``problem.A``.
    backend : {"numba", "numpy"}, optional
        Override ``ADMOT_BACKEND`` for this call.

    Returns
    -------
    SolverSolution
        ``info`` holds the certified dual bound, the final gap and the
        convergence history (rows of iteration, residual, l1, dual bound).

    Raises
    ------
    InfeasibleError
        If ``dist(y, range(A)) > sigma`` beyond the feasibility tolerance.
    """
    A, y, sigma = problem.A, problem.y, problem.sigma
    m, n = A.shape
    ynorm = float(np.linalg.norm(y))
    if ynorm <= sigma:
        x = np.zeros(n)
        return SolverSolution(x, ynorm, 0.0, 0, True,
                              {"dual_bound": 0.0, "gap": 0.0,
                               "history": np.zeros((0, _kernels.HIST_COLS))})

    fac = factorization if factorization is not None else factorize(A)
    if fac.shape != (m, n):
        raise InvalidDimensionError("factorization does not match A")
    ys = y * fac.scale
    sig = sigma * fac.scale
    ftol = problem.feasibility_tol * fac.scale
    if fac.s.size == 0:
        raise InfeasibleError("A is zero and ||y|| > sigma", min_residual=ynorm)

    b = fac.U.T @ ys
    yperp2 = max(float(ys @ ys - b @ b), 0.0)
    tau2 = sig * sig - yperp2
    # projecting onto the affine limit costs nothing in feasibility when the
    # ball radius left over is below the tolerance
    if tau2 < -(2 * sig * ftol + ftol * ftol):
        raise InfeasibleError(
            f"min residual {np.sqrt(yperp2) / fac.scale:.6g} exceeds sigma {sigma:.6g}",
            min_residual=np.sqrt(yperp2) / fac.scale)
    tau = np.sqrt(max(tau2, 0.0))
    affine = tau <= ftol

    # warm start: minimum-norm feasible point
    w0 = fac.Vt.T @ (b / fac.s)
    rho = n / max(float(np.abs(w0).sum()), 1e-300)
    nhist_max = problem.max_iter // check_every + 2
    hist = np.zeros((nhist_max, _kernels.HIST_COLS))
    kernel = pick(_kernels.ADMM_IMPLS, backend)
    x, p, d, it, status, nh = kernel(
        fac.U, fac.s, fac.Vt, np.ascontiguousarray(ys), sig, tau, affine,
        np.ascontiguousarray(w0), rho, int(problem.max_iter),
        float(problem.optimality_tol), ftol, int(check_every), float(relax), hist)

    res = _residual(A, x, y)
    converged = status == _kernels.CONVERGED and res <= sigma + problem.feasibility_tol
    history = hist[:nh].copy()
    history[:, 1] /= fac.scale
    info = {"dual_bound": float(d), "gap": float(p - d), "history": history,
            "backend": backend or active_backend()}
    if not np.isfinite(p):
        raise NoConvergenceError("no feasible iterate recorded",
                                 {"iterations": it, **info})
    return SolverSolution(x, res, float(np.abs(x).sum()), int(it), bool(converged), info)


def constrained_solve(problem, fixed_zero_index, **kwargs):
    """Solve with coordinate ``fixed_zero_index`` (0-based) pinned to zero.

    Equivalent to deleting that column, solving, and re-inserting a zero.
    """
    n = problem.A.shape[1]
    if not 0 <= fixed_zero_index < n:
        raise InvalidDimensionError(f"index {fixed_zero_index} out of range for n={n}")
    keep = np.arange(n) != fixed_zero_index
    sub = SolverProblem(problem.A[:, keep], problem.y, problem.sigma,
                        problem.feasibility_tol, problem.optimality_tol,
                        problem.max_iter)
    sol = convex_opt(sub, **kwargs)
    x = np.zeros(n)
    x[keep] = sol.x_star
    return SolverSolution(x, sol.residual_norm, sol.l1_norm, sol.iterations,
                          sol.converged, sol.info)


def _affine_parametrisation(A, y, tol=1e-10):
    """Write ``{x : A x = y}`` as ``x0 + M t`` over a subset of free coordinates."""
    m, n = A.shape
    # choose pivot columns greedily (column-pivoted elimination)
    R = A.copy()
    rhs = y.copy()
    pivots = []
    row = 0
    for _ in range(min(m, n)):
        sub = np.abs(R[row:, :])
        if sub.size == 0:
            break
        sub[:, pivots] = -1
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= tol * max(1.0, np.abs(A).max()):
            break
        i += row
        R[[row, i]] = R[[i, row]]
        rhs[[row, i]] = rhs[[i, row]]
        piv = R[row, j]
        R[row] /= piv
        rhs[row] /= piv
        for k in range(m):
            if k != row:
                f = R[k, j]
                R[k] -= f * R[row]
                rhs[k] -= f * rhs[row]
        pivots.append(j)
        row += 1
    if np.any(np.abs(rhs[row:]) > 1e-9 * max(1.0, np.abs(y).max())):
        raise InfeasibleError("A x = y has no solution")
    free = [j for j in range(n) if j not in pivots]
    x0 = np.zeros(n)
    M = np.zeros((n, len(free)))
    for r, j in enumerate(pivots):
        x0[j] = rhs[r]
        for c, f in enumerate(free):
            M[j, c] = -R[r, f]
    for c, f in enumerate(free):
        M[f, c] = 1.0
    return x0, M


def oracle_solve(problem, grid_extent=None, grid_step=0.01, margin=None,
                 backend=None, max_points=400_000_000):
    """Exhaustive grid search for tiny instances (``n <= 3``).

    With ``sigma > 0`` every point of ``[-extent, extent]^n`` is tested
    against the residual constraint.  With ``sigma == 0`` the grid runs
    over the free coordinates of the solution set of ``A x = y`` and the
    pivot coordinates are solved exactly, so every candidate is feasible.

    ``grid_extent=None`` uses the l1 norm of the minimum-norm least-squares
    point, which bounds every coordinate of every minimiser.

    ``info["unique"]`` reports whether all grid points within ``margin``
    (default ``grid_step``) of the minimum l1 lie within three grid steps of
    the minimiser.
    """
    A, y, sigma = problem.A, problem.y, problem.sigma
    m, n = A.shape
    if n > 3:
        raise InvalidDimensionError(f"oracle_solve needs n <= 3, got n={n}")
    if grid_step <= 0:
        raise InvalidParameterError("grid_step must be positive")
    if np.linalg.norm(y) <= sigma:
        return SolverSolution(np.zeros(n), float(np.linalg.norm(y)), 0.0, 1, True,
                              {"unique": True, "feasible_points": 1})
    if grid_extent is None:
        x_ln = np.linalg.lstsq(A, y, rcond=None)[0]
        grid_extent = max(float(np.abs(x_ln).sum()), grid_step)
    npts = int(np.floor(2 * grid_extent / grid_step + 1e-9)) + 1
    # snap so that 0 is a grid point
    half = npts // 2
    grid_extent = half * grid_step
    npts = 2 * half + 1

    if sigma == 0:
        x0, M = _affine_parametrisation(A, y)
        check = False
        sigma2 = np.inf
    else:
        x0, M = np.zeros(n), np.eye(n)
        check = True
        sigma2 = sigma * sigma
    q = M.shape[1]
    if npts ** q > max_points:
        raise InvalidParameterError(f"grid of {npts}^{q} points is too large")

    args = (np.ascontiguousarray(A), np.ascontiguousarray(y), float(sigma2),
            x0, np.ascontiguousarray(M), float(grid_extent), float(grid_step), npts, check)
    idx, best, nfeas = pick(_kernels.GRID_SCAN_IMPLS, backend)(*args)
    if idx < 0:
        raise InfeasibleError("no feasible grid point at this resolution")
    t = _kernels._grid_points(np.array([idx], dtype=np.int64), q, npts,
                              grid_extent, grid_step)[0]
    x = x0 + M @ t
    margin = grid_step if margin is None else margin
    spread = pick(_kernels.GRID_SPREAD_IMPLS, backend)(
        *args, x, float(best + margin))
    scale = np.abs(M).max() if M.size else 0.0
    unique = spread <= 3 * grid_step * max(1.0, scale)
    return SolverSolution(x, _residual(A, x, y), float(np.abs(x).sum()), npts ** q,
                          True, {"unique": bool(unique), "spread": float(spread),
                                 "feasible_points": int(nfeas),
                                 "grid_extent": grid_extent})


def write_history_csv(solution, path):
    """Dump the solver trace: iteration, residual, l1, dual_bound."""
    hist = solution.info.get("history", np.zeros((0, _kernels.HIST_COLS)))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iteration", "residual", "l1", "dual_bound"])
        for row in hist:
            wr.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
