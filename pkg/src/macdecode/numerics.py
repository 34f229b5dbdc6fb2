"""Numerical kernels: box-constrained least squares, null spaces and
l-infinity projection onto the box-LS solution polytope."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import clarabel
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

BOX_LS_TOL = 1e-8
BOX_LS_MAX_ITER = 20_000
RANK_TOL = 1e-10
# slack on the optimal l-inf radius for the Euclidean tie-break stage
FACE_SLACK = 1e-9


class ProjectionError(RuntimeError):
    """The projection LP failed, which means the solution set is corrupted."""


@dataclass
class BoxLsResult:
    x_hat: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float


@dataclass
class SolutionSet:
    """Minimizers of ||y - Hx||^2 over the box ``||x||_inf <= box``.

    Every member is ``x_hat + Z @ beta`` for some beta; ``box`` is ``inf``
    for the unconstrained affine variant.
    """

    x_hat: np.ndarray
    Z: np.ndarray
    box: float
    z_star: np.ndarray
    objective: float
    H: np.ndarray
    # orthonormal rows spanning the row space of H (complement of Z)
    W: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.W is None:
            self.W = _svd_split(self.H, RANK_TOL)[0]

    @property
    def rank(self) -> int:
        """Dimension of the null space carried by ``Z``."""
        return self.Z.shape[1]

    @property
    def feasibility_tol(self) -> float:
        return 1e-6 * (1.0 + float(np.linalg.norm(self.z_star)))

    def contains(self, x, tol: Optional[float] = None) -> bool:
        x = np.asarray(x, dtype=float)
        tol = self.feasibility_tol if tol is None else tol
        if np.max(np.abs(x), initial=0.0) > self.box + 1e-12:
            return False
        return float(np.linalg.norm(self.H @ x - self.z_star)) <= tol


def spectral_norm_sq(H, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of ``H.T @ H`` by power iteration."""
    H = np.asarray(H, dtype=float)
    if not np.any(H):
        raise ValueError("spectral norm of the zero matrix requested")
    # fixed start vector keeps the result deterministic
    v = np.random.default_rng(0x5EED).standard_normal(H.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = H.T @ (H @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector fell in the null space; restart along a column
            v = H[np.argmax(np.abs(H).sum(axis=1))].copy()
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        if abs(lam_new - lam) <= tol * lam_new:
            return max(lam_new, float(nw))
        lam = lam_new
    return lam


def box_ls(H, y, B: float = 1.0, tol: float = BOX_LS_TOL, max_iter: int = BOX_LS_MAX_ITER,
           x_init=None) -> BoxLsResult:
    """Minimize ||y - Hx||^2 subject to ||x||_inf <= B.

    Accelerated projected gradient with fixed step 1/L and a momentum
    restart whenever the objective increases.  ``kkt_residual`` is the
    l-inf length of one projected-gradient step taken from ``x_hat``; the
    run counts as converged once it drops below ``tol``.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    if B <= 0:
        raise ValueError("box bound must be positive")
    if H.shape[0] != y.shape[0]:
        raise ValueError(f"H has {H.shape[0]} rows but y has length {y.shape[0]}")
    n = H.shape[1]
    x = np.zeros(n) if x_init is None else np.clip(np.asarray(x_init, dtype=float), -B, B)
    if not np.any(H):
        r = y - H @ x
        return BoxLsResult(x, float(r @ r), 0, True, 0.0)

    # slight overestimate of the Lipschitz constant keeps the fixed step safe
    L = spectral_norm_sq(H) * (1.0 + 1e-6)
    step = 1.0 / L

    def half_obj(v):
        r = H @ v - y
        return 0.5 * float(r @ r)

    z = x.copy()
    theta = 1.0
    f_x = half_obj(x)
    kkt = math.inf
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        g = H.T @ (H @ z - y)
        x_new = np.clip(z - step * g, -B, B)
        f_new = half_obj(x_new)
        if f_new > f_x:
            # restart momentum from the last accepted point
            z = x.copy()
            theta = 1.0
            g = H.T @ (H @ z - y)
            x_new = np.clip(z - step * g, -B, B)
            f_new = half_obj(x_new)
        theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        z = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
        x, f_x, theta = x_new, f_new, theta_new
        if it % 10 == 0 or it == max_iter:
            gx = H.T @ (H @ x - y)
            kkt = float(np.max(np.abs(x - np.clip(x - step * gx, -B, B)), initial=0.0))
            if kkt <= tol:
                converged = True
                break
    r = y - H @ x
    return BoxLsResult(x_hat=x, objective=float(r @ r), iterations=it,
                       converged=converged, kkt_residual=kkt)


def _svd_split(H, rank_tol):
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = H.shape[1]
    _, s, vt = np.linalg.svd(H, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, n)), np.eye(n)
    rank = int(np.sum(s > rank_tol * s[0]))
    return vt[:rank].copy(), vt[rank:].T.copy()


def null_basis(H, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical right null space."""
    return _svd_split(H, rank_tol)[1]


def build_solution_set(H, y, B: float, *, affine: bool = False, rank_tol: float = RANK_TOL,
                       tol: float = BOX_LS_TOL, max_iter: int = BOX_LS_MAX_ITER,
                       box_result: Optional[BoxLsResult] = None) -> SolutionSet:
    """Solution polytope of the box-LS problem.

    With ``affine=True`` the box is dropped and the set is the affine
    least-squares solution space ``{x : Hx = H pinv(H) y}``.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    W, Z = _svd_split(H, rank_tol)
    if affine:
        x_hat, *_ = np.linalg.lstsq(H, y, rcond=None)
        r = y - H @ x_hat
        return SolutionSet(x_hat=x_hat, Z=Z, box=math.inf, z_star=H @ x_hat,
                           objective=float(r @ r), H=H, W=W)
    res = box_result if box_result is not None else box_ls(H, y, B, tol=tol, max_iter=max_iter)
    return SolutionSet(x_hat=res.x_hat, Z=Z, box=float(B), z_star=H @ res.x_hat,
                       objective=res.objective, H=H, W=W)


def _linf_lp(S: SolutionSet, x_r: np.ndarray):
    """Epigraph LP  min t  s.t. |x - x_r| <= t, x in S.  Returns ``(t, x)``.

    Solved in x-coordinates, where the box enters as variable bounds; if
    HiGHS reports trouble there, the same LP is retried at its default
    tolerances and then in null-space coordinates ``x = x_hat + Z beta``.
    """
    attempts = [lambda: _linf_lp_x(S, x_r, 1e-9), lambda: _linf_lp_x(S, x_r, None),
                lambda: _linf_lp_beta(S, x_r)]
    msg = ""
    for attempt in attempts:
        res = attempt()
        if isinstance(res, tuple):
            return res
        msg = res
    raise ProjectionError(f"l-inf projection LP failed: {msg}")


def _linf_lp_x(S: SolutionSet, x_r: np.ndarray, feas_tol):
    N = x_r.shape[0]
    r = S.W.shape[0]
    eye = sparse.identity(N, format="csr")
    col = sparse.csr_matrix(np.ones((N, 1)))
    A_ub = sparse.vstack([sparse.hstack([eye, -col]), sparse.hstack([-eye, -col])], format="csr")
    b_ub = np.concatenate([x_r, -x_r])
    A_eq = np.hstack([S.W, np.zeros((r, 1))]) if r else None
    b_eq = S.W @ S.x_hat if r else None
    xb = (-S.box, S.box) if math.isfinite(S.box) else (None, None)
    cost = np.zeros(N + 1)
    cost[-1] = 1.0
    opts = {} if feas_tol is None else {"primal_feasibility_tolerance": feas_tol,
                                        "dual_feasibility_tolerance": feas_tol}
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[xb] * N + [(0, None)], method="highs", options=opts)
    if res.status != 0:
        return res.message
    return float(res.x[-1]), res.x[:N]


def _linf_lp_beta(S: SolutionSet, x_r: np.ndarray):
    N, k = S.Z.shape
    d = x_r - S.x_hat
    ones = np.ones((N, 1))
    A = [np.hstack([S.Z, -ones]), np.hstack([-S.Z, -ones])]
    b = [d, -d]
    if math.isfinite(S.box):
        zeros = np.zeros((N, 1))
        A += [np.hstack([S.Z, zeros]), np.hstack([-S.Z, zeros])]
        b += [S.box - S.x_hat, S.box + S.x_hat]
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=np.vstack(A), b_ub=np.concatenate(b),
                  bounds=[(None, None)] * k + [(0, None)], method="highs")
    if res.status != 0:
        return res.message
    return float(res.x[-1]), S.x_hat + S.Z @ res.x[:k]


def _euclidean_on_face(S: SolutionSet, x_r: np.ndarray, t: float) -> Optional[np.ndarray]:
    """Member closest to ``x_r`` in l2 among those within l-inf radius ``t``.

    Returns None when the QP solver gives up.
    """
    N = x_r.shape[0]
    r = S.W.shape[0]
    lo = x_r - t
    hi = x_r + t
    if math.isfinite(S.box):
        lo = np.maximum(lo, -S.box)
        hi = np.minimum(hi, S.box)
    eye = sparse.identity(N, format="csc")
    A = sparse.vstack([sparse.csc_matrix(S.W), eye, -eye], format="csc")
    b = np.concatenate([S.W @ S.x_hat, hi, -lo])
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    solver = clarabel.DefaultSolver(eye, -x_r, A, b,
                                    [clarabel.ZeroConeT(r), clarabel.NonnegativeConeT(2 * N)],
                                    settings)
    sol = solver.solve()
    if str(sol.status) not in ("Solved", "AlmostSolved"):
        return None
    return np.asarray(sol.x, dtype=float)


def linf_project(S: SolutionSet, x_r) -> np.ndarray:
    """Member of ``S`` closest to ``x_r`` in the l-inf norm.

    The l-inf minimizer is rarely unique, so among all members within the
    optimal radius (plus ``FACE_SLACK``) the one closest to ``x_r`` in the
    Euclidean norm is returned.
    """
    x_r = np.asarray(x_r, dtype=float)
    if S.rank == 0:
        return S.x_hat.copy()
    t_star, x_lp = _linf_lp(S, x_r)
    t_face = t_star + FACE_SLACK * max(1.0, t_star)
    x = _euclidean_on_face(S, x_r, t_face)
    if x is None:
        # fall back to the plain l-inf optimum at the LP vertex
        x = x_lp
    # snap back onto the affine set; removes solver-level drift along the row space
    x = x - S.W.T @ (S.W @ (x - S.x_hat))
    if math.isfinite(S.box):
        x = np.clip(x, -S.box, S.box)
    return x
