"""Multiuser decoders mapping (H, y) to an estimated n-user codeword.

ML and the (eps, delta)-grid decoder are exhaustive searches and only
usable at small n.  ISQ and r-ISQ run in polynomial time.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .model import Constellation, quantize, sgn
from .numerics import (BOX_LS_MAX_ITER, BOX_LS_TOL, SolutionSet, box_ls, build_solution_set,
                       linf_project)

MAX_EXHAUSTIVE_BITS = 24
# rows of the residual table evaluated per chunk in exhaustive searches
_CHUNK = 1 << 17


class DecoderId(str, enum.Enum):
    ML = "ML"
    ISQ = "ISQ"
    RISQ = "RISQ"
    GRID = "GRID"
    AMP = "AMP"


class GuardError(ValueError):
    """An exhaustive search would exceed the enumeration guard."""


@dataclass
class DecodeOutput:
    estimate: np.ndarray
    decoder_id: DecoderId
    relaxed_point: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class GridSpec:
    epsilon: float
    delta: np.ndarray
    scalar_points_per_coord: List[np.ndarray]
    # candidate points per user block; equals the scalar grids when d == 1
    block_points: List[np.ndarray]

    @property
    def log2_size(self) -> float:
        return float(sum(math.log2(len(p)) for p in self.block_points))


def _exhaustive_search(H: np.ndarray, y: np.ndarray, candidates: Sequence[np.ndarray]):
    """Minimize ||y - Hx||^2 over the product of per-block candidate sets.

    ``candidates[i]`` has shape (k_i, d).  Returns ``(indices, x, residual^2)``
    for the lexicographically first minimizer in candidate-index order.
    """
    nb = len(candidates)
    d = candidates[0].shape[1]
    m = H.shape[0]
    # contribution of every candidate of block i: shape (k_i, m)
    contrib = [c @ H[:, i * d:(i + 1) * d].T for i, c in enumerate(candidates)]
    sizes = [len(c) for c in candidates]

    # trailing blocks are tabulated in one array, leading blocks are looped
    # in lexicographic order so first-occurrence argmin is the tie-break
    split = nb
    inner = 1
    while split > 0 and inner * sizes[split - 1] <= _CHUNK:
        split -= 1
        inner *= sizes[split]
    table = np.zeros((1, m))
    for i in range(split, nb):
        table = (table[:, None, :] + contrib[i][None, :, :]).reshape(-1, m)

    # ||b - t||^2 = ||b||^2 - 2 b.t + ||t||^2; one matvec per outer index
    table_sq = np.einsum("ij,ij->i", table, table)
    best_val = math.inf
    best_idx = None
    for outer in itertools.product(*(range(s) for s in sizes[:split])):
        base = y.copy()
        for i, j in enumerate(outer):
            base -= contrib[i][j]
        vals = table_sq - 2.0 * (table @ base) + float(base @ base)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_idx = outer + tuple(np.unravel_index(k, sizes[split:]) if split < nb else ())
    idx = np.array(best_idx, dtype=int)
    x = np.concatenate([candidates[i][j] for i, j in enumerate(idx)])
    r = y - H @ x
    return idx, x, float(r @ r)


def _check_guard(log2_size: float, limit: float, what: str):
    if log2_size > limit + 1e-9:
        raise GuardError(f"{what} needs 2^{log2_size:.1f} candidates, above the 2^{limit:g} guard")


def decode_ml(H, y, c: Constellation, max_bits: float = MAX_EXHAUSTIVE_BITS) -> DecodeOutput:
    """Exhaustive maximum-likelihood search over all codewords."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    n_users = H.shape[1] // c.d
    _check_guard(n_users * c.bits_per_symbol, max_bits, "ML search")
    _, x, val = _exhaustive_search(H, y, [c.points] * n_users)
    return DecodeOutput(estimate=x, decoder_id=DecoderId.ML, relaxed_point=None,
                        diagnostics={"objective": val})


def decode_isq(H, y, c: Constellation, tol: float = BOX_LS_TOL,
               max_iter: int = BOX_LS_MAX_ITER) -> DecodeOutput:
    """Box-relaxed least squares followed by quantization."""
    res = box_ls(H, y, c.box_radius, tol=tol, max_iter=max_iter)
    return DecodeOutput(estimate=quantize(c, res.x_hat), decoder_id=DecoderId.ISQ,
                        relaxed_point=res.x_hat,
                        diagnostics={"objective": res.objective, "iterations": res.iterations,
                                     "converged": res.converged,
                                     "kkt_residual": res.kkt_residual})


def solution_set(H, y, c: Constellation, affine: bool = False) -> SolutionSet:
    return build_solution_set(H, y, c.box_radius, affine=affine)


def decode_risq(H, y, c: Constellation, rng: np.random.Generator,
                affine: bool = False) -> DecodeOutput:
    """Randomized ISQ.

    Draws a uniform point of the box, projects it in l-inf onto the box-LS
    solution set and quantizes the projection.
    """
    H = np.asarray(H, dtype=float)
    S = solution_set(H, y, c, affine=affine)
    B = c.box_radius
    x_r = rng.uniform(-B, B, size=H.shape[1])
    p = linf_project(S, x_r)
    return DecodeOutput(estimate=quantize(c, p), decoder_id=DecoderId.RISQ, relaxed_point=p,
                        diagnostics={"objective": S.objective, "null_rank": S.rank,
                                     "linf_distance": float(np.max(np.abs(p - x_r)))})


def _scalar_grid(epsilon: float, delta: float, B: float) -> np.ndarray:
    lo = math.ceil((-B - delta) / epsilon - 1e-9)
    hi = math.floor((B - delta) / epsilon + 1e-9)
    pts = delta + epsilon * np.arange(lo, hi + 1)
    return np.clip(pts, -B, B)


def grid_build(c: Constellation, epsilon: float, delta, n: int) -> GridSpec:
    """Shifted grid of pitch ``epsilon`` inside the constellation's box.

    ``delta`` is a scalar or one offset per real coordinate; offsets are
    reduced modulo ``epsilon``.  For d >= 2 the per-block candidates are
    the coordinate products that stay within ``box_radius`` in l2.
    """
    B = c.box_radius
    if not 0 < epsilon <= 2 * B + 1e-12:
        raise ValueError(f"epsilon must lie in (0, {2 * B:g}], got {epsilon}")
    nd = n * c.d
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (nd,)) % epsilon
    scalars = [_scalar_grid(epsilon, float(dl), B) for dl in delta]
    if any(len(s) == 0 for s in scalars):
        raise ValueError(f"empty grid for epsilon={epsilon} with the given offsets")
    if c.d == 1:
        blocks = [s[:, None] for s in scalars]
    else:
        blocks = []
        for u in range(n):
            axes = scalars[u * c.d:(u + 1) * c.d]
            pts = np.array(list(itertools.product(*axes)))
            pts = pts[np.sqrt((pts ** 2).sum(axis=1)) <= B + 1e-12]
            if len(pts) == 0:
                raise ValueError(f"empty grid block for user {u}")
            blocks.append(pts)
    return GridSpec(epsilon=float(epsilon), delta=np.array(delta), scalar_points_per_coord=scalars,
                    block_points=blocks)


def decode_grid(H, y, grid: GridSpec, c: Constellation,
                max_bits: float = MAX_EXHAUSTIVE_BITS) -> DecodeOutput:
    """Exhaustive search over the (epsilon, delta)-grid, then quantization."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_guard(grid.log2_size, max_bits, "grid search")
    _, x, val = _exhaustive_search(H, y, grid.block_points)
    return DecodeOutput(estimate=quantize(c, x), decoder_id=DecoderId.GRID, relaxed_point=x,
                        diagnostics={"objective": val, "log2_grid_size": grid.log2_size})


def decode_amp(H, y, c: Constellation, iters: int = 30) -> DecodeOutput:
    """Approximate message passing with the tanh (uniform +-1 prior) denoiser.

    Works on ``H / sqrt(m)`` so columns have roughly unit norm.  The
    estimate is the sign of the final effective observation
    ``x + A.T z``, which is ``sgn(H.T y / m)`` when ``iters == 0``.
    """
    if c.d != 1 or len(c) != 2 or not np.allclose(np.sort(c.points.ravel()), [-1.0, 1.0]):
        raise ValueError("AMP is implemented for BPSK only")
    H = np.asarray(H, dtype=float)
    m, n = H.shape
    A = H / math.sqrt(m)
    ys = np.asarray(y, dtype=float) / math.sqrt(m)
    x = np.zeros(n)
    z = ys.copy()
    r = A.T @ z
    done = 0
    diverged = False
    for _ in range(iters):
        tau2 = float(z @ z) / m
        if tau2 <= 1e-300:
            break
        x_new = np.tanh(r / tau2)
        onsager = (n / m) * float(np.mean((1.0 - x_new ** 2) / tau2))
        z_new = ys - A @ x_new + onsager * z
        r_new = x_new + A.T @ z_new
        if not (np.all(np.isfinite(r_new)) and np.all(np.isfinite(z_new))):
            diverged = True
            break
        x, z, r = x_new, z_new, r_new
        done += 1
    return DecodeOutput(estimate=sgn(r), decoder_id=DecoderId.AMP, relaxed_point=r,
                        diagnostics={"iterations": done, "diverged": diverged,
                                     "tau2": float(z @ z) / m})
