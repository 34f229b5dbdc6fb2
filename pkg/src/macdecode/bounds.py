"""Calculators for the analytical error bounds.

Probabilities are clamped to [0, 1]; sums of many tiny terms are done in
the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, logsumexp

from .numerics import box_ls


@dataclass(frozen=True)
class ErrorPattern:
    """Positions (1-based, sorted) where two codewords differ."""

    n: int
    indices: tuple

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if not idx:
            raise ValueError("an error pattern needs at least one index")
        if len(set(idx)) != len(idx) or idx[0] < 1 or idx[-1] > self.n:
            raise ValueError(f"indices must be distinct and within 1..{self.n}")
        object.__setattr__(self, "indices", idx)

    @property
    def i(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class BoundParams:
    sigma: float
    t: float = 1.0
    a: Optional[float] = None
    k_prime: float = 0.05
    epsilon: float = 0.25

    def __post_init__(self):
        for name in ("sigma", "t", "k_prime", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a is not None and not self.a > 0:
            raise ValueError("a must be positive")
        if self.k_prime > 1:
            raise ValueError("k_prime must be <= 1")


@dataclass
class PairwiseExponent:
    value: float
    minimum: float
    c: np.ndarray
    converged: bool


def _clamp01(p: float) -> float:
    return min(1.0, max(0.0, p))


def _ceil_frac(k_prime: float, n: int) -> int:
    # guards against 0.1 * 30 = 3.0000000000000004
    return max(0, math.ceil(k_prime * n - 1e-9))


def q_function(x: float) -> float:
    """Gaussian tail probability P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_upper(x: float) -> float:
    """Chernoff-type upper bound 0.5 * exp(-x^2 / 2) on ``q_function``, x >= 0."""
    if x < 0:
        raise ValueError("q_upper is only a bound for x >= 0")
    return 0.5 * math.exp(-0.5 * x * x)


def pairwise_exponent(H, pattern: ErrorPattern, sigma: float, tol: float = 1e-12,
                      max_iter: int = 200_000) -> PairwiseExponent:
    """Minimum of ||H c||^2 / (8 sigma^2) over c_j in [1, 2] on the error
    positions and c_j in [0, 1] elsewhere.

    The box is shifted to be centred so the box-LS kernel applies directly:
    c = centre + u with ||u||_inf <= 1/2.
    """
    H = np.asarray(H, dtype=float)
    if pattern.n != H.shape[1]:
        raise ValueError(f"pattern is for n={pattern.n} but H has {H.shape[1]} columns")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    centre = np.full(H.shape[1], 0.5)
    centre[np.array(pattern.indices) - 1] = 1.5
    res = box_ls(H, -H @ centre, 0.5, tol=tol, max_iter=max_iter)
    c = centre + res.x_hat
    hc = H @ c
    minimum = float(hc @ hc)
    return PairwiseExponent(value=minimum / (8.0 * sigma ** 2), minimum=minimum, c=c,
                            converged=res.converged)


def chi_sq_mgf_bound(t: float, c, m: int) -> float:
    """E exp(-t ||sum_j c_j h_j||^2) for h_j ~ N(0, I_m): (1 + 2 t sum c^2)^(-m/2)."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = float(np.sum(np.square(np.asarray(c, dtype=float))))
    return math.exp(-0.5 * m * math.log1p(2.0 * t * s))


def lemma1_log_bound(n: int, alpha: float, t: float, sum_c_sq_lower: float) -> float:
    """Natural log of the (unclamped) Markov tail bound."""
    threshold = 0.25 * alpha * n * math.log(n)
    return t * threshold - 0.5 * alpha * n * math.log1p(2.0 * t * sum_c_sq_lower)


def lemma1_tail_bound(n: int, alpha: float, t: float = 1.0,
                      sum_c_sq_lower: Optional[float] = None,
                      k_prime: Optional[float] = None) -> tuple:
    """Threshold ``(alpha/4) n ln n`` and the Markov bound on
    P(||sum c_j h_j||^2 < threshold).

    ``sum_c_sq_lower`` defaults to ``k_prime * n``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    if sum_c_sq_lower is None:
        if k_prime is None:
            raise ValueError("give sum_c_sq_lower or k_prime")
        sum_c_sq_lower = k_prime * n
    threshold = 0.25 * alpha * n * math.log(n)
    log_p = lemma1_log_bound(n, alpha, t, sum_c_sq_lower)
    return threshold, (1.0 if log_p >= 0 else math.exp(log_p))


def optimal_chernoff_t(n: int, alpha: float, sum_c_sq_lower: float,
                       t_max: float = 100.0) -> float:
    """Bounded scalar search for the t minimizing the tail bound on (0, t_max]."""
    res = minimize_scalar(lambda t: lemma1_log_bound(n, alpha, t, sum_c_sq_lower),
                          bounds=(1e-12, t_max), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def binary_entropy(x: float) -> float:
    """Base-2 binary entropy with H(0) = H(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def log_binom(n: int, i: int) -> float:
    return float(gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1))


def union_bound(n: int, k_prime: float, p: Union[Mapping[int, float], Sequence[float]]) -> float:
    """sum over ceil(k' n) <= i <= n of binom(n, i) * p_i / 2, clamped to 1.

    ``p`` maps i to p_i; a sequence is read as indexed by i (length n + 1).
    """
    i0 = max(1, _ceil_frac(k_prime, n))
    terms = []
    for i in range(i0, n + 1):
        try:
            pi = float(p[i])
        except (KeyError, IndexError):
            raise ValueError(f"missing p_{i}") from None
        if not 0.0 <= pi <= 1.0:
            raise ValueError(f"p_{i} = {pi} is not a probability")
        if pi > 0:
            terms.append(log_binom(n, i) + math.log(0.5 * pi))
    if not terms:
        return 0.0
    return _clamp01(math.exp(min(0.0, float(logsumexp(terms)))))


def grid_union_log2(n: int, k_prime: float, epsilon: float, a: float) -> float:
    """log2 of n * 2^(n (max H2(i/n) - log2 eps - a log2 n))."""
    i0 = max(0, _ceil_frac(k_prime, n))
    h_max = max(binary_entropy(i / n) for i in range(i0, n + 1))
    return math.log2(n) + n * (h_max - math.log2(epsilon) - a * math.log2(n))


def grid_union_bound(n: int, k_prime: float, epsilon: float, a: float) -> float:
    """Grid-decoder union bound; all logarithms base 2, clamped to 1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if a <= 0:
        raise ValueError("a must be positive")
    e = grid_union_log2(n, k_prime, epsilon, a)
    return 1.0 if e >= 0 else 2.0 ** e


def per_user_bound(k_prime: float, p_block: float) -> float:
    for name, v in (("k_prime", k_prime), ("p_block", p_block)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return min(1.0, k_prime + p_block)
