"""Constellations, fading laws and the forward model y = Hx + noise."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class Constellation:
    """A finite set of real symbol points of dimension ``d``.

    Point order matters: ``quantize`` resolves ties toward the lowest index.
    """

    def __init__(self, points, name: str = "custom"):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 1 and np.ndim(points) == 1:
            # a flat list of scalars is a 1-d constellation
            pts = pts.T
        if pts.shape[0] < 2:
            raise ValueError("a constellation needs at least two points")
        diffs = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diffs ** 2).sum(axis=-1))
        iu = np.triu_indices(len(pts), k=1)
        d_min = float(dist[iu].min())
        if d_min <= 0:
            raise ValueError("constellation points must be distinct")
        self.points = pts
        self.points.setflags(write=False)
        self.name = name
        self.d = pts.shape[1]
        self.d_min = d_min
        self.box_radius = float(np.sqrt((pts ** 2).sum(axis=1)).max())

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"Constellation({self.name!r}, size={len(self)}, d={self.d})"

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(len(self.points))

    @classmethod
    def bpsk(cls) -> "Constellation":
        return cls([[-1.0], [1.0]], name="bpsk")

    @classmethod
    def pam4(cls) -> "Constellation":
        # unit average energy
        s = 1.0 / math.sqrt(5.0)
        return cls([[-3 * s], [-s], [s], [3 * s]], name="pam4")

    @classmethod
    def psk4(cls) -> "Constellation":
        return cls([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], name="psk4")

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        try:
            return {"bpsk": cls.bpsk, "pam4": cls.pam4, "psk4": cls.psk4}[name.lower()]()
        except KeyError:
            raise ValueError(f"unknown constellation {name!r} (expected bpsk, pam4 or psk4)") from None


class FadingDistribution(str, enum.Enum):
    """Zero-mean, unit-variance laws for the channel entries."""

    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self is FadingDistribution.GAUSSIAN:
            return rng.standard_normal(shape)
        if self is FadingDistribution.RADEMACHER:
            return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
        a = math.sqrt(3.0)
        return rng.uniform(-a, a, size=shape)


@dataclass(frozen=True)
class Dimensions:
    n: int
    m: int
    alpha: float
    xi: Optional[float] = None


@dataclass
class SystemInstance:
    H: np.ndarray
    x0: np.ndarray
    sigma: float
    y: np.ndarray
    noise: np.ndarray


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5 + 1e-12))


def antennas_for(n: int, alpha: Optional[float] = None, xi: Optional[float] = None) -> Dimensions:
    """Receive-antenna count for ``n`` users.

    Either a fixed ratio ``alpha`` or the vanishing schedule
    ``alpha_n = 1 / (ln n) ** xi`` with ``0 < xi < 1``.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if (alpha is None) == (xi is None):
        raise ValueError("give exactly one of alpha or xi")
    if xi is not None:
        if not 0.0 < xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {xi}")
        if n < 2:
            raise ValueError("the xi schedule needs n >= 2")
        alpha_eff = 1.0 / math.log(n) ** xi
    else:
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        alpha_eff = float(alpha)
    m = max(1, _round_half_up(alpha_eff * n))
    return Dimensions(n=n, m=m, alpha=alpha_eff, xi=xi)


def sample_channel(dims: Dimensions, dist: FadingDistribution, rng: np.random.Generator,
                   d: int = 1) -> np.ndarray:
    """i.i.d. channel matrix of shape ``(m*d, n*d)``.

    Complex-valued users are handled by real lifting; every real column is
    drawn independently.
    """
    dist = FadingDistribution(dist)
    return dist.sample(rng, (dims.m * d, dims.n * d))


def sample_codeword(c: Constellation, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.integers(0, len(c), size=n)
    return c.points[idx].reshape(-1).copy()


def transmit(H: np.ndarray, x: np.ndarray, sigma: float, rng: Optional[np.random.Generator] = None,
             return_noise: bool = False):
    """Received vector ``H @ x + noise`` with i.i.d. N(0, sigma^2) noise."""
    H = np.asarray(H, dtype=float)
    x = np.asarray(x, dtype=float)
    if H.ndim != 2 or H.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: H is {H.shape}, x has length {x.shape[0]}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    clean = H @ x
    if sigma == 0:
        noise = np.zeros(H.shape[0])
        y = clean
    else:
        if rng is None:
            raise ValueError("a random generator is required when sigma > 0")
        noise = sigma * rng.standard_normal(H.shape[0])
        y = clean + noise
    return (y, noise) if return_noise else y


def make_instance(dims: Dimensions, c: Constellation, sigma: float, rng: np.random.Generator,
                  fading: FadingDistribution = FadingDistribution.GAUSSIAN) -> SystemInstance:
    """Draw channel, codeword and noise, in that order, from ``rng``."""
    H = sample_channel(dims, fading, rng, d=c.d)
    x0 = sample_codeword(c, dims.n, rng)
    y, noise = transmit(H, x0, sigma, rng, return_noise=True)
    return SystemInstance(H=H, x0=x0, sigma=sigma, y=y, noise=noise)


def quantize(c: Constellation, v) -> np.ndarray:
    """Nearest constellation point per d-block; ties go to the lowest index."""
    v = np.asarray(v, dtype=float)
    if v.size % c.d:
        raise ValueError(f"length {v.size} is not a multiple of d={c.d}")
    return c.points[quantize_indices(c, v)].reshape(v.shape)


def quantize_indices(c: Constellation, v) -> np.ndarray:
    blocks = np.asarray(v, dtype=float).reshape(-1, c.d)
    if c.d == 1:
        # compare against midpoints: squared distances lose tiny offsets like 1e-309
        order = np.argsort(c.points[:, 0], kind="stable")
        s = c.points[order, 0]
        mids = 0.5 * (s[:-1] + s[1:])
        x = blocks[:, 0]
        j = np.searchsorted(mids, x, side="left")
        tie = (j < len(mids)) & (x == mids[np.minimum(j, len(mids) - 1)])
        jt = np.minimum(j + 1, len(s) - 1)
        idx = order[j]
        return np.where(tie, np.minimum(order[j], order[jt]), idx)
    dist2 = ((blocks[:, None, :] - c.points[None, :, :]) ** 2).sum(axis=-1)
    return dist2.argmin(axis=1)


def sgn(v) -> np.ndarray:
    """Coordinatewise sign with sgn(0) = -1."""
    v = np.asarray(v, dtype=float)
    return np.where(v > 0, 1.0, -1.0)


def symbol_errors(c: Constellation, estimate, truth) -> int:
    """Number of d-blocks where ``estimate`` and ``truth`` disagree."""
    a = np.asarray(estimate, dtype=float).reshape(-1, c.d)
    b = np.asarray(truth, dtype=float).reshape(-1, c.d)
    return int(np.any(a != b, axis=1).sum())


def lift_block_fading(H: np.ndarray, T: int) -> np.ndarray:
    """Block-diagonal matrix holding ``T`` copies of ``H``.

    A channel held constant over ``T`` slots then acts on the stacked
    per-slot codewords as one model of dimension ``T*d``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    H = np.asarray(H, dtype=float)
    if T == 1:
        return H.copy()
    return np.kron(np.eye(T), H)
