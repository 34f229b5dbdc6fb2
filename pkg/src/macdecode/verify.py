"""Built-in property suites run by ``macdecode verify``.

Each suite returns a list of :class:`PropertyResult`; sizes default to the
values used by the acceptance run and can be shrunk for quick checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import decoders as dec
from . import numerics as nm
from .bounds import chi_sq_mgf_bound
from .model import Constellation

SUITES = ("relaxation", "lemma2", "mgf", "projection", "determinism")


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def relaxation(instances: int = 500, seed: int = 2024, n_max: int = 12) -> List[PropertyResult]:
    """Box-LS objective never exceeds the ML residual."""
    rng = np.random.default_rng(seed)
    c = Constellation.bpsk()
    worst = -math.inf
    bad = 0
    for k in range(instances):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(math.ceil(0.5 * n), n + 1))
        sigma = (0.0, 0.3)[k % 2]
        H = rng.standard_normal((m, n))
        x0 = rng.choice([-1.0, 1.0], size=n)
        y = H @ x0 + sigma * rng.standard_normal(m)
        relaxed = nm.box_ls(H, y, 1.0).objective
        ml = dec.decode_ml(H, y, c).diagnostics["objective"]
        gap = relaxed - ml
        worst = max(worst, gap)
        bad += gap > 1e-6
    return [PropertyResult("relaxation dominance", bad == 0,
                           f"{instances} instances, max(box_ls - ML) = {worst:.3e}, "
                           f"violations = {bad}")]


def lemma2_n_max(epsilon: float, bits: float = dec.MAX_EXHAUSTIVE_BITS, cap: int = 10) -> int:
    """Largest n <= cap whose delta=0 BPSK grid fits the enumeration guard."""
    per = math.log2(len(dec.grid_build(Constellation.bpsk(), epsilon, 0.0, 1).block_points[0]))
    return max(2, min(cap, int(bits // per)))


def lemma2_distances(instances: int = 200, seed: int = 7, eps_values=(0.1, 0.25)):
    """l-inf distance from each grid minimizer to its projection onto S.

    Instances cycle through the epsilon values; every other instance uses
    random offsets, the rest delta = 0.
    """
    rng = np.random.default_rng(seed)
    c = Constellation.bpsk()
    out = []
    for k in range(instances):
        eps = eps_values[k % len(eps_values)]
        n = int(rng.integers(2, lemma2_n_max(eps) + 1))
        m = math.ceil(0.6 * n)
        sigma = (0.0, 0.3)[(k // len(eps_values)) % 2]
        H = rng.standard_normal((m, n))
        x0 = rng.choice([-1.0, 1.0], size=n)
        y = H @ x0 + sigma * rng.standard_normal(m)
        delta = rng.uniform(0.0, eps, size=n) if (k // 2) % 2 else 0.0
        g = dec.decode_grid(H, y, dec.grid_build(c, eps, delta, n), c).relaxed_point
        S = dec.solution_set(H, y, c)
        p = nm.linf_project(S, g)
        out.append((eps, n, m, float(np.max(np.abs(p - g)))))
    return out


def lemma2(instances: int = 200, seed: int = 7, eps_values=(0.1, 0.25)) -> List[PropertyResult]:
    rows = lemma2_distances(instances, seed, eps_values)
    results = []
    for eps in eps_values:
        d = [r[3] for r in rows if r[0] == eps]
        bad = sum(x > eps + 1e-6 for x in d)
        results.append(PropertyResult(
            f"grid minimizer within eps={eps:g} of S", bad == 0,
            f"{len(d)} instances, max distance = {max(d):.4f}, violations = {bad}"))
    return results


MGF_CASES = ((2, 0.5, (1.0,)), (4, 1.0, (1.0, 0.5)), (8, 0.25, (1.0, 1.0, 1.0)))


def mgf(samples: int = 100_000, seed: int = 11, cases=MGF_CASES) -> List[PropertyResult]:
    """Monte Carlo check of the chi-square moment generating function."""
    rng = np.random.default_rng(seed)
    results = []
    for m, t, c in cases:
        c = np.asarray(c)
        h = rng.standard_normal((samples, len(c), m))
        s = np.einsum("j,sjm->sm", c, h)
        emp = float(np.mean(np.exp(-t * np.sum(s * s, axis=1))))
        exact = chi_sq_mgf_bound(t, c, m)
        rel = abs(emp - exact) / exact
        results.append(PropertyResult(f"mgf m={m} t={t:g} c={tuple(c.tolist())}", rel <= 0.02,
                                      f"empirical {emp:.5f} vs formula {exact:.5f} "
                                      f"(rel {rel:.2e})"))
    return results


def random_members(S: nm.SolutionSet, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Points of S along random null-space directions from ``x_hat``."""
    pts = []
    for _ in range(count):
        v = S.Z @ rng.standard_normal(S.rank)
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(v > 0, (S.box - S.x_hat) / v, np.where(v < 0, (-S.box - S.x_hat) / v, np.inf))
        lam = float(np.min(up)) if np.isfinite(S.box) else 1.0
        pts.append(S.x_hat + rng.uniform(0.0, max(lam, 0.0)) * v)
    return pts


def projection(instances: int = 60, seed: int = 5, members: int = 100) -> List[PropertyResult]:
    """Projection output lies in S and beats random members in l-inf."""
    rng = np.random.default_rng(seed)
    c = Constellation.bpsk()
    not_member = 0
    beaten = 0
    worst = -math.inf
    for k in range(instances):
        n = int(rng.integers(2, 25))
        m = int(rng.integers(1, n + 1))
        H = rng.standard_normal((m, n))
        y = H @ rng.choice([-1.0, 1.0], size=n) + (0.0, 0.3)[k % 2] * rng.standard_normal(m)
        S = dec.solution_set(H, y, c)
        x_r = rng.uniform(-1.0, 1.0, size=n)
        p = nm.linf_project(S, x_r)
        not_member += not S.contains(p)
        dp = np.max(np.abs(x_r - p))
        for s in random_members(S, members, rng) if S.rank else []:
            gap = dp - np.max(np.abs(x_r - s))
            worst = max(worst, gap)
            beaten += gap > 1e-7
    return [PropertyResult("projection is a member of S", not_member == 0,
                           f"{instances} instances, non-members = {not_member}"),
            PropertyResult("projection is l-inf optimal", beaten == 0,
                           f"{instances}x{members} random members, worst excess = {worst:.2e}")]


def determinism(trials: int = 20) -> List[PropertyResult]:
    """Identical CSV bytes from repeated runs with 1 and 4 worker threads."""
    from .report import make_row, to_csv
    from .sim import ExperimentConfig, run_experiment

    cfg = ExperimentConfig(n_values=[8, 12], sigma_values=[0.0, 0.3], alpha=0.5,
                           decoders=["ml", "isq", "risq", "amp"], trials=trials, master_seed=99)
    outs = []
    for threads in (1, 4, 1):
        res = run_experiment(cfg, threads=threads)
        outs.append(to_csv(make_row(s, cfg) for s in res.stats).encode())
    same = all(o == outs[0] for o in outs)
    return [PropertyResult("repeated runs byte-identical", same,
                           f"{len(outs)} runs, threads 1/4/1, {len(outs[0])} bytes")]


RUNNERS: Dict[str, Callable[[], List[PropertyResult]]] = {
    "relaxation": relaxation, "lemma2": lemma2, "mgf": mgf, "projection": projection,
    "determinism": determinism}


def run_suite(name: str) -> List[PropertyResult]:
    try:
        return RUNNERS[name]()
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
