"""Monte Carlo engine for symbol-error-rate experiments.

Every trial draws its own channel, codeword and noise from a seed that is
a pure function of (master_seed, grid-point key, trial index), so the
aggregated counts do not depend on how trials are scheduled.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import decoders as dec
from .model import (Constellation, Dimensions, FadingDistribution, antennas_for, make_instance,
                    symbol_errors)

log = logging.getLogger(__name__)

WILSON_Z = 1.96
DECODER_NAMES = {"ml": dec.DecoderId.ML, "isq": dec.DecoderId.ISQ, "risq": dec.DecoderId.RISQ,
                 "grid": dec.DecoderId.GRID, "amp": dec.DecoderId.AMP}


@dataclass
class ExperimentConfig:
    n_values: List[int]
    sigma_values: List[float]
    alpha: Optional[float] = None
    xi: Optional[float] = None
    fading: str = "gaussian"
    constellation: str = "bpsk"
    decoders: List[str] = field(default_factory=lambda: ["isq", "risq"])
    trials: int = 100
    master_seed: int = 0
    k_fraction: float = 0.02
    max_exhaustive_bits: float = dec.MAX_EXHAUSTIVE_BITS
    epsilon: float = 0.25
    delta: float = 0.0
    amp_iters: int = 30

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Raise ``ValueError`` naming the offending field."""
        def bad(key, msg):
            raise ConfigError(key, msg)

        if not self.n_values or any(int(n) != n or n < 1 for n in self.n_values):
            bad("n_values", "must be a non-empty list of positive integers")
        self.n_values = [int(n) for n in self.n_values]
        if not self.sigma_values or any(s < 0 for s in self.sigma_values):
            bad("sigma_values", "must be a non-empty list of nonnegative reals")
        self.sigma_values = [float(s) for s in self.sigma_values]
        if (self.alpha is None) == (self.xi is None):
            bad("alpha", "give exactly one of alpha or xi")
        if self.alpha is not None and not self.alpha > 0:
            bad("alpha", "must be positive")
        if self.xi is not None:
            if not 0 < self.xi < 1:
                bad("xi", "must lie in (0, 1)")
            if min(self.n_values) < 2:
                bad("n_values", "the xi schedule needs n >= 2")
        try:
            FadingDistribution(self.fading)
        except ValueError:
            bad("fading", f"unknown fading {self.fading!r} (gaussian, rademacher, uniform)")
        try:
            Constellation.from_name(self.constellation)
        except ValueError as e:
            bad("constellation", str(e))
        if not self.decoders:
            bad("decoders", "at least one decoder is required")
        for d in self.decoders:
            if d.lower() not in DECODER_NAMES:
                bad("decoders", f"unknown decoder {d!r} (ml, isq, risq, grid, amp)")
        self.decoders = [d.lower() for d in self.decoders]
        if len(set(self.decoders)) != len(self.decoders):
            bad("decoders", "duplicate decoder")
        if int(self.trials) != self.trials or self.trials < 1:
            bad("trials", "must be a positive integer")
        self.trials = int(self.trials)
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2 ** 64:
            bad("master_seed", "must be an unsigned 64-bit integer")
        self.master_seed = int(self.master_seed)
        if not 0 < self.k_fraction <= 1:
            bad("k_fraction", "must lie in (0, 1]")
        if not self.max_exhaustive_bits > 0:
            bad("max_exhaustive_bits", "must be positive")
        if not self.epsilon > 0:
            bad("epsilon", "must be positive")
        if int(self.amp_iters) != self.amp_iters or self.amp_iters < 0:
            bad("amp_iters", "must be a nonnegative integer")

    def grid_points(self) -> List["GridPoint"]:
        pts = []
        for n in self.n_values:
            dims = antennas_for(n, alpha=self.alpha, xi=self.xi)
            for sigma in self.sigma_values:
                pts.append(GridPoint(index=len(pts), dims=dims, sigma=sigma))
        return pts


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class GridPoint:
    index: int
    dims: Dimensions
    sigma: float

    @property
    def key(self) -> tuple:
        """Seed key; depends only on (n, m, sigma) so any row can be rerun alone."""
        return (self.dims.n, self.dims.m, int(np.float64(self.sigma).view(np.uint64)))


@dataclass
class Counts:
    """Per-decoder tallies; ``+`` is commutative and associative."""

    trials: int = 0
    symbol_errors: int = 0
    symbols: int = 0
    block_ge_k: int = 0
    seconds: float = 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.trials + other.trials, self.symbol_errors + other.symbol_errors,
                      self.symbols + other.symbols, self.block_ge_k + other.block_ge_k,
                      self.seconds + other.seconds)


@dataclass
class TrialResult:
    errors: Dict[str, int]
    residuals: Dict[str, float]
    seconds: Dict[str, float]


@dataclass
class SerStats:
    decoder_id: str
    n: int
    m: int
    alpha: float
    xi: Optional[float]
    sigma: float
    trials: int
    symbol_errors: int
    symbols_total: int
    ser_point: float
    ser_ci_low: float
    ser_ci_high: float
    block_ge_k_count: int
    p_e_k_point: float
    k_fraction: float
    wall_time_s: float = 0.0

    @property
    def ci_width(self) -> float:
        return self.ser_ci_high - self.ser_ci_low

    @property
    def snr_per_antenna(self) -> float:
        return math.inf if self.sigma == 0 else self.n / self.sigma ** 2

    @property
    def per_user_bound_ok(self) -> bool:
        """Empirical form of P_e <= k' + P_e^{k'}."""
        return self.ser_point <= self.k_fraction + self.p_e_k_point + 3 * self.ci_width


@dataclass
class Skip:
    decoder: str
    n: int
    sigma: float
    reason: str


@dataclass
class ExperimentResult:
    stats: List[SerStats]
    skips: List[Skip]


def wilson_interval(k: int, total: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        return 0.0, 1.0
    p = k / total
    z2 = z * z
    denom = 1.0 + z2 / total
    centre = (p + z2 / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z2 / (4 * total * total)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def trial_rng(master_seed: int, grid_key: tuple, trial_index: int, stream: int) -> np.random.Generator:
    """Counter-based child stream; ``stream`` 0 is the instance, 1+ decoders."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(*grid_key, trial_index, stream))
    return np.random.Generator(np.random.PCG64(ss))


def error_threshold(k_fraction: float, n: int) -> int:
    return max(1, math.ceil(k_fraction * n - 1e-9))


def check_guard(name: str, config: ExperimentConfig, dims: Dimensions,
                c: Constellation) -> Optional[str]:
    """Reason the decoder cannot run at this grid point, or None."""
    if name == "ml":
        bits = dims.n * c.bits_per_symbol
        if bits > config.max_exhaustive_bits:
            return f"ML needs 2^{bits:g} candidates (guard 2^{config.max_exhaustive_bits:g})"
    elif name == "grid":
        try:
            g = dec.grid_build(c, config.epsilon, config.delta, dims.n)
        except ValueError as e:
            return f"grid: {e}"
        if g.log2_size > config.max_exhaustive_bits:
            return (f"grid search needs 2^{g.log2_size:.1f} candidates "
                    f"(guard 2^{config.max_exhaustive_bits:g})")
    elif name == "amp":
        if c.name != "bpsk":
            return "AMP is implemented for BPSK only"
    return None


def run_trial(config: ExperimentConfig, point: GridPoint, trial_index: int,
              decoders: Optional[Sequence[str]] = None) -> TrialResult:
    """Draw one instance and apply each decoder to it."""
    c = Constellation.from_name(config.constellation)
    names = list(decoders if decoders is not None else config.decoders)
    inst = make_instance(point.dims, c, point.sigma,
                         trial_rng(config.master_seed, point.key, trial_index, 0),
                         FadingDistribution(config.fading))
    errors, residuals, seconds = {}, {}, {}
    for name in names:
        t0 = time.perf_counter()
        if name == "ml":
            out = dec.decode_ml(inst.H, inst.y, c, config.max_exhaustive_bits)
        elif name == "isq":
            out = dec.decode_isq(inst.H, inst.y, c)
        elif name == "risq":
            # decoder randomness is its own stream so adding decoders never shifts it
            out = dec.decode_risq(inst.H, inst.y, c,
                                  trial_rng(config.master_seed, point.key, trial_index, 1))
        elif name == "grid":
            g = dec.grid_build(c, config.epsilon, config.delta, point.dims.n)
            out = dec.decode_grid(inst.H, inst.y, g, c, config.max_exhaustive_bits)
        elif name == "amp":
            out = dec.decode_amp(inst.H, inst.y, c, config.amp_iters)
        else:
            raise ValueError(f"unknown decoder {name!r}")
        seconds[name] = time.perf_counter() - t0
        errors[name] = symbol_errors(c, out.estimate, inst.x0)
        r = inst.y - inst.H @ out.estimate
        residuals[name] = float(r @ r)
    return TrialResult(errors=errors, residuals=residuals, seconds=seconds)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run every (grid point, decoder) cell and aggregate Wilson-interval SER."""
    c = Constellation.from_name(config.constellation)
    stats: List[SerStats] = []
    skips: List[Skip] = []
    for point in config.grid_points():
        active = []
        for name in config.decoders:
            reason = check_guard(name, config, point.dims, c)
            if reason is None:
                active.append(name)
            else:
                skips.append(Skip(name, point.dims.n, point.sigma, reason))
                log.warning("skipping %s at n=%d sigma=%g: %s", name, point.dims.n,
                            point.sigma, reason)
        if not active:
            continue
        k_thresh = error_threshold(config.k_fraction, point.dims.n)
        totals = {name: Counts() for name in active}

        def one(trial_index):
            return run_trial(config, point, trial_index, active)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(config.trials)))
        else:
            results = [one(i) for i in range(config.trials)]
        for res in results:
            for name in active:
                e = res.errors[name]
                totals[name] = totals[name] + Counts(1, e, point.dims.n, int(e >= k_thresh),
                                                     res.seconds[name])
        for name in active:
            cnt = totals[name]
            lo, hi = wilson_interval(cnt.symbol_errors, cnt.symbols)
            st = SerStats(decoder_id=DECODER_NAMES[name].value, n=point.dims.n, m=point.dims.m,
                          alpha=point.dims.alpha, xi=point.dims.xi, sigma=point.sigma,
                          trials=cnt.trials, symbol_errors=cnt.symbol_errors,
                          symbols_total=cnt.symbols, ser_point=cnt.symbol_errors / cnt.symbols,
                          ser_ci_low=lo, ser_ci_high=hi, block_ge_k_count=cnt.block_ge_k,
                          p_e_k_point=cnt.block_ge_k / cnt.trials, k_fraction=config.k_fraction,
                          wall_time_s=cnt.seconds)
            if not st.per_user_bound_ok:
                log.error("per-user bound violated for %s at n=%d sigma=%g", name,
                          point.dims.n, point.sigma)
            stats.append(st)
    return ExperimentResult(stats=stats, skips=skips)


@dataclass
class SweepSummary:
    decoder_id: str
    sigma: float
    rows: List[tuple]
    non_increasing: bool


def sweep_summary(stats: Sequence[SerStats]) -> SweepSummary:
    """Trend table over n with a 'non-increasing within CI' verdict.

    The verdict fails only when some larger n has a CI lying entirely
    above the CI of the preceding n.
    """
    stats = sorted(stats, key=lambda s: s.n)
    if not stats:
        raise ValueError("no stats to summarize")
    if len({(s.decoder_id, s.sigma) for s in stats}) != 1:
        raise ValueError("sweep_summary needs stats sharing decoder and sigma")
    rows = [(s.n, s.ser_point, s.ser_ci_low, s.ser_ci_high) for s in stats]
    ok = all(b.ser_ci_low <= a.ser_ci_high for a, b in zip(stats, stats[1:]))
    return SweepSummary(decoder_id=stats[0].decoder_id, sigma=stats[0].sigma, rows=rows,
                        non_increasing=ok)


def summarize_by_cell(stats: Sequence[SerStats]) -> List[SweepSummary]:
    """One ``sweep_summary`` per (decoder, sigma), in first-seen order."""
    groups: Dict[tuple, List[SerStats]] = {}
    for s in stats:
        groups.setdefault((s.decoder_id, s.sigma), []).append(s)
    return [sweep_summary(g) for g in groups.values()]
