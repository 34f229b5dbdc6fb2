"""Result rows and their CSV / JSON-lines / gnuplot renderings.

The CSV column order is part of the public interface.  Every float is
written with 9 significant digits; wall-clock timings are left out so that
reruns are byte-identical.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, fields
from typing import Iterable, List, Optional

from . import __version__
from .sim import ExperimentConfig, SerStats


@dataclass
class ResultRow:
    decoder: str
    n: int
    m: int
    alpha: float
    xi: Optional[float]
    sigma: float
    snr_per_antenna: float
    fading: str
    constellation: str
    trials: int
    master_seed: int
    k_fraction: float
    epsilon: float
    delta: float
    amp_iters: int
    symbol_errors: int
    symbols_total: int
    ser_point: float
    ser_ci_low: float
    ser_ci_high: float
    block_ge_k_count: int
    p_e_k_point: float
    version: str


COLUMNS = [f.name for f in fields(ResultRow)]


def make_row(stats: SerStats, config: ExperimentConfig) -> ResultRow:
    return ResultRow(
        decoder=stats.decoder_id.lower(), n=stats.n, m=stats.m, alpha=stats.alpha, xi=stats.xi,
        sigma=stats.sigma, snr_per_antenna=stats.snr_per_antenna, fading=config.fading,
        constellation=config.constellation, trials=stats.trials, master_seed=config.master_seed,
        k_fraction=stats.k_fraction, epsilon=config.epsilon, delta=config.delta,
        amp_iters=config.amp_iters, symbol_errors=stats.symbol_errors,
        symbols_total=stats.symbols_total, ser_point=stats.ser_point,
        ser_ci_low=stats.ser_ci_low, ser_ci_high=stats.ser_ci_high,
        block_ge_k_count=stats.block_ge_k_count, p_e_k_point=stats.p_e_k_point,
        version=f"v{__version__}")


def fmt(value) -> str:
    """Locale-independent text form; floats get 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return f"{value:.9g}"
    return str(value)


def to_csv(rows: Iterable[ResultRow]) -> str:
    rows = list(rows)
    out = io.StringIO()
    out.write(",".join(COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(fmt(getattr(r, c)) for c in COLUMNS) + "\n")
    out.write(f"# rows={len(rows)}\n")
    return out.getvalue()


def _json_value(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return fmt(value)
        return float(fmt(value))
    return value


def to_jsonl(rows: Iterable[ResultRow]) -> str:
    lines = [json.dumps({c: _json_value(getattr(r, c)) for c in COLUMNS}) for r in rows]
    return "".join(line + "\n" for line in lines)


def gnuplot_script(csv_path: str, decoders: List[str]) -> str:
    """Companion script plotting SER against n, one curve per decoder."""
    col = {c: i + 1 for i, c in enumerate(COLUMNS)}
    plots = ", \\\n     ".join(
        f"'{csv_path}' every ::1 using (strcol({col['decoder']}) eq '{d}' ? ${col['n']} : 1/0):"
        f"{col['ser_point']}:{col['ser_ci_low']}:{col['ser_ci_high']} "
        f"with yerrorlines title '{d}'"
        for d in decoders)
    return ("set datafile separator ','\n"
            "set datafile commentschars '#'\n"
            "set logscale y\n"
            "set xlabel 'n (users)'\n"
            "set ylabel 'symbol error rate'\n"
            f"plot {plots}\n")
