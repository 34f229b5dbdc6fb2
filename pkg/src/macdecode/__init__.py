"""Low-complexity multiuser decoders for the SIMO multiple access channel."""

__version__ = "0.1.0"

from .model import (Constellation, Dimensions, FadingDistribution, SystemInstance, antennas_for,
                    make_instance, quantize, sgn, symbol_errors, transmit)
from .numerics import BoxLsResult, SolutionSet, box_ls, build_solution_set, linf_project
from .decoders import (DecodeOutput, DecoderId, GridSpec, GuardError, decode_amp, decode_grid,
                       decode_isq, decode_ml, decode_risq, grid_build, solution_set)
from .bounds import (BoundParams, ErrorPattern, binary_entropy, chi_sq_mgf_bound,
                     grid_union_bound, lemma1_tail_bound, pairwise_exponent, per_user_bound,
                     union_bound)
from .sim import ConfigError, ExperimentConfig, SerStats, run_experiment, sweep_summary

__all__ = [name for name in dir() if not name.startswith("_")]
