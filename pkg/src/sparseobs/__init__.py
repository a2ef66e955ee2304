"""Particle methods for point observations of advection-diffusion problems.

Point values of the solution are computed as Monte Carlo averages over
stochastic characteristics, without solving for the full field. The
package also contains full-field reference solvers, pCN sampling for the
background flow and Nelder-Mead optimal forcing.
"""

from .field_model import (
    Box,
    ConstantDiffusion,
    DiagonalDiffusion,
    Disk,
    FourierVelocityField,
    Plane,
    ScalarField,
    Torus,
    boundary_exit,
    eval_velocity,
    lattice_count,
    representative_modes,
)
from .benchmark import CostModel, ScalingTable, benchmark_scaling, predict_cost_ratio
from .config import ConfigError, RunConfig, load_config, parse_config, save_config
from .forward_ad import AdProblemSpec, observe_ad, observe_ad_single
from .forward_bvp import BvpEstimate, BvpProblemSpec, observe_bvp
from .inference import (
    ChainResult,
    ChainState,
    LikelihoodSpec,
    PriorSpec,
    histogram,
    pcn_step,
    prior_draw,
    run_chain,
)
from .mc_executor import AllParticlesFailedError, ParticleEstimate
from .optimize import ForcingControl, forcing_cost, nelder_mead, optimize_forcing
from .reference_solvers import fd_solve_bvp, galerkin_solve_ad
from .rng import StreamKey
from .sde_kernel import StepScheme, em_step, milstein_step, simulate_to_exit, simulate_to_time

__version__ = "0.1.0"

__all__ = [
    "AdProblemSpec",
    "AllParticlesFailedError",
    "Box",
    "BvpEstimate",
    "BvpProblemSpec",
    "ChainResult",
    "ChainState",
    "ConfigError",
    "ConstantDiffusion",
    "CostModel",
    "DiagonalDiffusion",
    "Disk",
    "ForcingControl",
    "FourierVelocityField",
    "LikelihoodSpec",
    "ParticleEstimate",
    "Plane",
    "PriorSpec",
    "RunConfig",
    "ScalarField",
    "ScalingTable",
    "StepScheme",
    "StreamKey",
    "Torus",
    "benchmark_scaling",
    "boundary_exit",
    "em_step",
    "eval_velocity",
    "fd_solve_bvp",
    "forcing_cost",
    "galerkin_solve_ad",
    "histogram",
    "lattice_count",
    "load_config",
    "milstein_step",
    "nelder_mead",
    "observe_ad",
    "observe_ad_single",
    "observe_bvp",
    "optimize_forcing",
    "parse_config",
    "pcn_step",
    "predict_cost_ratio",
    "prior_draw",
    "representative_modes",
    "run_chain",
    "save_config",
    "simulate_to_exit",
    "simulate_to_time",
]
