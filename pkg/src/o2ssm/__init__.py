"""Online two-stage submodular maximization with weighted threshold potentials."""

from .guarantees import alpha, c_matroid
from .matroid import Partition, Uniform
from .oracle import Mode, OracleConfig, offline_opt_fractional, offline_opt_integral, second_stage_value
from .pipage import pipage_round
from .relaxation import RelaxedReward
from .wtp import WtpFunction

__version__ = "0.1.0"

__all__ = [
    "WtpFunction",
    "Uniform",
    "Partition",
    "RelaxedReward",
    "pipage_round",
    "OracleConfig",
    "Mode",
    "second_stage_value",
    "offline_opt_integral",
    "offline_opt_fractional",
    "c_matroid",
    "alpha",
]
