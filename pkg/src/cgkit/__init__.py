"""Projection-free stochastic optimisation: stochastic Frank-Wolfe, stochastic
conditional gradient sliding and zeroth-order SGD with exact oracle accounting."""

from .core import (FIRST_ORDER, ZEROTH_ORDER, IcgCapExceeded, NonFiniteError, OracleCounters,
                   RngStream, RunTrace)
from .feasible_sets import Box, L1Ball, L2Ball, Simplex, fw_gap, make_set
from .oracles import growth_probe, minibatch_gradient, zo_gradient, zo_mse_probe
from .problems import (BlobsConfig, HingeSquaredObjective, InterpolatingQuadratic, generate_blobs,
                       make_quadratic)
from .scgs import ScgsSchedule, icg, scgs_run
from .sfw import SfwSchedule, sfw_run
from .zo_sgd import ZoSgdConfig, zo_sgd_run

__version__ = "0.1.0"
