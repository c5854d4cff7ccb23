"""Random walks in random environments on the two-dimensional lattice.

Simulation engine (compiled core with a pure-Python fallback), environment
families, coupled-walk operations, renormalization geometry, direction and
trap estimators, and the property suites behind `driftlab verify`.
"""

from ._version import __version__
from .engine import ENGINE_KIND, EngineResult, engine_kind, run
from .engine import HIT, CENSORED as STATUS_CENSORED, WINDOW, FLOOR
from .environments import (EnvironmentField, EnvironmentSpec, Window,
                           ConstantRadius, ParetoRadius, boolean_spec,
                           constant_spec, drift_condition_check, dynamic_spec,
                           factor_spec, gaussian_spec,
                           gen_boolean_percolation, gen_dynamic_1d,
                           gen_factor_iid, gen_gaussian_sign_field, iid_spec,
                           kernel_of, materialize, spec_from_config,
                           spec_to_config)
from .errors import (ConfigError, CostGuardError, DriftlabError,
                     EstimationFailedError, InvalidConfigurationError,
                     InvalidGeometryError, InvalidKernelError,
                     InvalidParameterError, InvalidSpecError,
                     InvalidStateError, WindowExceededError)
from .estimators import (DensityReport, DeviationFit, DirectionStats,
                         RenormParams, RhoReport, ThreatReport, TrapReport,
                         VPMEstimate, calibrate_beta, default_v_grid,
                         deviation_fit, estimate_pH, estimate_v_pm,
                         rho_sequence, simulate_hit, threat_scan,
                         threatened_density, trap_scan)
from .geometry import (Box, GridSpec, ScaleSchedule, block_sites,
                       grid_for_scales, grid_points, h_prime, round_point,
                       scale_table, sep, walk_box)
from .kernels import DIRECTIONS, NORTH, TransitionKernel, jump
from .mixing import BoxPair, FieldView, MixingEstimate, clt_width, \
    empirical_mixing_covariance
from .paths import (S1, S2, S3, VIOLATION, BarrierVerdict, Loop,
                    LoopDecomposition, classify_barrier, loop_decompose,
                    loop_erased)
from .randomness import UniformField, derive_seed, site_key, uniform
from .walk import (CENSORED, UNCERTIFIED, History, PathRecord, Walk,
                   cut_line_estimate, direction_V, event_D, event_E,
                   run_until_height, step, theta_shift)

__all__ = [n for n in dir() if not n.startswith("_")]
