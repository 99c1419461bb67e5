"""Radial large solutions of Delta u + |grad u| = p(x) f(u) on R^N."""

from .classify import (
    ClassifierOptions,
    ConditionVerdict,
    classify_existence_integral,
    classify_slow_variation,
    existence_verdict,
)
from .errors import BlowupLabError
from .fixtures import get_fixture, list_fixtures
from .kernel import GridFunction, RadialGrid, build_grid, cumulative_integral, kernel_bound, nested_kernel
from .problem import (
    Constants,
    Nonlinearity,
    PotentialSpec,
    RadialBounds,
    compute_constants,
    estimate_lambda,
    extract_radial_bounds,
)
from .solver import PicardConfig, SolveReport, build_sub_super_pair, divergence_lower_bound, ode_oracle, picard_iterate
from .verify import inequality_harness, verify_decay_rate, verify_explicit_solution

__version__ = "0.1.0"
