"""Independent checks: explicit solutions, decay rates, the kernel inequality.

* ``verify_explicit_solution`` evaluates the PDE residual
  Delta u + |grad u| - p f(u) of a closed-form u by finite differences.
* ``verify_decay_rate`` fits the power-law exponent of r h(r) W(r).
* ``inequality_harness`` checks T[g] <= (1/(N-2)) int_0^r t g(t) dt on
  random piecewise-linear g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import expr
from .errors import InvalidParameter, NonpositiveValues
from .kernel import GridFunction, build_grid, kernel_bound, kernel_tolerance, nested_kernel
from .problem import Nonlinearity, RadialBounds


@dataclass
class ResidualReport:
    sample_points: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)  # normalized by p f(u) + 1
    max_abs_relative: float
    tolerance: float = 1e-7

    def __post_init__(self):
        if len(self.residuals) != len(self.sample_points):
            raise InvalidParameter("one residual per sample point")

    @property
    def passed(self) -> bool:
        return self.max_abs_relative <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "samples": len(self.residuals),
            "max_abs_relative": self.max_abs_relative,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "sample_points": self.sample_points.tolist(),
            "residuals": self.residuals.tolist(),
        }


def ball_points(dimension: int, count: int, radius: float = 2.0) -> np.ndarray:
    """First ``count`` points of the unscrambled Halton sequence inside the ball."""
    sampler = qmc.Halton(d=dimension, scramble=False)
    out = []
    while sum(len(c) for c in out) < count:
        cube = radius * (2.0 * sampler.random(max(64, 4 * count)) - 1.0)
        out.append(cube[np.linalg.norm(cube, axis=1) < radius])
    return np.concatenate(out)[:count]


def verify_explicit_solution(u: expr.Node, p: expr.Node, f: Nonlinearity, N: int,
                             samples: int = 64, radius: float = 2.0,
                             tolerance: float = 1e-7) -> ResidualReport:
    """Residual of Delta u + |grad u| = p f(u) at deterministic points of the ball."""
    if samples < 1:
        raise InvalidParameter("samples must be positive")
    points = ball_points(N, samples, radius)
    residuals = np.empty(samples)
    for i, x in enumerate(points):
        grad, lap = expr.numeric_derivatives(u, x)
        u0 = expr.eval_expression(u, x, N)
        rhs = expr.eval_expression(p, x, N) * float(f(np.array([u0]))[0])
        residuals[i] = (lap + np.linalg.norm(grad) - rhs) / (abs(rhs) + 1.0)
    return ResidualReport(points, residuals, float(np.max(np.abs(residuals))), tolerance)


@dataclass
class DecayFit:
    slope: float
    passed: bool
    expected_exponent: float
    window: tuple
    one_sided: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__, window=list(self.window))


def power_slope(r, log_values) -> float:
    """Least-squares slope of log_values against log r."""
    return float(np.polyfit(np.log(r), log_values, 1)[0])


def verify_decay_rate(bounds: RadialBounds, expected_exponent: float, window=(1e2, 1e4),
                      one_sided: bool = False, tolerance: float = 0.3) -> DecayFit:
    """Fit the exponent of r h(r) W(r) over ``window``.

    Passes when the slope is within ``tolerance`` of ``expected_exponent``,
    or with ``one_sided`` when it is at most ``expected_exponent``.
    """
    lo, hi = window
    r = bounds.grid.nodes
    if not 0 < lo < hi <= r[-1] * (1 + 1e-12):
        raise InvalidParameter(f"fit window {window} not inside (0, {r[-1]:g}]")
    mask = (r >= lo) & (r <= hi)
    if mask.sum() < 2:
        raise InvalidParameter(f"fewer than two grid nodes in {window}")
    logs = bounds.log_weighted_oscillation()[mask]
    if not np.all(np.isfinite(logs)):
        raise NonpositiveValues("r h W vanishes or overflows inside the fit window")
    slope = power_slope(r[mask], logs)
    ok = slope <= expected_exponent if one_sided else abs(slope - expected_exponent) <= tolerance
    return DecayFit(slope, bool(ok), float(expected_exponent), (float(lo), float(hi)), one_sided)


@dataclass
class InequalityCheck:
    margin: float  # min over nodes of bound - kernel
    tolerance: float

    @property
    def violated(self) -> bool:
        return self.margin < -self.tolerance


def check_kernel_inequality(g: GridFunction, N: int) -> InequalityCheck:
    """T[g] <= kernel_bound(g) at every node, up to 3 eps_quad plus rounding."""
    kern = nested_kernel(g, N).outer.values
    bound = kernel_bound(g, N).values
    tol = 3 * kernel_tolerance(g, N) + 1e-13 * float(np.max(bound))
    return InequalityCheck(float(np.min(bound - kern)), tol)


def random_piecewise_linear(rng: np.random.Generator, r_end: float, nodes: np.ndarray) -> np.ndarray:
    """Nonnegative piecewise-linear values on ``nodes``, some pieces zero."""
    breaks = np.concatenate([[0.0], np.sort(rng.uniform(0.0, r_end, rng.integers(1, 12))), [r_end]])
    scale = 10.0 ** rng.uniform(-2, 2)
    heights = rng.uniform(0.0, scale, breaks.size)
    heights[rng.random(breaks.size) < 0.3] = 0.0
    return np.interp(nodes, breaks, heights)


@dataclass
class HarnessSummary:
    trials: int
    seed: int
    dimensions: list
    violations: int
    worst_margin: float  # smallest bound - kernel seen (>= -tolerance when clean)
    worst_tolerance: float
    per_dimension: dict

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def inequality_harness(trials: int, seed: int, dimensions=(3, 4, 5, 10),
                       node_count: int = 257) -> HarnessSummary:
    """Seeded random trials of the kernel inequality for each dimension.

    Every trial draws an end radius, a grading and a piecewise-linear g;
    the stream for dimension N is seeded by (seed, N), so results do not
    depend on which other dimensions are requested.
    """
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    total_bad, worst, worst_tol, per = 0, np.inf, 0.0, {}
    for N in dimensions:
        rng = np.random.default_rng([seed, N])
        bad, low = 0, np.inf
        for _ in range(trials):
            r_end = rng.uniform(0.5, 40.0)
            grid = build_grid(r_end, node_count, rng.uniform(1.0, 2.0))
            g = GridFunction(grid, random_piecewise_linear(rng, r_end, grid.nodes))
            check = check_kernel_inequality(g, N)
            bad += check.violated
            low = min(low, check.margin)
            worst_tol = max(worst_tol, check.tolerance)
        per[str(N)] = {"violations": int(bad), "worst_margin": float(low)}
        total_bad += bad
        worst = min(worst, low)
    return HarnessSummary(trials, seed, [int(n) for n in dimensions], int(total_bad), float(worst),
                          float(worst_tol), per)
