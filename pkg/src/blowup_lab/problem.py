"""Potentials, nonlinearities and the radial data derived from them.

For a potential p on R^N the radial envelopes are the sphere maximum and
minimum of p, their difference (the angular oscillation), and the weight

    W(r) = exp(Lambda_N * int_0^r s * min_{|x|=s} p ds),

with Lambda the sublinearity constant of the nonlinearity and
Lambda_N = Lambda / (N - 2).  W is stored as its logarithm because it
overflows double precision for any potential that grows at infinity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import (
    DimensionTooSmall,
    DivergentIntegral,
    DomainError,
    InvalidNonlinearity,
    InvalidParameter,
    NegativePotential,
    SamplingFailure,
    UnboundedRatio,
)
from .kernel import GridFunction, RadialGrid, cumulative_integral
from .sampling import sphere_extrema

STABILITY_TOL = 1e-6


class LambdaWarning(UserWarning):
    """The ratio f(s)/s was still increasing at the end of the sampled range."""


@dataclass(frozen=True)
class PotentialSpec:
    """A nonnegative potential on R^N.

    ``body`` is the full expression.  When ``radial_part``/``angular_part`` are
    given, p = radial_part(r) + angular_part(x) with a nonnegative angular
    part; the oscillation is then computed from the angular part alone, in
    log space, which avoids cancellation where it is many orders of magnitude
    below p.
    """

    dimension: int
    body: expr.Node
    radial_part: expr.Node | None = None
    angular_part: expr.Node | None = None
    sample_count: int = 512
    refinement_rounds: int = 3
    radial: bool = False
    label: str = ""

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise DimensionTooSmall(f"dimension must be an integer >= 3, got {self.dimension!r}")
        if self.sample_count < 1 or self.refinement_rounds < 0:
            raise InvalidParameter("sample_count must be positive and refinement_rounds nonnegative")
        if (self.radial_part is None) != (self.angular_part is None):
            raise InvalidParameter("radial_part and angular_part must be given together")
        if self.radial_part is not None:
            extra = expr.variables_of(self.radial_part) - {"r", "N"}
            if extra:
                raise InvalidParameter(f"radial part depends on {sorted(extra)}")
        if self.radial:
            extra = expr.variables_of(self.body) - {"r", "N"}
            if extra:
                raise InvalidParameter(f"potential flagged radial but depends on {sorted(extra)}")

    @classmethod
    def from_text(cls, source: str, dimension: int, **kwargs) -> "PotentialSpec":
        return cls(dimension, expr.parse_expression(source, dimension), **kwargs)

    @classmethod
    def from_parts(cls, radial: str, angular: str, dimension: int, **kwargs) -> "PotentialSpec":
        rad = expr.parse_expression(radial, dimension)
        ang = expr.parse_expression(angular, dimension)
        return cls(dimension, expr.Binary("+", rad, ang), rad, ang, **kwargs)

    @property
    def source(self) -> str:
        return expr.to_source(self.body)

    def __call__(self, points, radius=None):
        return expr.evaluate(self.body, expr.point_env(points, self.dimension, radius))


@dataclass(frozen=True)
class Nonlinearity:
    """A nondecreasing absorption term f with f(0) = 0, f > 0 on (0, inf).

    The expression uses the variable ``s`` (``t`` is accepted as a synonym).
    """

    body: expr.Node
    lambda_override: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.lambda_override is not None and not self.lambda_override > 0:
            raise InvalidParameter("lambda_override must be positive")
        s = np.concatenate([[0.0], np.logspace(-8, 8, 257)])
        try:
            values = self(s)
        except (DomainError, ArithmeticError) as exc:
            raise InvalidNonlinearity(f"cannot evaluate f on [0, 1e8]: {exc}") from exc
        if values[0] != 0:
            raise InvalidNonlinearity(f"f(0) must be 0, got {values[0]}")
        if np.any(values[1:] <= 0):
            raise InvalidNonlinearity("f must be positive on (0, inf)")
        if np.any(np.diff(values) < -1e-12 * np.abs(values[1:])):
            raise InvalidNonlinearity("f must be nondecreasing")

    @classmethod
    def from_text(cls, source: str, **kwargs) -> "Nonlinearity":
        return cls(expr.parse_function(source, ("s", "t")), **kwargs)

    @property
    def source(self) -> str:
        return expr.to_source(self.body)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(expr.evaluate(self.body, {"s": s, "t": s}), s.shape).astype(float)


def estimate_lambda(f: Nonlinearity, s_max: float = 1e8, samples: int = 1024,
                    cap: float = 1e12) -> float:
    """sup_{s >= 1} f(s)/s, estimated on log-spaced samples of [1, s_max].

    Raises UnboundedRatio when the ratio exceeds ``cap`` or still grows by
    more than a factor 2 across the last decade (power-type superlinearity);
    slower growth there only triggers a LambdaWarning.
    """
    if f.lambda_override is not None:
        return float(f.lambda_override)
    s = np.logspace(0.0, np.log10(s_max), samples)
    ratio = f(s) / s
    top = float(ratio.max())
    if not np.isfinite(top) or top > cap:
        raise UnboundedRatio(f"f(s)/s exceeds {cap:g}: the nonlinearity is not sublinear")
    last_decade = s >= s_max / 10
    running = np.maximum.accumulate(ratio)
    start, end = running[last_decade][0], running[-1]
    if end > 2 * start:
        raise UnboundedRatio(
            f"f(s)/s grows from {start:.6g} to {end:.6g} over the last decade: not sublinear"
        )
    if end > start * (1 + 1e-12):
        warnings.warn(
            f"f(s)/s still increasing at s = {s_max:g}; estimate {top:.6g} may be low",
            LambdaWarning,
            stacklevel=2,
        )
    return top


@dataclass(frozen=True, eq=False)
class RadialBounds:
    sphere_max: GridFunction
    sphere_min: GridFunction
    oscillation: GridFunction
    log_oscillation: np.ndarray = field(repr=False)  # -inf where the oscillation is 0
    log_weight: GridFunction = field(repr=False)
    lam: float = 1.0
    dimension: int = 3

    @property
    def grid(self) -> RadialGrid:
        return self.sphere_max.grid

    @property
    def scaled_lambda(self) -> float:
        return self.lam / (self.dimension - 2)

    def weight(self) -> np.ndarray:
        """W on the grid; may contain inf where it exceeds double range."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_weight.values)

    def log_weighted_oscillation(self) -> np.ndarray:
        """log(r * h(r) * W(r)), -inf where the product vanishes."""
        with np.errstate(divide="ignore"):
            return np.log(self.grid.nodes) + self.log_oscillation + self.log_weight.values

    def weighted_oscillation(self) -> np.ndarray:
        """r * h(r) * W(r); inf where it overflows."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_weighted_oscillation())

    def restrict(self, r_max: float) -> "RadialBounds":
        grid = self.grid.restrict(r_max)
        n = len(grid)
        cut = lambda gf: GridFunction(grid, gf.values[:n])  # noqa: E731
        return RadialBounds(
            cut(self.sphere_max), cut(self.sphere_min), cut(self.oscillation),
            self.log_oscillation[:n], cut(self.log_weight), self.lam, self.dimension,
        )


def _check_stable(history, radii, what):
    if history.shape[0] < 2:
        return
    new, old = history[-1], history[-2]
    scale = np.maximum(np.abs(new), np.abs(old))
    with np.errstate(invalid="ignore", divide="ignore"):
        change = np.where(scale > 0, np.abs(new - old) / scale, 0.0)
    worst = int(np.argmax(change))
    if change[worst] >= STABILITY_TOL:
        raise SamplingFailure(
            f"{what} not stabilized at r = {radii[worst]:.6g} (last refinement changed it by "
            f"{change[worst]:.3g} relative); increase refinement_rounds or sample_count"
        )


def extract_radial_bounds(p: PotentialSpec, grid: RadialGrid, lam: float) -> RadialBounds:
    """Sphere max/min of p at every grid radius, the oscillation and log W."""
    if not lam > 0:
        raise InvalidParameter("sublinearity constant must be positive")
    N = p.dimension
    r = grid.nodes
    if p.radial:
        axis = np.zeros((r.size, N))
        axis[:, 0] = r
        vals = np.broadcast_to(p(axis, radius=r), r.shape).astype(float)
        upper = lower = vals
        osc = np.zeros_like(r)
        log_osc = np.full_like(r, -np.inf)
    elif p.angular_part is not None:
        radial_vals = np.broadcast_to(
            expr.evaluate(p.radial_part, {"r": r, "N": float(N)}), r.shape
        ).astype(float)

        def log_angular(points, radius):
            try:
                out = expr.log_evaluate(p.angular_part, expr.point_env(points, N, radius))
            except DomainError as exc:
                raise NegativePotential(f"angular part must be nonnegative: {exc}") from exc
            return np.broadcast_to(out, radius.shape)

        log_max, log_min = sphere_extrema(
            log_angular, r, N, p.sample_count, p.refinement_rounds
        )
        upper_hist = radial_vals + np.exp(log_max)
        lower_hist = radial_vals + np.exp(log_min)
        _check_stable(upper_hist, r, "sphere maximum")
        _check_stable(lower_hist, r, "sphere minimum")
        upper, lower = upper_hist[-1], lower_hist[-1]
        la, lb = log_max[-1], log_min[-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            log_osc = np.where(la == -np.inf, -np.inf, la + np.log1p(-np.exp(lb - la)))
        osc = np.exp(log_osc)
    else:
        def values(points, radius):
            return np.broadcast_to(p(points, radius), radius.shape)

        upper_hist, lower_hist = sphere_extrema(values, r, N, p.sample_count, p.refinement_rounds)
        _check_stable(upper_hist, r, "sphere maximum")
        _check_stable(lower_hist, r, "sphere minimum")
        upper, lower = upper_hist[-1], lower_hist[-1]
        osc = np.maximum(upper - lower, 0.0)
        with np.errstate(divide="ignore"):
            log_osc = np.log(osc)
    if np.any(lower < 0):
        i = int(np.argmin(lower))
        raise NegativePotential(f"potential takes the value {lower[i]:.6g} on the sphere r = {r[i]:.6g}")
    lower_gf = GridFunction(grid, lower)
    moment = cumulative_integral(lower_gf.with_values(r * lower))
    log_weight = moment.with_values((lam / (N - 2)) * moment.values)
    log_osc = np.array(log_osc, dtype=float)
    log_osc.setflags(write=False)
    return RadialBounds(
        GridFunction(grid, upper), lower_gf, GridFunction(grid, osc), log_osc, log_weight, float(lam), N,
    )


@dataclass(frozen=True)
class Constants:
    lam: float
    scaled_lambda: float
    gronwall_factor: float  # exp(Lambda_N * int_0^inf t h(t) dt)
    truncation_radius: float
    growth_rate: float  # Lambda_N * max_{t <= R} t * min_{|x|=t} p
    base_threshold: float
    oscillation_moment: float
    weighted_oscillation_total: float
    tail_estimate: float
    safety_factor: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def growth_rate(bounds: RadialBounds, R: float) -> float:
    """Lambda_N * max_{t <= R} t psi(t) over the grid nodes and t = R itself."""
    r = bounds.grid.nodes
    mask = r <= R * (1 + 1e-12)
    top = max(float(np.max(r[mask] * bounds.sphere_min.values[mask])), R * float(bounds.sphere_min(R)))
    return bounds.scaled_lambda * top


def compute_constants(bounds: RadialBounds, R: float, verdict=None, safety_factor: float = 1.05,
                      options=None) -> Constants:
    """Gronwall factor, growth rate and the super-solution base threshold.

    ``verdict`` is the slow-variation classification of ``bounds``; it is
    computed when omitted (with classifier ``options``) and must be convergent.
    """
    from .classify import CONVERGENT, ClassifierOptions, classify_slow_variation

    if safety_factor <= 1:
        raise InvalidParameter("safety factor must exceed 1")
    if verdict is None:
        verdict = classify_slow_variation(bounds, options or ClassifierOptions())
    if verdict.verdict != CONVERGENT:
        raise DivergentIntegral(
            f"slow-variation integral is {verdict.verdict}; base threshold undefined"
        )
    lam_n = bounds.scaled_lambda
    r = bounds.grid.nodes
    moment = float(cumulative_integral(bounds.oscillation.with_values(r * bounds.oscillation.values)).values[-1])
    # t*h <= t*h*W since W >= 1, so the classifier's tail also bounds this tail
    tail = verdict.tail_estimate
    moment += tail
    gronwall = float(np.exp(lam_n * moment))
    total = verdict.total + tail
    base = safety_factor * (1.0 + gronwall * lam_n * total)
    return Constants(
        lam=bounds.lam,
        scaled_lambda=lam_n,
        gronwall_factor=gronwall,
        truncation_radius=float(R),
        growth_rate=growth_rate(bounds, R),
        base_threshold=float(base),
        oscillation_moment=moment,
        weighted_oscillation_total=float(total),
        tail_estimate=float(tail),
        safety_factor=float(safety_factor),
    )
