"""Radial sub/super-solutions by monotone Picard iteration.

Radial solutions of  u'' + (N-1)/r u' + |u'| = q(r) f(u)  with u' >= 0 solve

    u(r) = b + T[q f(u)](r),

T being the nested kernel.  Starting from the constant b the iterates
u_{k+1} = b + T[q f(u_k)] increase monotonically to the solution.  The
sub-solution uses the sphere maximum of p with b = 1, the super-solution
the sphere minimum with b above the threshold from ``compute_constants``.

Bound checks are made in log space: the a-priori bounds grow like
exp(c r^3) and leave double range long before the solutions do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BoundViolation, InvalidEnvelope, InvalidParameter, NoConvergence, SandwichViolation, StepFailure
from .kernel import GridFunction, coarse_indices, cumulative_integral, nested_kernel
from .problem import Constants, Nonlinearity, RadialBounds, compute_constants, growth_rate

ENVELOPES = ("upper", "lower")


@dataclass(frozen=True)
class PicardConfig:
    base: float = 1.0
    envelope: str = "lower"  # "upper": sphere max of p, "lower": sphere min
    radius: float = 20.0
    max_iterations: int = 200
    tol: float = 1e-10  # relative to 1 + sup|u_k|

    def __post_init__(self):
        if not self.base >= 1:
            raise InvalidParameter(f"base must be >= 1, got {self.base!r}")
        if self.envelope not in ENVELOPES:
            raise InvalidParameter(f"envelope must be one of {ENVELOPES}")
        if not self.tol > 0 or self.max_iterations < 1 or not self.radius > 0:
            raise InvalidParameter("tol, max_iterations and radius must be positive")


@dataclass
class BoundCheck:
    holds: bool
    worst_excess: float  # max over nodes of log(value / bound)
    tolerance: float
    at_radius: float | None = None

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class SolveReport:
    config: PicardConfig
    solution: GridFunction
    iterations: int
    sup_norm_trace: list
    monotonicity_violations: int
    bound_checks: dict = field(default_factory=dict)
    quadrature_tolerance: float | None = None  # relative refinement difference
    oracle_max_rel_error: float | None = None

    @property
    def all_bounds_hold(self) -> bool:
        return all(c.holds for c in self.bound_checks.values()) and self.monotonicity_violations == 0

    def as_dict(self) -> dict:
        return {
            "config": dict(self.config.__dict__),
            "iterations": self.iterations,
            "sup_norm_trace": [float(x) for x in self.sup_norm_trace],
            "monotonicity_violations": self.monotonicity_violations,
            "bound_checks": {k: v.as_dict() for k, v in self.bound_checks.items()},
            "quadrature_tolerance": self.quadrature_tolerance,
            "oracle_max_rel_error": self.oracle_max_rel_error,
            "solution_at_radius": float(self.solution.values[-1]),
            "nodes": len(self.solution),
        }


def _envelope(bounds: RadialBounds, which: str) -> GridFunction:
    return bounds.sphere_max if which == "upper" else bounds.sphere_min


def _log_check(log_value, log_bound, nodes, tol) -> BoundCheck:
    excess = np.asarray(log_value) - np.asarray(log_bound)
    i = int(np.argmax(excess))
    worst = float(excess[i])
    return BoundCheck(bool(worst <= tol), worst, tol, float(nodes[i]))


def _iterate(envelope: GridFunction, f: Nonlinearity, base: float, N: int, max_iterations: int,
             tol: float, on_iterate=None):
    u = np.full(len(envelope), float(base))
    trace = []
    violations = 0
    for k in range(1, max_iterations + 1):
        g = envelope.with_values(envelope.values * f(u))
        new = base + nested_kernel(g, N).outer.values
        if not np.all(np.isfinite(new)):
            raise NoConvergence(f"iterate {k + 1} left double range")
        violations += int(np.sum(new - u < -1e-12 * (1 + np.abs(u))))
        diff = float(np.max(np.abs(new - u)))
        trace.append(diff)
        u = new
        if on_iterate is not None:
            on_iterate(u)
        if diff < tol * (1 + float(np.max(np.abs(u)))):
            return u, k + 1, trace, violations
    raise NoConvergence(
        f"no fixed point after {max_iterations} sweeps (last sup-difference {trace[-1]:.3e})"
    )


def picard_iterate(config: PicardConfig, bounds: RadialBounds, f: Nonlinearity,
                   constants: Constants | None = None, refine_check: bool = True) -> SolveReport:
    """Monotone iteration u_1 = b, u_{k+1} = b + T[envelope * f(u_k)] on [0, R].

    Records monotonicity violations, the exponential a-priori bound
    u_k <= b e^{M r} for every iterate, and the Gronwall-type bounds of the
    converged solution.  With ``refine_check`` the solve is repeated on the
    every-other-node grid and the relative difference becomes the
    quadrature tolerance used by the checks (3x).
    """
    b = bounds.restrict(config.radius)
    env = _envelope(b, config.envelope)
    if np.any(env.values < 0):
        raise InvalidEnvelope("envelope takes negative values")
    N = b.dimension
    r = env.nodes
    lam_n = b.scaled_lambda
    M = growth_rate(b, config.radius)
    log_exp_bound = np.log(config.base) + M * r
    worst_exp = [-np.inf, 0.0]

    def check_exp(u):
        excess = np.log(u) - log_exp_bound
        i = int(np.argmax(excess))
        if excess[i] > worst_exp[0]:
            worst_exp[:] = [float(excess[i]), float(r[i])]

    u, iterations, trace, violations = _iterate(
        env, f, config.base, N, config.max_iterations, config.tol, check_exp
    )
    eps = 0.0
    if refine_check and len(env) >= 32:
        coarse_env = env.coarsen()
        uc, *_ = _iterate(coarse_env, f, config.base, N, config.max_iterations, config.tol)
        fine = u[coarse_indices(env.grid)]
        eps = float(np.max(np.abs(fine - uc) / np.abs(fine)))
    tol = float(np.log1p(3 * eps) + 1e-12)

    checks = {"exponential": BoundCheck(worst_exp[0] <= tol, worst_exp[0], tol, worst_exp[1])}
    env_moment = cumulative_integral(env.with_values(r * env.values)).values
    checks["gronwall_exponential"] = _log_check(
        np.log(u), np.log(config.base) + lam_n * env_moment, r, tol
    )
    linear_rhs = config.base + lam_n * cumulative_integral(env.with_values(r * env.values * u)).values
    checks["gronwall_linear"] = _log_check(np.log(u), np.log(linear_rhs), r, tol)
    if constants is not None:
        checks["weight"] = _log_check(
            np.log(u),
            np.log(config.base) + np.log(constants.gronwall_factor) + b.log_weight.values,
            r, tol,
        )
    return SolveReport(config, GridFunction(env.grid, u), iterations, trace, violations, checks, eps)


class SubSuperPair(NamedTuple):
    sub: SolveReport
    sup: SolveReport
    worst_gap: float  # max over nodes of log(sub / super); <= tol when ordered
    constants: Constants


def build_sub_super_pair(bounds: RadialBounds, f: Nonlinearity, R: float = 20.0,
                         constants: Constants | None = None, max_iterations: int = 200,
                         tol: float = 1e-10, base: float | None = None) -> SubSuperPair:
    """Sub-solution (sphere max, base 1) and super-solution (sphere min, base threshold).

    ``constants`` should come from bounds on a grid long enough for the
    slow-variation classification; when omitted they are computed from
    ``bounds`` itself.  Raises SandwichViolation unless sub <= super on [0, R].
    """
    if constants is None:
        constants = compute_constants(bounds, R)
    elif constants.truncation_radius != R:
        constants = Constants(**{**constants.as_dict(), "truncation_radius": float(R),
                                 "growth_rate": growth_rate(bounds, R)})
    b_sup = constants.base_threshold if base is None else base
    sub = picard_iterate(PicardConfig(1.0, "upper", R, max_iterations, tol), bounds, f, constants)
    sup = picard_iterate(PicardConfig(b_sup, "lower", R, max_iterations, tol), bounds, f, constants)
    gap = np.log(sub.solution.values) - np.log(sup.solution.values)
    worst = float(gap.max())
    allowed = np.log1p(3 * max(sub.quadrature_tolerance or 0, sup.quadrature_tolerance or 0)) + 1e-12
    if worst > allowed:
        i = int(np.argmax(gap))
        raise SandwichViolation(
            f"sub-solution exceeds super-solution at r = {sub.solution.nodes[i]:.6g} "
            f"(log ratio {worst:.3e})"
        )
    return SubSuperPair(sub, sup, worst, constants)


def divergence_lower_bound(bounds: RadialBounds, f: Nonlinearity, base: float,
                           solution: SolveReport | None = None) -> GridFunction:
    """b + f(b) * T[psi]: a lower bound for the super-solution with base b.

    When ``solution`` is given it is checked against the bound on its radius
    range, raising BoundViolation if it falls below.
    """
    psi = bounds.sphere_min
    fb = float(f(np.array([base]))[0])
    lower = psi.with_values(base + fb * nested_kernel(psi, bounds.dimension).outer.values)
    if solution is not None:
        u = solution.solution
        ref = lower(u.nodes)
        tol = 3 * (solution.quadrature_tolerance or 0.0) + 1e-12
        short = (ref - u.values) / ref
        i = int(np.argmax(short))
        if short[i] > tol:
            raise BoundViolation(
                f"solution below b + f(b) T[psi] at r = {u.nodes[i]:.6g} (relative shortfall {short[i]:.3e})"
            )
    return lower


def ode_oracle(envelope: GridFunction, f: Nonlinearity, base: float, N: int,
               R: float | None = None) -> GridFunction:
    """Classical RK4 on the radial ODE, independent of the integral formulation.

    Integrates v' = q e^{-r} r^{1-N}, q' = e^r r^{N-1} envelope(r) f(v) on the
    grid nodes.  Within each step q is rescaled by its value of e^r r^{N-1} at
    the step start, so no exponential of r is ever formed.  The first node
    after 0 is filled from v = b + envelope(0) f(b) r^2 / (2N).
    """
    if base < 1:
        raise InvalidParameter("base must be >= 1")
    grid = envelope.grid if R is None else envelope.grid.restrict(R)
    r = grid.nodes
    env = envelope.values[: r.size]
    mid_env = 0.5 * (env[:-1] + env[1:])
    c0 = env[0] * float(f(np.array([base]))[0])
    v = np.empty(r.size)
    v[0] = base
    v[1] = base + c0 * r[1] ** 2 / (2 * N)
    dv = c0 * r[1] / N

    def fv(x):
        try:
            return float(f(np.array([x]))[0])
        except ArithmeticError as exc:
            raise StepFailure(f"nonlinearity not finite at v = {x:.6g}") from exc

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, r.size - 1):
            a, h = r[i], r[i + 1] - r[i]
            mid = a + h / 2
            s_mid = np.exp(h / 2) * (mid / a) ** (N - 1)
            s_end = np.exp(h) * (r[i + 1] / a) ** (N - 1)
            y, q = v[i], dv
            k1v, k1q = q, env[i] * fv(y)
            y2, q2 = y + h / 2 * k1v, q + h / 2 * k1q
            k2v, k2q = q2 / s_mid, s_mid * mid_env[i] * fv(y2)
            y3, q3 = y + h / 2 * k2v, q + h / 2 * k2q
            k3v, k3q = q3 / s_mid, s_mid * mid_env[i] * fv(y3)
            y4, q4 = y + h * k3v, q + h * k3q
            k4v, k4q = q4 / s_end, s_end * env[i + 1] * fv(y4)
            v[i + 1] = y + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            q_end = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
            dv = q_end / s_end
            if not (np.isfinite(v[i + 1]) and np.isfinite(dv)):
                raise StepFailure(f"non-finite state at r = {r[i + 1]:.6g}")
    return GridFunction(grid, v)


def oracle_error(report: SolveReport, bounds: RadialBounds, f: Nonlinearity) -> float:
    """Max relative difference between the Picard fixed point and ``ode_oracle``."""
    env = _envelope(bounds, report.config.envelope)
    ref = ode_oracle(env, f, report.config.base, bounds.dimension, report.config.radius)
    err = float(np.max(np.abs(report.solution.values - ref.values) / np.abs(ref.values)))
    report.oracle_max_rel_error = err
    return err

