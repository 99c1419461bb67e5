"""Numerical classification of the two improper integrals behind the existence criterion.

* slow variation: int_0^inf r h(r) W(r) dr < inf  (h = angular oscillation of p)
* existence:      int_1^inf e^{-t} t^{1-N} int_0^t e^s s^{N-1} psi(s) ds dt = inf
                  (psi = sphere minimum of p)

Both are decided from partial integrals on doubling windows [0, 2^k].  The
last three window increments decide: geometric decay below ``decay_ratio``
with a small extrapolated tail means convergent, nondecreasing increments
mean divergent, anything else is inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .kernel import nested_kernel
from .problem import RadialBounds

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

EXISTS = "entire large solution EXISTS"
NOT_EXISTS = "NO entire large solution"
INAPPLICABLE = "criterion inapplicable (slow-variation hypothesis not established)"
INAPPLICABLE_NOTE = (
    "an entire large solution may still exist when the slow-variation condition fails; "
    "see the 'remark2' fixture for an explicit example"
)


@dataclass(frozen=True)
class ClassifierOptions:
    first_exponent: int = 4
    ceiling_exponent: int = 14
    decay_ratio: float = 0.6
    tail_epsilon: float = 1e-3
    windows_used: int = 3


@dataclass(frozen=True)
class ConditionVerdict:
    verdict: str
    partial_values: list = field(default_factory=list)  # [(R, partial integral)]
    tail_estimate: float | None = None
    rationale: str = ""

    @property
    def total(self) -> float:
        return self.partial_values[-1][1] if self.partial_values else 0.0

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "partial_values": [[float(R), float(v)] for R, v in self.partial_values],
            "tail_estimate": self.tail_estimate,
            "rationale": self.rationale,
        }


def _window_edges(r_max: float, opts: ClassifierOptions) -> list:
    return [
        2.0**k
        for k in range(opts.first_exponent, opts.ceiling_exponent + 1)
        if 2.0**k <= r_max * (1 + 1e-12)
    ]


def _partials(nodes, integrand, edges, start=0.0):
    """Partial integrals of ``integrand`` over [start, R] for each window edge R."""
    finite = np.isfinite(integrand)
    out = []
    if np.all(finite):
        cum = cumulative_trapezoid(integrand, nodes, initial=0.0)
        base = np.interp(start, nodes, cum)
        return [(R, float(np.interp(R, nodes, cum) - base)) for R in edges]
    first_bad = nodes[np.argmin(finite)]
    safe = np.where(finite, integrand, 0.0)
    cum = cumulative_trapezoid(safe, nodes, initial=0.0)
    base = np.interp(start, nodes, cum)
    for R in edges:
        out.append((R, np.inf if R >= first_bad else float(np.interp(R, nodes, cum) - base)))
    return out


def decide(partials, opts: ClassifierOptions = ClassifierOptions()) -> ConditionVerdict:
    """Classify from partial integrals at doubling truncation radii."""
    k = opts.windows_used
    if len(partials) < k + 1:
        return ConditionVerdict(
            INCONCLUSIVE, partials, None,
            f"need {k + 1} window edges, grid only supports {len(partials)}",
        )
    values = np.array([v for _, v in partials], dtype=float)
    if not np.all(np.isfinite(values)):
        R = next(R for R, v in partials if not np.isfinite(v))
        return ConditionVerdict(
            DIVERGENT, partials, None,
            f"integrand exceeds double range before r = {R:g}; partial integral unbounded",
        )
    inc = np.diff(values)[-k:]
    total = values[-1]
    if np.all(inc <= 0):
        return ConditionVerdict(
            CONVERGENT, partials, 0.0, f"integrand vanishes on the last {k} windows"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(inc[:-1] > 0, inc[1:] / inc[:-1], np.where(inc[1:] > 0, np.inf, 0.0))
    q = float(ratios.max())
    if q < opts.decay_ratio:
        tail = float(inc[-1] * q / (1.0 - q))
        limit = opts.tail_epsilon * (total + 1.0)
        if tail < limit:
            return ConditionVerdict(
                CONVERGENT, partials, tail,
                f"window increments decay geometrically (max ratio {q:.4f} < {opts.decay_ratio}); "
                f"extrapolated tail {tail:.3e} < {limit:.3e}",
            )
        return ConditionVerdict(
            INCONCLUSIVE, partials, tail,
            f"increments decay (max ratio {q:.4f}) but extrapolated tail {tail:.3e} "
            f"exceeds {limit:.3e}",
        )
    # nondecreasing up to rounding of the cumulative sums
    if np.all(np.diff(inc) >= -1e-12 * np.abs(values).max()) and inc[-1] > 0:
        return ConditionVerdict(
            DIVERGENT, partials, None,
            f"window increments nondecreasing over the last {k} windows "
            f"({', '.join(f'{x:.4g}' for x in inc)})",
        )
    return ConditionVerdict(
        INCONCLUSIVE, partials, None,
        f"increments neither decay geometrically nor grow (ratios {', '.join(f'{x:.4f}' for x in ratios)})",
    )


def classify_slow_variation(bounds: RadialBounds, opts: ClassifierOptions = ClassifierOptions()
                            ) -> ConditionVerdict:
    """Is int_0^inf r h(r) W(r) dr finite?"""
    nodes = bounds.grid.nodes
    edges = _window_edges(bounds.grid.r_max, opts)
    integrand = bounds.weighted_oscillation()
    if not np.any(integrand > 0) and np.all(np.isfinite(integrand)):
        return ConditionVerdict(
            CONVERGENT, [(R, 0.0) for R in edges], 0.0, "oscillation vanishes identically (radial potential)"
        )
    return decide(_partials(nodes, integrand, edges), opts)


def classify_existence_integral(bounds: RadialBounds, N: int | None = None,
                                opts: ClassifierOptions = ClassifierOptions()) -> ConditionVerdict:
    """Does int_1^inf e^{-t} t^{1-N} int_0^t e^s s^{N-1} psi(s) ds dt diverge?

    The outer integrand is the shifted inner integral of the nested kernel,
    so no exponential is ever formed.  The order-2 kernel is used here:
    its weights are nonnegative, so window increments keep their sign.
    """
    N = bounds.dimension if N is None else N
    edges = _window_edges(bounds.grid.r_max, opts)
    inner = nested_kernel(bounds.sphere_min, N, order=2).inner_scaled
    if not np.any(inner.values > 0):
        return ConditionVerdict(
            CONVERGENT, [(R, 0.0) for R in edges], 0.0, "sphere minimum vanishes identically"
        )
    return decide(_partials(inner.nodes, inner.values, edges, start=1.0), opts)


def existence_verdict(slow: ConditionVerdict, existence: ConditionVerdict) -> str:
    if slow.verdict != CONVERGENT:
        return INAPPLICABLE
    if existence.verdict == DIVERGENT:
        return EXISTS
    if existence.verdict == CONVERGENT:
        return NOT_EXISTS
    return "undetermined: existence integral inconclusive"
