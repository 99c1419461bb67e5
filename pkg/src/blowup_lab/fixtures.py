"""Builtin potentials with known classification behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr
from .errors import InvalidParameter
from .problem import Nonlinearity, PotentialSpec


@dataclass(frozen=True)
class Fixture:
    tag: str
    potential: PotentialSpec
    nonlinearity: Nonlinearity
    solution: expr.Node | None = None
    params: dict = field(default_factory=dict)
    formula: str = ""
    origin: str = ""


def _nonlinearity(source: str) -> Nonlinearity:
    return Nonlinearity.from_text(source, label=source)


def constant(N=3, c=1.0, **sampling):
    if not c >= 0:
        raise InvalidParameter("constant potential must be nonnegative")
    p = PotentialSpec.from_text(repr(float(c)), N, radial=True, label="constant", **sampling)
    return Fixture("constant", p, _nonlinearity("s"), None, {"N": N, "c": c},
                   f"p(x) = {c:g}", "constant potential; radial, oscillation identically zero")


def paper_example_1(N=3, **sampling):
    src = "(1 + x1^2) / ((1 + x1^2) * (1 + r^2) + 1)"
    p = PotentialSpec.from_text(src, N, label="paper-example-1", **sampling)
    return Fixture(
        "paper-example-1", p, _nonlinearity("s"), None, {"N": N}, f"p(x) = {src}",
        "nonradial example satisfying the slow-variation condition; sphere max "
        "(r^2+1)/((r^2+1)^2+1), sphere min 1/(r^2+2)",
    )


def remark1_i(N=3, m=1.0, **sampling):
    if not m > 0:
        raise InvalidParameter("remark1-i needs m > 0")
    radial = f"1 + r^{m:g}"
    angular = f"abs(x1) * exp(-r^{m + 2:g})"
    p = PotentialSpec.from_parts(radial, angular, N, label="remark1-i", **sampling)
    return Fixture(
        "remark1-i", p, _nonlinearity("s"), None, {"N": N, "m": m},
        f"p(x) = {radial} + {angular}",
        "potential satisfying both the slow-variation and the existence conditions (case i)",
    )


def remark1_ii(N=3, g="1/(1 + r^2)", **sampling):
    angular = f"abs(x1) * ({g}) * exp(-r) / (1 + r)"
    p = PotentialSpec.from_parts("1 / (1 + r)", angular, N, label="remark1-ii", **sampling)
    return Fixture(
        "remark1-ii", p, _nonlinearity("s"), None, {"N": N, "g": g},
        f"p(x) = (1 + |x1| g(r) e^(-r)) / (1 + r), g(r) = {g}",
        "potential satisfying both the slow-variation and the existence conditions (case ii); "
        "g is any nonnegative integrable Hoelder function, default 1/(1+r^2)",
    )


def remark2(N=3, **sampling):
    src = "2*r^2 + 6*x1^2 + sqrt(r^2 + 3*x1^2) + N + 1"
    p = PotentialSpec.from_text(src, N, label="remark2", **sampling)
    u = expr.parse_expression("exp(r^2 + x1^2)", N)
    return Fixture(
        "remark2", p, _nonlinearity("2*s"), u, {"N": N},
        f"p(x) = {src}, f(t) = 2t, u(x) = exp(|x|^2 + x1^2)",
        "explicit nonradial entire large solution although the slow-variation condition fails "
        "(oscillation 6r^2 + r)",
    )


BUILDERS = {
    "constant": constant,
    "paper-example-1": paper_example_1,
    "remark1-i": remark1_i,
    "remark1-ii": remark1_ii,
    "remark2": remark2,
}


def get_fixture(tag: str, **params) -> Fixture:
    try:
        builder = BUILDERS[tag]
    except KeyError:
        raise InvalidParameter(f"unknown fixture {tag!r}; known: {', '.join(BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise InvalidParameter(f"bad parameters for fixture {tag!r}: {exc}") from None


def list_fixtures() -> str:
    lines = []
    for tag in BUILDERS:
        fx = get_fixture(tag)
        lines.append(f"{tag}")
        lines.append(f"    {fx.formula}")
        lines.append(f"    f(s) = {fx.nonlinearity.source}")
        if fx.solution is not None:
            lines.append(f"    u(x) = {expr.to_source(fx.solution)}")
        lines.append(f"    from: {fx.origin}")
        lines.append(f"    parameters: {fx.params}")
    return "\n".join(lines)
