import numpy as np
import pytest

from blowup_lab import expr
from blowup_lab.errors import InvalidParameter, NonpositiveValues
from blowup_lab.fixtures import get_fixture
from blowup_lab.kernel import GridFunction, build_grid
from blowup_lab.problem import Nonlinearity, RadialBounds
from blowup_lab.kernel import kernel_bound, nested_kernel
from blowup_lab.verify import (
    ball_points,
    check_kernel_inequality,
    inequality_harness,
    verify_decay_rate,
    verify_explicit_solution,
)


def test_ball_points_deterministic_and_inside():
    a = ball_points(4, 64, 2.0)
    assert a.shape == (64, 4) and np.all(np.linalg.norm(a, axis=1) < 2.0)
    assert np.array_equal(a, ball_points(4, 64, 2.0))


def test_zero_solution_has_zero_residual():
    u = expr.parse_expression("0", 3)
    p = expr.parse_expression("1 + r^2", 3)
    rep = verify_explicit_solution(u, p, Nonlinearity.from_text("s"), 3, samples=16)
    assert np.all(rep.residuals == 0) and rep.passed


@pytest.mark.parametrize("N", [3, 4, 5])
def test_explicit_solution_identity(N):
    fx = get_fixture("remark2", N=N)
    rep = verify_explicit_solution(fx.solution, fx.potential.body, fx.nonlinearity, N)
    assert len(rep.residuals) == 64
    assert rep.max_abs_relative <= 1e-7


def test_wrong_potential_fails():
    fx = get_fixture("remark2")
    wrong = expr.parse_expression("2*r^2 + 6*x1^2 + sqrt(r^2 + 3*x1^2) + N", 3)
    rep = verify_explicit_solution(fx.solution, wrong, fx.nonlinearity, 3)
    assert not rep.passed


def synthetic_bounds(log_h):
    grid = build_grid(1e4, 2048, 2.0)
    r = grid.nodes
    zero = GridFunction(grid, np.zeros(r.size))
    log_osc = log_h(np.maximum(r, 1e-3))
    return RadialBounds(zero, zero, zero, log_osc, zero, 1.0, 3)


def test_exact_power_law_slope():
    b = synthetic_bounds(lambda r: -3 * np.log(r))
    fit = verify_decay_rate(b, -2.0, (10.0, 1e4))
    assert fit.slope == pytest.approx(-2.0, abs=1e-9) and fit.passed


def test_slope_outside_tolerance_fails():
    b = synthetic_bounds(lambda r: -1.5 * np.log(r))
    assert not verify_decay_rate(b, -2.0, (10.0, 1e4)).passed


def test_vanishing_integrand_in_window():
    b = synthetic_bounds(lambda r: np.where(r > 100, -np.inf, 0.0))
    with pytest.raises(NonpositiveValues):
        verify_decay_rate(b, -2.0, (10.0, 1e4))


def test_window_must_fit_grid():
    b = synthetic_bounds(lambda r: -3 * np.log(r))
    with pytest.raises(InvalidParameter):
        verify_decay_rate(b, -2.0, (10.0, 1e5))


def test_example_decay(bounds_for):
    _, b = bounds_for("paper-example-1")
    fit = verify_decay_rate(b, -2.0, (1e2, 1e4))
    assert -2.3 <= fit.slope <= -1.7 and fit.passed


def test_fast_angular_decay_is_super_polynomial(bounds_for):
    _, b = bounds_for("remark1-i")
    fit = verify_decay_rate(b, -2.0, (1e2, 1e4), one_sided=True)
    assert fit.passed and fit.slope < -100


def test_zero_integrand_margin_zero():
    g = GridFunction(build_grid(3.0, 65), np.zeros(65))
    check = check_kernel_inequality(g, 3)
    assert check.margin == 0 and not check.violated


def test_unit_integrand_at_radius_one():
    g = GridFunction(build_grid(1.0, 257), np.ones(257))
    assert not check_kernel_inequality(g, 3).violated
    # both sides vanish at the origin; at r = 1 the bound is 1/2 and the kernel strictly less
    kern = nested_kernel(g, 3).outer.values[-1]
    assert kernel_bound(g, 3).values[-1] == pytest.approx(0.5, rel=1e-12)
    assert 0 < kern < 0.5


def test_harness_deterministic_and_clean():
    a = inequality_harness(20, 3, [3, 7])
    b = inequality_harness(20, 3, [3, 7])
    assert a.as_dict() == b.as_dict()
    assert a.violations == 0
    # streams are per dimension
    assert inequality_harness(20, 3, [7]).per_dimension["7"] == a.per_dimension["7"]


def test_harness_rejects_zero_trials():
    with pytest.raises(InvalidParameter):
        inequality_harness(0, 1)
