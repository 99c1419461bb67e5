import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blowup_lab.errors import (
    DimensionTooSmall,
    DivergentIntegral,
    InvalidNonlinearity,
    InvalidParameter,
    NegativePotential,
    SamplingFailure,
    UnboundedRatio,
)
from blowup_lab.kernel import build_grid
from blowup_lab.problem import (
    LambdaWarning,
    Nonlinearity,
    PotentialSpec,
    compute_constants,
    estimate_lambda,
    extract_radial_bounds,
)
from blowup_lab.sampling import _tangent_frames, sphere_directions, sphere_extrema


# -- sphere sampling ---------------------------------------------------------------


@pytest.mark.parametrize("N", [3, 4, 6])
def test_directions_are_unit_and_deterministic(N):
    d = sphere_directions(N, 128)
    assert d.shape == (128 + 2 * N, N)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    sphere_directions.cache_clear()
    assert np.array_equal(d, sphere_directions(N, 128))


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_tangent_frames_orthonormal(v):
    u = np.array([v]) / np.linalg.norm(v)
    f = _tangent_frames(u)[0]
    assert np.allclose(f @ f.T, np.eye(3), atol=1e-12)
    assert np.allclose(f @ u[0], 0.0, atol=1e-12)


def test_extrema_of_linear_function():
    radii = np.array([0.5, 2.0, 7.0])
    hi, lo = sphere_extrema(lambda x, r: x[:, 0], radii, 3)
    assert np.allclose(hi[-1], radii) and np.allclose(lo[-1], -radii)


@pytest.mark.parametrize("N", [3, 5])
def test_refinement_finds_off_axis_maximum(N):
    radii = np.array([1.0, 3.0])
    hi, lo = sphere_extrema(lambda x, r: x.sum(axis=1), radii, N)
    assert np.allclose(hi[-1], radii * math.sqrt(N), rtol=1e-6)
    assert np.all(np.diff(hi, axis=0) >= 0) and np.all(np.diff(lo, axis=0) <= 0)


# -- potentials and nonlinearities -----------------------------------------------


def test_potential_validation():
    with pytest.raises(DimensionTooSmall):
        PotentialSpec.from_text("1", 2)
    with pytest.raises(InvalidParameter):
        PotentialSpec.from_text("x1", 3, radial=True)
    with pytest.raises(InvalidParameter):
        PotentialSpec.from_parts("x1", "r", 3)


@pytest.mark.parametrize("source", ["s + 1", "-s", "s * exp(-s)", "sqrt(s - 1)"])
def test_invalid_nonlinearities(source):
    with pytest.raises(InvalidNonlinearity):
        Nonlinearity.from_text(source)


@pytest.mark.parametrize("source,lam", [
    ("s", 1.0), ("2*t", 2.0), ("s / (1 + log(1 + s))", 1 / (1 + math.log(2))),
    ("s / (1 + s) + s", 1.5),
])
def test_lambda_estimates(source, lam):
    assert estimate_lambda(Nonlinearity.from_text(source)) == pytest.approx(lam, rel=1e-12)


def test_lambda_override():
    assert estimate_lambda(Nonlinearity.from_text("s^2", lambda_override=3.0)) == 3.0
    with pytest.raises(InvalidParameter):
        Nonlinearity.from_text("s", lambda_override=0.0)


def test_superlinear_ratio_rejected():
    with pytest.raises(UnboundedRatio):
        estimate_lambda(Nonlinearity.from_text("s^2"))
    with pytest.raises(UnboundedRatio):
        estimate_lambda(Nonlinearity.from_text("s^1.5"))


def test_slowly_growing_ratio_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lam = estimate_lambda(Nonlinearity.from_text("s * log(1 + s)"))
    assert any(issubclass(w.category, LambdaWarning) for w in caught)
    assert lam == pytest.approx(1e8 * math.log1p(1e8) / 1e8, rel=1e-12)


# -- radial bounds ----------------------------------------------------------------


def test_example_envelopes(bounds_for):
    _, b = bounds_for("paper-example-1")
    r = b.grid.nodes
    phi = (r**2 + 1) / ((r**2 + 1) ** 2 + 1)
    psi = 1 / (r**2 + 2)
    assert np.max(np.abs(b.sphere_max.values / phi - 1)) < 1e-4
    assert np.max(np.abs(b.sphere_min.values / psi - 1)) < 1e-4


def test_example_weight_closed_form(bounds_for):
    # W = exp(int_0^r s/(s^2+2) ds) = sqrt((r^2 + 2) / 2)
    _, b = bounds_for("paper-example-1")
    r = b.grid.nodes
    assert np.allclose(b.log_weight.values, 0.5 * np.log((r**2 + 2) / 2), rtol=1e-6, atol=1e-9)


def test_explicit_potential_oscillation(bounds_for):
    _, b = bounds_for("remark2", 20.0, 1024, 1.0)
    r = b.grid.nodes
    mask = (r >= 0.1) & (r <= 10)
    h = 6 * r**2 + r
    assert np.max(np.abs(b.oscillation.values[mask] / h[mask] - 1)) < 1e-3


def test_split_potential_oscillation_in_log_space(bounds_for):
    _, b = bounds_for("remark1-i")
    r = b.grid.nodes
    mask = r > 0.5
    # h = r e^{-r^3}, psi = 1 + r
    assert np.allclose(b.log_oscillation[mask], np.log(r[mask]) - r[mask] ** 3, rtol=1e-12)
    assert np.allclose(b.sphere_min.values, 1 + r, rtol=1e-12)


def test_radial_potential_has_no_oscillation():
    p = PotentialSpec.from_text("1 / (1 + r^2)", 3, radial=True)
    b = extract_radial_bounds(p, build_grid(100.0, 64), 1.0)
    assert np.all(b.oscillation.values == 0) and np.all(b.log_oscillation == -np.inf)
    assert np.array_equal(b.sphere_max.values, b.sphere_min.values)


def test_negative_potential_rejected():
    with pytest.raises(NegativePotential):
        extract_radial_bounds(PotentialSpec.from_text("x1", 3), build_grid(5.0, 32), 1.0)
    with pytest.raises(InvalidParameter):
        extract_radial_bounds(PotentialSpec.from_text("1", 3), build_grid(5.0, 32), 0.0)


def test_unresolved_spike_reported():
    # cusp maximum off every lattice direction: each round still improves it
    p = PotentialSpec.from_text("3 - abs(x2 - 0.3123*r)^0.5 - abs(x3 - 0.2217*r)^0.5", 3)
    with pytest.raises(SamplingFailure):
        extract_radial_bounds(p, build_grid(5.0, 32), 1.0)


def test_restrict(bounds_for):
    _, b = bounds_for("paper-example-1")
    small = b.restrict(20.0)
    assert small.grid.r_max <= 20.0 and len(small.grid) < len(b.grid)
    assert np.array_equal(small.sphere_min.values, b.sphere_min.values[: len(small.grid)])


# -- constants ---------------------------------------------------------------------


def test_constants_for_constant_potential(bounds_for):
    _, b = bounds_for("constant")
    c = compute_constants(b, 20.0)
    assert c.gronwall_factor == 1.0
    assert c.base_threshold == pytest.approx(1.05)
    assert c.growth_rate == pytest.approx(20.0)  # Lambda_N * R * c with N=3


def test_constants_for_example(bounds_for):
    _, b = bounds_for("paper-example-1")
    c = compute_constants(b, 20.0)
    assert c.gronwall_factor > 1 and c.base_threshold > 1.05
    # b > 1 + K Lambda_N int r h W, strictly
    assert c.base_threshold > 1 + c.gronwall_factor * c.scaled_lambda * c.weighted_oscillation_total
    assert c.growth_rate == pytest.approx(max(r / (r**2 + 2) for r in b.restrict(20).grid.nodes), rel=1e-4)


def test_constants_need_convergent_slow_variation(bounds_for):
    _, b = bounds_for("remark2")
    with pytest.raises(DivergentIntegral):
        compute_constants(b, 20.0)
    with pytest.raises(InvalidParameter):
        compute_constants(bounds_for("constant")[1], 20.0, safety_factor=1.0)
