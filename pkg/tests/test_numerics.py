import math

import numpy as np
import pytest
from scipy.optimize import bisect
from scipy.special import lambertw

from modules.errors_module import Domain_Error, Numerical_Error, Validation_Error
from modules.model_module import Level_Spec, evaluate_1level, per_day
from modules.numerics_module import (
    INV_E,
    Branch_Point_Policy,
    lambert_w0,
    maximize_1d,
    project_to_simplex,
)

def _residual(z: float) -> float:
    w = lambert_w0(z)
    return abs(w * math.exp(w) - z)

def test_lambert_w0_of_one_matches_bisection():
    oracle = bisect(lambda w: w * math.exp(w) - 1.0, 0.0, 1.0, xtol=1e-16)
    assert lambert_w0(1.0) == pytest.approx(0.5671432904097838, abs=1e-15)
    assert lambert_w0(1.0) == pytest.approx(oracle, abs=1e-12)

@pytest.mark.parametrize("z, expected", [(0.0, 0.0), (math.e, 1.0), (-INV_E, -1.0), (2.0 * math.exp(2.0), 2.0)])
def test_lambert_w0_known_values(z, expected):
    assert lambert_w0(z) == pytest.approx(expected, abs=1e-7)

def test_lambert_w0_identity_residual_over_grid():
    near_branch = -INV_E + np.linspace(0.0, 1e-6, 100)
    wide = np.concatenate((
        np.linspace(-INV_E, 0.0, 2000),
        np.linspace(0.0, 10.0, 2900),
        np.geomspace(10.0, 1e6, 5000),
    ))
    for z in np.concatenate((near_branch, wide)):
        assert _residual(float(z)) <= 1e-12 * max(1.0, abs(z)), z

def test_lambert_w0_agrees_with_scipy():
    for z in np.concatenate((np.linspace(-INV_E + 1e-9, 1.0, 200), np.geomspace(1.0, 1e5, 200))):
        assert lambert_w0(float(z)) == pytest.approx(float(lambertw(z, 0).real), rel=1e-10, abs=1e-7)

def test_lambert_w0_series_threshold_is_seamless():
    threshold = Branch_Point_Policy().series_threshold
    inside = lambert_w0(-INV_E + threshold * 0.999)
    outside = lambert_w0(-INV_E + threshold * 1.001)
    assert inside < outside
    assert outside - inside < 1e-4

def test_lambert_w0_rejects_out_of_domain():
    with pytest.raises(Domain_Error):
        lambert_w0(-0.4)
    with pytest.raises(Domain_Error):
        lambert_w0(math.nan)
    with pytest.raises(Domain_Error):
        lambert_w0(math.inf)

def test_lambert_w0_tolerates_rounding_below_branch_point():
    assert lambert_w0(float(np.nextafter(-INV_E, -1.0))) == -1.0

def test_branch_point_policy_validation():
    with pytest.raises(Validation_Error):
        Branch_Point_Policy(tolerance=0.0)
    with pytest.raises(Validation_Error):
        Branch_Point_Policy(series_threshold=-1.0)
    with pytest.raises(Validation_Error):
        Branch_Point_Policy(max_iterations=0)

def test_maximize_1d_on_random_concave_quadratics():
    rng = np.random.default_rng(7)
    for _ in range(50):
        lo = rng.uniform(-100.0, 0.0)
        hi = lo + rng.uniform(1.0, 200.0)
        center = rng.uniform(lo, hi)
        scale = rng.uniform(0.01, 10.0)
        tol = 1e-6 * (hi - lo)
        x, y = maximize_1d(lambda t: -scale * (t - center) ** 2 + 3.0, lo, hi, tol)
        assert abs(x - center) <= tol
        assert y == pytest.approx(3.0, abs=1e-6)

def test_maximize_1d_boundary_maximum():
    x, _ = maximize_1d(lambda t: -t, 2.0, 5.0, 1e-9)
    assert x == pytest.approx(2.0, abs=1e-9)

def test_maximize_1d_accepts_infeasible_region():
    x, y = maximize_1d(lambda t: -math.inf if t < 3.0 else -(t - 4.0) ** 2, 0.0, 10.0, 1e-8)
    assert x == pytest.approx(4.0, abs=1e-6)
    assert y == pytest.approx(0.0, abs=1e-10)

def test_maximize_1d_rejects_bad_input():
    with pytest.raises(Validation_Error):
        maximize_1d(lambda t: t, 1.0, 1.0, 1e-3)
    with pytest.raises(Validation_Error):
        maximize_1d(lambda t: t, 0.0, 1.0, 0.0)
    with pytest.raises(Numerical_Error):
        maximize_1d(lambda t: math.nan, 0.0, 1.0, 1e-3)

def test_maximize_1d_finds_single_level_optimum_in_closed_form():
    rate = per_day(50.5)
    level = Level_Spec(rate, 50.0, 50.0)
    closed_form = 50.0 + (1.0 + lambert_w0(-math.exp(-(rate * 50.0 + 1.0)))) / rate
    x, _ = maximize_1d(lambda t: evaluate_1level(level, t).utilization, 51.0, 3000.0, 1e-4)
    assert x == pytest.approx(closed_form, abs=0.01)

def test_project_to_simplex():
    assert project_to_simplex(np.array([0.2, 0.3, 0.5])) == pytest.approx([0.2, 0.3, 0.5])
    assert project_to_simplex(np.array([2.0, 0.0])) == pytest.approx([1.0, 0.0])
    assert project_to_simplex(np.array([0.5, 0.5, 0.5])) == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    projected = project_to_simplex(np.array([-1.0, 0.4, 0.9]))
    assert projected.sum() == pytest.approx(1.0)
    assert np.all(projected >= 0.0)
    assert projected == pytest.approx([0.0, 0.25, 0.75])
