import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors_module import Convergence_Error, Domain_Error, Numerical_Error, Validation_Error
from .settings_module import Settings

INV_E: float = math.exp(-1.0)

# Coefficients of W(z) around the branch point z = -1/e in powers of p = sqrt(2(ez + 1)).
BRANCH_POINT_SERIES: Tuple[float, ...] = (
    -1.0,
    1.0,
    -1.0 / 3.0,
    11.0 / 72.0,
    -43.0 / 540.0,
    769.0 / 17280.0,
    -221.0 / 8505.0,
    680863.0 / 43545600.0,
    -1963.0 / 204120.0,
    226287557.0 / 37623398400.0,
)

# Residual at which w * exp(w) - z is indistinguishable from rounding noise.
RESIDUAL_FLOOR: float = 4.0 * float(np.finfo(float).eps)

INV_PHI: float = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ: float = (3.0 - math.sqrt(5.0)) / 2.0

@dataclass(frozen=True)
class Branch_Point_Policy:
    """
    Controls how the principal-branch Lambert W solver behaves near z = -1/e.

    Attributes:
        series_threshold (float): Distance from -1/e below which the branch-point series is returned directly.
        max_iterations (int): Halley iteration cap.
        tolerance (float): Relative step size at which Halley iteration stops.
    """
    series_threshold: float = Settings.numerics.W_SERIES_THRESHOLD
    max_iterations: int = Settings.numerics.W_MAX_ITERATIONS
    tolerance: float = Settings.numerics.W_TOLERANCE

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise Validation_Error(f"Invalid value for 'tolerance': expected > 0, got {self.tolerance}")
        if not self.series_threshold > 0:
            raise Validation_Error(f"Invalid value for 'series_threshold': expected > 0, got {self.series_threshold}")
        if self.max_iterations < 1:
            raise Validation_Error(f"Invalid value for 'max_iterations': expected >= 1, got {self.max_iterations}")

DEFAULT_BRANCH_POINT_POLICY = Branch_Point_Policy()

def _branch_point_series(z: float) -> float:
    p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
    w = 0.0
    for coefficient in reversed(BRANCH_POINT_SERIES):
        w = w * p + coefficient
    return w

def _initial_guess(z: float) -> float:
    if z > math.e:
        log_z = math.log(z)
        return log_z - math.log(log_z)
    if abs(z) <= 0.25:
        return z * (1.0 - z)
    if z > 0:
        return math.log1p(z)
    return _branch_point_series(z)

def lambert_w0(z: float, policy: Branch_Point_Policy = DEFAULT_BRANCH_POINT_POLICY) -> float:
    """
    Principal branch of the Lambert W function, the w >= -1 solving w * exp(w) = z.

    Uses Halley iteration from a region-dependent starting point; within
    `policy.series_threshold` of the branch point the series in sqrt(2(ez + 1)) is
    used instead, since Halley's update is singular at w = -1.

    Args:
        z (float): Argument, z >= -1/e.
        policy (Branch_Point_Policy): Series threshold, iteration cap and tolerance.

    Returns:
        float: W0(z).

    Raises:
        Domain_Error: If z < -1/e or z is not finite.
        Convergence_Error: If Halley iteration does not converge within the cap.
    """
    z = float(z)
    if math.isnan(z) or math.isinf(z):
        raise Domain_Error(f"Lambert W argument must be finite, got {z}")
    # Allow rounding noise in arguments computed as -exp(-1 - small).
    if z < -INV_E:
        if z < -INV_E * (1.0 + 4.0 * np.finfo(float).eps):
            raise Domain_Error(f"Lambert W argument below -1/e: {z!r}")
        return -1.0
    if z == 0.0:
        return 0.0
    if z + INV_E <= policy.series_threshold:
        return _branch_point_series(z)

    w = _initial_guess(z)
    residual_floor = RESIDUAL_FLOOR * max(1.0, abs(z))
    for _ in range(policy.max_iterations):
        ew = math.exp(w)
        f = w * ew - z
        if abs(f) <= residual_floor:
            return w
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= policy.tolerance * (1.0 + abs(w)):
            return w
    raise Convergence_Error(f"Lambert W did not converge for z={z!r} after {policy.max_iterations} iterations")

def _checked(f: Callable[[float], float], x: float) -> float:
    value = float(f(x))
    if math.isnan(value) or value == math.inf:
        raise Numerical_Error(f"Objective returned non-finite value {value} at x={x!r}")
    return value

def maximize_1d(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    prescan_points: int = Settings.numerics.GOLDEN_PRESCAN_POINTS,
) -> Tuple[float, float]:
    """
    Bracketed scalar maximization: a uniform pre-scan picks a bracket around the best
    sample, then golden-section search shrinks it below `tol`.

    -inf is accepted as the value of infeasible points; NaN and +inf are errors.

    Args:
        f (Callable[[float], float]): Objective to maximize.
        lo (float): Lower end of the search interval.
        hi (float): Upper end of the search interval.
        tol (float): Final bracket width.
        prescan_points (int): Number of uniformly spaced pre-scan samples.

    Returns:
        Tuple[float, float]: (argmax, max) over every point evaluated.

    Raises:
        Validation_Error: If lo >= hi or tol <= 0.
        Numerical_Error: If f returns NaN or +inf.
    """
    if not lo < hi:
        raise Validation_Error(f"Invalid bracket: expected lo < hi, got lo={lo}, hi={hi}")
    if not tol > 0:
        raise Validation_Error(f"Invalid value for 'tol': expected > 0, got {tol}")

    xs = np.linspace(lo, hi, max(prescan_points, 3))
    ys = np.array([_checked(f, x) for x in xs])
    best_index = int(np.argmax(ys))
    best_x, best_y = float(xs[best_index]), float(ys[best_index])

    a = float(xs[max(best_index - 1, 0)])
    b = float(xs[min(best_index + 1, len(xs) - 1)])
    dist = b - a
    if dist <= tol:
        return best_x, best_y

    n = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))
    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = _checked(f, c)
    yd = _checked(f, d)

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d, yd = c, yc
            dist *= INV_PHI
            c = a + INV_PHI_SQ * dist
            yc = _checked(f, c)
        else:
            a = c
            c, yc = d, yd
            dist *= INV_PHI
            d = a + INV_PHI * dist
            yd = _checked(f, d)

    for x, y in ((c, yc), (d, yd)):
        if y > best_y:
            best_x, best_y = x, y
    return best_x, best_y

def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """
    Euclidean projection of a vector onto the probability simplex.

    Args:
        v (np.ndarray): Arbitrary real vector.

    Returns:
        np.ndarray: The closest vector with non-negative entries summing to one.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    index = np.arange(1, v.size + 1)
    support = u - css / index > 0
    rho = index[support][-1]
    theta = css[support][-1] / rho
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()
