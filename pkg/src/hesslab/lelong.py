"""Point m-Lelong numbers from sphere means, ball means and Hessian masses.

Each estimator evaluates a scaled quotient on a geometric ladder of radii
and hands the sequence to :func:`extrapolate`, which reports a limit together
with a quality flag instead of pretending every sequence converges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, factorial, pi

import numpy as np
from scipy.optimize import minimize_scalar

from .catalog import TestFunction, as_coords, power_profile
from .errors import EstimatorError, ParameterError
from .integrate import EstimatorConfig, MassEstimate, ball_hessian_mass, ball_mean, kappa_form, sphere_mean

__all__ = [
    "LelongEstimate",
    "RadiusLadder",
    "calibrate_kappa",
    "extrapolate",
    "kappa_cal",
    "lelong_point_ball",
    "lelong_point_mass",
    "lelong_point_sphere",
    "phi_fundamental",
]

CONVERGED, DRIFTING, UNRELIABLE = "converged", "drifting", "unreliable"
#: relative and absolute tolerance floors used by :func:`extrapolate`
RTOL = 1e-3
ATOL = 1e-3
ALPHA_BOUNDS = (1e-3, 12.0)


def _check_index(n: int, m: int):
    if int(n) != n or int(m) != m or not 1 <= m < n:
        raise ParameterError(f"need integers 1 <= m < n, got n={n}, m={m}")


def phi_fundamental(n: int, m: int, s):
    """Radial profile -1 / ((n/m - 1) s^(n/m - 1)) of the fundamental solution."""
    _check_index(n, m)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ParameterError("phi_fundamental needs s > 0")
    out = power_profile(n / m).f(s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadiusLadder:
    """Radii r0 * theta**j for j = 0..rungs-1."""

    r0: float = 0.5
    theta: float = 0.5
    rungs: int = 8

    def __post_init__(self):
        if not self.r0 > 0:
            raise ParameterError("ladder r0 must be positive")
        if not 0 < self.theta < 1:
            raise ParameterError("ladder theta must lie in (0, 1)")
        if int(self.rungs) != self.rungs or self.rungs < 3:
            raise ParameterError("ladder needs at least 3 rungs")

    @property
    def radii(self) -> np.ndarray:
        return self.r0 * self.theta ** np.arange(self.rungs)

    @property
    def r_min(self) -> float:
        return float(self.radii[-1])

    def config_for(self, cfg: EstimatorConfig) -> EstimatorConfig:
        """Freeze the exclusion radius for the whole ladder and check it fits."""
        delta = cfg.delta(self.r_min)
        if not self.r_min > 4.0 * delta:
            raise ParameterError(f"smallest radius {self.r_min} must exceed 4 * clamp radius {delta}")
        return cfg.with_(clamp_radius=delta)

    def to_dict(self) -> dict:
        return {"r0": self.r0, "theta": self.theta, "rungs": self.rungs}


@dataclass
class LelongEstimate:
    per_radius: list[tuple[float, float]]
    limit: float
    quality: str
    fit_slope: float
    stderr: list[float] = field(default_factory=list)
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "per_radius": [
                {"r": r, "value": v, "stderr": se}
                for (r, v), se in zip(self.per_radius, self.stderr or [0.0] * len(self.per_radius))
            ],
            "limit": self.limit,
            "quality": self.quality,
            "fit_slope": self.fit_slope,
            "tolerance": self.tolerance,
        }


def _power_fit(r: np.ndarray, v: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit v = L + C r^alpha; returns (L, C, alpha)."""

    def solve(alpha):
        design = np.stack([np.ones_like(r), (r / r[0]) ** alpha], axis=1)
        coef, *_ = np.linalg.lstsq(design, v, rcond=None)
        return coef, float(np.sum((design @ coef - v) ** 2))

    res = minimize_scalar(lambda a: solve(a)[1], bounds=ALPHA_BOUNDS, method="bounded", options={"xatol": 1e-8})
    coef, _ = solve(res.x)
    return float(coef[0]), float(coef[1] * r[0] ** -res.x), float(res.x)


def extrapolate(per_radius, stderr=None) -> tuple[float, str, float, float]:
    """Estimate the r -> 0 limit of a ladder sequence.

    Fits ``value = L + C r**alpha`` (alpha > 0) on the last ceil(J/2) rungs
    (at least three).  The sequence counts as converged when its last three
    values, and their distance to L, stay within
    ``max(RTOL * |L|, 3 * max stderr, ATOL)``.  Returns
    ``(limit, quality, fit_slope, tolerance)``.
    """
    pairs = sorted(((float(r), float(v)) for r, v in per_radius), key=lambda t: -t[0])
    if len(pairs) < 3:
        raise ParameterError("extrapolation needs at least 3 rungs")
    r = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    se = np.zeros_like(v) if stderr is None else np.asarray(stderr, dtype=float)
    if not np.all(np.isfinite(v)):
        return float("nan"), DRIFTING, float("nan"), float("nan")
    tail = max(3, ceil(len(v) / 2))
    rt, vt = r[-tail:], v[-tail:]
    if np.ptp(vt) == 0.0:
        return float(vt[-1]), CONVERGED, 0.0, max(RTOL * abs(float(vt[-1])), ATOL)
    limit, _, alpha = _power_fit(rt, vt)
    tol = max(RTOL * abs(limit), 3.0 * float(np.max(se[-tail:])), ATOL)
    last3 = v[-3:]
    settled = np.ptp(last3) <= tol and abs(last3[-1] - limit) <= tol
    return limit, CONVERGED if settled else DRIFTING, alpha, tol


def _finish(radii, values: list[MassEstimate]) -> LelongEstimate:
    per = [(float(r), e.value) for r, e in zip(radii, values)]
    errs = [e.stderr for e in values]
    limit, quality, slope, tol = extrapolate(per, errs)
    if not all(e.reliable for e in values):
        quality = UNRELIABLE
    return LelongEstimate(per, limit, quality, slope, errs, tol)


def _ladder_values(estimate, ladder: RadiusLadder, cfg: EstimatorConfig):
    cfg = ladder.config_for(cfg)
    return ladder.radii, [estimate(float(r), cfg) for r in ladder.radii]


def lelong_point_sphere(
    f: TestFunction, a, m: int, ladder: RadiusLadder = RadiusLadder(), cfg: EstimatorConfig = EstimatorConfig()
) -> LelongEstimate:
    """Quotient 2 M(f, S(a, r)) / phi(r^2) on each rung."""
    n = f.n
    _check_index(n, m)
    center = as_coords(a, n)

    def rung(r, c):
        est = sphere_mean(f, center, r, c)
        return est.scaled(2.0 / phi_fundamental(n, m, r * r))

    return _finish(*_ladder_values(rung, ladder, cfg))


def ball_prefactor(n: int, m: int) -> float:
    return 2.0 * (1.0 + 1.0 / n - 1.0 / m)


def lelong_point_ball(
    f: TestFunction, a, m: int, ladder: RadiusLadder = RadiusLadder(), cfg: EstimatorConfig = EstimatorConfig()
) -> LelongEstimate:
    """Quotient 2 (1 + 1/n - 1/m) M(f, B(a, r)) / phi(r^2) on each rung."""
    n = f.n
    _check_index(n, m)
    center = as_coords(a, n)

    def rung(r, c):
        est = ball_mean(f, center, r, c)
        return est.scaled(ball_prefactor(n, m) / phi_fundamental(n, m, r * r))

    return _finish(*_ladder_values(rung, ladder, cfg))


def mean_ratio(f: TestFunction, a, r: float, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Sphere mean over ball mean at radius r."""
    center = as_coords(a, f.n)
    return sphere_mean(f, center, r, cfg).value / ball_mean(f, center, r, cfg).value


# -- mass-based estimator and its calibration ---------------------------------


def kappa_cal(n: int) -> float:
    """Bridge constant turning Hessian masses into mean-value Lelong numbers.

    Closed form 2 (n-1)! / (kappa_form(n) pi^n); the index m drops out.  It is
    frozen here and checked against :func:`calibrate_kappa`.
    """
    return 2.0 * factorial(n - 1) / (kappa_form(n) * pi**n)


def mass_exponent(n: int, m: int) -> float:
    return 2.0 * n * (1.0 - 1.0 / m)


def calibrate_kappa(n: int, m: int, r: float = 0.25, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Solve for the bridge constant that makes the mass estimator return 2 on the fundamental solution."""
    from .catalog import fundamental

    mass = ball_hessian_mass(fundamental(n, m), np.zeros(n), r, cfg)
    if not mass.value > 0:
        raise EstimatorError("calibration mass is not positive")
    return 2.0 * r ** mass_exponent(n, m) / mass.value


def lelong_point_mass(
    f: TestFunction, a, m: int, ladder: RadiusLadder = RadiusLadder(), cfg: EstimatorConfig = EstimatorConfig()
) -> LelongEstimate:
    """kappa_cal(n) * r^(-2n(1-1/m)) * mass of the Hessian trace on B(a, r)."""
    n = f.n
    _check_index(n, m)
    center = as_coords(a, n)

    def rung(r, c):
        return ball_hessian_mass(f, center, r, c).scaled(kappa_cal(n) * r ** -mass_exponent(n, m))

    return _finish(*_ladder_values(rung, ladder, cfg))
