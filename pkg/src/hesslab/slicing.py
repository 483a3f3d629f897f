"""Slices v(x', .), slice indices, directional Lelong numbers and the slicing checkers.

Points of C^n are split as z = (z', z'') with z' in C^p.  Directional numbers
are mass based and carry the bridge constant :func:`hesslab.lelong.kappa_cal`,
so they live in the same units as the mean-value point estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial, gamma, isfinite, pi

import numpy as np
from scipy.stats import qmc

from .catalog import RadialProfile, TestFunction, as_coords
from .errors import HessianError, InconclusiveError, ParameterError, SingularPointError
from .garding import subharmonic_index
from .hessian import spectrum, wirtinger_hessian_fd
from .integrate import EstimatorConfig, ball_sample_values, ball_volume, counter_uniforms, hessian_masses
from .lelong import CONVERGED, UNRELIABLE, RadiusLadder, extrapolate, kappa_cal, lelong_point_sphere

__all__ = [
    "DirectionalEstimate",
    "SliceFunction",
    "cor43_check",
    "directional_lelong",
    "exceptional_scan",
    "fubini_constant",
    "halton_ball",
    "hill_tail_index",
    "j_rate",
    "monotonicity_check",
    "probe_points",
    "q_min",
    "slice_function",
    "slice_index",
    "slice_integrability",
    "thm44_check",
    "thm44_constant",
]

AGREEMENT_ATOL = 1e-2
INTEGRABLE, DIVERGENT = "integrable", "divergent"


def q_min(n: int, m: int, p: int) -> int:
    """Smallest integer q with q >= m p / n."""
    if not all(int(x) == x for x in (n, m, p)) or not 1 <= p < m < n:
        raise ParameterError(f"need integers 1 <= p < m < n, got n={n}, m={m}, p={p}")
    return -(-int(m) * int(p) // int(n))


# -- slices -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SliceFunction(TestFunction):
    """z'' -> parent(x', z''), a test function on C^{n-p}."""

    parent: TestFunction | None = None
    xprime: tuple[complex, ...] = ()


def slice_function(f: TestFunction, xprime) -> SliceFunction:
    """Restriction of ``f`` to the fibre {x'} x C^{n-p}.

    The closed-form Hessian of the slice is the lower-right block of the
    parent Hessian.  Radial parents give radial slices with shifted profiles.
    """
    x = np.asarray(xprime, dtype=complex).reshape(-1)
    p = x.size
    n = f.n
    if not 1 <= p < n:
        raise ParameterError(f"x' must have between 1 and n-1={n - 1} coordinates, got {p}")
    d = n - p

    def lift(z):
        z = np.asarray(z, dtype=complex)
        return np.concatenate([np.broadcast_to(x, z.shape[:-1] + (p,)), z], axis=-1)

    func = lambda z: f.func(lift(z))  # noqa: E731
    hess = None if f.hess is None else (lambda z: f.hess(lift(z))[..., p:, p:])
    profile = None
    if f.profile is not None:
        profile = f.profile.shifted(float(np.sum(np.abs(x) ** 2)))
    elif f.split is not None and f.split.p == p:
        if f.split.side == "second":
            profile = f.split.profile
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                const = float(f.split.profile.f(np.float64(np.sum(np.abs(x) ** 2))))
            if np.isfinite(const):
                profile = RadialProfile(
                    lambda s: np.full(np.shape(s), const),
                    lambda s: np.zeros(np.shape(s)),
                    lambda s: np.zeros(np.shape(s)),
                )
    return SliceFunction(
        name=f"{f.name}|slice",
        n=d,
        func=func,
        hess=hess,
        singular=f.singular.restrict(x),
        profile=profile,
        params={**f.params, "xprime": [complex(c) for c in x]},
        parent=f,
        xprime=tuple(complex(c) for c in x),
    )


#: Hill tail-index thresholds: below the first the mean is infinite, above the second it is finite
TAIL_DIVERGENT, TAIL_INTEGRABLE = 0.85, 1.15


def hill_tail_index(values: np.ndarray) -> float:
    """Hill estimate of the tail index from the largest sqrt(N) values; inf for bounded or empty tails."""
    x = np.sort(np.asarray(values, dtype=float)[values > 0])[::-1]
    k = min(int(np.sqrt(values.size)), x.size - 1)
    if k < 2 or x[k] <= 0:
        return float("inf")
    logs = np.log(x[:k] / x[k])
    mean = float(np.mean(logs))
    return float("inf") if mean == 0.0 else 1.0 / mean


def slice_integrability(
    f: TestFunction, xprime, omega=None, cfg: EstimatorConfig = EstimatorConfig(), doublings: int = 4
) -> dict:
    """Decide whether the slice at x' is integrable on the test ball ``omega`` = (center, radius).

    The integrand max(-f(x', .), 0) is sampled uniformly on the ball.  A slice
    equal to -inf on sampled points is divergent outright.  Otherwise the tail
    index of the sampled values is estimated on prefixes whose size doubles
    ``doublings`` times: a power tail with index below one has infinite mean.
    The verdict needs the last two prefixes to agree; anything else raises
    :class:`InconclusiveError`.
    """
    s = slice_function(f, xprime)
    center, radius = omega if omega is not None else (np.zeros(s.n), 1.0)
    center = as_coords(center, s.n).reshape(s.n)
    vals, used, _ = ball_sample_values(
        s, center, float(radius), lambda z: np.maximum(-s.eval(z), 0.0), cfg.with_(clamp_radius=0.0), 0.0,
        "integrability",
    )
    evidence = {"xprime": _pairs(s.xprime), "singular_set": s.singular.kind}
    if np.any(np.isposinf(vals)) or np.any(np.isnan(vals)):
        bad = int(np.sum(~np.isfinite(vals)))
        return {"verdict": DIVERGENT, "reason": "slice is -inf on sampled points", "infinite_samples": bad,
                **evidence}
    counts = [used >> (doublings - j) for j in range(doublings + 1)]
    if counts[0] < 16:
        raise ParameterError("too few samples for the requested number of doublings")
    tails = [hill_tail_index(vals[:c]) for c in counts]
    means = [float(np.mean(vals[:c])) for c in counts]
    evidence.update({"counts": counts, "means": means, "tail_index": tails})

    def verdict(alpha):
        if alpha < TAIL_DIVERGENT:
            return DIVERGENT
        if alpha > TAIL_INTEGRABLE:
            return INTEGRABLE
        return None

    last = [verdict(a) for a in tails[-2:]]
    if last[0] is not None and last[0] == last[1]:
        reason = "tail index below one, infinite mean" if last[1] == DIVERGENT else "tail index above one"
        return {"verdict": last[1], "reason": reason, **evidence}
    raise InconclusiveError(
        f"integrability of the slice at x'={list(s.xprime)} undecided after {doublings} doublings "
        f"(tail index estimates {[round(a, 3) for a in tails]})"
    )


def _pairs(values) -> list[list[float]]:
    return [[complex(c).real, complex(c).imag] for c in values]


def exceptional_scan(f: TestFunction, p: int, grid: int = 11, cfg: EstimatorConfig = EstimatorConfig()) -> dict:
    """Flag x' whose slice is not integrable, scanning z'_1 over a grid on [-1, 1]^2.

    Remaining coordinates of x' are zero and the test ball is the unit ball of
    C^{n-p}.  Each point carries its divergence evidence.
    """
    if int(p) != p or not 1 <= p < f.n:
        raise ParameterError(f"split p must satisfy 1 <= p < n={f.n}")
    if int(grid) != grid or grid < 1:
        raise ParameterError("grid must be a positive integer")
    axis = np.linspace(-1.0, 1.0, int(grid))
    points, flagged = [], []
    for y in axis:
        for x in axis:
            xp = np.zeros(int(p), dtype=complex)
            xp[0] = complex(x, y)
            try:
                res = slice_integrability(f, xp, cfg=cfg)
            except InconclusiveError as exc:
                res = {"verdict": "inconclusive", "reason": str(exc), "xprime": _pairs(xp)}
            points.append(res)
            if res["verdict"] == DIVERGENT:
                flagged.append(_pairs(xp))
    return {
        "function": f.describe(),
        "p": int(p),
        "grid": int(grid),
        "candidates": flagged,
        "points": points,
    }


def probe_points(d: int, count: int = 64, radius: float = 1.0, seed: int = 42) -> np.ndarray:
    from scipy.special import ndtri

    g = ndtri(counter_uniforms(seed, "probes", np.arange(count), 0, 2 * d))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return radius * (g[:, :d] + 1j * g[:, d:])


def slice_index(f: TestFunction, xprime, probes=None, tol: float = 1e-9) -> int:
    """Minimum over probe points of the subharmonicity index of the slice Hessian."""
    s = slice_function(f, xprime)
    pts = probe_points(s.n) if probes is None else as_coords(probes, s.n).reshape(-1, s.n)
    if np.any(s.singular.distance(pts) <= 0):
        raise SingularPointError("probe points must avoid the singular set of the slice")
    h = s.hessian(pts) if s.has_hessian else wirtinger_hessian_fd(s, pts)
    if not np.all(np.isfinite(h)):
        raise HessianError("non-finite slice Hessian at a probe point")
    return int(np.min(subharmonic_index(spectrum(h), tol)))


# -- directional numbers ------------------------------------------------------


@dataclass
class DirectionalEstimate:
    """Scaled masses per rung: total, I (tr'' part) and J (tr' part)."""

    n: int
    p: int
    m: int
    q: int
    per_radius: list[tuple[float, float, float, float]]
    stderr: list[tuple[float, float, float]]
    limit: float
    quality: str
    limits: dict = field(default_factory=dict)
    methods: list[str] = field(default_factory=list)

    @property
    def weights(self) -> tuple[int, int]:
        return comb(self.n - 1, self.p), comb(self.n - 1, self.p - 1)

    def column(self, name: str) -> np.ndarray:
        idx = {"r": 0, "total": 1, "I": 2, "J": 3}[name]
        return np.array([row[idx] for row in self.per_radius])

    def stderr_column(self, name: str) -> np.ndarray:
        idx = {"total": 0, "I": 1, "J": 2}[name]
        return np.array([row[idx] for row in self.stderr])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "m": self.m,
            "q": self.q,
            "weights": list(self.weights),
            "per_radius": [
                {"r": r, "total": t, "I": i, "J": j, "stderr_total": e[0], "stderr_I": e[1], "stderr_J": e[2]}
                for (r, t, i, j), e in zip(self.per_radius, self.stderr)
            ],
            "limit": self.limit,
            "quality": self.quality,
            "limits": self.limits,
            "methods": self.methods,
        }


def scaling_exponent(n: int, p: int, m: int, q: int) -> float:
    return 2.0 * (n - p) * (1.0 - 1.0 / (m - q))


def _check_directional(n: int, p: int, m: int, q: int):
    if int(q) != q or int(m) != m:
        raise ParameterError("m and q must be integers")
    if m - q < 1:
        raise ParameterError(f"need m - q >= 1, got m={m}, q={q}")
    qm = q_min(n, m, p)
    if q < qm:
        raise ParameterError(f"q={q} is below q_min(n={n}, m={m}, p={p})={qm}")


def directional_lelong(
    f: TestFunction,
    bprime,
    xsecond,
    m: int,
    q: int,
    ladder: RadiusLadder = RadiusLadder(),
    cfg: EstimatorConfig = EstimatorConfig(),
) -> DirectionalEstimate:
    """Scaled Hessian masses over B' x B''(x'', r) along the ladder.

    total = kappa_cal(n) r^(-e) (T' + T''), I = kappa_cal(n) r^(-e) T'' / C(n-1, p)
    and J = kappa_cal(n) r^(-e) T' / C(n-1, p-1), with e = 2 (n-p)(1 - 1/(m-q)) and
    T', T'' the masses of the partial traces.  All three share one sample set.
    """
    n = f.n
    cprime = np.asarray(bprime[0], dtype=complex).reshape(-1)
    p = cprime.size
    _check_directional(n, p, m, q)
    cfg = ladder.config_for(cfg)
    e = scaling_exponent(n, p, m, q)
    wi, wj = comb(n - 1, p), comb(n - 1, p - 1)
    rows, errs, methods, reliable = [], [], [], True
    for r in ladder.radii:
        r = float(r)
        masses = hessian_masses(f, (cprime, bprime[1]), xsecond, r, cfg)
        c = kappa_cal(n) * r**-e
        tot, two, one = masses["total"], masses["zsecond_trace"], masses["zprime_trace"]
        rows.append((r, c * tot.value, c * two.value / wi, c * one.value / wj))
        errs.append((c * tot.stderr, c * two.stderr / wi, c * one.stderr / wj))
        methods.append(tot.method)
        reliable = reliable and all(x.reliable for x in masses.values())
    limits = {}
    quality = CONVERGED
    for k, name in enumerate(("total", "I", "J"), start=1):
        lim, qual, slope, tol = extrapolate([(row[0], row[k]) for row in rows], [er[k - 1] for er in errs])
        limits[name] = {"limit": lim, "quality": qual, "fit_slope": slope, "tolerance": tol}
    quality = limits["total"]["quality"] if reliable else UNRELIABLE
    return DirectionalEstimate(n, p, m, q, rows, errs, limits["total"]["limit"], quality, limits, methods)


def decomposition_residual(est: DirectionalEstimate) -> float:
    """Largest relative gap |total - (C(n-1,p) I + C(n-1,p-1) J)| over the rungs."""
    wi, wj = est.weights
    worst = 0.0
    for _, t, i, j in est.per_radius:
        gap = abs(t - (wi * i + wj * j))
        worst = max(worst, gap / max(abs(t), 1e-300) if t != 0 else gap)
    return worst


def monotonicity_check(
    f: TestFunction,
    bprime,
    xsecond,
    m: int,
    q: int,
    ladder: RadiusLadder = RadiusLadder(),
    cfg: EstimatorConfig = EstimatorConfig(),
    estimate: DirectionalEstimate | None = None,
) -> dict:
    """Check that scaled totals, I and J do not decrease with r, up to 3 combined stderr."""
    est = estimate or directional_lelong(f, bprime, xsecond, m, q, ladder, cfg)
    violations = []
    for name in ("total", "I", "J"):
        v = est.column(name)
        se = est.stderr_column(name)
        scale = float(np.max(np.abs(v))) if v.size else 0.0
        for j in range(len(v) - 1):
            # rung j has the larger radius
            slack = 3.0 * np.hypot(se[j], se[j + 1]) + 1e-9 * scale
            if v[j] < v[j + 1] - slack:
                violations.append(
                    {"series": name, "r_large": est.per_radius[j][0], "r_small": est.per_radius[j + 1][0],
                     "value_large": float(v[j]), "value_small": float(v[j + 1]), "slack": float(slack)}
                )
    return {
        "statement": "scaled directional masses are non-decreasing in r",
        "estimate": est.to_dict(),
        "violations": violations,
        "pass": not violations,
    }


def j_rate(est: DirectionalEstimate, rungs: int = 4) -> float:
    """Log-log slope of J against r over the last ``rungs`` rungs."""
    r = est.column("r")[-rungs:]
    j = est.column("J")[-rungs:]
    if np.any(j <= 0):
        return float("nan")
    return float(np.polyfit(np.log(r), np.log(j), 1)[0])


# -- base-point samples -------------------------------------------------------


def halton_ball(center, radius: float, count: int = 25) -> np.ndarray:
    """Deterministic low-discrepancy points in the ball B(center, radius) of C^p."""
    from scipy.special import ndtri

    c = np.asarray(center, dtype=complex).reshape(-1)
    p = c.size
    gen = qmc.Halton(d=2 * p + 1, scramble=False)
    gen.fast_forward(1)  # index 0 is the all-zero point
    u = gen.random(count)
    g = ndtri(u[:, : 2 * p])
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    rad = u[:, -1] ** (1.0 / (2 * p))
    return c + radius * rad[:, None] * (g[:, :p] + 1j * g[:, p:])


def _base_points(f: TestFunction, bprime, count: int, delta: float, xgrid=None) -> np.ndarray:
    cprime, rho = bprime
    pts = halton_ball(cprime, rho, count) if xgrid is None else np.atleast_2d(np.asarray(xgrid, dtype=complex))
    keep = f.singular.xprime_distance(pts) > delta
    return pts[keep]


# -- slice-mass identity and lower bound ----------------------------------


def cor43_check(
    f: TestFunction,
    bprime,
    xsecond,
    m: int,
    q: int,
    xgrid=None,
    ladder: RadiusLadder = RadiusLadder(),
    cfg: EstimatorConfig = EstimatorConfig(),
    points: int = 25,
    atol: float = AGREEMENT_ATOL,
) -> dict:
    """Compare the directional number on B' with the integral of slice point numbers over B'.

    The right side is C(n-1, p) * rho^(2p) * (mean slice limit over the x'
    sample); rho^(2p) is the volume of B' in the units fixed by kappa_cal.
    """
    n = f.n
    cprime = np.asarray(bprime[0], dtype=complex).reshape(-1)
    rho = float(bprime[1])
    p = cprime.size
    _check_directional(n, p, m, q)
    k = m - q
    if not k < n - p:
        raise ParameterError(f"slice index m-q={k} must be below n-p={n - p} for the point estimator")
    lhs = directional_lelong(f, (cprime, rho), xsecond, m, q, ladder, cfg)
    frozen = ladder.config_for(cfg)
    xs = _base_points(f, (cprime, rho), points, frozen.clamp_radius, xgrid)
    slices = []
    for xp in xs:
        est = lelong_point_sphere(slice_function(f, xp), xsecond, k, ladder, cfg)
        slices.append({"xprime": _pairs(xp), "limit": est.limit, "quality": est.quality})
    lim = [s["limit"] for s in slices]
    mean_slice = float(np.mean(lim)) if lim else float("nan")
    rhs = comb(n - 1, p) * rho ** (2 * p) * mean_slice
    tainted = lhs.quality == UNRELIABLE or any(s["quality"] == UNRELIABLE for s in slices)
    diff = abs(lhs.limit - rhs)
    return {
        "statement": "directional number equals the weighted integral of slice numbers over B'",
        "parameters": {"function": f.describe(), "n": n, "p": p, "m": m, "q": q,
                       "bprime": {"center": _pairs(cprime), "radius": rho}, "xsecond": _pairs(np.ravel(xsecond)),
                       "ladder": ladder.to_dict()},
        "lhs": lhs.limit,
        "rhs": rhs,
        "difference": diff,
        "tolerance": atol,
        "j_rate": j_rate(lhs),
        "j_rate_bound": 2.0 * (n - p) / k,
        "directional": lhs.to_dict(),
        "slices": slices,
        "tainted": tainted,
        "pass": bool(isfinite(diff) and diff <= atol and not tainted),
        "seed": cfg.seed,
    }


def _gamma_ratio(num: float, den: float) -> float:
    for x in (num, den):
        if x <= 0 and float(x).is_integer():
            raise ParameterError(f"Gamma pole at {x}")
    return gamma(num) / gamma(den)


def _check_bound_indices(n: int, m: int, p: int):
    if not all(int(x) == x for x in (n, m, p)) or not 0 <= p < m < n:
        raise ParameterError(f"need integers 0 <= p < m < n, got n={n}, m={m}, p={p}")


def thm44_constant(n: int, m: int, p: int) -> tuple[float, float]:
    """(c, d) with c = pi^p G(n-n/m+1)/G(n-n/m+p+1) and d = G(n-s+p+1)/(pi^p G(n-s+1)), s = (n-p)/(m-q).

    p = 0 is accepted as the formal limit, where both constants equal 1.
    """
    _check_bound_indices(n, m, p)
    c = pi**p * _gamma_ratio(n - n / m + 1, n - n / m + p + 1)
    q = q_min(n, m, p) if p > 0 else 0
    s = (n - p) / (m - q)
    d = _gamma_ratio(n - s + p + 1, n - s + 1) / pi**p
    return c, d


def fubini_constant(n: int, m: int, p: int) -> float:
    """Integral of (1 - |x'|^2)^alpha over the unit ball of C^p, alpha = (n-p)(1 - 1/(m-q)).

    This is the factor produced when point masses on small balls are split
    into slice masses over the base ball.
    """
    _check_bound_indices(n, m, p)
    if p == 0:
        return 1.0
    alpha = scaling_exponent(n, p, m, q_min(n, m, p)) / 2.0
    return pi**p * _gamma_ratio(alpha + 1, alpha + p + 1)


def thm44_check(
    f: TestFunction,
    m: int,
    p: int,
    mode: str,
    xsecond=None,
    bprime=None,
    ladder: RadiusLadder = RadiusLadder(),
    cfg: EstimatorConfig = EstimatorConfig(),
    points: int = 25,
    atol: float = AGREEMENT_ATOL,
) -> dict:
    """Pointwise comparison of parent and slice Lelong numbers at sampled x'.

    ``integer_case`` (m p / n an integer) compares nu_m(f, (x', x'')) with
    c(n,m,p) C(n-1,p) nu_{m-q}(slice, x''); ``fractional_case`` asserts the
    slice numbers vanish.
    """
    n = f.n
    q = q_min(n, m, p)
    integer = (m * p) % n == 0
    if mode not in ("integer_case", "fractional_case"):
        raise ParameterError(f"unknown mode {mode!r}")
    if (mode == "integer_case") != integer:
        raise ParameterError(f"mode {mode} does not match m p / n = {m * p}/{n}")
    k = m - q
    if not 1 <= k < n - p:
        raise ParameterError(f"slice index m-q={k} must satisfy 1 <= m-q < n-p={n - p}")
    xsecond = np.zeros(n - p, dtype=complex) if xsecond is None else np.asarray(xsecond, dtype=complex).reshape(-1)
    bprime = (np.zeros(p, dtype=complex), 1.0) if bprime is None else bprime
    frozen = ladder.config_for(cfg)
    xs = _base_points(f, bprime, points, frozen.clamp_radius)
    c, _ = thm44_constant(n, m, p)
    weight = c * comb(n - 1, p)
    rows, ok, tainted = [], True, False
    for xp in xs:
        sl = lelong_point_sphere(slice_function(f, xp), xsecond, k, ladder, cfg)
        row = {"xprime": _pairs(xp), "slice_limit": sl.limit, "slice_quality": sl.quality}
        tainted |= sl.quality == UNRELIABLE
        if integer:
            point = np.concatenate([xp, xsecond])
            par = lelong_point_sphere(f, point, m, ladder, cfg)
            rhs = weight * sl.limit
            row.update({"parent_limit": par.limit, "parent_quality": par.quality, "rhs": rhs,
                        "difference": abs(par.limit - rhs)})
            tainted |= par.quality == UNRELIABLE
            good = isfinite(row["difference"]) and row["difference"] <= atol
        else:
            good = isfinite(sl.limit) and abs(sl.limit) <= atol
        row["pass"] = bool(good)
        ok &= good
        rows.append(row)
    return {
        "statement": "parent m-Lelong numbers match scaled slice numbers" if integer
        else "slice (m-q)-Lelong numbers vanish",
        "parameters": {"function": f.describe(), "n": n, "m": m, "p": p, "q": q, "mode": mode,
                       "constant_c": c, "weight": weight, "ladder": ladder.to_dict(), "points": len(rows)},
        "rows": rows,
        "tolerance": atol,
        "tainted": tainted,
        "pass": bool(ok and rows and not tainted),
        "seed": cfg.seed,
    }


def base_volume_units(p: int, rho: float) -> float:
    """Volume of B'(rho) in calibrated units, p!/pi^p * Vol = rho^(2p)."""
    return factorial(p) / pi**p * ball_volume(p, rho)
