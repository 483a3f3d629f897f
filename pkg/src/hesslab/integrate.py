"""Deterministic Monte Carlo and radial quadrature over balls, spheres and products.

Random numbers are counter based: the uniforms for sample ``i`` (retry
``attempt``) are a hash of ``(seed, stream, i, attempt, coordinate)``.  An
estimate therefore depends only on the configuration, never on how the
samples were batched or which worker drew them.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import factorial, pi

import numpy as np
from scipy.special import ndtri

from .catalog import TestFunction, as_coords
from .errors import EstimatorError, HessianError, ParameterError

__all__ = [
    "EstimatorConfig",
    "MassEstimate",
    "ball_hessian_mass",
    "ball_mean",
    "ball_sample_values",
    "ball_volume",
    "counter_uniforms",
    "hessian_mass",
    "hessian_masses",
    "kappa_form",
    "sphere_area",
    "sphere_mean",
    "wedge_weights",
]

GL_NODES = 64
PARTS = ("total", "zprime_trace", "zsecond_trace")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _stream_id(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def counter_uniforms(seed: int, stream: str, index, attempt: int, dims: int) -> np.ndarray:
    """Uniforms in (0, 1) of shape (len(index), dims), a pure function of the counters."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ (np.uint64(_stream_id(stream)) * _GOLDEN))
        key = _mix(key + np.uint64(attempt) * _M2)
        base = _mix(key ^ (idx * _GOLDEN))
        coords = np.arange(dims, dtype=np.uint64)
        bits = _mix(base[:, None] + (coords[None, :] + np.uint64(1)) * _M1)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample budget, seed and singular-set exclusion shell for every estimate.

    ``clamp_radius`` of ``None`` means one eighth of the smallest radius the
    caller integrates over.
    """

    samples: int = 65536
    seed: int = 42
    stratified: bool = False
    clamp_radius: float | None = None
    radial_quadrature: bool = True
    workers: int = 1
    chunk: int = 16384
    max_attempts: int = 64

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 64:
            raise ParameterError(f"samples must be an integer >= 64, got {self.samples}")
        if self.clamp_radius is not None and self.clamp_radius < 0:
            raise ParameterError("clamp_radius must be non-negative")
        if self.workers < 1 or self.chunk < 1:
            raise ParameterError("workers and chunk must be positive")

    def delta(self, r_min: float) -> float:
        return self.clamp_radius if self.clamp_radius is not None else r_min / 8.0

    def with_(self, **changes) -> "EstimatorConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class MassEstimate:
    value: float
    stderr: float
    samples_used: int
    clipped_fraction: float = 0.0
    method: str = "mc"

    @property
    def reliable(self) -> bool:
        return self.clipped_fraction < 0.5 and np.isfinite(self.value)

    def scaled(self, c: float) -> "MassEstimate":
        return replace(self, value=self.value * c, stderr=self.stderr * abs(c))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "samples_used": self.samples_used,
            "clipped_fraction": self.clipped_fraction,
            "method": self.method,
            "reliable": self.reliable,
        }


def ball_volume(k: int, r: float) -> float:
    """Lebesgue volume of a ball of radius r in C^k."""
    return pi**k * r ** (2 * k) / factorial(k)


def sphere_area(k: int) -> float:
    """Area of the unit sphere S^{2k-1} in C^k."""
    return 2.0 * pi**k / factorial(k - 1)


def kappa_form(n: int) -> float:
    """Form-normalisation constant 2^n n! carried by every Hessian mass."""
    return float(2**n * factorial(n))


# -- samplers -----------------------------------------------------------------


def _to_complex(x: np.ndarray) -> np.ndarray:
    k = x.shape[-1] // 2
    return x[..., :k] + 1j * x[..., k:]


def _directions(u: np.ndarray) -> np.ndarray:
    g = ndtri(u)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _radial_fraction(u: np.ndarray, idx: np.ndarray, total: int, dim: int, stratified: bool) -> np.ndarray:
    """Radius / R for a uniform point of a real ``dim``-ball."""
    if stratified:
        u = (idx.astype(float) + u) / total
    return u ** (1.0 / dim)


def _sphere_sampler(n: int, center: np.ndarray, r: float):
    def draw(cfg, stream, idx, attempt):
        u = counter_uniforms(cfg.seed, stream, idx, attempt, 2 * n)
        return center + r * _to_complex(_directions(u))

    return draw


def _ball_sampler(n: int, center: np.ndarray, r: float):
    def draw(cfg, stream, idx, attempt):
        u = counter_uniforms(cfg.seed, stream, idx, attempt, 2 * n + 1)
        rad = _radial_fraction(u[:, -1], idx, cfg.samples, 2 * n, cfg.stratified)
        return center + r * rad[:, None] * _to_complex(_directions(u[:, :-1]))

    return draw


def _product_sampler(p: int, cprime: np.ndarray, rho: float, d: int, csecond: np.ndarray, r: float):
    def draw(cfg, stream, idx, attempt):
        u = counter_uniforms(cfg.seed, stream, idx, attempt, 2 * p + 2 * d + 2)
        up, us = u[:, : 2 * p + 1], u[:, 2 * p + 1 :]
        rp = _radial_fraction(up[:, -1], idx, cfg.samples, 2 * p, False)
        rs = _radial_fraction(us[:, -1], idx, cfg.samples, 2 * d, cfg.stratified)
        zp = cprime + rho * rp[:, None] * _to_complex(_directions(up[:, :-1]))
        zs = csecond + r * rs[:, None] * _to_complex(_directions(us[:, :-1]))
        return np.concatenate([zp, zs], axis=-1)

    return draw


def _draw_chunk(f: TestFunction, draw, cfg: EstimatorConfig, stream: str, idx: np.ndarray, delta: float):
    """Points for sample indices ``idx`` with the delta-shell around the singular set resampled."""
    pts = draw(cfg, stream, idx, 0)
    bad = f.singular.distance(pts) < delta
    clipped = int(bad.sum())
    attempt = 0
    while bad.any() and attempt < cfg.max_attempts:
        attempt += 1
        redo = np.flatnonzero(bad)
        pts[redo] = draw(cfg, stream, idx[redo], attempt)
        bad[redo] = f.singular.distance(pts[redo]) < delta
    return pts, ~bad, clipped


def _run(f: TestFunction, draw, cfg: EstimatorConfig, stream: str, delta: float, integrand):
    """Evaluate ``integrand(points)`` on every valid sample, chunked and order preserving."""
    starts = list(range(0, cfg.samples, cfg.chunk))

    def work(start):
        idx = np.arange(start, min(start + cfg.chunk, cfg.samples), dtype=np.uint64)
        pts, ok, clipped = _draw_chunk(f, draw, cfg, stream, idx, delta)
        vals = integrand(pts[ok]) if ok.any() else None
        return vals, int(ok.sum()), clipped

    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, starts))
    else:
        results = [work(s) for s in starts]
    used = sum(r[1] for r in results)
    clipped = sum(r[2] for r in results)
    if used == 0:
        raise EstimatorError("every sample fell inside the exclusion shell of the singular set")
    vals = np.concatenate([r[0] for r in results if r[0] is not None], axis=0)
    return vals, used, clipped / cfg.samples


def _summarise(vals: np.ndarray, used: int, clipped: float, scale: float = 1.0) -> MassEstimate:
    mean = float(np.mean(vals))
    if not np.isfinite(mean):
        raise EstimatorError("non-finite sample average")
    se = float(np.std(vals, ddof=1) / np.sqrt(used)) if used > 1 else 0.0
    return MassEstimate(mean * scale, se * abs(scale), used, clipped, "mc")


def _at_origin(a: np.ndarray) -> bool:
    return bool(np.all(a == 0))


# -- Gauss-Legendre helpers ---------------------------------------------------


def _gl(k: int = GL_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (x + 1.0), 0.5 * w


def _quad_pair(integrate) -> MassEstimate:
    """Run a quadrature rule at 64 and 32 nodes; the gap is the error proxy."""
    fine = integrate(GL_NODES)
    coarse = integrate(GL_NODES // 2)
    if not np.isfinite(fine):
        raise EstimatorError("non-finite quadrature value")
    return MassEstimate(float(fine), float(abs(fine - coarse)), GL_NODES, 0.0, "quadrature")


# -- means --------------------------------------------------------------------


def _check_radius(r: float):
    if not r > 0:
        raise ParameterError(f"radius must be positive, got {r}")


def sphere_mean(f: TestFunction, a, r: float, cfg: EstimatorConfig = EstimatorConfig()) -> MassEstimate:
    """Average of f over the sphere S(a, r) of C^n."""
    center = as_coords(a, f.n).reshape(f.n)
    _check_radius(r)
    delta = cfg.delta(r)
    if r <= delta:
        raise ParameterError("radius must exceed the exclusion radius")
    if cfg.radial_quadrature and f.profile is not None and _at_origin(center):
        val = float(f.profile.f(np.float64(r * r)))
        if not np.isfinite(val):
            raise EstimatorError("non-finite profile value")
        return MassEstimate(val, 0.0, 1, 0.0, "exact")
    vals, used, clipped = _run(f, _sphere_sampler(f.n, center, r), cfg, "sphere", delta, f.eval)
    return _summarise(vals, used, clipped)


def ball_mean(f: TestFunction, a, r: float, cfg: EstimatorConfig = EstimatorConfig()) -> MassEstimate:
    """Average of f over the ball B(a, r) of C^n."""
    center = as_coords(a, f.n).reshape(f.n)
    _check_radius(r)
    delta = cfg.delta(r)
    if r <= delta:
        raise ParameterError("radius must exceed the exclusion radius")
    n = f.n
    if cfg.radial_quadrature and f.profile is not None and _at_origin(center):
        prof = f.profile

        def rule(k):
            x, w = _gl(k)
            return float(np.sum(w * prof.f(r * r * x * x) * 2 * n * x ** (2 * n - 1)))

        return _quad_pair(rule)
    vals, used, clipped = _run(f, _ball_sampler(n, center, r), cfg, "ball", delta, f.eval)
    return _summarise(vals, used, clipped)


# -- Hessian masses -----------------------------------------------------------


def _hessian_diagonal(f: TestFunction, pts: np.ndarray) -> np.ndarray:
    if f.has_hessian:
        h = f.hessian(pts)
    else:
        from .hessian import wirtinger_hessian_fd

        h = wirtinger_hessian_fd(f, pts)
    diag = np.real(np.diagonal(h, axis1=-2, axis2=-1))
    if not np.all(np.isfinite(diag)):
        raise HessianError("non-finite Hessian entries at sampled points")
    return diag


def ball_hessian_mass(f: TestFunction, a, r: float, cfg: EstimatorConfig = EstimatorConfig()) -> MassEstimate:
    """kappa_form(n) times the integral of the Hessian trace over B(a, r)."""
    center = as_coords(a, f.n).reshape(f.n)
    _check_radius(r)
    n = f.n
    scale = kappa_form(n)
    if cfg.radial_quadrature and f.profile is not None and _at_origin(center):
        prof = f.profile
        area = sphere_area(n)

        def rule(k):
            x, w = _gl(k)
            t = r * x
            s = t * t
            tr = n * prof.df(s) + s * prof.d2f(s)
            return float(r * np.sum(w * tr * area * t ** (2 * n - 1)))

        return _quad_pair(rule).scaled(scale)
    delta = cfg.delta(r)
    vals, used, clipped = _run(
        f, _ball_sampler(n, center, r), cfg, "ball-mass", delta, lambda z: _hessian_diagonal(f, z).sum(axis=-1)
    )
    return _summarise(vals, used, clipped, scale * ball_volume(n, r))


def _split_inputs(f: TestFunction, bprime, xsecond, r):
    cprime, rho = bprime
    cprime = np.asarray(cprime, dtype=complex).reshape(-1)
    p = cprime.size
    d = f.n - p
    if not 1 <= p < f.n:
        raise ParameterError(f"base ball must live in C^p with 1 <= p < n={f.n}")
    csecond = np.asarray(xsecond, dtype=complex).reshape(-1)
    if csecond.size != d:
        raise ParameterError(f"x'' must have {d} coordinates, got {csecond.size}")
    if not rho > 0:
        raise ParameterError("base ball radius must be positive")
    _check_radius(r)
    return p, d, cprime, float(rho), csecond


def _product_quadrature(f: TestFunction, p: int, d: int, rho: float, r: float, trace) -> dict[str, MassEstimate]:
    """Masses of the partial traces over B_p(0, rho) x B_d(0, r) for trace-radial functions."""
    ap, ad = sphere_area(p), sphere_area(d)

    def one_dim(fun, radius, k_dim, area, other_volume, k):
        x, w = _gl(k)
        t = radius * x
        return other_volume * radius * float(np.sum(w * fun(t * t) * area * t ** (2 * k_dim - 1)))

    def polar(fun, k):
        x, w = _gl(k)
        theta_star = np.arctan2(r, rho)
        total = 0.0
        for lo, hi, rmax in ((0.0, theta_star, lambda th: rho / np.cos(th)),
                             (theta_star, pi / 2, lambda th: r / np.sin(th))):
            th = lo + (hi - lo) * x
            wt = (hi - lo) * w
            big_r = rmax(th)[:, None] * x[None, :]
            tp = big_r * np.cos(th)[:, None]
            ts = big_r * np.sin(th)[:, None]
            integrand = fun(tp * tp, ts * ts) * ap * tp ** (2 * p - 1) * ad * ts ** (2 * d - 1) * big_r
            total += float(np.sum(wt[:, None] * (rmax(th)[:, None] * w[None, :]) * integrand))
        return total

    out = {}
    for part, fun in (("zprime_trace", trace.trace_prime), ("zsecond_trace", trace.trace_second)):
        if trace.uses_prime and trace.uses_second:
            rule = lambda k, fun=fun: polar(fun, k)  # noqa: E731
        elif trace.uses_second:
            rule = lambda k, fun=fun: one_dim(lambda s: fun(0.0, s), r, d, ad, ball_volume(p, rho), k)  # noqa: E731
        else:
            rule = lambda k, fun=fun: one_dim(lambda s: fun(s, 0.0), rho, p, ap, ball_volume(d, r), k)  # noqa: E731
        with np.errstate(divide="ignore", invalid="ignore"):
            out[part] = _quad_pair(rule).scaled(kappa_form(f.n))
    a, b = out["zprime_trace"], out["zsecond_trace"]
    out["total"] = MassEstimate(a.value + b.value, a.stderr + b.stderr, a.samples_used, 0.0, "quadrature")
    return out


def hessian_masses(
    f: TestFunction, bprime, xsecond, r: float, cfg: EstimatorConfig = EstimatorConfig()
) -> dict[str, MassEstimate]:
    """All three partial Hessian-trace masses over B' x B''(x'', r) from one sample set.

    ``bprime`` is ``(center in C^p, radius)``.  Keys: ``total`` (tr' + tr''),
    ``zprime_trace`` (sum of H_jj, j <= p) and ``zsecond_trace`` (j > p), each
    multiplied by the region volume and by :func:`kappa_form`.
    """
    p, d, cprime, rho, csecond = _split_inputs(f, bprime, xsecond, r)
    trace = f.traces(p) if cfg.radial_quadrature else None
    if trace is not None:
        centered_p = not trace.uses_prime or _at_origin(cprime)
        centered_s = not trace.uses_second or _at_origin(csecond)
        if centered_p and centered_s:
            return _product_quadrature(f, p, d, rho, r, trace)

    delta = cfg.delta(r)

    def integrand(z):
        diag = _hessian_diagonal(f, z)
        return np.stack([diag[:, :p].sum(axis=-1), diag[:, p:].sum(axis=-1)], axis=-1)

    draw = _product_sampler(p, cprime, rho, d, csecond, r)
    vals, used, clipped = _run(f, draw, cfg, "product-mass", delta, integrand)
    volume = kappa_form(f.n) * ball_volume(p, rho) * ball_volume(d, r)
    prime = _summarise(vals[:, 0], used, clipped, volume)
    second = _summarise(vals[:, 1], used, clipped, volume)
    total = _summarise(vals[:, 0] + vals[:, 1], used, clipped, volume)
    # total is tr' + tr'' sample by sample, so the identity holds exactly up to rounding
    total = replace(total, value=prime.value + second.value)
    return {"total": total, "zprime_trace": prime, "zsecond_trace": second}


def hessian_mass(
    f: TestFunction, bprime, xsecond, r: float, part: str = "total", cfg: EstimatorConfig = EstimatorConfig()
) -> MassEstimate:
    """One part of :func:`hessian_masses`."""
    if part not in PARTS:
        raise ParameterError(f"part must be one of {PARTS}, got {part!r}")
    return hessian_masses(f, bprime, xsecond, r, cfg)[part]


def ball_sample_values(
    f: TestFunction, a, r: float, integrand, cfg: EstimatorConfig = EstimatorConfig(), delta: float = 0.0,
    stream: str = "ball-values",
) -> tuple[np.ndarray, int, float]:
    """Per-sample ``integrand(points)`` for uniform points of B(a, r), in sample order.

    Returns ``(values, samples_used, clipped_fraction)``.  With ``delta=0``
    nothing is excluded, so values on the singular set come through as drawn.
    """
    center = as_coords(a, f.n).reshape(f.n)
    _check_radius(r)
    return _run(f, _ball_sampler(f.n, center, r), cfg, stream, delta, integrand)


def wedge_weights(n: int, p: int) -> tuple[int, int, int]:
    """Integer weights (w2, w1, w) with w2 * tr'' + w1 * tr' = w * (tr' + tr'').

    w2 = C(n-1, p) p! (n-p-1)!, w1 = C(n-1, p-1) (p-1)! (n-p)!, w = (n-1)!;
    the identity holds because both products collapse to (n-1)!.
    """
    from math import comb

    w2 = comb(n - 1, p) * factorial(p) * factorial(n - p - 1)
    w1 = comb(n - 1, p - 1) * factorial(p - 1) * factorial(n - p)
    return w2, w1, factorial(n - 1)
