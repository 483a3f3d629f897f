"""Elementary symmetric polynomials, Garding cones and the v_{a,b} region table."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ParameterError

__all__ = [
    "RegionLabel",
    "Curve",
    "classify_vab",
    "cone_membership",
    "curve_distance",
    "elementary_symmetric",
    "elementary_symmetric_all",
    "msh_check",
    "region_boundaries",
    "sk_vab",
    "slice_bound",
    "subharmonic_index",
    "table1",
]

DEFAULT_TOL = 1e-9


def elementary_symmetric_all(lam) -> np.ndarray:
    """All S_0..S_n of ``lam`` along the last axis, by expanding prod(1 + lam_j t)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for j in range(n):
        lj = lam[..., j, None]
        # right-hand side is evaluated before assignment, so S_{k-1} is the old value
        e[..., 1 : j + 2] = e[..., 1 : j + 2] + lj * e[..., 0 : j + 1]
    return e


def elementary_symmetric(lam, k: int):
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if int(k) != k or not 0 <= k <= n:
        raise ParameterError(f"k must satisfy 0 <= k <= {n}, got {k}")
    out = elementary_symmetric_all(lam)[..., int(k)]
    return float(out) if out.ndim == 0 else out


def _relative_sk(lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sk = elementary_symmetric_all(lam)
    scale = elementary_symmetric_all(np.abs(lam)) + 1.0
    return sk, scale


def cone_membership(lam, m: int, tol: float = DEFAULT_TOL):
    """True iff S_k(lam) >= -tol * (S_k(|lam|) + 1) for every 1 <= k <= m."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if int(m) != m or not 1 <= m <= n:
        raise ParameterError(f"m must satisfy 1 <= m <= {n}, got {m}")
    if tol < 0:
        raise ParameterError("tol must be non-negative")
    sk, scale = _relative_sk(lam)
    ok = np.all(sk[..., 1 : m + 1] >= -tol * scale[..., 1 : m + 1], axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def subharmonic_index(lam, tol: float = DEFAULT_TOL):
    """Largest m with lam in the closed cone Gamma_m, 0 when S_1 < 0."""
    lam = np.asarray(lam, dtype=float)
    sk, scale = _relative_sk(lam)
    ok = sk[..., 1:] >= -tol * scale[..., 1:]
    out = np.cumprod(ok, axis=-1).sum(axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def min_relative_sk(lam, m: int) -> np.ndarray:
    """min over 1 <= k <= m of S_k / (S_k(|lam|) + 1)."""
    sk, scale = _relative_sk(np.asarray(lam, dtype=float))
    return np.min(sk[..., 1 : m + 1] / scale[..., 1 : m + 1], axis=-1)


# -- the v_{a,b} family -------------------------------------------------------


def _coefs(n: int, k: int) -> tuple[int, int, int]:
    """(C(n-2,k), C(n-2,k-1), C(n-2,k-2)) with zero for negative lower index."""

    def c(lo):
        return comb(n - 2, lo) if lo >= 0 else 0

    return c(k), c(k - 1), c(k - 2)


def sk_vab(n: int, k: int, a, b):
    """S_k of (a, b, 1, ..., 1) in closed form."""
    c0, c1, c2 = _coefs(n, k)
    return c0 + c1 * (np.asarray(a, dtype=float) + b) + c2 * np.asarray(a, dtype=float) * b


def slice_bound(n: int, k: int) -> float:
    """Smallest b for which the slice u_b is k-subharmonic on C^{n-1}."""
    return -(n - k - 1) / k


@dataclass(frozen=True)
class RegionLabel:
    m_index: int
    slice_k_index: int

    @property
    def delta(self) -> int | None:
        if self.m_index < 1 or self.slice_k_index < 1:
            return None
        return self.slice_k_index - (self.m_index - 1)

    def to_dict(self) -> dict:
        return {"m": self.m_index, "k": self.slice_k_index, "delta": self.delta}


def _classify_arrays(n: int, a: np.ndarray, b: np.ndarray, tol: float):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ok = np.ones(np.broadcast(a, b).shape, dtype=bool)
    m_idx = np.zeros(ok.shape, dtype=int)
    for k in range(1, n + 1):
        c0, c1, c2 = _coefs(n, k)
        val = c0 + c1 * (a + b) + c2 * a * b
        scale = c0 + c1 * (np.abs(a) + np.abs(b)) + c2 * np.abs(a * b) + 1.0
        ok = ok & (val >= -tol * scale)
        m_idx += ok
    k_idx = np.zeros(ok.shape, dtype=int)
    for k in range(1, n):
        k_idx = np.where(b >= slice_bound(n, k) - tol, k, k_idx)
    return m_idx, k_idx


def classify_vab(n: int, a: float, b: float, tol: float = DEFAULT_TOL) -> RegionLabel:
    """Subharmonicity index of v_{a,b} on C^n and of its slice u_b on C^{n-1}."""
    if int(n) != n or n < 3:
        raise ParameterError(f"classify_vab needs n >= 3, got {n}")
    m_idx, k_idx = _classify_arrays(int(n), a, b, tol)
    return RegionLabel(int(m_idx), int(k_idx))


def classify_grid(n: int, a, b, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`classify_vab` returning (m_index, slice_k_index) arrays."""
    if int(n) != n or n < 3:
        raise ParameterError(f"classify_vab needs n >= 3, got {n}")
    return _classify_arrays(int(n), a, b, tol)


# -- boundary curves ----------------------------------------------------------


@dataclass(frozen=True)
class Curve:
    """The zero set of c0 + ca*a + cb*b + cab*a*b in the (a, b) plane."""

    source: str  # "S_k" for v_{a,b}, "slice" for u_b
    k: int
    c0: float
    ca: float
    cb: float
    cab: float

    @property
    def kind(self) -> str:
        return "line" if self.cab == 0 else "hyperbola"

    def value(self, a, b):
        return self.c0 + self.ca * a + self.cb * b + self.cab * np.asarray(a) * b

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "k": self.k,
            "kind": self.kind,
            "coeffs": {"c0": self.c0, "ca": self.ca, "cb": self.cb, "cab": self.cab},
        }

    def sample(self, lo: float = -6.0, hi: float = 6.0, num: int = 400) -> list[list[list[float]]]:
        """Polyline branches of the curve clipped to the square [lo, hi]^2."""
        t = np.linspace(lo, hi, num)
        if self.cab == 0:
            if self.cb != 0:
                a, b = t, -(self.c0 + self.ca * t) / self.cb
            else:
                a, b = np.full_like(t, -self.c0 / self.ca), t
            keep = (b >= lo) & (b <= hi) & (a >= lo) & (a <= hi)
            return [np.column_stack([a[keep], b[keep]]).tolist()] if keep.any() else []
        # cab*(a + c)(b + c') = const with c = cb/cab, c' = ca/cab
        ca_, cb_ = self.cb / self.cab, self.ca / self.cab
        rhs = ca_ * cb_ - self.c0 / self.cab
        branches = []
        if rhs == 0:
            for a, b in ((np.full_like(t, -ca_), t), (t, np.full_like(t, -cb_))):
                keep = (a >= lo) & (a <= hi) & (b >= lo) & (b <= hi)
                if keep.any():
                    branches.append(np.column_stack([a[keep], b[keep]]).tolist())
            return branches
        for side in (-1.0, 1.0):
            u = side * np.geomspace(1e-3, 2 * (hi - lo), num)
            a = u - ca_
            b = rhs / u - cb_
            keep = (a >= lo) & (a <= hi) & (b >= lo) & (b <= hi)
            if keep.any():
                order = np.argsort(a[keep])
                branches.append(np.column_stack([a[keep][order], b[keep][order]]).tolist())
        return branches


def region_boundaries(n: int) -> list[Curve]:
    """Curves S_k(a, b) = 0 for 1 <= k <= n and lines b = -(n-k-1)/k for 1 <= k <= n-1."""
    if int(n) != n or n < 3:
        raise ParameterError(f"region_boundaries needs n >= 3, got {n}")
    n = int(n)
    curves = []
    for k in range(1, n + 1):
        c0, c1, c2 = _coefs(n, k)
        curves.append(Curve("S_k", k, float(c0), float(c1), float(c1), float(c2)))
    for k in range(1, n):
        curves.append(Curve("slice", k, (n - k - 1) / k, 0.0, 1.0, 0.0))
    return curves


def curve_distance(curve: Curve, a, b) -> np.ndarray:
    """Euclidean distance from points (a, b) to the curve."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    if curve.cab == 0:
        return np.abs(curve.value(a, b)) / np.hypot(curve.ca, curve.cb)
    # shift to u*w = K
    shift_a, shift_b = curve.cb / curve.cab, curve.ca / curve.cab
    big_k = shift_a * shift_b - curve.c0 / curve.cab
    u0 = a + shift_a
    w0 = b + shift_b
    if big_k == 0:
        return np.minimum(np.abs(u0), np.abs(w0))
    # stationary points of (u-u0)^2 + (K/u - w0)^2: u^4 - u0 u^3 + K w0 u - K^2 = 0
    flat_u0 = u0.ravel()
    flat_w0 = w0.ravel()
    comp = np.zeros((flat_u0.size, 4, 4))
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    # monic u^4 + c3 u^3 + c2 u^2 + c1 u + c0
    comp[:, 0, 0] = flat_u0
    comp[:, 0, 1] = 0.0
    comp[:, 0, 2] = -big_k * flat_w0
    comp[:, 0, 3] = big_k * big_k
    roots = np.linalg.eigvals(comp)
    u = roots.real
    usable = (np.abs(roots.imag) <= 1e-7 * np.maximum(1.0, np.abs(u))) & (np.abs(u) > 1e-300)
    u_safe = np.where(usable, u, 1.0)
    dist = np.hypot(u_safe - flat_u0[:, None], big_k / u_safe - flat_w0[:, None])
    dist = np.where(usable, dist, np.inf)
    return dist.min(axis=1).reshape(u0.shape)


def boundary_clearance(n: int, a, b) -> np.ndarray:
    """Distance from (a, b) to the nearest curve of :func:`region_boundaries`."""
    return np.min(np.stack([curve_distance(c, a, b) for c in region_boundaries(n)]), axis=0)


# -- region table---------------------------------------------------------------


def _offset_samples(n: int, eps: float, lo: float, hi: float, num: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Points at distance ~eps on both sides of every boundary curve."""
    pts = []
    for curve in region_boundaries(n):
        for branch in curve.sample(lo, hi, num):
            xy = np.asarray(branch)
            if len(xy) < 2:
                continue
            tangent = np.gradient(xy, axis=0)
            norm = np.linalg.norm(tangent, axis=1, keepdims=True)
            normal = np.column_stack([-tangent[:, 1], tangent[:, 0]]) / np.where(norm > 0, norm, 1.0)
            pts.append(xy + eps * normal)
            pts.append(xy - eps * normal)
    if not pts:
        return np.empty(0), np.empty(0)
    allp = np.concatenate(pts)
    return allp[:, 0], allp[:, 1]


@dataclass(frozen=True)
class RegionRow:
    region_id: int
    a: float
    b: float
    label: RegionLabel
    clearance: float

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "a": self.a,
            "b": self.b,
            **self.label.to_dict(),
            "clearance": self.clearance,
        }


def table1(n: int, grid: int = 241, extent: float | None = None, clearance: float = 0.1,
           tol: float = DEFAULT_TOL) -> list[RegionRow]:
    """Every realised (m, k, delta) triple of v_{a,b} with a representative (a, b).

    Regions are discovered on a ``grid`` x ``grid`` lattice over
    [-extent, extent]^2 together with points offset just off every boundary
    curve, so thin cells next to a curve are not missed.  Only parameters with
    v_{a,b} subharmonic (m >= 1) are tabulated.  Each representative maximises
    the distance to the nearest boundary curve; ``clearance`` is the target
    minimum distance.  Rows are ordered by (k, m).
    """
    if int(n) != n or n < 3:
        raise ParameterError(f"table1 needs n >= 3, got {n}")
    n = int(n)
    ext = float(extent) if extent is not None else max(6.0, 2.0 * n)
    axis = np.linspace(-ext, ext, int(grid))
    ga, gb = np.meshgrid(axis, axis, indexing="ij")
    oa, ob = _offset_samples(n, 0.02, -ext, ext)
    a = np.concatenate([ga.ravel(), oa])
    b = np.concatenate([gb.ravel(), ob])
    m_idx, k_idx = _classify_arrays(n, a, b, tol)
    keep = m_idx >= 1
    a, b, m_idx, k_idx = a[keep], b[keep], m_idx[keep], k_idx[keep]

    curves = region_boundaries(n)
    # first-order clearance screens candidates; exact distances for the best few
    approx = np.full(a.shape, np.inf)
    for c in curves:
        val = c.value(a, b)
        ga_ = c.ca + c.cab * b
        gb_ = c.cb + c.cab * a
        gnorm = np.hypot(ga_, gb_)
        approx = np.minimum(approx, np.where(gnorm > 0, np.abs(val) / np.where(gnorm > 0, gnorm, 1.0), np.abs(val)))

    rows = []
    labels = sorted({(int(k), int(m)) for m, k in zip(m_idx, k_idx)})
    for rid, (k, m) in enumerate(labels, start=1):
        sel = np.flatnonzero((m_idx == m) & (k_idx == k))
        best = sel[np.argsort(-approx[sel], kind="stable")[:64]]
        exact = np.min(np.stack([curve_distance(c, a[best], b[best]) for c in curves]), axis=0)
        j = int(np.argmax(exact))
        pa, pb, dist = _refine(n, curves, (m, k), float(a[best[j]]), float(b[best[j]]), float(exact[j]),
                               step=2.0 * ext / (grid - 1), tol=tol)
        rows.append(RegionRow(rid, pa, pb, RegionLabel(m, k), dist))
    return rows


def _refine(n, curves, label, a0, b0, d0, step, tol, rounds=6):
    """Pattern search that pushes a representative away from the nearest curve."""
    offs = np.linspace(-1.0, 1.0, 9)
    da, db = (x.ravel() for x in np.meshgrid(offs, offs, indexing="ij"))
    for _ in range(rounds):
        ca, cb = a0 + step * da, b0 + step * db
        m_idx, k_idx = _classify_arrays(n, ca, cb, tol)
        ok = (m_idx == label[0]) & (k_idx == label[1])
        if ok.any():
            dist = np.min(np.stack([curve_distance(c, ca[ok], cb[ok]) for c in curves]), axis=0)
            j = int(np.argmax(dist))
            if dist[j] > d0:
                a0, b0, d0 = float(ca[ok][j]), float(cb[ok][j]), float(dist[j])
        step /= 2.0
    return a0, b0, d0



# -- m-subharmonicity scan of catalog functions -------------------------------


def msh_check(f, m: int, samples: int = 4096, seed: int = 42, radius: float = 1.0,
              exclusion: float = 0.1, pass_tol: float = 1e-9, fail_tol: float = 1e-6) -> dict:
    """Scan min over 1 <= k <= m of relative S_k of the Hessian spectrum on random points.

    Points are uniform in B(0, radius), redrawn when closer than ``exclusion``
    to the singular set.  The closed-form Hessian is used when available and
    is compared against the finite-difference Hessian at every point.
    """
    from .hessian import spectrum, wirtinger_hessian_fd
    from .integrate import EstimatorConfig, ball_sample_values

    n = f.n
    if int(m) != m or not 1 <= m <= n:
        raise ParameterError(f"m must satisfy 1 <= m <= n={n}, got {m}")
    cfg = EstimatorConfig(samples=int(samples), seed=int(seed), max_attempts=256)
    pts, used, clipped = ball_sample_values(f, np.zeros(n), radius, lambda z: z, cfg, exclusion, "msh-check")
    h = f.hessian(pts) if f.has_hessian else wirtinger_hessian_fd(f, pts)
    lam = spectrum(h)
    rel = elementary_symmetric_all(lam)[:, 1 : m + 1] / (elementary_symmetric_all(np.abs(lam))[:, 1 : m + 1] + 1.0)
    per_point = rel.min(axis=1)
    worst = int(np.argmin(per_point))
    fd_err = None
    if f.has_hessian:
        fd = wirtinger_hessian_fd(f, pts)
        num = np.linalg.norm(fd - h, axis=(-2, -1))
        fd_err = float(np.max(num / np.maximum(np.linalg.norm(h, axis=(-2, -1)), 1e-300)))
    min_rel = float(per_point[worst])
    return {
        "function": f.describe(),
        "m": int(m),
        "samples": int(used),
        "seed": int(seed),
        "radius": float(radius),
        "exclusion": float(exclusion),
        "clipped_fraction": float(clipped),
        "min_relative_sk": min_rel,
        "worst_k": int(np.argmin(rel[worst])) + 1,
        "worst_point": [[float(c.real), float(c.imag)] for c in pts[worst]],
        "fd_max_relative_error": fd_err,
        "pass_tolerance": pass_tol,
        "fail_tolerance": fail_tol,
        "pass": bool(min_rel >= -pass_tol),
        "violated": bool(min_rel < -fail_tol),
    }
