"""Closed-form test functions on C^n with exact Hessians and singular sets.

Every function is vectorised over leading axes: ``f.eval(z)`` accepts an
array of shape ``(..., n)`` of complex coordinates and returns ``(...,)``
extended reals (``-inf`` is a legitimate value on singular sets).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, HessianError, ParameterError

__all__ = [
    "FAMILIES",
    "Point",
    "RadialProfile",
    "SingularSet",
    "SplitProfile",
    "TestFunction",
    "TraceProfile",
    "catalog_lookup",
    "dilate",
    "evaluate",
    "lookup",
    "power_profile",
]

Array = np.ndarray


@dataclass(frozen=True)
class Point:
    """A point of C^n split as z = (z', z'') with z' the first ``p`` coordinates."""

    coords: tuple[complex, ...]
    p: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(complex(c) for c in self.coords))
        if not self.coords:
            raise ParameterError("a point needs at least one coordinate")
        if not 0 <= self.p < len(self.coords):
            raise ParameterError(f"split p={self.p} must satisfy 0 <= p < n={len(self.coords)}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def zprime(self) -> Array:
        return np.asarray(self.coords[: self.p], dtype=complex)

    @property
    def zsecond(self) -> Array:
        return np.asarray(self.coords[self.p :], dtype=complex)

    def array(self) -> Array:
        return np.asarray(self.coords, dtype=complex)


def as_coords(z, n: int | None = None) -> Array:
    """Coerce a Point or array-like into a complex array, checking the last axis."""
    if isinstance(z, Point):
        z = z.coords
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n is not None and arr.shape[-1] != n:
        raise DimensionError(f"expected points in C^{n}, got last axis of length {arr.shape[-1]}")
    return arr


@dataclass(frozen=True)
class SingularSet:
    """The affine subspace {z_j = c_j for j in indices}, or nothing, or everything.

    ``indices`` covering all coordinates is a point; the first ``p`` is the plane
    {z' = a'}; the last ``n - p`` is the plane {z'' = a''}.
    """

    n: int
    indices: tuple[int, ...] = ()
    center: tuple[complex, ...] = ()
    everywhere: bool = False

    @classmethod
    def none(cls, n: int) -> "SingularSet":
        return cls(n)

    @classmethod
    def point(cls, center: Sequence[complex]) -> "SingularSet":
        c = tuple(complex(x) for x in center)
        return cls(len(c), tuple(range(len(c))), c)

    @classmethod
    def zprime_plane(cls, n: int, p: int, aprime: Sequence[complex] | None = None) -> "SingularSet":
        a = list(aprime) if aprime is not None else [0j] * p
        return cls(n, tuple(range(p)), tuple(complex(x) for x in a) + (0j,) * (n - p))

    @classmethod
    def zsecond_plane(cls, n: int, p: int, asecond: Sequence[complex] | None = None) -> "SingularSet":
        a = list(asecond) if asecond is not None else [0j] * (n - p)
        return cls(n, tuple(range(p, n)), (0j,) * p + tuple(complex(x) for x in a))

    @property
    def kind(self) -> str:
        if self.everywhere:
            return "everywhere"
        if not self.indices:
            return "none"
        if len(self.indices) == self.n:
            return "point"
        if self.indices == tuple(range(len(self.indices))):
            return "zprime_plane"
        if self.indices == tuple(range(self.n - len(self.indices), self.n)):
            return "zsecond_plane"
        return "subspace"

    def distance(self, z) -> Array:
        z = as_coords(z, self.n)
        if self.everywhere:
            return np.zeros(z.shape[:-1])
        if not self.indices:
            return np.full(z.shape[:-1], np.inf)
        idx = list(self.indices)
        c = np.asarray(self.center, dtype=complex)[idx]
        return np.linalg.norm(z[..., idx] - c, axis=-1)

    def restrict(self, xprime: Sequence[complex]) -> "SingularSet":
        """Singular set of the slice z'' -> f(x', z'')."""
        x = np.asarray(xprime, dtype=complex).reshape(-1)
        p = x.size
        d = self.n - p
        if self.everywhere:
            return SingularSet(d, everywhere=True)
        if not self.indices:
            return SingularSet(d)
        prime = [i for i in self.indices if i < p]
        second = [i - p for i in self.indices if i >= p]
        c = np.asarray(self.center, dtype=complex)
        if prime and np.linalg.norm(x[prime] - c[prime]) > 0:
            return SingularSet(d)
        if not second:
            return SingularSet(d, everywhere=True)
        return SingularSet(d, tuple(second), tuple(c[p:]))

    def xprime_distance(self, xprime) -> Array:
        """Distance from x' to the projection of the set onto the z'-factor.

        Sets that place no constraint on z' project onto all of C^p and do not
        exclude any base point, so the distance is reported as infinite.
        """
        x = np.asarray(xprime, dtype=complex)
        p = x.shape[-1]
        prime = [i for i in self.indices if i < p]
        if self.everywhere:
            return np.zeros(x.shape[:-1])
        if not prime:
            return np.full(x.shape[:-1], np.inf)
        c = np.asarray(self.center, dtype=complex)[prime]
        return np.linalg.norm(x[..., prime] - c, axis=-1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "indices": list(self.indices),
            "center": [[c.real, c.imag] for c in self.center],
        }


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A function of s = |w|^2 together with its first two derivatives in s."""

    f: Callable[[Array], Array]
    df: Callable[[Array], Array]
    d2f: Callable[[Array], Array]

    def shifted(self, s0: float) -> "RadialProfile":
        f, df, d2f = self.f, self.df, self.d2f
        return RadialProfile(lambda s: f(s + s0), lambda s: df(s + s0), lambda s: d2f(s + s0))

    def scaled(self, lam2: float) -> "RadialProfile":
        f, df, d2f = self.f, self.df, self.d2f
        return RadialProfile(
            lambda s: f(lam2 * s),
            lambda s: lam2 * df(lam2 * s),
            lambda s: lam2 * lam2 * d2f(lam2 * s),
        )


@dataclass(frozen=True, eq=False)
class SplitProfile:
    """A function depending only on one factor of C^p x C^{n-p}, radially."""

    side: str  # "prime" or "second"
    p: int
    profile: RadialProfile


@dataclass(frozen=True, eq=False)
class TraceProfile:
    """Partial traces of the complex Hessian as functions of (|z'|^2, |z''|^2)."""

    trace_prime: Callable[[Array, Array], Array]
    trace_second: Callable[[Array, Array], Array]
    uses_prime: bool
    uses_second: bool


def _radial_hessian(profile: RadialProfile, w: Array) -> Array:
    s = np.sum(np.abs(w) ** 2, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.asarray(profile.df(s), dtype=float)
        d2 = np.asarray(profile.d2f(s), dtype=float)
    k = w.shape[-1]
    eye = np.eye(k)
    return d1[..., None, None] * eye + d2[..., None, None] * (np.conj(w)[..., :, None] * w[..., None, :])


@dataclass(frozen=True, eq=False)
class TestFunction:
    """An evaluable function on C^n with optional closed-form complex Hessian.

    ``profile`` is set when the function is radial about the origin,
    v(z) = profile.f(|z|^2); ``split`` when it depends radially on one factor
    of the product C^p x C^{n-p} only.  Both enable quadrature shortcuts in
    :mod:`hesslab.integrate`.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    n: int
    func: Callable[[Array], Array]
    hess: Callable[[Array], Array] | None = None
    singular: SingularSet | None = None
    profile: RadialProfile | None = None
    split: SplitProfile | None = None
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.singular is None:
            object.__setattr__(self, "singular", SingularSet.none(self.n))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def has_hessian(self) -> bool:
        return self.hess is not None

    def eval(self, z) -> Array | float:
        arr = as_coords(z, self.n)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self.func(arr), dtype=float)
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def hessian(self, z) -> Array:
        if self.hess is None:
            raise HessianError(f"{self.name} has no closed-form Hessian")
        arr = as_coords(z, self.n)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(self.hess(arr), dtype=complex)

    def traces(self, p: int) -> TraceProfile | None:
        """Closed-form partial traces for the split C^p x C^{n-p}, if available."""
        d = self.n - p
        if self.profile is not None:
            pr = self.profile

            def tr1(sp, ss):
                s = sp + ss
                return p * pr.df(s) + sp * pr.d2f(s)

            def tr2(sp, ss):
                s = sp + ss
                return d * pr.df(s) + ss * pr.d2f(s)

            return TraceProfile(tr1, tr2, True, True)
        if self.split is not None and self.split.p == p:
            pr = self.split.profile
            zero = lambda sp, ss: np.zeros(np.broadcast(sp, ss).shape)  # noqa: E731
            if self.split.side == "second":
                return TraceProfile(zero, lambda sp, ss: d * pr.df(ss) + ss * pr.d2f(ss), False, True)
            return TraceProfile(lambda sp, ss: p * pr.df(sp) + sp * pr.d2f(sp), zero, True, False)
        return None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "singular_set": self.singular.to_dict(),
        }


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def evaluate(f: TestFunction, z) -> Array | float:
    """f(z) with a dimension check; ``-inf`` on singular sets of log/power families."""
    return f.eval(z)


# -- profiles -------------------------------------------------------------------


def power_profile(tau: float) -> RadialProfile:
    """phi(s) = -s^(1-tau)/(tau-1), the radial profile of v_tau."""
    t = float(tau)
    return RadialProfile(
        lambda s: -np.power(s, 1.0 - t) / (t - 1.0),
        lambda s: np.power(s, -t),
        lambda s: -t * np.power(s, -t - 1.0),
    )


LOG_PROFILE = RadialProfile(
    lambda s: 0.5 * np.log(s),
    lambda s: 0.5 / s,
    lambda s: -0.5 / (s * s),
)

SQUARE_PROFILE = RadialProfile(
    lambda s: np.asarray(s, dtype=float) * 1.0,
    lambda s: np.ones_like(np.asarray(s, dtype=float)),
    lambda s: np.zeros_like(np.asarray(s, dtype=float)),
)


def _custom_profile(terms: Sequence[Sequence[float]]) -> RadialProfile:
    parsed = []
    for term in terms:
        if len(term) == 2:
            c, g = term
            k = 0
        else:
            c, g, k = term
        if int(k) not in (0, 1):
            raise ParameterError("custom_radial log power must be 0 or 1")
        parsed.append((float(c), float(g), int(k)))

    def f(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, g, k in parsed:
            term = np.power(s, g)
            out = out + c * (term * np.log(s) if k else term)
        return out

    def df(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, g, k in parsed:
            base = np.power(s, g - 1.0)
            out = out + c * ((g * np.log(s) + 1.0) * base if k else g * base)
        return out

    def d2f(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, g, k in parsed:
            base = np.power(s, g - 2.0)
            if k:
                out = out + c * (g * (g - 1.0) * np.log(s) + 2.0 * g - 1.0) * base
            else:
                out = out + c * g * (g - 1.0) * base
        return out

    return RadialProfile(f, df, d2f)


# -- constructors ---------------------------------------------------------------


def _check_n(n, minimum=1) -> int:
    if int(n) != n or n < minimum:
        raise ParameterError(f"dimension n must be an integer >= {minimum}, got {n}")
    return int(n)


def _check_split(n: int, p) -> int:
    if int(p) != p or not 1 <= p < n:
        raise ParameterError(f"split p must satisfy 1 <= p < n={n}, got {p}")
    return int(p)


def radial(name: str, n: int, profile: RadialProfile, singular_at_origin: bool, **params) -> TestFunction:
    sing = SingularSet.point([0j] * n) if singular_at_origin else SingularSet.none(n)
    return TestFunction(
        name=name,
        n=n,
        func=lambda z: profile.f(np.sum(np.abs(z) ** 2, axis=-1)),
        hess=lambda z: _radial_hessian(profile, z),
        singular=sing,
        profile=profile,
        params={"n": n, **params},
    )


def _split_function(name: str, n: int, p: int, side: str, profile: RadialProfile, **params) -> TestFunction:
    sl = slice(0, p) if side == "prime" else slice(p, n)

    def func(z):
        return profile.f(np.sum(np.abs(z[..., sl]) ** 2, axis=-1))

    def hess(z):
        out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
        out[..., sl, sl] = _radial_hessian(profile, z[..., sl])
        return out

    sing = SingularSet.zprime_plane(n, p) if side == "prime" else SingularSet.zsecond_plane(n, p)
    return TestFunction(
        name=name,
        n=n,
        func=func,
        hess=hess,
        singular=sing,
        split=SplitProfile(side, p, profile),
        params={"n": n, "p": p, **params},
    )


def abs_sq(n: int) -> TestFunction:
    return radial("abs_sq", _check_n(n), SQUARE_PROFILE, False)


def quadratic_ab(n: int, a: float, b: float) -> TestFunction:
    n = _check_n(n, 2)
    a, b = float(a), float(b)
    weights = np.ones(n)
    weights[0], weights[1] = a, b

    return TestFunction(
        name="quadratic_ab",
        n=n,
        func=lambda z: np.sum(weights * np.abs(z) ** 2, axis=-1),
        hess=lambda z: np.broadcast_to(np.diag(weights).astype(complex), z.shape[:-1] + (n, n)).copy(),
        params={"n": n, "a": a, "b": b},
    )


def power_tau(n: int, tau: float) -> TestFunction:
    n = _check_n(n)
    tau = float(tau)
    if not tau > 1.0:
        raise ParameterError(f"power_tau needs tau > 1, got {tau}")
    return radial("power_tau", n, power_profile(tau), True, tau=tau)


def fundamental(n: int, m: int) -> TestFunction:
    n = _check_n(n, 2)
    if int(m) != m or not 1 <= m < n:
        raise ParameterError(f"fundamental solution needs 1 <= m < n, got n={n}, m={m}")
    m = int(m)
    return radial("fundamental", n, power_profile(n / m), True, m=m, tau=n / m)


def log_abs(n: int) -> TestFunction:
    return radial("log_abs", _check_n(n), LOG_PROFILE, True)


def log_abs_z2(n: int, p: int) -> TestFunction:
    n = _check_n(n, 2)
    return _split_function("log_abs_z2", n, _check_split(n, p), "second", LOG_PROFILE)


def log_abs_zprime(n: int, p: int) -> TestFunction:
    n = _check_n(n, 2)
    return _split_function("log_abs_zprime", n, _check_split(n, p), "prime", LOG_PROFILE)


def fundamental_z2(n: int, p: int, k: int) -> TestFunction:
    """Phi_{n-p,k}(z''): the fundamental solution of C^{n-p} pulled back to C^n."""
    n = _check_n(n, 2)
    p = _check_split(n, p)
    d = n - p
    if int(k) != k or not 1 <= k < d:
        raise ParameterError(f"fundamental_z2 needs 1 <= k < n-p={d}, got k={k}")
    return _split_function("fundamental_z2", n, p, "second", power_profile(d / k), k=int(k))


def re_z1(n: int) -> TestFunction:
    n = _check_n(n)
    return TestFunction(
        name="re_z1",
        n=n,
        func=lambda z: np.real(z[..., 0]),
        hess=lambda z: np.zeros(z.shape[:-1] + (n, n), dtype=complex),
        params={"n": n},
    )


def custom_radial(n: int, terms: Sequence[Sequence[float]]) -> TestFunction:
    """f(s) = sum c * s^gamma * log(s)^k over ``terms`` of (c, gamma[, k]), k in {0, 1}."""
    n = _check_n(n)
    if not terms:
        raise ParameterError("custom_radial needs at least one term")
    profile = _custom_profile(terms)
    smooth = all(len(t) == 2 or int(t[2]) == 0 for t in terms) and all(
        float(t[1]) >= 0 and float(t[1]).is_integer() for t in terms
    )
    return radial("custom_radial", n, profile, not smooth, terms=[list(map(float, t)) for t in terms])


FAMILIES: dict[str, Callable[..., TestFunction]] = {
    "abs_sq": abs_sq,
    "custom_radial": custom_radial,
    "fundamental": fundamental,
    "fundamental_z2": fundamental_z2,
    "log_abs": log_abs,
    "log_abs_z2": log_abs_z2,
    "log_abs_zprime": log_abs_zprime,
    "power_tau": power_tau,
    "quadratic_ab": quadratic_ab,
    "re_z1": re_z1,
}


def lookup(name: str, **params) -> TestFunction:
    """Build a catalog function by family name, e.g. ``lookup("power_tau", n=4, tau=2)``."""
    try:
        ctor = FAMILIES[name]
    except KeyError:
        raise ParameterError(f"unknown test function {name!r}; known: {sorted(FAMILIES)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None


catalog_lookup = lookup


def dilate(f: TestFunction, lam: float) -> TestFunction:
    """z -> f(lam * z) for real lam > 0."""
    lam = float(lam)
    if not lam > 0:
        raise ParameterError("dilation factor must be positive")
    func, hess = f.func, f.hess
    sing = f.singular
    if sing.indices and not sing.everywhere:
        sing = SingularSet(sing.n, sing.indices, tuple(c / lam for c in sing.center))
    return TestFunction(
        name=f.name,
        n=f.n,
        func=lambda z: func(lam * z),
        hess=None if hess is None else (lambda z: lam * lam * hess(lam * z)),
        singular=sing,
        profile=None if f.profile is None else f.profile.scaled(lam * lam),
        split=None if f.split is None else SplitProfile(f.split.side, f.split.p, f.split.profile.scaled(lam * lam)),
        params={**f.params, "dilation": lam},
    )

