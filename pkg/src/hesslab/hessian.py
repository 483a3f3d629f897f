"""Finite-difference Wirtinger Hessians and Hermitian spectra.

Matrices are plain complex ndarrays of shape ``(..., n, n)``; spectra are real
ndarrays of shape ``(..., n)`` sorted ascending.
"""

from __future__ import annotations

import numpy as np

from .catalog import TestFunction, as_coords
from .errors import HessianError, ParameterError, SingularPointError

__all__ = [
    "check_hermitian",
    "default_step",
    "hermitian_part",
    "spectrum",
    "wirtinger_hessian_fd",
]

#: relative disagreement between steps h and h/2 above which Richardson is applied
REFINE_RTOL = 1e-7
HERMITIAN_RTOL = 1e-6
JACOBI_TOL = 1e-13
MAX_SWEEPS = 60


def default_step(z) -> np.ndarray:
    """h = 1e-4 * max(1, |z|) per point."""
    z = np.asarray(z, dtype=complex)
    return 1e-4 * np.maximum(1.0, np.linalg.norm(z, axis=-1))


def _stencil_offsets(n: int):
    """Real-coordinate displacement patterns for all second differences.

    Coordinates are ordered (x_1..x_n, y_1..y_n).  Returns the list of unit
    offset vectors (as complex n-vectors) and, per pair (u, v), the indices of
    the offsets used with their weights.
    """
    units = []
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        units.append(e)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1j
        units.append(e)
    return units


def _second_differences(f: TestFunction, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Matrix of central second differences over the 2n real coordinates."""
    n = z.shape[-1]
    dim = 2 * n
    units = _stencil_offsets(n)
    offsets = [np.zeros(n, dtype=complex)]
    index = {}
    for u in range(dim):
        for sign in (1, -1):
            index[(u, sign)] = len(offsets)
            offsets.append(sign * units[u])
    for u in range(dim):
        for v in range(u + 1, dim):
            for su in (1, -1):
                for sv in (1, -1):
                    index[(u, su, v, sv)] = len(offsets)
                    offsets.append(su * units[u] + sv * units[v])
    shifts = np.stack(offsets)  # (K, n)
    pts = z[:, None, :] + h[:, None, None] * shifts[None, :, :]
    vals = np.asarray(f.eval(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise HessianError("non-finite function values inside the difference stencil")
    h2 = (h * h)[:, None]
    d = np.empty((z.shape[0], dim, dim))
    c = vals[:, 0]
    for u in range(dim):
        d[:, u, u] = (vals[:, index[(u, 1)]] - 2.0 * c + vals[:, index[(u, -1)]]) / h2[:, 0]
        for v in range(u + 1, dim):
            mixed = (
                vals[:, index[(u, 1, v, 1)]]
                - vals[:, index[(u, 1, v, -1)]]
                - vals[:, index[(u, -1, v, 1)]]
                + vals[:, index[(u, -1, v, -1)]]
            ) / (4.0 * h2[:, 0])
            d[:, u, v] = mixed
            d[:, v, u] = mixed
    return d


def _assemble(d: np.ndarray, n: int) -> np.ndarray:
    dxx = d[:, :n, :n]
    dyy = d[:, n:, n:]
    dxy = d[:, :n, n:]
    dyx = d[:, n:, :n]
    return 0.25 * ((dxx + dyy) + 1j * (dxy - dyx))


def hermitian_part(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))


def wirtinger_hessian_fd(f: TestFunction, z, h=None, refine: bool = True) -> np.ndarray:
    """Complex Hessian d^2 f / dz_j dzbar_k by central differences.

    With ``refine`` the stencil is evaluated at h and h/2 and, where the two
    disagree by more than ``REFINE_RTOL`` relative, combined by one Richardson
    step.  The result is symmetrised to exact Hermitian form.
    """
    arr = as_coords(z, f.n)
    single = arr.ndim == 1
    pts = arr.reshape(-1, f.n)
    step = default_step(pts) if h is None else np.broadcast_to(np.asarray(h, dtype=float), pts.shape[:1]).copy()
    if np.any(step <= 0):
        raise ParameterError("finite-difference step must be positive")
    dist = f.singular.distance(pts)
    if np.any(dist <= 10.0 * step):
        raise SingularPointError("finite-difference stencil within 10h of the singular set")

    coarse = _assemble(_second_differences(f, pts, step), f.n)
    if refine:
        fine = _assemble(_second_differences(f, pts, step / 2.0), f.n)
        scale = np.maximum(np.linalg.norm(fine, axis=(-2, -1)), 1e-300)
        gap = np.linalg.norm(fine - coarse, axis=(-2, -1)) / scale
        rich = (4.0 * fine - coarse) / 3.0
        out = np.where((gap > REFINE_RTOL)[:, None, None], rich, fine)
    else:
        out = coarse
    out = hermitian_part(out)
    return out[0] if single else out.reshape(arr.shape[:-1] + (f.n, f.n))


def check_hermitian(h: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``h`` as a complex array or raise if it is not Hermitian within tolerance."""
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise HessianError(f"expected square matrices, got shape {h.shape}")
    norm = np.linalg.norm(h, axis=(-2, -1))
    skew = np.linalg.norm(h - np.conj(np.swapaxes(h, -1, -2)), axis=(-2, -1))
    if np.any(skew > rtol * np.maximum(norm, 1e-300)):
        raise HessianError("matrix is not Hermitian within tolerance")
    return h


def _jacobi(h: np.ndarray, want_vectors: bool = False):
    """Cyclic Jacobi for a stack of Hermitian matrices, vectorised over the stack."""
    a = hermitian_part(h.reshape(-1, h.shape[-1], h.shape[-1])).copy()
    batch, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy() if want_vectors else None
    norm = np.linalg.norm(a, axis=(-2, -1))
    target = JACOBI_TOL * np.where(norm > 0, norm, 1.0)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(MAX_SWEEPS):
        off = np.linalg.norm(a[:, mask], axis=-1)
        if np.all(off <= target):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                active = mag > 1e-300
                if not np.any(active):
                    continue
                phase = np.where(active, apq / np.where(active, mag, 1.0), 1.0)
                app = a[:, p, p].real
                aqq = a[:, q, q].real
                zeta = np.where(active, (aqq - app) / (2.0 * np.where(active, mag, 1.0)), 0.0)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                # hypot avoids overflowing zeta**2 when the off-diagonal entry is tiny
                t = np.where(active, sgn / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = [[c, s], [-s*conj(phase), c*conj(phase)]] acting on columns p, q
                g = np.empty((batch, 2, 2), dtype=complex)
                g[:, 0, 0] = c
                g[:, 0, 1] = s
                g[:, 1, 0] = -s * np.conj(phase)
                g[:, 1, 1] = c * np.conj(phase)
                cols = a[:, :, [p, q]] @ g
                a[:, :, p], a[:, :, q] = cols[:, :, 0], cols[:, :, 1]
                rows = np.conj(np.swapaxes(g, -1, -2)) @ a[:, [p, q], :]
                a[:, p, :], a[:, q, :] = rows[:, 0, :], rows[:, 1, :]
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                if v is not None:
                    vc = v[:, :, [p, q]] @ g
                    v[:, :, p], v[:, :, q] = vc[:, :, 0], vc[:, :, 1]
    else:
        off = np.linalg.norm(a[:, mask], axis=-1)
        if np.any(off > target):
            raise HessianError("Jacobi iteration did not converge")
    w = np.diagonal(a, axis1=-2, axis2=-1).real.copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if v is not None:
        v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w, v


def spectrum(h) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix (or a stack of them)."""
    h = check_hermitian(h)
    w, _ = _jacobi(h)
    return w.reshape(h.shape[:-1])


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unitary eigenvectors, columns ordered like the eigenvalues."""
    h = check_hermitian(h)
    w, v = _jacobi(h, want_vectors=True)
    return w.reshape(h.shape[:-1]), v.reshape(h.shape)
