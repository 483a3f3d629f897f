import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hesslab import catalog, hessian
from hesslab.errors import HessianError

from conftest import random_point


def test_fd_hessian_of_abs_sq_is_identity(rng):
    f = catalog.abs_sq(4)
    for _ in range(3):
        h = hessian.wirtinger_hessian_fd(f, random_point(rng, 4), h=1e-3)
        np.testing.assert_allclose(h, np.eye(4), atol=1e-8)


def test_fd_hessian_of_quadratic_ab_is_diagonal(rng):
    f = catalog.quadratic_ab(5, 2, -1)
    h = hessian.wirtinger_hessian_fd(f, random_point(rng, 5))
    np.testing.assert_allclose(h, np.diag([2, -1, 1, 1, 1]), atol=1e-8)


@pytest.mark.parametrize(
    "f",
    [catalog.power_tau(4, 2.0), catalog.fundamental(5, 3), catalog.log_abs(3), catalog.log_abs_z2(4, 2)],
    ids=lambda f: f.name,
)
def test_fd_hessian_matches_analytic(f, rng):
    z = np.array([1, 0, 0, 0, 0][: f.n], dtype=complex) if f.name == "power_tau" else random_point(rng, f.n)
    h_fd = hessian.wirtinger_hessian_fd(f, z)
    h_an = f.hessian(z)
    assert np.max(np.abs(h_fd - h_an)) <= 1e-6 * np.max(np.abs(h_an))


def test_fd_hessian_is_hermitian(rng):
    f = catalog.power_tau(3, 1.5)
    h = hessian.wirtinger_hessian_fd(f, random_point(rng, 3))
    np.testing.assert_allclose(h, h.conj().T, atol=0)


@pytest.mark.parametrize(
    "h, want",
    [
        (np.diag([3.0, 1.0, 2.0]), [1, 2, 3]),
        (np.array([[0, 1j], [-1j, 0]]), [-1, 1]),
        (np.eye(4), [1, 1, 1, 1]),
    ],
)
def test_spectrum_examples(h, want):
    np.testing.assert_allclose(hessian.spectrum(h), want, atol=1e-12)


def _hermitian(data, n):
    a = data[: n * n].reshape(n, n) + 1j * data[n * n :].reshape(n, n)
    return (a + a.conj().T) / 2


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7).flatmap(
    lambda n: arrays(np.float64, 2 * n * n, elements=st.floats(-10, 10)).map(lambda d: _hermitian(d, n))
))
def test_spectrum_agrees_with_lapack(h):
    got = hessian.spectrum(h)
    want = np.linalg.eigvalsh(h)
    assert np.all(np.diff(got) >= 0)
    np.testing.assert_allclose(got, want, atol=1e-10 * (1 + np.max(np.abs(want))))


def test_non_hermitian_input_rejected():
    with pytest.raises(HessianError):
        hessian.check_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_hermitian_part_symmetrises():
    a = np.array([[1.0, 2.0 + 1j], [0.0, 3.0]])
    h = hessian.hermitian_part(a)
    np.testing.assert_allclose(h, h.conj().T)
