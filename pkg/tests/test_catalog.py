import numpy as np
import pytest

from hesslab import catalog
from hesslab.errors import ParameterError

from conftest import random_point


def test_abs_sq_value_and_identity_hessian():
    f = catalog.lookup("abs_sq", n=3)
    z = np.array([1, 0, 0], dtype=complex)
    assert f.eval(z) == pytest.approx(1.0)
    np.testing.assert_allclose(f.hessian(z), np.eye(3), atol=0)


def test_quadratic_ab_formula(rng):
    f = catalog.lookup("quadratic_ab", n=5, a=2, b=-1)
    z = random_point(rng, 5)
    want = 2 * abs(z[0]) ** 2 - abs(z[1]) ** 2 + np.sum(np.abs(z[2:]) ** 2)
    assert f.eval(z) == pytest.approx(want)
    assert f.eval(np.zeros(5)) == 0.0
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(f.hessian(z))), [-1, 1, 1, 1, 2], atol=1e-14)


def test_power_tau_matches_fundamental(rng):
    tau = catalog.power_tau(4, 2.0)
    fund = catalog.fundamental(4, 2)
    assert tau.eval(np.array([1, 0, 0, 0], dtype=complex)) == pytest.approx(-1.0)
    assert tau.eval(np.array([2, 0, 0, 0], dtype=complex)) == pytest.approx(-0.25)
    for _ in range(5):
        z = random_point(rng, 4)
        assert tau.eval(z) == pytest.approx(fund.eval(z))


def test_log_abs_zprime_is_minus_infinity_on_plane():
    f = catalog.log_abs_zprime(3, 1)
    assert f.eval(np.array([0, 1, 1], dtype=complex)) == -np.inf


def test_vectorised_eval_matches_pointwise(rng):
    f = catalog.log_abs_z2(5, 2)
    pts = np.stack([random_point(rng, 5) for _ in range(6)])
    batch = f.eval(pts)
    assert batch.shape == (6,)
    np.testing.assert_allclose(batch, [f.eval(p) for p in pts])


def test_radial_hessian_structure(rng):
    # radial functions have Hessian f'(s) I + f''(s) conj(z) z^T
    f = catalog.power_tau(3, 1.7)
    z = random_point(rng, 3)
    s = np.sum(np.abs(z) ** 2)
    prof = f.profile
    want = prof.df(s) * np.eye(3) + prof.d2f(s) * np.outer(z.conj(), z)
    np.testing.assert_allclose(f.hessian(z), want, rtol=1e-12)


def test_custom_radial_combines_terms(rng):
    # terms are (c, gamma, k) for c * s^gamma * log(s)^k
    f = catalog.custom_radial(3, [[1.0, 2.0], [0.5, -1.0, 1]])
    z = random_point(rng, 3)
    s = np.sum(np.abs(z) ** 2)
    assert f.eval(z) == pytest.approx(s**2 + 0.5 * np.log(s) / s)
    prof = f.profile
    want = prof.df(s) * np.eye(3) + prof.d2f(s) * np.outer(z.conj(), z)
    np.testing.assert_allclose(f.hessian(z), want, rtol=1e-12)


@pytest.mark.parametrize(
    "name, params",
    [
        ("power_tau", {"n": 3, "tau": 1.0}),
        ("power_tau", {"n": 3, "tau": 0.5}),
        ("fundamental", {"n": 3, "m": 3}),
        ("fundamental", {"n": 3, "m": 4}),
        ("abs_sq", {"n": 0}),
    ],
)
def test_invalid_parameters_rejected(name, params):
    with pytest.raises(ParameterError):
        catalog.lookup(name, **params)


def test_unknown_family_rejected():
    with pytest.raises(ParameterError):
        catalog.lookup("no_such_family", n=3)


def test_catalog_lookup_alias():
    assert catalog.catalog_lookup is catalog.lookup


def test_singular_set_descriptors():
    assert catalog.abs_sq(3).singular.kind == "none"
    assert catalog.fundamental(4, 2).singular.kind == "point"
    assert catalog.log_abs_zprime(4, 2).singular.kind == "zprime_plane"
    d = catalog.fundamental(4, 2).singular.distance(np.array([0.3, 0.4, 0, 0], dtype=complex))
    assert d == pytest.approx(0.5)


def test_describe_records_provenance():
    info = catalog.quadratic_ab(5, 2, -1).describe()
    assert info["name"] == "quadratic_ab"
    assert info["params"]["a"] == 2.0
