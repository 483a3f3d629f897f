import numpy as np
import pytest

from hesslab import catalog, lelong
from hesslab.errors import ParameterError
from hesslab.integrate import EstimatorConfig
from hesslab.lelong import CONVERGED, DRIFTING, RadiusLadder

CFG = EstimatorConfig(samples=8192)
MC = EstimatorConfig(samples=65536, radial_quadrature=False)


def test_phi_fundamental_examples():
    assert lelong.phi_fundamental(4, 2, 0.3) == pytest.approx(-1 / 0.3)
    assert lelong.phi_fundamental(6, 2, 0.3) == pytest.approx(-1 / (2 * 0.09))
    s = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(lelong.phi_fundamental(4, 2, s), -1 / s)


@pytest.mark.parametrize("n, m", [(3, 3), (3, 4), (3, 0)])
def test_phi_fundamental_rejects_bad_index(n, m):
    with pytest.raises(ParameterError):
        lelong.phi_fundamental(n, m, 1.0)


def test_extrapolate_examples():
    radii = 0.5 ** np.arange(8)
    limit, quality, slope, _ = lelong.extrapolate(list(zip(radii, np.full(8, 2.0))))
    assert (limit, quality, slope) == (2.0, CONVERGED, 0.0)
    limit, quality, slope, _ = lelong.extrapolate(list(zip(radii, radii**2)))
    assert quality == CONVERGED and abs(limit) < 1e-9 and slope == pytest.approx(2.0, rel=1e-6)
    _, quality, _, _ = lelong.extrapolate(list(zip(radii, 1 / radii)))
    assert quality == DRIFTING


def test_extrapolate_recovers_offset_power_law():
    radii = 0.5 ** np.arange(8)
    limit, quality, slope, _ = lelong.extrapolate(list(zip(radii, 1.5 + 0.3 * radii**0.7)))
    assert limit == pytest.approx(1.5, abs=1e-6)
    assert slope == pytest.approx(0.7, rel=1e-4)
    # the fit is exact, but the last rungs still move by more than the tolerance
    assert quality == DRIFTING
    deep = RadiusLadder(0.5, 0.1, 16).radii
    limit, quality, _, _ = lelong.extrapolate(list(zip(deep, 1.5 + 0.3 * deep**0.7)))
    assert quality == CONVERGED and limit == pytest.approx(1.5, abs=1e-6)


def test_extrapolate_needs_three_rungs():
    with pytest.raises(ParameterError):
        lelong.extrapolate([(0.5, 1.0), (0.25, 1.0)])


def test_ladder_validation():
    assert RadiusLadder().radii.tolist() == [0.5 * 0.5**j for j in range(8)]
    for bad in ({"r0": 0}, {"theta": 1.0}, {"rungs": 2}):
        with pytest.raises(ParameterError):
            RadiusLadder(**bad)
    with pytest.raises(ParameterError):
        RadiusLadder().config_for(EstimatorConfig(clamp_radius=0.001))


@pytest.mark.parametrize("cfg", [CFG, MC], ids=["quadrature", "monte-carlo"])
def test_fundamental_solution_has_number_two(cfg):
    f = catalog.fundamental(4, 2)
    sph = lelong.lelong_point_sphere(f, np.zeros(4), 2, cfg=cfg)
    ball = lelong.lelong_point_ball(f, np.zeros(4), 2, cfg=cfg)
    assert sph.quality == CONVERGED and abs(sph.limit - 2) <= 0.02
    assert ball.quality == CONVERGED and abs(ball.limit - 2) <= 0.04
    assert abs(sph.limit - ball.limit) <= max(sph.tolerance, ball.tolerance, 0.04)


def test_sphere_quotient_is_two_on_every_rung():
    est = lelong.lelong_point_sphere(catalog.fundamental(6, 3), np.zeros(6), 3, cfg=CFG)
    np.testing.assert_allclose([v for _, v in est.per_radius], 2.0, rtol=1e-12)


@pytest.mark.parametrize("n, m", [(4, 2), (6, 3)])
def test_mean_ratio(n, m):
    ratio = lelong.mean_ratio(catalog.fundamental(n, m), np.zeros(n), 0.01, MC)
    assert ratio == pytest.approx(1 + 1 / n - 1 / m, rel=0.02)


@pytest.mark.parametrize(
    "f, m, ladder",
    [
        (catalog.abs_sq(4), 2, RadiusLadder()),
        (catalog.quadratic_ab(5, 2, -1), 2, RadiusLadder()),
        # quotient decays like r^(2(n/m - tau)) = r^0.6, slow enough to need the deep ladder
        (catalog.power_tau(5, 5 / 3 - 0.3), 3, RadiusLadder(0.5, 0.1, 16)),
    ],
    ids=["abs_sq", "quadratic_ab", "power_tau_below"],
)
def test_vanishing_numbers(f, m, ladder):
    for estimator in (lelong.lelong_point_sphere, lelong.lelong_point_ball):
        est = estimator(f, np.zeros(f.n), m, ladder, CFG)
        assert est.quality == CONVERGED
        assert abs(est.limit) <= est.tolerance


def test_bounded_function_vanishes_off_origin():
    f = catalog.quadratic_ab(5, 2, -1)
    est = lelong.lelong_point_ball(f, np.array([0.3, 0, 0, 0, 0]), 3, cfg=CFG)
    assert abs(est.limit) <= est.tolerance


def test_slow_decay_is_flagged_on_default_ladder():
    est = lelong.lelong_point_sphere(catalog.power_tau(5, 5 / 3 - 0.3), np.zeros(5), 3, cfg=CFG)
    assert est.quality == DRIFTING
    assert est.fit_slope == pytest.approx(0.6, rel=1e-3)


def test_lower_index_number_vanishes_on_fundamental():
    est = lelong.lelong_point_sphere(catalog.fundamental(6, 3), np.zeros(6), 2, cfg=CFG)
    assert est.quality == CONVERGED and abs(est.limit) <= est.tolerance


def test_scaling_covariance_under_dilation():
    n, m, lam = 4, 2, 2.0
    f = catalog.fundamental(n, m)
    g = catalog.dilate(f, lam)
    base = RadiusLadder(0.5, 0.5, 4)
    scaled = RadiusLadder(0.5 / lam, 0.5, 4)
    a = lelong.lelong_point_sphere(f, np.zeros(n), m, base, CFG)
    b = lelong.lelong_point_sphere(g, np.zeros(n), m, scaled, CFG)
    # per-rung values of g at r / lam equal those of f at r up to lam^(-2(n/m - 1))
    factor = lam ** (-2 * (n / m - 1))
    for (_, va), (_, vb) in zip(a.per_radius, b.per_radius):
        assert vb == pytest.approx(va * factor, rel=1e-12)


def test_kappa_calibration_matches_closed_form():
    for n, m in ((4, 2), (5, 3), (6, 2)):
        assert lelong.calibrate_kappa(n, m, cfg=CFG) == pytest.approx(lelong.kappa_cal(n), rel=1e-9)


def test_mass_estimator_returns_two_on_fundamental():
    est = lelong.lelong_point_mass(catalog.fundamental(5, 3), np.zeros(5), 3, cfg=CFG)
    assert est.quality == CONVERGED
    assert est.limit == pytest.approx(2.0, rel=1e-6)


def test_estimate_serialises():
    est = lelong.lelong_point_sphere(catalog.abs_sq(3), np.zeros(3), 2, RadiusLadder(rungs=3), CFG)
    d = est.to_dict()
    assert set(d) == {"per_radius", "limit", "quality", "fit_slope", "tolerance"}
    assert len(d["per_radius"]) == 3
