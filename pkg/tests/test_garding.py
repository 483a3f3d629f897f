from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hesslab import catalog, garding
from hesslab.acceptance import _brute_band, _brute_index, brute_force_sk, table1_expected
from hesslab.errors import ParameterError


@pytest.mark.parametrize(
    "lam, k, want",
    [((1, 1, 1, 1), 2, 6.0), ((2, -1, 3), 2, 1.0), ((2, -1, 3), 0, 1.0), ((0.5, 7.0), 0, 1.0)],
)
def test_elementary_symmetric_examples(lam, k, want):
    assert garding.elementary_symmetric(lam, k) == pytest.approx(want)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.data())
def test_elementary_symmetric_matches_subset_sum(lam, data):
    k = data.draw(st.integers(0, len(lam)))
    got = garding.elementary_symmetric(lam, k)
    want = brute_force_sk(np.array(lam), k)
    assert got == pytest.approx(float(want), rel=1e-9, abs=1e-9 * 5.0**k * comb(len(lam), k))


def test_elementary_symmetric_all_is_consistent():
    lam = np.array([0.3, -1.2, 2.0, 0.7])
    all_s = garding.elementary_symmetric_all(lam)
    assert all_s[0] == 1.0
    for k in range(5):
        assert all_s[k] == pytest.approx(garding.elementary_symmetric(lam, k))


def test_cone_membership_examples():
    assert garding.cone_membership(np.ones(5), 5)
    assert not garding.cone_membership([-1.0, 0, 0, 0], 1)
    # power_tau spectrum at the threshold tau = n/m sits on the boundary S_m = 0
    n, m = 6, 3
    tau, s = n / m, 0.7
    lam = s**-tau * np.array([1, 1, 1, 1, 1, 1 - tau])
    assert garding.cone_membership(lam, m, tol=1e-9)
    assert not garding.cone_membership(lam, m + 1, tol=1e-9)


@pytest.mark.parametrize(
    "lam, want", [((1, 1, 1, 1, 1), 5), ((5, -4, 1, 1, 1), 1), ((0, 0, 0, 0, 0), 5), ((-1, 2, 2), 2), ((-3, 1, 1), 0)]
)
def test_subharmonic_index_examples(lam, want):
    assert garding.subharmonic_index(np.array(lam, dtype=float)) == want


def test_classify_examples():
    one = garding.classify_vab(5, 1, 1)
    assert (one.m_index, one.slice_k_index, one.delta) == (5, 4, 0)
    bad = garding.classify_vab(5, 5, -4)
    assert (bad.m_index, bad.slice_k_index) == (1, 0)
    origin = garding.classify_vab(5, 0, 0)
    # brute force: every S_k of (0,0,1,1,1) is nonnegative and the slice spectrum (0,1,1,1) too
    lam = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
    assert origin.m_index == _brute_index(lam, 1e-9) == 5
    assert origin.slice_k_index == _brute_index(lam[1:], 1e-9) == 4


def test_classify_rejects_small_n():
    with pytest.raises(ParameterError):
        garding.classify_vab(1, 0.0, 0.0)


def test_table1_n5_matches_expected_rows():
    rows = garding.table1(5)
    assert len(rows) == 15
    got = sorted((r.label.m_index, r.label.slice_k_index, r.label.delta) for r in rows)
    assert got == sorted(table1_expected(), key=lambda t: (t[0], t[1]))
    assert all(r.label.delta is None or r.label.delta >= 0 for r in rows)
    assert min(r.clearance for r in rows) >= 0.1


def test_table1_rows_reclassify_to_their_label():
    for row in garding.table1(5):
        assert garding.classify_vab(5, row.a, row.b) == row.label


def test_table1_n4_matches_brute_force_scan():
    n = 4
    axis = np.linspace(-6.0, 6.0, 401)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    lam = np.concatenate([a[..., None], b[..., None], np.ones(a.shape + (n - 2,))], axis=-1)
    m_ref = _brute_index(lam, 1e-9)
    k_ref = _brute_index(lam[..., 1:], 1e-9)
    off = ~_brute_band(n, a, b, 0.01)
    # only subharmonic parameters (m >= 1) are tabulated
    brute = {(int(m), int(k)) for m, k in zip(m_ref[off], k_ref[off]) if m >= 1}
    table = {(r.label.m_index, r.label.slice_k_index) for r in garding.table1(n)}
    assert table == brute


def test_boundaries_n5():
    curves = {(c.source, c.k): c for c in garding.region_boundaries(5)}
    s1 = curves[("S_k", 1)]
    assert (s1.c0, s1.ca, s1.cb, s1.cab) == (3.0, 1.0, 1.0, 0.0)
    slice4 = curves[("slice", 4)]
    assert (slice4.c0, slice4.ca, slice4.cb, slice4.cab) == (0.0, 0.0, 1.0, 0.0)
    assert garding.slice_bound(5, 4) == 0.0
    assert garding.slice_bound(5, 2) == pytest.approx(-1.0)


def test_curve_distance_is_exact_for_lines():
    s1 = next(c for c in garding.region_boundaries(5) if c.source == "S_k" and c.k == 1)
    # distance from the origin to a + b + 3 = 0
    assert garding.curve_distance(s1, np.array(0.0), np.array(0.0)) == pytest.approx(3 / np.sqrt(2))


def test_sk_vab_closed_form():
    a, b, n = 1.3, -0.4, 6
    for k in range(n + 1):
        lam = np.array([a, b] + [1.0] * (n - 2))
        assert garding.sk_vab(n, k, a, b) == pytest.approx(brute_force_sk(lam, k))


@pytest.mark.parametrize("n, m", [(4, 2), (5, 3)])
def test_msh_check_threshold(n, m):
    at = garding.msh_check(catalog.power_tau(n, n / m), m, samples=512)
    above = garding.msh_check(catalog.power_tau(n, n / m + 0.05), m, samples=512)
    assert at["pass"] and not at["violated"]
    assert above["violated"] and not above["pass"]
    assert at["fd_max_relative_error"] <= 1e-6


def test_msh_check_is_deterministic():
    f = catalog.fundamental(5, 2)
    assert garding.msh_check(f, 2, samples=256, seed=3) == garding.msh_check(f, 2, samples=256, seed=3)
