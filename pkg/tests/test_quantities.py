import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmetric import domains as D
from hypmetric.corpus import quantity_corpus
from hypmetric.domains import Lune, SphericalDisk
from hypmetric.errors import InvalidLune, TooFewPoints
from hypmetric.metric_exact import density_for, has_closed_form
from hypmetric.quantities import (
    boundary_uniform_perfectness, cantor_endpoints, double_exponential_set, estimate_C,
    estimate_Chat, estimate_Chat_chain, lune_product, lune_product_slope, minda_bound,
    uniform_perfectness_constant)
from hypmetric.sphere_geom import SphericalIsometry

CLOSED = {k: v for k, v in quantity_corpus().items() if has_closed_form(v)}


@pytest.fixture(scope="module")
def chains():
    return {name: estimate_Chat_chain(dom) for name, dom in CLOSED.items()}


def test_half_plane_C_is_one_half():
    est = estimate_C(D.halfplane(0j, 1j))
    assert est.value == pytest.approx(0.5, abs=1e-12)


def test_unit_disk_C_approaches_one_half_from_above():
    est = estimate_C(D.disk())
    assert 0.5 <= est.value <= 0.5 + est.error_indicator + 1e-9
    assert est.extrapolated == pytest.approx(0.5, abs=1e-4)


def test_hemisphere_and_tau_disk_Chat():
    for dom in (D.disk(), SphericalDisk(0j, 1.0).domain(), SphericalDisk(0.4 - 0.7j, 1.0).domain()):
        est = estimate_Chat(dom, chi="tau")
        assert 0.5 - 1e-9 <= est.value <= 0.5 + est.error_indicator + 1e-9


def test_lune_Chat_strictly_below_one_half():
    est = estimate_Chat(Lune(1.0, 1.0).domain(), chi="tau")
    assert est.value <= 0.498
    # the closed-form product along the axis beyond the concave arc bounds the infimum from above
    assert est.value <= lune_product(1.0, 1.0, 0.1) + est.error_indicator


def test_punctured_disk_C_small():
    assert estimate_C(D.punctured_disk(0j, 1.0)).value < 0.05


@pytest.mark.parametrize("name", sorted(CLOSED))
def test_corpus_respects_upper_bounds(name, chains):
    dom = CLOSED[name]
    c = estimate_C(dom)
    assert c.value <= 0.5 + c.error_indicator
    tau = chains[name]["Chat_tau"]
    assert tau.value <= 0.5 + tau.error_indicator


@pytest.mark.parametrize("name", sorted(CLOSED))
def test_chain_ordering_on_shared_points(name, chains):
    ch = chains[name]
    assert ch["Chat_sigma"].value <= ch["Chat_theta"].value <= ch["Chat_tau"].value


@pytest.mark.parametrize("name", ["unit disk", "lune(1,1)", "annulus(1,4)", "strip(1)"])
def test_value_is_product_at_argmin(name):
    dom = CLOSED[name]
    lam = density_for(dom)
    c = estimate_C(dom)
    z = np.array([c.argmin])
    assert c.value == pytest.approx(float(dom.euclid_distance_raw(z)[0] * lam(z)[0]), rel=1e-10)
    t = estimate_Chat(dom, chi="tau")
    z = np.array([t.argmin])
    assert t.value == pytest.approx(float(dom.tau_distance_raw(z)[0] * lam.mu(z)[0]), rel=1e-10)


def test_report_fields():
    rep = estimate_Chat(D.disk(), chi="sigma").report()
    assert rep["quantity"] == "Chat_sigma"
    assert {"value", "argmin", "refinement_trace", "error_indicator"} <= set(rep)


def test_minda_bound_values():
    assert minda_bound(tau=1.0) == pytest.approx(1.0)
    assert minda_bound(tau=1 / 3) == pytest.approx(5 / 3)
    dom = D.disk()
    assert minda_bound(0.5, dom) == pytest.approx(5 / 3, rel=1e-12)
    assert float(density_for(dom).mu(np.array([0.5]))[0]) == pytest.approx(5 / 3, rel=1e-12)


@given(st.complex_numbers(max_magnitude=0.95))
def test_minda_bound_holds_on_convex_cap(z):
    dom = SphericalDisk(0.3j, 0.6).domain()
    if not dom.contains(z):
        return
    w = np.array([z])
    tau = float(dom.tau_distance_raw(w)[0])
    if tau < 1e-6:
        return
    assert float(density_for(dom).mu(w)[0]) >= minda_bound(tau=tau) * (1 - 1e-10)


def test_lune_product_values():
    assert lune_product_slope(1.0, 1.0) == pytest.approx(-0.05, rel=1e-14)
    assert lune_product(1.0, 1.0, 0.1) == pytest.approx(0.497672, abs=2e-6)
    assert lune_product(1.0, 1.0, 0.1) == pytest.approx((5.41 / 5.2) * (2.21 / 4.62), rel=1e-14)
    assert lune_product(1.0, 1.0, 1e-12) == pytest.approx(0.5, abs=1e-11)
    with pytest.raises(InvalidLune):
        lune_product(1.0, 1.5, 0.1)
    with pytest.raises(InvalidLune):
        lune_product_slope(1.0, math.sqrt(2.0))


@pytest.mark.parametrize("t", [1e-3, 1e-4])
def test_lune_slope_matches_finite_difference_at_unit_lune(t):
    fd = (lune_product(1.0, 1.0, t) - 0.5) / t
    assert abs(fd - lune_product_slope(1.0, 1.0)) < 1e-2 * 0.05


@given(st.floats(0.1, 3.0), st.floats(0.05, 0.99), st.sampled_from([1e-3, 1e-4]))
def test_lune_slope_matches_finite_difference(c, frac, t):
    r = frac * math.sqrt(c * c + 1)
    fd = (lune_product(c, r, t) - 0.5) / t
    slope = lune_product_slope(c, r)
    # the forward difference is off by O(t); relative agreement is meaningful while
    # the slope is not itself of that order (it vanishes as r^2 -> c^2 + 1)
    curvature = abs((lune_product(c, r, 2 * t) - 2 * lune_product(c, r, t) + 0.5) / t ** 2)
    assert abs(fd - slope) <= 0.5 * t * curvature * 1.1 + 1e-10
    if 0.5 * t * curvature < 1e-3 * abs(slope):
        assert abs(fd - slope) < 1e-2 * abs(slope)


def test_lune_product_matches_density():
    c, r, t = 1.0, 1.0, 0.1
    dom = Lune(c, r).domain()
    z = np.array([-c - r - t + 0j])
    prod = float(dom.tau_distance_raw(z)[0] * density_for(dom).mu(z)[0])
    assert prod == pytest.approx(lune_product(c, r, t), rel=1e-12)


def test_two_points_not_uniformly_perfect():
    res = uniform_perfectness_constant([0j, 1 + 0j])
    assert res.constant == 0.0 and res.not_uniformly_perfect
    with pytest.raises(TooFewPoints):
        uniform_perfectness_constant([0j])
    with pytest.raises(TooFewPoints):
        uniform_perfectness_constant([1j, 1j])


def test_cantor_constant_stabilizes():
    values = [uniform_perfectness_constant(cantor_endpoints(k)).constant for k in (8, 9, 10)]
    assert min(values) > 0
    assert max(values) - min(values) < 1e-12


def test_double_exponential_constant_decays():
    values = [uniform_perfectness_constant(double_exponential_set(n)).constant for n in range(3, 7)]
    assert all(v > 0 for v in values)
    assert all(b <= 0.5 * a for a, b in zip(values, values[1:]))


def test_isolated_boundary_point_is_immediate_negative():
    assert boundary_uniform_perfectness(D.punctured_disk(0j, 1.0)).not_uniformly_perfect
    assert not boundary_uniform_perfectness(D.annulus(0j, 1.0, 2.0)).not_uniformly_perfect


@settings(max_examples=40)
@given(st.sampled_from(["rotation", "inversion"]), st.floats(0, 2 * math.pi),
       st.complex_numbers(max_magnitude=2.0),
       st.sampled_from(["unit disk", "lune(1,1)", "annulus(1,4)", "spherical cap(0.5)"]))
def test_Chat_isometry_invariant(kind, t, a, name):
    dom = CLOSED[name]
    T = SphericalIsometry(kind, t, a)
    e0, e1 = estimate_Chat(dom, chi="tau"), estimate_Chat(dom.transform(T), chi="tau")
    assert abs(e0.value - e1.value) <= e0.error_indicator + e1.error_indicator
