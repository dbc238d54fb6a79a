import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmetric import domains as D
from hypmetric.convexity import (
    KeoghWitness, WitnessLune, antipodal_pair, find_euclidean_nonconvexity_witness,
    find_spherical_nonconvexity_witness, geodesic_in_domain, is_euclidean_convex,
    is_spherically_convex, segment_in_domain, spherical_geodesic, verify_keogh_witness,
    verify_witness, witness_from_dict)
from hypmetric.corpus import convex_corpus, nonconvex_corpus
from hypmetric.domains import GeneralizedCircle, Intersection, Lune, Side, SphericalDisk
from hypmetric.errors import AntipodalPair, NotApplicable
from hypmetric.metric_exact import density_for, has_closed_form
from hypmetric.quantities import estimate_Chat, lune_product
from hypmetric.sphere_geom import SphericalIsometry, antipode, to_sphere


@pytest.fixture(scope="module")
def lune_witness():
    dom = Lune(1.0, 1.0).domain()
    return dom, find_spherical_nonconvexity_witness(dom)


def _keogh_domain():
    # disk minus a closed disk whose boundary is orthogonal to the outer circle
    return D.CircularDomain(Intersection(Side(GeneralizedCircle.circle(0j, 1.0)),
                                         Side(GeneralizedCircle.circle(1.5, math.sqrt(1.25), inside=False))),
                            name="keogh")


def test_spherical_convexity_examples():
    assert is_spherically_convex(D.disk())
    assert is_spherically_convex(SphericalDisk(0.3 - 0.2j, 0.5).domain())
    rep = is_spherically_convex(Lune(1.0, 1.0).domain())
    assert not rep and rep.reasons
    assert not is_spherically_convex(SphericalDisk(0j, 1.5).domain())


def test_euclidean_convexity_examples():
    assert is_euclidean_convex(D.disk(1 + 1j, 2.0))
    assert is_euclidean_convex(D.halfplane(0j, 1j))
    assert not is_euclidean_convex(_keogh_domain())
    assert not is_euclidean_convex(D.annulus(0j, 1.0, 2.0))


def test_certificate_lists_arcs():
    rep = is_spherically_convex(Lune(1.0, 1.0).domain()).to_dict()
    assert rep["geometry"] == "spherical" and not rep["convex"]
    assert len(rep["arcs"]) == 2


def test_convex_and_nonconvex_corpora_sizes():
    assert len(nonconvex_corpus()) == 20 and len(convex_corpus()) == 10


def test_geodesic_zero_one_is_real_segment():
    g = spherical_geodesic(0, 1)
    pts = g.sample(64)
    assert np.max(np.abs(pts.imag)) < 1e-14
    assert pts.real.min() >= -1e-14 and pts.real.max() <= 1 + 1e-14
    assert g.length == pytest.approx(math.pi / 4, rel=1e-14)


def test_geodesic_one_i_is_on_great_circle_through_antipode():
    g = spherical_geodesic(1, 1j)
    c = g.arc.circle
    # the circle through 1, i and antipode(1) = -1 is the unit circle
    for p in (1, 1j, antipode(1), antipode(1j)):
        assert abs(c.value(np.array([complex(p)]))[0]) < 1e-12
    pts = g.sample(128)
    assert np.allclose(np.abs(pts), 1.0, atol=1e-12)
    # shorter arc: stays in the first quadrant and avoids -1, -i
    assert np.all(pts.real >= -1e-12) and np.all(pts.imag >= -1e-12)


def test_geodesic_degenerate_and_antipodal():
    g = spherical_geodesic(0.3 + 0.1j, 0.3 + 0.1j)
    assert g.arc is None and g.length == 0.0
    with pytest.raises(AntipodalPair):
        spherical_geodesic(0.5, antipode(0.5))


@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_geodesic_is_great_circle_arc(z1, z2):
    p1, p2 = to_sphere(z1), to_sphere(z2)
    if np.linalg.norm(np.cross(p1, p2)) < 1e-6:
        return
    g = spherical_geodesic(z1, z2)
    pts = np.array([to_sphere(complex(w)) for w in g.sample(32)])
    n = np.cross(p1, p2)
    n /= np.linalg.norm(n)
    assert np.max(np.abs(pts @ n)) < 1e-9
    # shorter arc: chord lengths along the path add up to at most the great-circle angle
    ang = np.arccos(np.clip(np.sum(pts[1:] * pts[:-1], axis=1), -1, 1)).sum()
    assert ang == pytest.approx(math.acos(float(np.clip(p1 @ p2, -1, 1))), rel=1e-6, abs=1e-9)


def test_exact_geodesic_test_agrees_with_sampling(rng):
    dom = Lune(1.0, 1.0).domain()
    checked = 0
    for _ in range(200):
        z1, z2 = rng.uniform(-4, -1, 2) + 1j * rng.uniform(-2, 2, 2)
        if not (dom.contains(z1) and dom.contains(z2)):
            continue
        if np.linalg.norm(np.cross(to_sphere(z1), to_sphere(z2))) < 1e-3:
            continue
        exact = geodesic_in_domain(dom, z1, z2)
        pts = spherical_geodesic(z1, z2).sample(4096)
        sampled = bool(np.all(dom.contains(pts)))
        margin = float(np.min(dom.tau_distance_raw(pts)))
        if margin > 1e-3 or not sampled:
            assert exact == sampled
            checked += 1
    assert checked > 20


def test_segment_in_domain():
    dom = _keogh_domain()
    assert segment_in_domain(dom, -0.5, -0.5 + 0.3j)
    assert not segment_in_domain(D.annulus(0j, 1.0, 3.0), -2.0, 2.0)


def test_lune_self_witness_midpoint(lune_witness):
    dom, w = lune_witness
    assert isinstance(w, WitnessLune)
    assert complex(w.midpoint) == pytest.approx(-2.0, abs=1e-6)
    assert verify_witness(dom, w)


def test_witness_disks_orthogonal(lune_witness):
    _, w = lune_witness
    assert abs(w.disk1.inversive_product(w.disk2)) < 1e-9
    assert w.r ** 2 < w.c ** 2 + 1


def test_cap_complement_witness():
    dom = D.cap_exterior(0j, 0.5)
    w = find_spherical_nonconvexity_witness(dom)
    assert verify_witness(dom, w)


def test_hemisphere_not_applicable():
    with pytest.raises(NotApplicable):
        find_spherical_nonconvexity_witness(D.disk())
    with pytest.raises(NotApplicable):
        find_euclidean_nonconvexity_witness(D.halfplane(0j, 1j))


def test_moved_midpoint_fails_verification(lune_witness):
    dom, w = lune_witness
    # carry the whole lune 0.1 into the domain along the axis through the midpoint
    shift = SphericalIsometry.moving_to_origin(-2.0 - 0.1).inverse().compose(SphericalIsometry.moving_to_origin(-2.0))
    moved = dataclasses.replace(w, T=shift.compose(w.T), midpoint=shift(w.midpoint),
                                disk1=w.disk1.transform(shift), disk2=w.disk2.transform(shift))
    chk = verify_witness(dom, moved)
    assert not chk and "midpoint_on_boundary" in chk.failed


def test_out_of_class_witness_fails(lune_witness):
    dom, w = lune_witness
    bad = dataclasses.replace(w, r=math.sqrt(w.c ** 2 + 1) * 1.01)
    chk = verify_witness(dom, bad)
    assert not chk and "class_c_hat" in chk.failed


def test_witness_serialization_round_trip(lune_witness):
    dom, w = lune_witness
    back = witness_from_dict(w.to_dict())
    assert back.c == w.c and back.r == w.r
    assert verify_witness(dom, back)


@settings(max_examples=12)
@given(st.floats(0.3, 2.0), st.floats(0.2, 0.9), st.sampled_from(["rotation", "inversion"]),
       st.floats(0, 2 * math.pi), st.complex_numbers(max_magnitude=1.5))
def test_isometric_lunes_round_trip(c, frac, kind, t, a):
    r = frac * math.sqrt(c * c + 1)
    dom = Lune(c, r).domain().transform(SphericalIsometry(kind, t, a))
    assert not is_spherically_convex(dom)
    w = find_spherical_nonconvexity_witness(dom)
    assert verify_witness(dom, w)
    assert abs(w.disk1.inversive_product(w.disk2)) < 1e-9


@pytest.mark.parametrize("name", ["lune(1,1)", "annulus(1,2)", "crescent", "slit disk", "keyhole"])
def test_euclidean_witness_round_trip(name):
    dom = nonconvex_corpus()[name]
    w = find_euclidean_nonconvexity_witness(dom)
    assert isinstance(w, KeoghWitness)
    assert verify_keogh_witness(dom, w)
    assert witness_from_dict(w.to_dict()) == dataclasses.replace(w, diagnostics={})


def test_keogh_domain_round_trip():
    dom = _keogh_domain()
    w = find_euclidean_nonconvexity_witness(dom)
    assert verify_keogh_witness(dom, w)


@pytest.mark.parametrize("name", [k for k, v in nonconvex_corpus().items() if has_closed_form(v)])
def test_witness_forces_Chat_below_one_half(name):
    dom = nonconvex_corpus()[name]
    w = find_spherical_nonconvexity_witness(dom)
    # along the witness axis just beyond the midpoint the product is below 1/2
    a = -(w.c + w.r)
    t = 0.05 * w.r
    z = np.array([complex(w.T(a - t))])
    prod = float(dom.tau_distance_raw(z)[0] * density_for(dom).mu(z)[0])
    # the witness midpoint is on the boundary to the verification tolerance only
    assert prod <= lune_product(w.c, w.r, t) + 1e-4 < 0.5
    est = estimate_Chat(dom, chi="tau")
    assert est.value + est.error_indicator < 0.5


@pytest.mark.parametrize("name", [k for k, v in convex_corpus().items() if has_closed_form(v)])
def test_convex_Chat_is_one_half(name):
    est = estimate_Chat(convex_corpus()[name], chi="tau")
    assert 0.5 - est.error_indicator <= est.value <= 0.5 + est.error_indicator


def test_antipodal_pair_helper():
    assert antipodal_pair(D.disk()) is None
    pair = antipodal_pair(D.annulus(0j, 0.5, 3.0))
    assert pair is not None
    p, q = (to_sphere(complex(z)) for z in pair)
    assert float(p @ q) == pytest.approx(-1.0, abs=1e-2)
