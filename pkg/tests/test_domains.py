import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypmetric import domains as D
from hypmetric.domains import GeneralizedCircle, Lune, SphericalDisk
from hypmetric.errors import InvalidLune, OutsideDomain
from hypmetric.sphere_geom import INFINITY, SphericalIsometry


def test_lune_membership():
    G = Lune(1.0, 1.0)
    # -1.5 lies inside the removed disk |z + 1| <= 1
    assert not G.contains(-1.5)
    # -0.5 is right of the line Re z = -1
    assert not G.contains(-0.5)
    assert G.contains(-2.1)
    assert not G.contains(INFINITY)
    assert G.domain().contains(-2.1) and not G.domain().contains(-0.5)


def test_unit_disk_membership_and_distances():
    U = D.disk()
    assert not U.contains(INFINITY)
    assert D.euclidean_boundary_distance(U, 0j) == pytest.approx(1.0, abs=1e-15)
    assert D.euclidean_boundary_distance(U, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert D.spherical_boundary_distance(U, 0j) == pytest.approx(1.0, abs=1e-12)
    assert D.spherical_boundary_distance(U, 0.5) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(OutsideDomain):
        D.euclidean_boundary_distance(Lune(1.0, 1.0), -1.5)


@pytest.mark.parametrize("c, r, m", [(1, 1, -2), (2, 1, -3), (1, 0.5, -1.5)])
def test_lune_midpoint(c, r, m):
    assert D.lune_midpoint(Lune(c, r)) == m


def test_lune_class_condition():
    assert Lune(1.0, 1.0).in_class
    assert not Lune(1.0, math.sqrt(2.0)).in_class
    with pytest.raises(InvalidLune):
        Lune(1.0, 2.0).require_class()


@given(st.floats(0.05, 5), st.floats(0.05, 5))
def test_lune_boundaries_orthogonal(c, r):
    G = Lune(c, r)
    line, circ = G.convex_side, G.concave_disk
    # the line Re z = -c passes through the circle's centre -c; the centre is
    # recovered from the normalized form, so allow a few ulps at scale c
    assert abs(line.value(circ.center)) <= 8 * np.finfo(float).eps * (1 + c)
    assert abs(line.inversive_product(circ)) < 1e-12


def test_spherical_disk_convexity():
    assert SphericalDisk(0j, 0.5).is_spherically_convex
    assert SphericalDisk(0j, 0.5).domain().circles[0].is_spherically_convex
    assert not SphericalDisk(0j, 1.5).domain().circles[0].is_spherically_convex
    cap = GeneralizedCircle.circle(0j, 1.0)
    assert cap.cap_height == pytest.approx(0.0, abs=1e-15)


def test_circle_through_three_points():
    c = GeneralizedCircle.through(1 + 0j, 1j, -1 + 0j)
    assert c.center == pytest.approx(0j, abs=1e-15) and c.radius == pytest.approx(1.0)
    assert c.side_contains(0j)
    line = GeneralizedCircle.through(0j, 1 + 1j, 2 + 2j)
    assert line.is_line


@given(st.floats(-1, 1), st.floats(0, 2 * math.pi))
def test_cap_constructor_round_trip(h, phi):
    axis = np.array([math.cos(phi) * 0.6, math.sin(phi) * 0.6, 0.8])
    c = GeneralizedCircle.from_cap(axis, h * 0.99)
    assert c.cap_height == pytest.approx(h * 0.99, abs=1e-12)
    assert np.allclose(c.cap_axis, axis, atol=1e-12)


def _interior_points(dom, rng, n, box=3.0):
    pts = rng.uniform(-box, box, 4 * n) + 1j * rng.uniform(-box, box, 4 * n)
    return pts[dom.contains(pts)][:n]


@pytest.mark.parametrize("dom", [D.disk(), Lune(1.0, 1.0).domain(), D.annulus(0j, 1.0, 2.0),
                                 D.sector(1.5 * math.pi), D.union_of_disks([(0j, 1.0), (1.5, 1.0)])],
                         ids=["disk", "lune", "annulus", "sector", "union"])
def test_distance_disk_free_of_boundary(dom, rng):
    z = _interior_points(dom, rng, 1000)
    d = dom.euclid_distance_raw(z)
    bd = np.concatenate([b.arc.sample(400) for b in dom.boundary_arcs])
    bd = bd[np.isfinite(bd)]
    gap = np.abs(z[:, None] - bd[None, :]).min(axis=1)
    assert np.all(gap >= d - 1e-12)


def test_rasterize_mask_matches_contains():
    dom = D.union_of_disks([(0j, 1.0), (1.5, 1.0)])
    g = D.rasterize(dom, 65)
    inside = dom.contains(g.nodes)
    crossed = np.abs(g.distance) < g.h * math.sqrt(2)
    assert np.array_equal(g.mask[~crossed], inside[~crossed])


def test_transform_moves_membership(rng):
    dom = Lune(1.0, 1.0).domain()
    T = SphericalIsometry.random(rng)
    moved = dom.transform(T)
    z = _interior_points(dom, rng, 200)
    w = np.asarray(T(z), dtype=complex)
    assert np.all(moved.contains(w))


def test_domains_with_infinity():
    ext = D.disk_exterior(0j, 1.0)
    assert ext.contains(3 + 0j) and not ext.contains(INFINITY)
    cap = D.cap_exterior(0j, 2.0)
    assert cap.contains(INFINITY) and not cap.is_bounded


def test_cantor_complement_structure():
    dom = D.cantor_complement(3, 1.0)
    assert len(dom.slits) == 8
    assert not dom.contains(0.0 + 0j) and dom.contains(0.5 + 0j)
