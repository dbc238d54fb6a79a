import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypmetric.sphere_geom import (
    INFINITY,
    SphericalIsometry,
    antipode,
    boundary_chi_distance,
    chordal_sigma,
    from_sphere,
    pseudo_tau,
    spherical_theta,
    to_sphere,
)

coord = st.floats(-50, 50, allow_nan=False)
points = st.builds(complex, coord, coord)
angles = st.floats(0, 2 * math.pi, allow_nan=False)
isometries = st.builds(
    lambda kind, t, a: SphericalIsometry(kind, t, a),
    st.sampled_from(["rotation", "inversion"]), angles,
    st.builds(complex, st.floats(-5, 5), st.floats(-5, 5)))


def test_sigma_examples():
    assert chordal_sigma(0j, INFINITY) == 1.0
    assert chordal_sigma(0.3 + 2j, 0.3 + 2j) == 0.0
    assert chordal_sigma(0j, 1 + 0j) == pytest.approx(0.7071067811865476, abs=1e-15)


def test_tau_examples():
    assert pseudo_tau(0j, 1 + 0j) == 1.0
    assert pseudo_tau(2j, 2j) == 0.0
    assert pseudo_tau(1 + 0j, -1 + 0j) == math.inf


def test_theta_examples():
    assert spherical_theta(0j, 1 + 0j) == pytest.approx(math.pi / 4, abs=1e-16)
    assert spherical_theta(1j, 1j) == 0.0
    assert spherical_theta(0j, INFINITY) == pytest.approx(math.pi / 2, abs=1e-16)


def test_antipode_examples():
    assert antipode(0j) is INFINITY
    assert antipode(INFINITY) == 0
    assert antipode(1 + 0j) == -1
    # -1 / conj(i) = -1 / (-i) = -i, checked by exact complex arithmetic
    assert antipode(1j) == -1 / (1j).conjugate() == -1j


def test_isometry_examples():
    assert SphericalIsometry.identity()(0.3 - 0.2j) == 0.3 - 0.2j
    assert SphericalIsometry("rotation", 0.0, 0.5)(0.5 + 0j) == 0
    assert SphericalIsometry.inversion()(2 + 0j) == 0.5


def test_boundary_distance_unit_circle():
    circle = lambda s: complex(np.exp(2j * np.pi * s))
    assert boundary_chi_distance(0j, [circle])[0] == pytest.approx(1.0, abs=1e-12)
    assert boundary_chi_distance(0.5 + 0j, [circle])[0] == pytest.approx(1 / 3, abs=1e-9)
    assert boundary_chi_distance(1 + 0j, [circle])[0] == pytest.approx(0.0, abs=1e-9)


@given(points, points)
def test_distance_chain(z, w):
    s, t, u = chordal_sigma(z, w), spherical_theta(z, w), pseudo_tau(z, w)
    assert s <= t + 1e-14 and t <= u + 1e-14
    if z != w and u < 1e6:
        assert s < t < u or math.isclose(s, u, rel_tol=1e-9)


@given(points, points, points)
def test_sigma_triangle_inequality(a, b, c):
    assert chordal_sigma(a, c) <= chordal_sigma(a, b) + chordal_sigma(b, c) + 1e-12


def test_tau_violates_triangle_inequality():
    # tau blows up near antipodal pairs, so a long hop beats two short ones
    a, b, c = 0j, 1 + 0j, 1e3 + 0j
    assert pseudo_tau(a, c) > pseudo_tau(a, b) + pseudo_tau(b, c)


@given(isometries, points, points)
def test_tau_isometry_invariant(T, z, w):
    before = pseudo_tau(z, w)
    after = pseudo_tau(T(z), T(w))
    if before < 10:
        assert abs(after - before) < 1e-12 * max(1.0, before)


@given(points)
def test_sphere_projection_round_trip(z):
    back = from_sphere(to_sphere(z))
    assert abs(back - z) <= 1e-12 * (1 + abs(z) ** 2)


def test_sigma_derivative_limit():
    z = 0.7 - 0.4j
    hs = [1e-2 / 2 ** k for k in range(4)]
    vals = [chordal_sigma(z, z + h) / h for h in hs]
    # second-order Richardson from the last two ratios (error is O(h))
    extrap = 2 * vals[-1] - vals[-2]
    assert extrap == pytest.approx(1 / (1 + abs(z) ** 2), rel=1e-6)


def test_random_isometry_preserves_sigma(rng):
    v = rng.normal(size=(200, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    z = np.asarray(from_sphere(v), dtype=complex)
    T = SphericalIsometry.random(rng)
    w = np.asarray(T(z), dtype=complex)
    assert np.allclose(chordal_sigma(z[:-1], z[1:]), chordal_sigma(w[:-1], w[1:]), atol=1e-12)
