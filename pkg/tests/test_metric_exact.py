import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypmetric import domains as D
from hypmetric.domains import Lune
from hypmetric.errors import BoundaryProximity, OutsideDomain
from hypmetric.metric_exact import (
    density_for,
    lambda_annulus,
    lambda_disk,
    lambda_halfplane,
    lambda_lune,
    lambda_lune_uv,
    lambda_punctured_disk,
    mu_of,
    pushforward_density,
)
from hypmetric.metric_pde import solve_domain
from hypmetric.sphere_geom import SphericalIsometry


def test_disk_values():
    assert lambda_disk(0j, 1.0, 0j) == 1.0
    assert lambda_disk(0j, 1.0, 0.5) == pytest.approx(4 / 3, rel=1e-15)
    assert lambda_disk(2 + 0j, 3.0, 2 + 0j) == pytest.approx(1 / 3, rel=1e-15)


def test_halfplane_values():
    assert lambda_halfplane(1j) == 0.5
    assert lambda_halfplane(3 + 2j) == 0.25
    assert lambda_halfplane(5 + 0.5j) == 1.0
    with pytest.raises(OutsideDomain):
        lambda_halfplane(-1j)


def test_lune_values():
    G = Lune(1.0, 1.0)
    # ((r+t)^2 + r^2) / (2 t (2r+t)(r+t)) at t = 0.1 and t = 0.01
    assert lambda_lune(G, -2.1) == pytest.approx(4.78354978354978, rel=1e-12)
    assert lambda_lune(G, -2.01) == pytest.approx(49.75370671395605, rel=1e-12)
    with pytest.raises(OutsideDomain):
        lambda_lune(G, -0.5)


def test_lune_forms_agree(rng):
    for c, r in [(1.0, 1.0), (0.5, 0.8), (2.0, 1.0)]:
        G = Lune(c, r)
        z = rng.uniform(-6, 0, 4000) + 1j * rng.uniform(-4, 4, 4000)
        z = z[G.contains(z)][:1000]
        a, b = lambda_lune(G, z), lambda_lune_uv(G, z)
        ok = np.isfinite(a) & np.isfinite(b)
        assert ok.sum() > 900
        assert np.max(np.abs(a[ok] - b[ok]) / a[ok]) < 1e-10


def test_punctured_disk_values():
    assert lambda_punctured_disk(math.exp(-1)) == pytest.approx(math.e / 2, rel=1e-12)
    assert lambda_punctured_disk(math.exp(-2)) == pytest.approx(math.e ** 2 / 4, rel=1e-12)
    # near the unit circle the density looks like the disk's, 1/(2(1-|z|))
    t = 1e-5
    assert lambda_punctured_disk(1 - t) * t == pytest.approx(0.5, rel=1e-4)


def _pullback_punctured(z):
    # exp(i w) covers the punctured disk by the upper half-plane
    w = -1j * np.log(z)
    return 1.0 / (2.0 * w.imag) / abs(z)


def test_punctured_disk_pullback_oracle():
    for z in (0.3 + 0.1j, -0.05j, 0.9 + 0j):
        assert lambda_punctured_disk(z) == pytest.approx(_pullback_punctured(z), rel=1e-12)


def test_annulus_against_pde():
    R = 4.0
    field = solve_domain(D.annulus(0j, 1.0, R), 257)
    z = math.sqrt(R) * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
    assert np.allclose(field.sample(z), lambda_annulus(R, z), rtol=1e-2)


def test_mu_values():
    U = density_for(D.disk())
    assert mu_of(U, 0j) == 1.0
    assert mu_of(U, 0.5) == pytest.approx(5 / 3, rel=1e-15)
    H = density_for(D.halfplane(0j, 1j))
    assert mu_of(H, 1j) == pytest.approx(1.0, rel=1e-15)


def test_pushforward_inversion_on_annulus():
    R = 3.0
    T = SphericalIsometry.inversion()
    for z in (1.5 + 0j, 2j, -1.2 - 1.2j):
        lam = lambda_annulus(R, z)
        image = lambda_annulus(R, T(z) * R, inner=1.0) * R   # 1/R < |w| < 1 is R^-1 times the annulus
        assert pushforward_density(T, lam, z) == pytest.approx(image, rel=1e-12)


def test_rotation_symmetry_of_disk():
    U = density_for(D.disk())
    z = 0.3 + 0.4j
    assert U(np.exp(0.7j) * z) == pytest.approx(U(z), rel=1e-15)


def test_proximity_policy():
    U = density_for(D.disk())
    with pytest.raises(BoundaryProximity):
        U(1 - 1e-9)
    vals = U(np.array([0.5, 1 - 1e-9, 2.0]))
    assert np.isfinite(vals[0]) and np.isnan(vals[1]) and np.isnan(vals[2])


CLOSED = {
    "disk": D.disk(),
    "half-plane": D.halfplane(0j, 1j),
    "lune": Lune(1.0, 1.0).domain(),
    "punctured disk": D.punctured_disk(),
    "annulus": D.annulus(0j, 1.0, 3.0),
    "strip": D.strip(1.0),
    "sector": D.sector(1.5 * math.pi),
    "disk exterior": D.disk_exterior(),
}


@pytest.mark.parametrize("name", list(CLOSED))
def test_curvature_minus_four(name, rng):
    dom = CLOSED[name]
    dens = density_for(dom)
    z = rng.uniform(-3, 3, 600) + 1j * rng.uniform(-3, 3, 600)
    z = z[dom.contains(z)]
    z = z[dom.euclid_distance_raw(z) > 0.05][:40]
    h = 1e-3
    lap = (np.log(dens(z + h)) + np.log(dens(z - h)) + np.log(dens(z + 1j * h))
           + np.log(dens(z - 1j * h)) - 4 * np.log(dens(z))) / h ** 2
    # the 5-point error is O(h^2) times fourth derivatives; extrapolate once
    h2 = h / 2
    lap2 = (np.log(dens(z + h2)) + np.log(dens(z - h2)) + np.log(dens(z + 1j * h2))
            + np.log(dens(z - 1j * h2)) - 4 * np.log(dens(z))) / h2 ** 2
    rich = (4 * lap2 - lap) / 3
    target = 4 * dens(z) ** 2
    assert np.max(np.abs(rich - target) / target) < 1e-4


@pytest.mark.parametrize("name", list(CLOSED))
def test_schwarz_and_koebe_bounds(name, rng):
    dom = CLOSED[name]
    dens = density_for(dom)
    z = rng.uniform(-3, 3, 4000) + 1j * rng.uniform(-3, 3, 4000)
    z = z[dom.contains(z)][:1000]
    dl = dom.euclid_distance_raw(z) * dens(z)
    dl = dl[np.isfinite(dl)]
    assert dl.max() <= 1 + 1e-6
    if name in ("disk", "half-plane", "lune", "strip", "sector"):
        assert dl.min() >= 0.25


def test_nested_monotonicity(rng):
    pairs = [(Lune(1.0, 1.0).domain(), D.halfplane(-1.0, -1.0)),
             (D.punctured_disk(), D.disk()),
             (D.annulus(0j, 1.0, 3.0), D.disk_exterior(0j, 1.0))]
    for small, big in pairs:
        z = rng.uniform(-3, 3, 6000) + 1j * rng.uniform(-3, 3, 6000)
        z = z[small.contains(z)][:1000]
        a, b = density_for(small)(z), density_for(big)(z)
        ok = np.isfinite(a) & np.isfinite(b)
        assert np.all(b[ok] <= a[ok] * (1 + 1e-12))


@given(st.floats(0, 2 * math.pi), st.floats(-2, 2), st.floats(-2, 2))
def test_mu_isometry_invariant(t, ax, ay):
    T = SphericalIsometry("rotation", t, complex(ax, ay))
    dom = Lune(1.0, 1.0).domain()
    moved = density_for(dom.transform(T))
    base = density_for(dom)
    for z in (-2.1 + 0j, -3 + 1j, -1.5 - 2j):
        w = T(z)
        if isinstance(w, complex) and abs(w) < 1e6:
            assert moved.mu(w) == pytest.approx(base.mu(z), rel=1e-9)
