import json
import math

import numpy as np
import pytest

from hypmetric import domains as D
from hypmetric.corpus import nonconvex_corpus, quantity_corpus
from hypmetric.domains import Lune
from hypmetric.errors import NotConverged, TooCloseToBoundary
from hypmetric.metric_exact import density_for
from hypmetric.metric_pde import PDEDensity, refine_and_extrapolate, solve, solve_domain
from hypmetric.quantities import estimate_C, estimate_Chat
from hypmetric.sphere_geom import SphericalIsometry


@pytest.fixture(scope="module")
def disk_field():
    return solve_domain(D.disk(), 257)


def _core_error(field, dom, chart=None, cells=5):
    g = field.grid
    core = g.mask & (g.distance > cells * g.h)
    w = g.nodes[core]
    z = w if chart is None else chart.inverse()(w)
    num, ref = field.sample(z), density_for(dom)(z)
    ok = np.isfinite(num) & np.isfinite(ref)
    return float(np.max(np.abs(num[ok] - ref[ok]) / ref[ok]))


def test_disk_matches_closed_form(disk_field):
    assert disk_field.converged
    assert _core_error(disk_field, D.disk()) < 1e-2
    assert disk_field.sample(0.5) == pytest.approx(4 / 3, rel=1e-2)


def test_annulus_and_lune_match_closed_forms():
    ann = D.annulus(0j, 1.0, 4.0)
    assert _core_error(solve_domain(ann, 257), ann) < 2e-2
    lune = Lune(1.0, 1.0).domain()
    J = SphericalIsometry.inversion()
    assert _core_error(solve_domain(lune, 257, chart=J), lune, J) < 2e-2


def test_sample_interpolation_identities(disk_field):
    g = disk_field.grid
    j, i = g.ny // 2 + 3, g.nx // 2 - 5
    node = g.nodes[j, i]
    assert disk_field.sample(node) == pytest.approx(math.exp(disk_field.u[j, i]), rel=1e-13)
    with pytest.raises(TooCloseToBoundary):
        disk_field.sample(1 - 0.5 * g.h)


def test_newton_residual_monotone(disk_field):
    hist = disk_field.residual_history
    assert all(b < a for a, b in zip(hist, hist[1:]))


def test_not_converged_carries_field():
    with pytest.raises(NotConverged) as info:
        solve_domain(D.disk(), 65, tol=1e-14, max_iter=1)
    assert info.value.field is not None and not info.value.field.converged


def test_comparison_principle():
    bbox = (-1.05, -1.05, 1.05, 1.05)
    big = solve(D.rasterize(D.disk(), 129, bbox=bbox))
    small = solve(D.rasterize(D.disk(0.1j, 0.7), 129, bbox=bbox))
    both = small.grid.mask & big.grid.mask
    assert np.all(big.u[both] <= small.u[both] + 1e-6)


@pytest.mark.parametrize("name", ["unit disk", "union of disks", "crescent"])
def test_barrier_sandwich(name):
    dom = {**quantity_corpus(), **nonconvex_corpus()}[name]
    f = solve_domain(dom, 129)
    g = f.grid
    un = f.unknown
    dl = g.distance[un] * np.exp(f.u[un])
    assert dl.min() >= 0.25 * 0.95 and dl.max() <= 1.0 * 1.05


def test_refinement_annulus_probe():
    ann = D.annulus(0j, 1.0, 4.0)
    probes = np.array([2 + 0j, 2j, -math.sqrt(2) * (1 + 1j)])
    res = refine_and_extrapolate(ann, 3, 65, probes=probes)
    exact = density_for(ann)(probes)
    assert np.max(np.abs(res.extrapolated - exact) / exact) < 5e-3
    assert np.all(res.error_indicator < 5e-3 * exact)


def test_grid_refinement_stability():
    dom = D.union_of_disks([(0j, 1.0), (1.5, 1.0)])
    coarse = estimate_Chat(dom, PDEDensity.build(dom, 65), "tau")
    fine = estimate_Chat(dom, PDEDensity.build(dom, 129), "tau")
    assert abs(coarse.value - fine.value) < coarse.error_indicator + fine.error_indicator


def test_field_csv_and_header(tmp_path, disk_field):
    path = tmp_path / "u.csv"
    hpath = disk_field.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,u,lambda"
    assert len(lines) == 1 + int(disk_field.grid.mask.sum())
    head = json.loads(open(hpath).read())
    assert head["converged"] and head["resolution"] == [257, 257]


@pytest.mark.parametrize("dom, exact", [(D.disk(0.2j, 0.8), 0.5), (D.annulus(0j, 1.0, 3.0), None)],
                         ids=["disk", "annulus"])
def test_pde_quantities_within_indicator_of_closed_form(dom, exact):
    pde = PDEDensity.build(dom, 129)
    ref = estimate_Chat(dom, density_for(dom), "tau").value if exact is None else exact
    est = estimate_Chat(dom, pde, "tau")
    assert abs(est.extrapolated - ref) <= est.error_indicator
    c = estimate_C(dom, pde)
    ref_c = estimate_C(dom, density_for(dom)).value if exact is None else exact
    assert abs(c.extrapolated - ref_c) <= c.error_indicator
