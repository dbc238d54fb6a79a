import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypmetric import domains as D
from hypmetric.domains import Lune, SphericalDisk
from hypmetric.domainspec import KINDS, loads, parse_point, parse_spec
from hypmetric.errors import SpecParse
from hypmetric.sphere_geom import INFINITY, SphericalIsometry

PROBES = np.array([0.1 + 0.2j, -0.7 + 0.05j, 1.3 - 0.4j, -2.1 + 0j, 0.5 + 0.5j, 3j, -0.3 - 1.9j])


def _same(a, b):
    return np.array_equal(a.contains(PROBES), b.contains(PROBES))


finite = st.floats(-3, 3, allow_nan=False)
positive = st.floats(0.1, 3, allow_nan=False)


@given(finite, finite, positive)
def test_disk_spec_round_trip(x, y, r):
    dom = loads(json.dumps({"kind": "disk", "center": [x, y], "radius": r}))
    assert _same(dom, D.disk(complex(x, y), r))


@given(positive, st.floats(0.05, 0.99))
def test_lune_spec_round_trip(c, frac):
    r = frac * math.sqrt(c * c + 1)
    dom = parse_spec({"kind": "lune", "c": c, "r": r})
    assert _same(dom, Lune(c, r).domain())


@given(finite, finite, st.floats(0.1, 1.9), st.floats(0, 2 * math.pi), finite)
def test_spherical_disk_with_isometry_round_trip(x, y, rho, t, ax):
    spec = {"kind": "spherical_disk", "center": [x, y], "tau_radius": rho,
            "isometry": {"kind": "rotation", "t": t, "a": [ax, 0]}}
    direct = SphericalDisk(complex(x, y), rho).domain().transform(SphericalIsometry("rotation", t, ax))
    assert _same(parse_spec(spec), direct)


@pytest.mark.parametrize("spec, direct", [
    ({"kind": "halfplane"}, D.halfplane(0j, 1j)),
    ({"kind": "annulus", "outer": 4}, D.annulus(0j, 1.0, 4.0)),
    ({"kind": "punctured_disk"}, D.punctured_disk(0j, 1.0)),
    ({"kind": "disk_exterior", "radius": 2}, D.disk_exterior(0j, 2.0)),
    ({"kind": "cap_exterior", "radius": 0.5}, D.cap_exterior(0j, 0.5)),
    ({"kind": "sector", "opening": 4.0}, D.sector(4.0)),
    ({"kind": "strip", "width": 2}, D.strip(2.0)),
    ({"kind": "cantor", "level": 2}, D.cantor_complement(2, 1.0)),
    ({"kind": "circular", "region": {"all": [{"circle": {"radius": 1}},
                                             {"line": {"point": [0, 0], "normal": [0, 1]}}]}},
     D.CircularDomain(D.Intersection(D.Side(D.GeneralizedCircle.circle(0j, 1.0)),
                                     D.Side(D.GeneralizedCircle.line(0j, 1j))))),
], ids=lambda v: v["kind"] if isinstance(v, dict) else "")
def test_kinds_match_direct_construction(spec, direct):
    assert _same(parse_spec(spec), direct)


def test_every_kind_is_documented_and_parsed():
    import hypmetric.domainspec as M
    for kind in KINDS:
        assert kind in M.__doc__


def test_grid_spec_builds_grid_domain():
    dom = parse_spec({"kind": "grid", "source": {"kind": "disk"}, "resolution": 33})
    assert isinstance(dom, D.GridDomain)
    assert dom.contains(0.2 + 0.1j) and not dom.contains(1.5)


def test_witness_point_checked():
    assert parse_spec({"kind": "disk", "witness": [0.5, 0]}) is not None
    with pytest.raises(SpecParse, match=r"\$\.witness"):
        parse_spec({"kind": "disk", "witness": [2, 0]})


def test_points():
    assert parse_point("inf") is INFINITY
    assert parse_point(2) == 2 + 0j
    assert parse_point([1, -2]) == 1 - 2j
    with pytest.raises(SpecParse):
        parse_point([1, 2, 3])
    with pytest.raises(SpecParse):
        parse_point(True)


@pytest.mark.parametrize("spec, where", [
    ({}, r"\$\.kind: missing"),
    ({"kind": "blob"}, r"\$\.kind: unknown kind"),
    ({"kind": "disk", "radius": -1}, r"\$\.radius: must be positive"),
    ({"kind": "disk", "radius": "big"}, r"\$\.radius: expected a number"),
    ({"kind": "disk", "colour": 1}, r"unknown field\(s\) colour"),
    ({"kind": "annulus", "inner": 2, "outer": 1}, r"\$\.outer: must exceed inner"),
    ({"kind": "lune", "c": 1}, r"\$\.r: missing"),
    ({"kind": "cantor", "level": 1.5}, r"\$\.level"),
    ({"kind": "circular", "region": {"all": [{"circle": {"radius": 0}}]}},
     r"\$\.region\.all\[0\]\.circle\.radius"),
    ({"kind": "circular", "region": {"circle": {"radius": 1}}, "slits": [{"segment": [[0, 0], [0, 0]]}]},
     r"\$\.slits\[0\]: endpoints coincide"),
    ({"kind": "grid", "source": {"kind": "disk", "radius": 0}}, r"\$\.source\.radius"),
    ({"kind": "disk", "isometry": {"kind": "shear"}}, r"\$\.isometry\.kind"),
])
def test_errors_name_the_field(spec, where):
    with pytest.raises(SpecParse, match=where):
        parse_spec(spec)


def test_syntax_errors_report_line_and_column():
    with pytest.raises(SpecParse, match=r"line 2, column \d+"):
        loads('{"kind": "disk",\n "radius": }')
