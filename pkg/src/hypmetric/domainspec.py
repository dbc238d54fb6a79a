"""JSON domain specifications for the command line.

A spec is one JSON object.  ``kind`` selects the shape; the remaining keys
are its parameters.  Points are ``[x, y]`` pairs, plain numbers, or the
string ``"inf"``.  Every spec may carry

* ``"isometry": {"kind": "rotation" | "inversion", "t": float, "a": point}``
  applied after construction, and
* ``"witness": point``, which must lie in the resulting domain.

Kinds and parameters (defaults in parentheses)::

    disk            center ([0,0]), radius (1)
    halfplane       point ([0,0]), normal ([0,1])
    annulus         center ([0,0]), inner (1), outer
    punctured_disk  center ([0,0]), radius (1)
    disk_exterior   center ([0,0]), radius (1)
    cap_exterior    center ([0,0]), radius (1)
    spherical_disk  center ([0,0]), tau_radius
    lune            c, r
    sector          opening, vertex ([0,0]), direction (0)
    strip           width (1), offset ([0,0]), direction (0)
    cantor          level, outer_radius (1)
    circular        region, punctures ([]), slits ([])
    grid            source (a spec), resolution (129), chart ("auto" | isometry | null)

A ``circular`` region is a tree of ``{"circle": {"center", "radius",
"inside"}}``, ``{"line": {"point", "normal"}}``, ``{"side": {"A", "B",
"D"}}``, ``{"all": [...]}`` (intersection) and ``{"any": [...]}`` (union).
Slits are ``{"segment": [p, q]}``.
"""

from __future__ import annotations

import json
from typing import Any

from . import domains as D
from .domains import Arc, GeneralizedCircle, Intersection, Lune, Side, SphericalDisk, Union
from .errors import SpecParse
from .sphere_geom import INFINITY, SphericalIsometry

KINDS = ("disk", "halfplane", "annulus", "punctured_disk", "disk_exterior", "cap_exterior",
         "spherical_disk", "lune", "sector", "strip", "cantor", "circular", "grid")


class _Reader:
    def __init__(self, obj: Any, path: str):
        if not isinstance(obj, dict):
            raise SpecParse(f"{path}: expected an object")
        self.obj, self.path = obj, path
        self.used = {"kind", "isometry", "witness"}

    def _field(self, key):
        return f"{self.path}.{key}"

    def has(self, key) -> bool:
        return key in self.obj

    def raw(self, key, default=None, required=False):
        self.used.add(key)
        if key not in self.obj:
            if required:
                raise SpecParse(f"{self._field(key)}: missing required field")
            return default
        return self.obj[key]

    def number(self, key, default=None, positive=False):
        v = self.raw(key, default, required=default is None)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SpecParse(f"{self._field(key)}: expected a number, got {v!r}")
        if positive and not v > 0:
            raise SpecParse(f"{self._field(key)}: must be positive, got {v!r}")
        return float(v)

    def point(self, key, default=None):
        v = self.raw(key, default, required=default is None)
        return parse_point(v, self._field(key))

    def finish(self):
        extra = sorted(set(self.obj) - self.used)
        if extra:
            raise SpecParse(f"{self.path}: unknown field(s) {', '.join(extra)}")


def parse_point(v, where: str = "point"):
    if v == "inf":
        return INFINITY
    if isinstance(v, bool):
        raise SpecParse(f"{where}: expected a point, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise SpecParse(f"{where}: expected [x, y], a number or \"inf\", got {v!r}")


def _finite(z, where):
    if z is INFINITY:
        raise SpecParse(f"{where}: must be finite")
    return z


def parse_isometry(obj, where: str = "$.isometry") -> SphericalIsometry:
    r = _Reader(obj, where)
    kind = r.raw("kind", "rotation")
    if kind not in ("rotation", "inversion"):
        raise SpecParse(f"{where}.kind: expected rotation or inversion, got {kind!r}")
    t = r.number("t", 0.0)
    a = _finite(r.point("a", [0, 0]), f"{where}.a")
    r.finish()
    return SphericalIsometry(kind, t, a)


def _region(obj, where: str):
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SpecParse(f"{where}: expected an object with one of circle, line, side, all, any")
    (key, val), = obj.items()
    if key in ("all", "any"):
        if not isinstance(val, list) or not val:
            raise SpecParse(f"{where}.{key}: expected a non-empty list")
        kids = [_region(v, f"{where}.{key}[{i}]") for i, v in enumerate(val)]
        return Intersection(*kids) if key == "all" else Union(*kids)
    r = _Reader(val, f"{where}.{key}")
    r.used.clear()
    if key == "circle":
        c = _finite(r.point("center", [0, 0]), f"{where}.circle.center")
        radius = r.number("radius", positive=True)
        inside = r.raw("inside", True)
        if not isinstance(inside, bool):
            raise SpecParse(f"{where}.circle.inside: expected true or false")
        r.finish()
        return Side(GeneralizedCircle.circle(c, radius, inside))
    if key == "line":
        p = _finite(r.point("point", [0, 0]), f"{where}.line.point")
        n = _finite(r.point("normal"), f"{where}.line.normal")
        if n == 0:
            raise SpecParse(f"{where}.line.normal: must be non-zero")
        r.finish()
        return Side(GeneralizedCircle.line(p, n))
    if key == "side":
        A, B, Dv = r.number("A"), _finite(r.point("B"), f"{where}.side.B"), r.number("D")
        r.finish()
        try:
            return Side(GeneralizedCircle(A, B, Dv))
        except ValueError as exc:
            raise SpecParse(f"{where}.side: {exc}") from None
    raise SpecParse(f"{where}: unknown region key {key!r}")


def _build(r: _Reader):
    kind = r.raw("kind", required=True)
    if kind not in KINDS:
        raise SpecParse(f"{r.path}.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    p = r.path
    if kind == "disk":
        return D.disk(_finite(r.point("center", [0, 0]), p + ".center"), r.number("radius", 1.0, True))
    if kind == "halfplane":
        n = _finite(r.point("normal", [0, 1]), p + ".normal")
        if n == 0:
            raise SpecParse(f"{p}.normal: must be non-zero")
        return D.halfplane(_finite(r.point("point", [0, 0]), p + ".point"), n)
    if kind == "annulus":
        inner, outer = r.number("inner", 1.0, True), r.number("outer", positive=True)
        if not outer > inner:
            raise SpecParse(f"{p}.outer: must exceed inner ({inner:g})")
        return D.annulus(_finite(r.point("center", [0, 0]), p + ".center"), inner, outer)
    if kind in ("punctured_disk", "disk_exterior", "cap_exterior"):
        make = {"punctured_disk": D.punctured_disk, "disk_exterior": D.disk_exterior,
                "cap_exterior": D.cap_exterior}[kind]
        return make(_finite(r.point("center", [0, 0]), p + ".center"), r.number("radius", 1.0, True))
    if kind == "spherical_disk":
        return SphericalDisk(r.point("center", [0, 0]), r.number("tau_radius", positive=True)).domain()
    if kind == "lune":
        return Lune(r.number("c", positive=True), r.number("r", positive=True)).domain()
    if kind == "sector":
        opening = r.number("opening", positive=True)
        if not opening < 2 * 3.141592653589793:
            raise SpecParse(f"{p}.opening: must be below 2 pi")
        return D.sector(opening, _finite(r.point("vertex", [0, 0]), p + ".vertex"), r.number("direction", 0.0))
    if kind == "strip":
        return D.strip(r.number("width", 1.0, True), _finite(r.point("offset", [0, 0]), p + ".offset"),
                       r.number("direction", 0.0))
    if kind == "cantor":
        level = r.raw("level", required=True)
        if not isinstance(level, int) or isinstance(level, bool) or not 0 <= level <= 14:
            raise SpecParse(f"{p}.level: expected an integer in [0, 14], got {level!r}")
        return D.cantor_complement(level, r.number("outer_radius", 1.0, True))
    if kind == "circular":
        expr = _region(r.raw("region", required=True), p + ".region")
        punct = r.raw("punctures", [])
        if not isinstance(punct, list):
            raise SpecParse(f"{p}.punctures: expected a list")
        punct = [parse_point(q, f"{p}.punctures[{i}]") for i, q in enumerate(punct)]
        slits = []
        raw = r.raw("slits", [])
        if not isinstance(raw, list):
            raise SpecParse(f"{p}.slits: expected a list")
        for i, s in enumerate(raw):
            where = f"{p}.slits[{i}]"
            if not isinstance(s, dict) or set(s) != {"segment"} or not isinstance(s["segment"], list) \
                    or len(s["segment"]) != 2:
                raise SpecParse(f"{where}: expected {{\"segment\": [p, q]}}")
            a = _finite(parse_point(s["segment"][0], where + ".segment[0]"), where)
            b = _finite(parse_point(s["segment"][1], where + ".segment[1]"), where)
            if a == b:
                raise SpecParse(f"{where}: endpoints coincide")
            slits.append(Arc.segment(a, b))
        return D.CircularDomain(expr, punctures=tuple(punct), slits=tuple(slits), name=r.raw("name", ""))
    if kind == "grid":
        src = parse_spec(r.raw("source", required=True), p + ".source")
        n = r.raw("resolution", 129)
        if not isinstance(n, int) or isinstance(n, bool) or n < 9:
            raise SpecParse(f"{p}.resolution: expected an integer >= 9, got {n!r}")
        chart = r.raw("chart", "auto" if not src.is_bounded else None)
        if chart == "auto":
            from .quantities import auto_chart
            chart = auto_chart(src)
        elif chart is not None:
            chart = parse_isometry(chart, p + ".chart")
        return D.rasterize(src, n, chart=chart)
    raise SpecParse(f"{p}.kind: unhandled kind {kind!r}")   # pragma: no cover


def parse_spec(obj, path: str = "$"):
    """Build a domain from a decoded JSON object."""
    r = _Reader(obj, path)
    try:
        dom = _build(r)
    except SpecParse:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecParse(f"{path}: {exc}") from None
    r.finish()
    if r.has("isometry"):
        if isinstance(dom, D.GridDomain):
            raise SpecParse(f"{path}.isometry: apply isometries to the source of a grid spec")
        dom = dom.transform(parse_isometry(r.obj["isometry"], path + ".isometry"))
    if r.has("witness"):
        w = parse_point(r.obj["witness"], path + ".witness")
        if not dom.contains(w):
            raise SpecParse(f"{path}.witness: point is not inside the domain")
    return dom


def loads(text: str):
    """Parse spec text; JSON syntax errors report line and column."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParse(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_spec(obj)


def load(path: str):
    with open(path) as fh:
        return loads(fh.read())
