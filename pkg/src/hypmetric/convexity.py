"""Spherical and Euclidean convexity of circular-arc domains.

Convexity is decided exactly from the boundary: every arc must bound a
convex side (spherically: a cap of tau-radius at most 1; Euclidean: the
inside of a circle or a half-plane) and every corner must have interior
angle at most pi.  Non-convex domains get a certificate, a *witness lune*
``G = Delta_1 minus closed Delta_2`` lying in the domain, with orthogonal
boundary circles and the spherical (or Euclidean) midpoint of the concave
arc on the domain's boundary.

The witness search follows the extremal-angle construction: a pair of
domain points whose geodesic leaves the domain is normalized onto the real
segment ``[x1, x2]``; the boundary point ``a`` maximizing
``u(z) = |arg((x2 - z)/(z - x1))|`` inside a lens over the segment fixes
the circle ``C`` through ``x1, x2, a``; ``Delta_2`` is the disk bounded by
``C`` and ``Delta_1`` the largest orthogonal disk with ``a`` as midpoint
whose crescent stays in the domain.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .domains import (
    Arc,
    CircularDomain,
    GeneralizedCircle,
    GridDomain,
    Lune,
    SphericalDisk,
)
from .errors import AntipodalPair, NotApplicable, UnsupportedBoundary, WitnessNotFound
from .sphere_geom import (
    INFINITY,
    SphericalIsometry,
    antipode,
    as_point,
    from_sphere,
    pseudo_tau,
    spherical_theta,
    tau_to_chi,
    to_sphere,
)

MIDPOINT_TOL = 1e-6
_U_CAPS = (0.5 * math.pi, 2.0 * math.pi / 3.0, 5.0 * math.pi / 6.0)
_ANGLE_SLACK = 1e-9


def _as_circular(domain) -> CircularDomain:
    if isinstance(domain, (Lune, SphericalDisk)):
        return domain.domain()
    if isinstance(domain, CircularDomain):
        return domain
    raise UnsupportedBoundary("convexity tests need a boundary made of circular arcs")


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Geodesic:
    """Shorter great-circle arc between two points (``arc`` is None when
    the points coincide)."""

    start: object
    end: object
    arc: Optional[Arc]
    length: float

    def sample(self, n: int = 256) -> np.ndarray:
        if self.arc is None:
            return np.array([complex(self.start)]) if self.start is not INFINITY else np.array([])
        return self.arc.sample(n)


def spherical_geodesic(z1, z2) -> Geodesic:
    """The great circle through ``z1``, ``z2`` (and ``antipode(z1)``),
    restricted to its shorter arc."""
    z1, z2 = as_point(z1), as_point(z2)
    p1, p2 = to_sphere(z1), to_sphere(z2)
    n = np.cross(p1, p2)
    if float(np.linalg.norm(n)) < 1e-15:
        if float(p1 @ p2) < 0:
            raise AntipodalPair("antipodal points are joined by infinitely many geodesics")
        return Geodesic(z1, z2, None, 0.0)
    circle = GeneralizedCircle.from_cap(n, 0.0)
    mid = p1 + p2
    arc = Arc.through(circle, z1, from_sphere(mid / np.linalg.norm(mid)), z2)
    return Geodesic(z1, z2, arc, float(spherical_theta(z1, z2)))


def _arcs_meet(a1: Arc, a2: Arc) -> bool:
    """Whether two circular arcs share a point (exact circle intersection)."""
    c1, c2 = a1.circle, a2.circle
    if c1.same_circle(c2) != 0:
        if a1.is_full or a2.is_full:
            return True
        probes = [a2.sphere_point(f) for f in (0.0, 0.5, 1.0)]
        if any(a1.contains_angle(float(c1.sphere_angle(p))) for p in probes):
            return True
        probes = [a1.sphere_point(f) for f in (0.0, 0.5, 1.0)]
        return any(a2.contains_angle(float(c2.sphere_angle(p))) for p in probes)
    for p in c1.intersection_points(c2):
        if a1.contains_angle(float(c1.sphere_angle(p))) and a2.contains_angle(float(c2.sphere_angle(p))):
            return True
    return False


def _point_on_arc(arc: Arc, z) -> bool:
    p = to_sphere(as_point(z))
    m, h, _, _ = arc.circle._cap
    if abs(float(p @ m) - h) > 1e-12:
        return False
    return bool(arc.contains_angle(float(arc.circle.sphere_angle(p))))


def _path_in_domain(domain: CircularDomain, z1, z2, path: Optional[Arc]) -> bool:
    if not (domain.contains(z1) and domain.contains(z2)):
        return False
    if path is None:
        return True
    if any(_arcs_meet(path, b.arc) for b in domain.boundary_arcs):
        return False
    return not any(_point_on_arc(path, p) for p in domain.punctures)


def geodesic_in_domain(domain, z1, z2, clearance: float = 0.0, samples: int = 2048) -> bool:
    """Whether the shorter geodesic from ``z1`` to ``z2`` lies in the domain.

    Exact for circular-arc domains (the arc is intersected with every
    boundary arc).  Grid domains are sampled and every sample must keep
    ``clearance`` from the boundary.
    """
    if isinstance(domain, GridDomain):
        g = spherical_geodesic(z1, z2)
        pts = g.sample(samples)
        w = domain.to_grid(pts) if hasattr(domain, "to_grid") else pts
        return bool(np.all(domain.contains(pts)) and np.all(domain.boundary_distance(w) >= clearance))
    domain = _as_circular(domain)
    return _path_in_domain(domain, z1, z2, spherical_geodesic(z1, z2).arc)


def segment_in_domain(domain, z1, z2) -> bool:
    """Whether the straight segment from ``z1`` to ``z2`` lies in the domain."""
    domain = _as_circular(domain)
    z1, z2 = complex(z1), complex(z2)
    return _path_in_domain(domain, z1, z2, None if z1 == z2 else Arc.segment(z1, z2))


# ---------------------------------------------------------------------------
# exact convexity tests
# ---------------------------------------------------------------------------


@dataclass
class ConvexityReport:
    """Verdict plus the per-arc and per-corner evidence behind it."""

    convex: bool
    geometry: str
    arcs: list = field(default_factory=list)
    corners: list = field(default_factory=list)
    antipodal_pair: Optional[tuple] = None
    reasons: list = field(default_factory=list)

    def __bool__(self):
        return self.convex

    def to_dict(self) -> dict:
        def pt(z):
            return "inf" if z is INFINITY else [complex(z).real, complex(z).imag]

        return {
            "convex": self.convex,
            "geometry": self.geometry,
            "arcs": self.arcs,
            "corners": [dict(c, point=pt(c["point"])) for c in self.corners],
            "antipodal_pair": None if self.antipodal_pair is None else [pt(z) for z in self.antipodal_pair],
            "reasons": self.reasons,
        }


@dataclass
class _Corner:
    point: object                  # vertex in the original coordinates
    chart: SphericalIsometry       # sends the vertex to 0
    sectors: list                  # (start angle, width, in domain) in the chart
    tangents: list                 # unit tangent directions of incident arcs (chart)

    @property
    def interior_angle(self) -> float:
        return float(sum(w for _, w, inside in self.sectors if inside))

    def complement_wedge(self):
        """(bisector direction, width) of the widest complementary sector
        in the chart, or the first tangent with width 0 when the
        complement is a curve (a slit tip)."""
        out = [(s, w) for s, w, inside in self.sectors if not inside]
        if not out:
            return self.tangents[0], 0.0
        s, w = max(out, key=lambda x: x[1])
        return cmath.exp(1j * (s + w / 2.0)), w


def _vertices(domain: CircularDomain) -> list:
    pts = []
    for b in domain.boundary_arcs:
        for e in b.arc.endpoints():
            if not any(float(pseudo_tau(e, q)) < 1e-9 for q in pts):
                pts.append(e)
    return pts


def _corner(domain: CircularDomain, v) -> _Corner:
    P = SphericalIsometry.moving_to_origin(v)
    origin = to_sphere(v)
    tangents = []
    for b in domain.boundary_arcs:
        if b.arc.is_full:
            continue
        arc = b.arc.transform(P)
        for end, f in ((0, 1e-4), (1, 1.0 - 1e-4)):
            if float(np.linalg.norm(b.arc.sphere_point(float(end)) - origin)) > 1e-9:
                continue
            n = complex(arc.circle.inward_normal(0j))
            t = 1j * n
            q = arc.point(f)
            if q is INFINITY:
                continue
            if (complex(q) * t.conjugate()).real < 0:
                t = -t
            tangents.append(t)
    angles = sorted(set(round(float(np.mod(cmath.phase(t), 2 * math.pi)), 13) for t in tangents))
    if not angles:
        return _Corner(v, P, [(0.0, 2 * math.pi, True)], [1.0 + 0j])
    dom = domain.transform(P)
    eps = 1e-7
    sectors = []
    for k, s in enumerate(angles):
        e = angles[(k + 1) % len(angles)]
        width = float(np.mod(e - s, 2 * math.pi)) or 2 * math.pi
        probe = eps * cmath.exp(1j * (s + width / 2.0))
        sectors.append((s, width, bool(dom.contains(probe))))
    return _Corner(v, P, sectors, tangents)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    rr = np.sqrt(1.0 - z * z)
    return np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=1)


def _antipodal_pair(domain: CircularDomain, n: int = 4096):
    pts = _fibonacci_sphere(n)
    w = from_sphere(pts)
    w = np.asarray(w, dtype=complex)
    ok = np.isfinite(w) & (w != 0)
    z = w[ok]
    anti = -1.0 / np.conj(z)
    both = domain.contains(z) & domain.contains(anti)
    if both.any():
        j = int(np.argmax(both))
        return complex(z[j]), complex(anti[j])
    return None


def _arc_convex(b, geometry: str) -> tuple:
    if b.side == 0:
        return False, "slit"
    c = b.domain_side_circle
    if geometry == "spherical":
        s = c.A + c.D
        return bool(s >= -1e-12), f"cap height {c.cap_height:.6g}"
    if c.is_line:
        return True, "line"
    return bool(c.A > 0), "domain inside circle" if c.A > 0 else "domain outside circle"


def _convexity(domain, geometry: str) -> ConvexityReport:
    domain = _as_circular(domain)
    rep = ConvexityReport(True, geometry)
    for k, b in enumerate(domain.boundary_arcs):
        ok, why = _arc_convex(b, geometry)
        rep.arcs.append({"index": k, "convex": ok, "detail": why})
        if not ok:
            rep.convex = False
            rep.reasons.append(f"arc {k}: {why}")
    punctures = [p for p in domain.punctures if geometry == "spherical" or p is not INFINITY]
    if punctures:
        rep.convex = False
        rep.reasons.append(f"{len(punctures)} puncture(s)")
    for v in _vertices(domain):
        if geometry == "euclidean" and v is INFINITY:
            continue
        cor = _corner(domain, v)
        angle = cor.interior_angle
        ok = angle <= math.pi + _ANGLE_SLACK
        rep.corners.append({"point": v, "interior_angle": angle, "convex": ok})
        if not ok:
            rep.convex = False
            rep.reasons.append(f"reflex corner at {v} (angle {angle:.6g})")
    if geometry == "spherical":
        if not domain.has_boundary:
            rep.convex = False
            rep.reasons.append("whole sphere")
        else:
            pair = _antipodal_pair(domain)
            if pair is not None:
                rep.antipodal_pair = pair
                rep.convex = False
                rep.reasons.append("contains an antipodal pair")
    return rep


def is_spherically_convex(domain) -> ConvexityReport:
    """Exact spherical-convexity test with a certificate (truthy when convex)."""
    return _convexity(domain, "spherical")


def is_euclidean_convex(domain) -> ConvexityReport:
    """Exact Euclidean-convexity test of the planar part of the domain."""
    return _convexity(domain, "euclidean")


# ---------------------------------------------------------------------------
# witness lunes
# ---------------------------------------------------------------------------


def _circle_dict(c: GeneralizedCircle) -> list:
    return [c.A, [c.B.real, c.B.imag], c.D]


def _circle_from(d) -> GeneralizedCircle:
    return GeneralizedCircle(float(d[0]), complex(d[1][0], d[1][1]), float(d[2]))


def _point_dict(z):
    return "inf" if z is INFINITY else [complex(z).real, complex(z).imag]


def _point_from(d):
    return INFINITY if d == "inf" else complex(d[0], d[1])


@dataclass(frozen=True)
class WitnessLune:
    """``T(Lune(c, r))``: a lune of class C-hat inside the domain whose
    concave arc's spherical midpoint lies on the domain's boundary."""

    c: float
    r: float
    T: SphericalIsometry
    midpoint: object
    containment_margin: float
    disk1: GeneralizedCircle
    disk2: GeneralizedCircle
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def lune(self) -> Lune:
        return Lune(self.c, self.r)

    def domain(self) -> CircularDomain:
        return self.lune.domain().transform(self.T)

    def contains(self, z):
        return self.lune.contains(self.T.inverse()(z))

    def to_dict(self) -> dict:
        return {
            "type": "spherical",
            "c": self.c,
            "r": self.r,
            "T": self.T.to_dict(),
            "midpoint": _point_dict(self.midpoint),
            "containment_margin": self.containment_margin,
            "disk1": _circle_dict(self.disk1),
            "disk2": _circle_dict(self.disk2),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessLune":
        t = d["T"]
        T = SphericalIsometry(t["kind"], t["t"], complex(t["a"][0], t["a"][1]))
        return cls(float(d["c"]), float(d["r"]), T, _point_from(d["midpoint"]),
                   float(d["containment_margin"]), _circle_from(d["disk1"]), _circle_from(d["disk2"]))


@dataclass(frozen=True)
class KeoghWitness:
    """Euclidean witness ``D1 minus closed D2`` with orthogonal circles and
    the Euclidean midpoint of the concave arc on the domain's boundary."""

    center1: complex
    radius1: float
    center2: complex
    radius2: float
    midpoint: complex
    containment_margin: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        out = (np.abs(z - self.center1) < self.radius1) & (np.abs(z - self.center2) > self.radius2)
        return bool(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "type": "euclidean",
            "center1": _point_dict(self.center1),
            "radius1": self.radius1,
            "center2": _point_dict(self.center2),
            "radius2": self.radius2,
            "midpoint": _point_dict(self.midpoint),
            "containment_margin": self.containment_margin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KeoghWitness":
        return cls(_point_from(d["center1"]), float(d["radius1"]), _point_from(d["center2"]),
                   float(d["radius2"]), _point_from(d["midpoint"]), float(d["containment_margin"]))


def witness_from_dict(d: dict):
    return KeoghWitness.from_dict(d) if d.get("type") == "euclidean" else WitnessLune.from_dict(d)


# -- frames ------------------------------------------------------------------
#
# In a frame the concave disk is {|w| < rho} and the midpoint is -rho.  The
# disks orthogonal to |w| = rho that have -rho as the midpoint of their arc
# inside are the Apollonius disks {|w + rho| < k |w - rho|}, 0 < k < 1,
# nested and increasing in k.


def _apollonius(rho: float, k: float):
    """(centre, radius) of the Apollonius disk of ratio ``k`` about -rho."""
    den = 1.0 - k * k
    return -rho * (1.0 + k * k) / den, 2.0 * rho * k / den


@dataclass
class _Frame:
    rho: float
    fwd: Callable
    back: Callable
    iso: Optional[SphericalIsometry] = None


def _spherical_frame(disk2: GeneralizedCircle, a) -> SphericalIsometry:
    """Isometry sending the cap centre of ``disk2`` to 0 and ``a`` onto the
    negative real axis."""
    centre = disk2.spherical_center
    w = SphericalIsometry.moving_to_origin(centre)(a)
    return SphericalIsometry.moving_to_origin(centre, math.pi - cmath.phase(complex(w)))


def _make_frame(disk2: GeneralizedCircle, a, geometry: str) -> _Frame:
    if geometry == "spherical":
        K = _spherical_frame(disk2, a)
        return _Frame(float(disk2.tau_radius), K, K.inverse(), K)
    c2, rho = disk2.center, disk2.radius
    rot = -rho / (complex(a) - c2)
    return _Frame(rho, lambda z: rot * (np.asarray(z, dtype=complex) - c2),
                  lambda w: np.asarray(w, dtype=complex) / rot + c2)


class _BoundaryCloud:
    """Boundary samples of a domain in frame coordinates, refined lazily
    on arcs that come near the disk being tested."""

    def __init__(self, domain: CircularDomain, frame: _Frame, geometry: str, n: int):
        self.frame = frame
        self.arcs = []
        for b in domain.boundary_arcs:
            arc = b.arc.transform(frame.iso) if geometry == "spherical" else b.arc
            self.arcs.append(arc)
        self.n = n
        self.coarse = [self._sample(arc, n) for arc in self.arcs]
        pts = [p for p in domain.punctures]
        if geometry == "spherical":
            pts = [frame.iso(p) for p in pts]
        self.points = np.array([complex(p) for p in pts if p is not INFINITY], dtype=complex)
        if geometry == "euclidean":
            self.points = np.asarray(frame.fwd(self.points), dtype=complex)
        self.geometry = geometry
        self._fine = {}

    def _sample(self, arc: Arc, n: int) -> np.ndarray:
        w = arc.sample(n)
        if self.geometry_is_euclid():
            w = np.asarray(self.frame.fwd(w), dtype=complex)
        return w[np.isfinite(w)]

    def geometry_is_euclid(self) -> bool:
        return self.frame.iso is None

    def fine(self, k: int) -> np.ndarray:
        if k not in self._fine:
            self._fine[k] = self._sample(self.arcs[k], 16 * self.n)
        return self._fine[k]

    def hits(self, inside: Callable, near: Callable) -> bool:
        if self.points.size and inside(self.points).any():
            return True
        for k, w in enumerate(self.coarse):
            if w.size == 0:
                continue
            if inside(w).any():
                return True
            if near(w).any() and inside(self.fine(k)).any():
                return True
        return False


def _crescent_tests(rho: float, k: float):
    s, q = _apollonius(rho, k)

    def inside(w):
        return (np.abs(w - s) < q * (1.0 - 1e-12)) & (np.abs(w) > rho * (1.0 + 1e-9))

    def near(w):
        return np.abs(w - s) < 1.5 * q + 1e-3 * rho

    return s, q, inside, near


def _crescent_clear(domain, frame: _Frame, cloud: _BoundaryCloud, k: float) -> bool:
    rho = frame.rho
    s, q, inside, near = _crescent_tests(rho, k)
    w0 = -rho - 0.5 * (-(s) + q - rho)
    z0 = frame.back(complex(w0))
    if np.ndim(z0) == 0 and z0 is not INFINITY:
        z0 = complex(z0)
    if not domain.contains(z0):
        return False
    return not cloud.hits(inside, near)


def _largest_k(domain, frame: _Frame, cloud: _BoundaryCloud) -> Optional[float]:
    hi = 1.0 - 1e-6
    if _crescent_clear(domain, frame, cloud, hi):
        return hi
    lo = 1e-9
    if not _crescent_clear(domain, frame, cloud, lo):
        return None
    for _ in range(50):
        mid = math.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if _crescent_clear(domain, frame, cloud, mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * hi:
            break
    return lo


def _crescent_samples(rho: float, k: float, n: int = 48) -> np.ndarray:
    """Points of the frame crescent: a grid plus a fan shrinking onto -rho."""
    s, q = _apollonius(rho, k)
    x = np.linspace(s - q, s + q, n)
    y = np.linspace(-q, q, n)
    X, Y = np.meshgrid(x, y)
    W = (X + 1j * Y).ravel()
    t = np.geomspace(1e-6 * rho, q, 40)
    phi = np.linspace(-0.49 * math.pi, 0.49 * math.pi, 15)
    T, F = np.meshgrid(t, phi)
    fan = (-rho - T * np.exp(1j * F)).ravel()
    W = np.concatenate([W, fan])
    keep = (np.abs(W - s) < q) & (np.abs(W) > rho * (1.0 + 1e-12))
    return W[keep]


def _tangent_geodesic_samples(rho: float, k: float, n: int = 400, geometry: str = "spherical"):
    """Points (frame coordinates) of the geodesic tangent to |w| = rho at
    -rho that lie in the convex disk, excluding the tangency point."""
    s, q = _apollonius(rho, k)
    t = np.geomspace(1e-6 * rho, 2.0 * q, n)
    if geometry == "euclidean":
        w = np.concatenate([-rho + 1j * t, -rho - 1j * t])
    else:
        cg, Rg = 0.5 * (1.0 / rho - rho), 0.5 * (1.0 / rho + rho)
        ang = t / Rg
        w = np.concatenate([cg - Rg * np.exp(1j * ang), cg - Rg * np.exp(-1j * ang)])
    return w[np.abs(w - s) < q]


def _clearance(domain: CircularDomain, z: np.ndarray, geometry: str) -> np.ndarray:
    if geometry == "spherical":
        return np.asarray(tau_to_chi(domain.tau_distance_raw(z), "theta"))
    return np.asarray(domain.euclid_distance_raw(z))


def _normal_form(h1: float, h2: float):
    """(c, r) of the normalized lune whose disks have cap heights h1, h2."""
    c = h1 / math.sqrt(1.0 - h1 * h1)
    S = 2.0 * h2 / math.sqrt(1.0 - h2 * h2)
    r = 0.5 * (-S + math.sqrt(S * S + 4.0 * (1.0 + c * c)))
    return c, r


def _assemble(domain, disk2: GeneralizedCircle, a, geometry: str, n: int, info: dict):
    """Largest admissible convex disk for a given concave disk and midpoint."""
    frame = _make_frame(disk2, a, geometry)
    cloud = _BoundaryCloud(domain, frame, geometry, n)
    kstar = _largest_k(domain, frame, cloud)
    if kstar is None:
        info["failure"] = "no admissible convex disk"
        return None
    k = 0.9 * kstar
    rho = frame.rho
    s, q = _apollonius(rho, k)
    W = _crescent_samples(rho, k)
    far = np.abs(W + rho) > 0.25 * q
    Z = np.asarray(frame.back(W[far]), dtype=complex)
    Z = Z[np.isfinite(Z)]
    clear = _clearance(domain, Z, geometry)
    margin = float(np.min(clear)) if clear.size else 0.0
    info.update({"k": k, "k_max": kstar, "rho": rho})
    if geometry == "euclidean":
        c1 = complex(frame.back(complex(s)))
        scale = abs(complex(frame.back(1.0)) - complex(frame.back(0.0)))
        c2 = complex(frame.back(0.0))
        return KeoghWitness(c1, q * scale, c2, rho * scale, complex(a), margin, info)
    K, Kinv = frame.iso, frame.back
    disk1 = GeneralizedCircle.circle(s, q).transform(Kinv)
    c, r = _normal_form(disk1.cap_height, disk2.cap_height)
    G = Lune(c, r)
    T = Kinv.compose(_spherical_frame(G.concave_disk, G.midpoint()))
    info["frame_consistent"] = bool(T(G.midpoint()) is not INFINITY
                                    and disk1.same_circle(G.convex_side.transform(T), 1e-6) == 1
                                    and disk2.same_circle(G.concave_disk.transform(T), 1e-6) == 1)
    return WitnessLune(c, r, T, T(G.midpoint()), margin, disk1, disk2, info)


# -- extremal point ------------------------------------------------------------


def _u(z, x1, x2):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(np.angle((x2 - z) / (z - x1)))


def _side_of(z, x1, x2):
    return np.sign(((np.asarray(z) - x1) / (x2 - x1)).imag)


def _extremal(arcs, points, x1, x2, side: int, cap: float, n: int):
    """Boundary point maximizing ``u`` on one side of the segment inside
    the lens ``u < cap``; ties go to the first sample found."""
    best_u, best = -1.0, None
    for arc in arcs:
        fr = np.arange(n) / n if arc.is_full else np.linspace(0.0, 1.0, n)
        w = np.asarray(from_sphere(arc.sphere_point(fr)), dtype=complex)
        ok = np.isfinite(w)
        if not ok.any():
            continue
        u = np.where(ok, _u(np.where(ok, w, 0), x1, x2), -1.0)
        sel = ok & (_side_of(np.where(ok, w, 0), x1, x2) == side) & (u < cap)
        if not sel.any():
            continue
        j = int(np.argmax(np.where(sel, u, -1.0)))
        if u[j] > best_u:
            best_u, best = float(u[j]), (arc, float(fr[j]), complex(w[j]))
    for p in points:
        if p is INFINITY:
            continue
        if _side_of(p, x1, x2) == side and _u(p, x1, x2) < cap and _u(p, x1, x2) > best_u:
            best_u, best = float(_u(p, x1, x2)), (None, 0.0, complex(p))
    if best is None:
        return None
    arc, f, w = best
    if arc is not None:
        step = 1.0 / n

        def neg(fr):
            p = arc.point(fr if arc.is_full else min(max(fr, 0.0), 1.0))
            if p is INFINITY or _side_of(p, x1, x2) != side or _u(p, x1, x2) >= cap:
                return 1.0
            return -float(_u(p, x1, x2))

        lo, hi = f - step, f + step
        if not arc.is_full:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        if -res.fun > best_u:
            best_u, w = -float(res.fun), complex(arc.point(res.x))
    return best_u, w


def _segment_complement(domain: CircularDomain, x1: complex, x2: complex, n: int):
    """Points of the open segment (x1, x2) outside the domain."""
    out = []
    seg = Arc.segment(x1, x2)
    for b in domain.boundary_arcs:
        for p in seg.circle.intersection_points(b.arc.circle):
            if seg.contains_angle(float(seg.circle.sphere_angle(p))) and \
                    b.arc.contains_angle(float(b.arc.circle.sphere_angle(p))):
                out.append(complex(from_sphere(p)))
    for p in domain.punctures:
        if p is not INFINITY and _point_on_arc(seg, p):
            out.append(complex(p))
    t = np.linspace(0.0, 1.0, n)[1:-1]
    z = x1 + t * (x2 - x1)
    out.extend(z[~domain.contains(z)].tolist())
    return [complex(p) for p in out if p not in (x1, x2)]


def _disk2_candidates(dom_n: CircularDomain, x1: complex, x2: complex, n: int, info: dict):
    """Concave disks ``Delta_2`` (chart coordinates) with their midpoints."""
    arcs = [b.arc for b in dom_n.boundary_arcs]
    found = []
    for cap in _U_CAPS:
        for side in (1, -1):
            ext = _extremal(arcs, dom_n.punctures, x1, x2, side, cap, n)
            if ext is None or ext[0] <= 1e-12 or ext[0] >= cap * (1.0 - 1e-3):
                continue
            found.append((ext[0], side, cap, ext[1]))
        if found:
            break
    found.sort(key=lambda f: f[0])
    out = [(GeneralizedCircle.through(x1, x2, a), a, {"u": u, "side": side, "cap": cap})
           for u, side, cap, a in found]
    if out:
        return out
    # the complement only touches the segment: shift the chord off it
    hits = _segment_complement(dom_n, x1, x2, n)
    if not hits:
        return []
    d = x2 - x1
    for eta in (0.1, 0.03, 0.01):
        y1, y2 = x1 - 1j * eta * d, x2 - 1j * eta * d
        t = np.linspace(0.0, 1.0, 64)
        legs = np.concatenate([x1 + t * (y1 - x1), x2 + t * (y2 - x2)])
        if not dom_n.contains(legs).all():
            continue
        u = np.array([_u(h, y1, y2) for h in hits])
        a = hits[int(np.argmax(u))]
        out.append((GeneralizedCircle.through(y1, y2, a), a, {"u": float(u.max()), "eta": eta}))
        break
    return out


def _from_pair(domain: CircularDomain, z1, z2, geometry: str, n: int, info: dict):
    if geometry == "spherical":
        P = SphericalIsometry.moving_to_origin(z1)
        N = SphericalIsometry.moving_to_origin(z1, -cmath.phase(complex(P(z2))))
        dom_n = domain.transform(N)
        x1, x2 = 0j, complex(abs(complex(P(z2))))
        back = N.inverse()
    else:
        dom_n, x1, x2, back = domain, complex(z1), complex(z2), None
    for disk2, a, meta in _disk2_candidates(dom_n, x1, x2, n, info):
        if disk2.is_line:
            continue
        if back is not None:
            disk2, a = disk2.transform(back), back(a)
            if not disk2.cap_height > 1e-12:
                continue
        sub = dict(info, **meta)
        w = _assemble(domain, disk2, a, geometry, n, sub)
        if w is not None:
            return w
    return None


# -- seeds ----------------------------------------------------------------------


@dataclass
class _Seed:
    kind: str
    point: object
    direction: complex       # unit vector into the complement (chart of point)
    chart: Optional[SphericalIsometry]
    wedge: float = 0.0
    radius: float = math.inf


def _chart_at(p, d: complex) -> SphericalIsometry:
    """Isometry sending ``p`` to 0 and the direction ``d`` at ``p`` to -i."""
    return SphericalIsometry.moving_to_origin(p, cmath.phase(-1j / d))


def _seeds(domain: CircularDomain, geometry: str, fractions) -> list:
    out = []
    for b in domain.boundary_arcs:
        if b.side == 0:
            continue
        ok, _ = _arc_convex(b, geometry)
        if ok:
            continue
        comp = b.domain_side_circle.flipped()
        for f in fractions:
            p = b.arc.point(f)
            if p is INFINITY:
                continue
            d = complex(comp.inward_normal(complex(p)))
            if geometry == "spherical":
                P = _chart_at(p, d)
                img = comp.transform(P)
                R = math.inf if img.is_line else img.radius
                out.append(_Seed("concave arc", p, d, P, radius=R))
            else:
                out.append(_Seed("concave arc", p, d, None, radius=comp.radius))
    for v in _vertices(domain):
        if geometry == "euclidean" and v is INFINITY:
            continue
        cor = _corner(domain, v)
        if cor.interior_angle <= math.pi + _ANGLE_SLACK:
            continue
        dchart, width = cor.complement_wedge()
        P0 = cor.chart       # v -> 0, derivative argument t
        if geometry == "spherical":
            P = SphericalIsometry.moving_to_origin(v, P0.t + cmath.phase(-1j / dchart))
            out.append(_Seed("reflex corner", v, dchart, P, wedge=width))
        else:
            # angles of the chart at v are rotated by arg P0'(v) = t
            d = dchart * cmath.exp(-1j * P0.t)
            out.append(_Seed("reflex corner", complex(v), d, None, wedge=width))
    for p in domain.punctures:
        if geometry == "euclidean" and p is INFINITY:
            continue
        P = SphericalIsometry.moving_to_origin(p) if geometry == "spherical" else None
        out.append(_Seed("puncture", p, -1j, P))
    return out


def _pairs(seed: _Seed, geometry: str, levels: int):
    """Candidate pairs straddling the seed, from coarse to fine."""
    for j in range(levels):
        delta = 0.3 * 2.0 ** (-j)
        if seed.kind == "concave arc":
            eps = delta * delta / (4.0 * seed.radius)
        elif seed.kind == "reflex corner":
            half = math.tan(seed.wedge / 2.0)
            eps = delta if half <= 0.5 else 0.5 * delta / half
        else:
            eps = 0.0
        local = (-delta - 1j * eps, delta - 1j * eps)
        if geometry == "spherical":
            inv = seed.chart.inverse()
            yield tuple(inv(w) for w in local)
        else:
            rot = 1j * seed.direction
            yield tuple(complex(seed.point) + w * rot for w in local)


def _pair_ok(domain: CircularDomain, z1, z2, geometry: str) -> bool:
    if z1 is INFINITY or z2 is INFINITY:
        return False
    if not (domain.contains(z1) and domain.contains(z2)):
        return False
    if geometry == "spherical":
        if not pseudo_tau(z1, z2) < 1.0:
            return False
        return not geodesic_in_domain(domain, z1, z2)
    return not segment_in_domain(domain, z1, z2)


def _random_pairs(domain: CircularDomain, geometry: str, count: int = 400):
    pts = _fibonacci_sphere(2048)
    z = np.asarray(from_sphere(pts), dtype=complex)
    z = z[np.isfinite(z)]
    z = z[domain.contains(z)]
    if geometry == "euclidean":
        lo = np.percentile(np.abs(z), 90) if z.size else 0
        z = z[np.abs(z) <= lo]
    rng = np.random.default_rng(0)
    for _ in range(count):
        if z.size < 2:
            return
        i, j = rng.integers(z.size, size=2)
        if i != j:
            yield complex(z[i]), complex(z[j])


def _find(domain, geometry: str, max_doublings: int, verify: Callable):
    domain = _as_circular(domain)
    report = _convexity(domain, geometry)
    if report.convex:
        raise NotApplicable(f"domain is {geometry}ly convex; no witness exists")
    attempts = []
    for level in range(max_doublings + 1):
        n = 512 * 2 ** level
        fractions = [0.5, 0.25, 0.75] + [m / 2 ** (level + 3) for m in range(1, 2 ** (level + 3), 2)]
        seeds = _seeds(domain, geometry, fractions[: 3 + 4 * level])
        sources = [(s.kind, _pairs(s, geometry, 26 + 4 * level)) for s in seeds]
        sources.append(("search", _random_pairs(domain, geometry, 100 * (level + 1))))
        for kind, pairs in sources:
            tried = 0
            for z1, z2 in pairs:
                if not _pair_ok(domain, z1, z2, geometry):
                    continue
                info = {"seed": kind, "pair": (z1, z2), "level": level}
                w = _from_pair(domain, z1, z2, geometry, n, info)
                tried += 1
                if w is not None and verify(domain, w):
                    return w
                attempts.append({"seed": kind, "level": level, "failure": info.get("failure", "unverified")})
                if tried >= 3:
                    break
    raise WitnessNotFound("no witness found", diagnostics={"attempts": attempts[-50:],
                                                           "reasons": report.reasons})


def find_spherical_nonconvexity_witness(domain, max_doublings: int = 2) -> WitnessLune:
    """Witness lune of class C-hat for a domain that is not spherically convex."""
    return _find(domain, "spherical", max_doublings, verify_witness)


def find_euclidean_nonconvexity_witness(domain, max_doublings: int = 2) -> KeoghWitness:
    """Euclidean witness (orthogonal disks, Euclidean midpoint on the
    boundary) for a planar domain that is not convex."""
    return _find(domain, "euclidean", max_doublings, verify_keogh_witness)


# -- verification -----------------------------------------------------------------


@dataclass
class WitnessCheck:
    """Named checks of a witness; truthy when all pass."""

    checks: dict

    def __bool__(self):
        return all(ok for ok, _ in self.checks.values())

    @property
    def failed(self) -> list:
        return [k for k, (ok, _) in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {k: {"ok": bool(ok), "detail": detail} for k, (ok, detail) in self.checks.items()}


def _sample_boundary(domain: CircularDomain, n: int) -> np.ndarray:
    pts = [b.arc.sample(n) for b in domain.boundary_arcs]
    pts.append(np.array([complex(p) for p in domain.punctures if p is not INFINITY], dtype=complex))
    return np.concatenate(pts) if pts else np.array([], dtype=complex)


def _check_region(domain, frame: _Frame, rho: float, k: float, geometry: str, samples: int, checks: dict):
    W = _crescent_samples(rho, k, max(16, int(math.sqrt(samples))))
    Z = np.asarray(frame.back(W), dtype=complex)
    fin = np.isfinite(Z)
    inside = domain.contains(Z[fin])
    checks["crescent_in_domain"] = (bool(inside.all()), f"{int((~inside).sum())} of {inside.size} outside")
    s, q, crescent, _ = _crescent_tests(rho, k)
    if geometry == "spherical":
        B = np.concatenate([b.arc.transform(frame.iso).sample(samples) for b in domain.boundary_arcs]
                           + [np.array([complex(frame.iso(p)) for p in domain.punctures
                                        if frame.iso(p) is not INFINITY], dtype=complex)])
    else:
        B = np.asarray(frame.fwd(_sample_boundary(domain, samples)), dtype=complex)
    B = B[np.isfinite(B)]
    hit = crescent(B)
    checks["boundary_avoids_crescent"] = (not bool(hit.any()), f"{int(hit.sum())} boundary samples inside")
    Wg = _tangent_geodesic_samples(rho, k, geometry=geometry)
    Zg = np.asarray(frame.back(Wg), dtype=complex)
    okg = domain.contains(Zg[np.isfinite(Zg)])
    checks["tangent_geodesic_in_domain"] = (bool(okg.all()), f"{int((~okg).sum())} of {okg.size} outside")


def verify_witness(domain, w: WitnessLune, samples: int = 2048) -> WitnessCheck:
    """Independent checks of a spherical witness lune against a domain."""
    domain = _as_circular(domain)
    checks = {}
    try:
        G = Lune(w.c, w.r)
    except Exception as exc:     # invalid parameters fail the class check
        return WitnessCheck({"class_c_hat": (False, str(exc))})
    checks["class_c_hat"] = (G.in_class, f"r^2 = {w.r ** 2:.6g}, c^2 + 1 = {w.c ** 2 + 1:.6g}")
    d1 = G.convex_side.transform(w.T)
    d2 = G.concave_disk.transform(w.T)
    ip = d1.inversive_product(d2)
    same = d1.same_circle(w.disk1, 1e-6) == 1 and d2.same_circle(w.disk2, 1e-6) == 1
    checks["orthogonal"] = (abs(ip) <= 1e-9 and same, f"inversive product {ip:.3g}, stored disks match: {same}")
    m = w.T(G.midpoint())
    dm = float(spherical_theta(m, w.midpoint)) if w.midpoint is not None else math.inf
    gap = float(tau_to_chi(domain.tau_distance_raw(np.array([complex(m)]))[0], "theta")) \
        if m is not INFINITY else math.inf
    checks["midpoint_on_boundary"] = (dm <= 1e-9 and gap <= MIDPOINT_TOL,
                                      f"theta to boundary {gap:.3g}, to stored midpoint {dm:.3g}")
    K = _spherical_frame(d2, m)
    frame = _Frame(float(d2.tau_radius), K, K.inverse(), K)
    img = d1.transform(K)
    rho = frame.rho
    k = math.sqrt(max(0.0, (-img.center.real - rho) / (-img.center.real + rho))) if not img.is_line else 1.0
    _check_region(domain, frame, rho, k, "spherical", samples, checks)
    return WitnessCheck(checks)


def verify_keogh_witness(domain, w: KeoghWitness, samples: int = 2048) -> WitnessCheck:
    """Independent checks of a Euclidean witness against a domain."""
    domain = _as_circular(domain)
    checks = {}
    dd = abs(w.center1 - w.center2) ** 2
    rr = w.radius1 ** 2 + w.radius2 ** 2
    checks["orthogonal"] = (abs(dd - rr) <= 1e-9 * rr, f"|c1-c2|^2 - r1^2 - r2^2 = {dd - rr:.3g}")
    u = (w.center1 - w.center2) / abs(w.center1 - w.center2)
    m = w.center2 + w.radius2 * u
    scale = max(1.0, abs(m))
    gap = float(domain.euclid_distance_raw(np.array([m]))[0])
    checks["midpoint_on_boundary"] = (abs(m - w.midpoint) <= 1e-9 * scale and gap <= MIDPOINT_TOL * scale,
                                      f"distance to boundary {gap:.3g}")
    disk2 = GeneralizedCircle.circle(w.center2, w.radius2)
    frame = _make_frame(disk2, m, "euclidean")
    rho = frame.rho
    s = complex(frame.fwd(w.center1))
    k = math.sqrt(max(0.0, (-s.real - rho) / (-s.real + rho)))
    _check_region(domain, frame, rho, k, "euclidean", samples, checks)
    return WitnessCheck(checks)


def antipodal_pair(domain):
    """An antipodal pair of domain points found by sphere sampling, or None."""
    return _antipodal_pair(_as_circular(domain))


__all__ = [
    "ConvexityReport",
    "Geodesic",
    "KeoghWitness",
    "WitnessCheck",
    "WitnessLune",
    "antipodal_pair",
    "antipode",
    "find_euclidean_nonconvexity_witness",
    "find_spherical_nonconvexity_witness",
    "geodesic_in_domain",
    "is_euclidean_convex",
    "is_spherically_convex",
    "segment_in_domain",
    "spherical_geodesic",
    "verify_keogh_witness",
    "verify_witness",
    "witness_from_dict",
]
