"""Hyperbolic plane/sphere domains bounded by circular arcs, and grid domains.

A generalized circle is stored as a normalized Hermitian form

    F(z) = A|z|^2 + 2 Re(conj(B) z) + D,     |B|^2 - A D = 1,

and it *is* an oriented object: its open side is ``{F < 0}``.  Disks,
half-planes, disk exteriors and spherical caps are all open sides.  The
normalization makes a few things closed-form:

* the hyperbolic density of the side is ``1 / |F(z)|``;
* the side, as a cap on the unit sphere, is ``{m . x > h}`` with
  ``h = (A + D) / sqrt(4 + (A + D)^2)``, so it is spherically convex iff
  ``A + D >= 0``;
* isometries act by congruence ``H -> M H M^*`` on ``H = [[A, B], [conj B, D]]``.

A :class:`CircularDomain` is a boolean expression (:class:`Side`,
:class:`Intersection`, :class:`Union`) over open sides, optionally minus
punctures and slits.  Its boundary arcs are extracted exactly: every
circle is cut at its intersections with the others, and an arc is kept
when flipping that one circle's sign at the arc midpoint changes
membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import OutsideDomain, InvalidLune, DegenerateDomain
from .sphere_geom import (
    INFINITY,
    SphericalIsometry,
    as_point,
    boundary_chi_distance,
    from_sphere,
    pseudo_tau,
    tau_to_chi,
    to_sphere,
)

TWO_PI = 2.0 * math.pi
_ANGLE_TOL = 1e-11
_LINE_SNAP = 1e-12
SEGMENT_PACK_MIN = 8          # vectorize segment queries from this many segments on
SEGMENT_CHUNK = 2_000_000     # points x segments per vectorized block


# ---------------------------------------------------------------------------
# generalized circles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralizedCircle:
    """Oriented circle or line; the open side is ``{F < 0}``."""

    A: float
    B: complex
    D: float

    def __post_init__(self):
        A, B, D = float(self.A), complex(self.B), float(self.D)
        disc = abs(B) ** 2 - A * D
        if not disc > 0:
            raise ValueError("form does not describe a circle (|B|^2 - AD <= 0)")
        s = math.sqrt(disc)
        A, B, D = A / s, B / s, D / s
        if abs(A) < _LINE_SNAP:
            A = 0.0
            B = B / abs(B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)

    @classmethod
    def circle(cls, center, radius: float, inside: bool = True) -> "GeneralizedCircle":
        """Circle ``|z - center| = radius``; open side is the disk (or exterior)."""
        c = complex(center)
        if not radius > 0:
            raise ValueError("radius must be positive")
        f = cls(1.0, -c, abs(c) ** 2 - radius * radius)
        return f if inside else f.flipped()

    @classmethod
    def line(cls, point, normal) -> "GeneralizedCircle":
        """Line through ``point``; open side is where ``normal`` points."""
        n = complex(normal)
        if n == 0:
            raise ValueError("normal must be nonzero")
        n /= abs(n)
        p = complex(point)
        # F = -2 Re(conj(n)(z - p))
        return cls(0.0, -n, 2.0 * (n.conjugate() * p).real)

    @classmethod
    def from_cap(cls, axis, height: float) -> "GeneralizedCircle":
        """Circle whose open side is the cap ``{axis . x > height}``."""
        m = np.asarray(axis, dtype=float)
        m = m / np.linalg.norm(m)
        if not -1.0 < height < 1.0:
            raise ValueError("cap height must lie in (-1, 1)")
        s = 2.0 * height / math.sqrt(1.0 - height * height)       # A + D
        n = 2.0 / math.sqrt(1.0 - height * height)                # |N|
        amd = -m[2] * n                                           # A - D
        return cls((s + amd) / 2.0, complex(-m[0] * n / 2.0, -m[1] * n / 2.0), (s - amd) / 2.0)

    @classmethod
    def through(cls, p1, p2, p3) -> "GeneralizedCircle":
        """Circle (or line) through three finite points; for a circle the
        open side is the bounded disk."""
        p1, p2, p3 = complex(p1), complex(p2), complex(p3)
        d = 2.0 * ((p2 - p1).conjugate() * (p3 - p1)).imag
        if abs(d) < 1e-300 or abs(d) < 1e-14 * max(abs(p2 - p1), abs(p3 - p1)) ** 2:
            return cls.line(p1, 1j * (p3 - p1))
        b, c = p2 - p1, p3 - p1
        center = p1 - 1j * (abs(b) ** 2 * c - abs(c) ** 2 * b) / d
        return cls.circle(center, abs(p1 - center))

    @classmethod
    def from_matrix(cls, h) -> "GeneralizedCircle":
        return cls(float(np.real(h[0, 0])), complex(h[0, 1]), float(np.real(h[1, 1])))

    def matrix(self) -> np.ndarray:
        return np.array([[self.A, self.B], [self.B.conjugate(), self.D]], dtype=complex)

    def flipped(self) -> "GeneralizedCircle":
        return GeneralizedCircle(-self.A, -self.B, -self.D)

    @property
    def is_line(self) -> bool:
        return self.A == 0.0

    @property
    def center(self) -> complex:
        if self.is_line:
            raise ValueError("a line has no centre")
        return -self.B / self.A

    @property
    def radius(self) -> float:
        return math.inf if self.is_line else 1.0 / abs(self.A)

    def value(self, z):
        """F(z), evaluated in a form that stays accurate near the circle."""
        if z is INFINITY:
            return math.inf if self.A > 0 else (-math.inf if self.A < 0 else 0.0)
        z = np.asarray(z, dtype=complex)
        if self.is_line:
            out = 2.0 * (self.B.conjugate() * z).real + self.D
        else:
            rho = np.abs(z - self.center)
            R = self.radius
            out = self.A * (rho - R) * (rho + R)
        return float(out) if out.ndim == 0 else out

    def side_contains(self, z):
        """Strict membership in the open side."""
        if z is INFINITY:
            return self.A < 0
        v = self.value(z)
        return v < 0

    def transform(self, T: SphericalIsometry) -> "GeneralizedCircle":
        m = T.matrix()
        return GeneralizedCircle.from_matrix(m @ self.matrix() @ np.conj(m).T)

    # -- sphere picture ---------------------------------------------------

    @cached_property
    def _cap(self):
        n = np.array([2 * self.B.real, 2 * self.B.imag, self.A - self.D])
        norm = float(np.linalg.norm(n))
        m = -n / norm
        h = (self.A + self.D) / norm
        # orthonormal frame with e1 x e2 = m
        k = np.eye(3)[int(np.argmin(np.abs(m)))]
        e1 = np.cross(k, m)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(m, e1)
        return m, h, e1, e2

    @property
    def cap_axis(self) -> np.ndarray:
        return self._cap[0]

    @property
    def cap_height(self) -> float:
        """``h`` with the side equal to the cap ``{m . x > h}`` on the unit sphere."""
        return self._cap[1]

    @property
    def tau_radius(self) -> float:
        h = self.cap_height
        return math.sqrt((1.0 - h) / (1.0 + h))

    @property
    def spherical_center(self):
        return from_sphere(self.cap_axis)

    @property
    def is_spherically_convex(self) -> bool:
        """Cap of tau-radius <= 1 (a hemisphere or smaller)."""
        return self.A + self.D >= -1e-12

    def sphere_point(self, phi):
        m, h, e1, e2 = self._cap
        r = math.sqrt(max(0.0, 1.0 - h * h))
        phi = np.asarray(phi, dtype=float)
        return h * m + r * (np.cos(phi)[..., None] * e1 + np.sin(phi)[..., None] * e2)

    def sphere_angle(self, p):
        _, _, e1, e2 = self._cap
        p = np.asarray(p, dtype=float)
        return np.mod(np.arctan2(p @ e2, p @ e1), TWO_PI)

    # -- distances to the full circle -------------------------------------

    def tau_distance(self, z):
        """Pseudo-chordal distance from ``z`` to the circle (closed form).

        Moving ``z`` to 0 by an isometry turns tau into Euclidean distance
        from 0; for a normalized form that distance is ``|D'| / (1 + |B'|)``
        where the new coefficients are read off ``F(z)`` and ``F`` at the
        antipode.
        """
        if z is INFINITY:
            return self.transform(SphericalIsometry.inversion()).tau_distance(0j)
        z = np.asarray(z, dtype=complex)
        r2 = (z * np.conj(z)).real
        f = self.value(z)
        f_anti = self.A - 2.0 * (self.B.conjugate() * z).real + self.D * r2
        dg = f / (1.0 + r2)
        ag = f_anti / (1.0 + r2)
        bg = np.sqrt(np.maximum(0.0, 1.0 + ag * dg))
        out = np.abs(dg) / (1.0 + bg)
        return float(out) if out.ndim == 0 else out

    def euclid_distance(self, z):
        z = np.asarray(z, dtype=complex)
        if self.is_line:
            out = np.abs(self.value(z)) / 2.0
        else:
            out = np.abs(np.abs(z - self.center) - self.radius)
        return float(out) if out.ndim == 0 else out

    def inward_normal(self, z):
        """Unit vector at ``z`` pointing into the open side."""
        g = self.A * np.asarray(z, dtype=complex) + self.B
        return -g / np.abs(g)

    def inversive_product(self, other: "GeneralizedCircle") -> float:
        """Cosine of the intersection angle; 0 means orthogonal."""
        return (2.0 * (self.B * other.B.conjugate()).real - self.A * other.D - other.A * self.D) / 2.0

    def same_circle(self, other: "GeneralizedCircle", tol: float = 1e-10) -> int:
        """+1 for the same oriented circle, -1 for opposite orientation, 0 otherwise."""
        a = np.array([self.A, self.B.real, self.B.imag, self.D])
        b = np.array([other.A, other.B.real, other.B.imag, other.D])
        scale = max(1.0, np.abs(a).max())
        if np.abs(a - b).max() <= tol * scale:
            return 1
        if np.abs(a + b).max() <= tol * scale:
            return -1
        return 0

    def intersection_points(self, other: "GeneralizedCircle") -> list:
        """Common points as unit vectors in R^3 (0, 1 or 2 of them)."""
        m1, h1 = self.cap_axis, self.cap_height
        m2, h2 = other.cap_axis, other.cap_height
        d = np.cross(m1, m2)
        dn = float(np.linalg.norm(d))
        if dn < 1e-13:
            return []
        c = float(m1 @ m2)
        det = 1.0 - c * c
        a = (h1 - c * h2) / det
        b = (h2 - c * h1) / det
        x0 = a * m1 + b * m2
        rem = 1.0 - float(x0 @ x0)
        if rem < -1e-13:
            return []
        if rem <= 1e-13:
            return [x0 / np.linalg.norm(x0)]
        s = math.sqrt(rem) / dn
        pts = [x0 + s * d, x0 - s * d]
        return [p / np.linalg.norm(p) for p in pts]


# ---------------------------------------------------------------------------
# arcs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    """Arc of a generalized circle, angles in the circle's sphere frame.

    ``span == 2*pi`` is the full circle.
    """

    circle: GeneralizedCircle
    start: float = 0.0
    span: float = TWO_PI

    @property
    def is_full(self) -> bool:
        return self.span >= TWO_PI - _ANGLE_TOL

    @classmethod
    def through(cls, circle: GeneralizedCircle, p0, pmid, p1) -> "Arc":
        """Arc of ``circle`` from ``p0`` to ``p1`` passing ``pmid`` (extended points)."""
        a0, am, a1 = (float(circle.sphere_angle(to_sphere(as_point(p)))) for p in (p0, pmid, p1))
        if np.mod(am - a0, TWO_PI) <= np.mod(a1 - a0, TWO_PI):
            return cls(circle, a0, float(np.mod(a1 - a0, TWO_PI)))
        return cls(circle, a1, float(np.mod(a0 - a1, TWO_PI)))

    @classmethod
    def segment(cls, z0, z1) -> "Arc":
        """Straight segment between two finite points."""
        z0, z1 = complex(z0), complex(z1)
        line = GeneralizedCircle.line(z0, 1j * (z1 - z0))
        return cls.through(line, z0, 0.5 * (z0 + z1), z1)

    def contains_angle(self, phi):
        if self.is_full:
            return np.ones(np.shape(phi), dtype=bool)
        return np.mod(np.asarray(phi) - self.start, TWO_PI) <= self.span + _ANGLE_TOL

    def sphere_point(self, frac):
        return self.circle.sphere_point(self.start + np.asarray(frac) * self.span)

    def point(self, frac):
        """Extended point at fraction ``frac`` of the arc; points within
        rounding of the north pole snap to infinity."""
        p = self.sphere_point(float(frac))
        if p[2] > 1.0 - 1e-15:
            return INFINITY
        return from_sphere(p)

    def endpoints(self):
        return self._ends

    @cached_property
    def _ends(self):
        if self.is_full:
            return ()
        return (self.point(0.0), self.point(1.0))

    @cached_property
    def segment_ends(self):
        """``(a, b)`` when the arc is the finite straight segment from ``a``
        to ``b``; None otherwise."""
        if not self.circle.is_line or self.is_full:
            return None
        ends = self._ends
        if any(e is INFINITY for e in ends):
            return None
        a, b = complex(ends[0]), complex(ends[1])
        mid = self.point(0.5)
        # the arc's middle lies between the ends unless it runs through infinity
        if mid is INFINITY or not 0.0 < ((mid - a) * (b - a).conjugate()).real / abs(b - a) ** 2 < 1.0:
            return None
        return a, b

    def sample(self, n: int) -> np.ndarray:
        """``n`` finite points spread along the arc (points at infinity dropped)."""
        if self.is_full:
            fr = np.arange(n) / n
        else:
            fr = np.linspace(0.0, 1.0, n)
        w = from_sphere(self.sphere_point(fr))
        w = np.atleast_1d(w)
        return w[np.isfinite(w)]

    def transform(self, T: SphericalIsometry) -> "Arc":
        c = self.circle.transform(T)
        if self.is_full:
            return Arc(c)
        p0, pm, p1 = (T(self.point(f)) for f in (0.0, 0.5, 1.0))
        return Arc.through(c, p0, pm, p1)

    # -- nearest points ---------------------------------------------------

    def _endpoint_taus(self, z):
        out = []
        for e in self.endpoints():
            if e is INFINITY:
                with np.errstate(divide="ignore"):
                    out.append(1.0 / np.abs(z))
            else:
                out.append(pseudo_tau(z, e))
        return out

    def tau_nearest(self, z):
        """Pseudo-chordal distance from finite points ``z`` (array) to the arc."""
        z = np.asarray(z, dtype=complex)
        full = self.circle.tau_distance(z)
        if self.is_full:
            return full
        p = to_sphere(z)
        _, _, e1, e2 = self.circle._cap
        a, b = p @ e1, p @ e2
        phi = np.mod(np.arctan2(b, a), TWO_PI)
        inside = self.contains_angle(phi) | (np.hypot(a, b) < 1e-15)
        ends = np.minimum(*self._endpoint_taus(z))
        return np.where(inside, full, ends)

    def chi_nearest(self, z):
        """``(tau, nearest point)`` for one extended point, used by
        :func:`hypmetric.sphere_geom.boundary_chi_distance`."""
        if z is INFINITY:
            T = SphericalIsometry.inversion()
            t, p = self.transform(T).chi_nearest(0j)
            return t, T.inverse()(p)
        z = complex(z)
        p = to_sphere(z)
        m, h, e1, e2 = self.circle._cap
        phi = float(np.mod(math.atan2(p @ e2, p @ e1), TWO_PI))
        if self.is_full or self.contains_angle(phi):
            return float(self.circle.tau_distance(z)), from_sphere(self.circle.sphere_point(phi))
        ends = self.endpoints()
        taus = [pseudo_tau(z, e) for e in ends]
        k = int(np.argmin(taus))
        return float(taus[k]), ends[k]

    def euclid_nearest(self, z):
        """Euclidean distance from finite points ``z`` (array) to the arc."""
        z = np.asarray(z, dtype=complex)
        c = self.circle
        full = c.euclid_distance(z)
        if self.is_full:
            return full
        if c.is_line:
            foot = z - 0.5 * c.value(z) * c.B
            degenerate = np.zeros(z.shape, dtype=bool)
        else:
            rel = z - c.center
            r = np.abs(rel)
            degenerate = r < 1e-300
            foot = c.center + c.radius * np.where(degenerate, 1.0, rel / np.where(degenerate, 1, r))
        phi = c.sphere_angle(to_sphere(foot))
        inside = self.contains_angle(phi) & ~degenerate
        dists = []
        for e in self.endpoints():
            dists.append(np.full(z.shape, np.inf) if e is INFINITY else np.abs(z - e))
        ends = np.minimum(*dists)
        return np.where(inside, full, ends)

    def euclid_nearest_feature(self, z):
        """``(d, feature)``: Euclidean distance to the arc and which part is
        nearest (0 for the arc interior, ``k + 1`` for endpoint ``k``)."""
        z = np.asarray(z, dtype=complex)
        d = self.euclid_nearest(z)
        feature = np.zeros(z.shape, dtype=np.int64)
        if self.is_full:
            return d, feature
        full = self.circle.euclid_distance(z)
        for k, e in enumerate(self.endpoints()):
            if e is INFINITY:
                continue
            de = np.abs(z - e)
            hit = (de <= d) & (de > full * (1 + 1e-12) + 1e-300)
            feature = np.where(hit, k + 1, feature)
        return d, feature

    def euclid_nearest_point(self, z: complex):
        z = complex(z)
        c = self.circle
        if c.is_line:
            foot = z - 0.5 * c.value(z) * c.B
        else:
            rel = z - c.center
            foot = c.center + c.radius * (rel / abs(rel) if rel != 0 else 1.0)
        if self.is_full or self.contains_angle(float(c.sphere_angle(to_sphere(foot)))):
            return complex(foot)
        ends = [e for e in self.endpoints() if e is not INFINITY]
        return min(ends, key=lambda e: abs(z - e))


# ---------------------------------------------------------------------------
# boolean regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Side:
    circle: GeneralizedCircle

    def leaves(self):
        yield self

    def evaluate(self, z, forced, index):
        k, sign = index[id(self)]
        if k in forced:
            f = forced[k]
            return f if sign > 0 else ~f if isinstance(f, np.ndarray) else (not f)
        return self.circle.side_contains(z)

    def transform(self, T):
        return Side(self.circle.transform(T))

    def to_dict(self):
        c = self.circle
        return {"side": {"A": c.A, "B": [c.B.real, c.B.imag], "D": c.D}}


@dataclass(frozen=True)
class Intersection:
    children: tuple

    def __init__(self, *children):
        object.__setattr__(self, "children", tuple(children))

    def leaves(self):
        for ch in self.children:
            yield from ch.leaves()

    def evaluate(self, z, forced, index):
        out = True
        for ch in self.children:
            out = out & ch.evaluate(z, forced, index)
        return out

    def transform(self, T):
        return Intersection(*(ch.transform(T) for ch in self.children))

    def to_dict(self):
        return {"all": [ch.to_dict() for ch in self.children]}


@dataclass(frozen=True)
class Union:
    children: tuple

    def __init__(self, *children):
        object.__setattr__(self, "children", tuple(children))

    def leaves(self):
        for ch in self.children:
            yield from ch.leaves()

    def evaluate(self, z, forced, index):
        out = False
        for ch in self.children:
            out = out | ch.evaluate(z, forced, index)
        return out

    def transform(self, T):
        return Union(*(ch.transform(T) for ch in self.children))

    def to_dict(self):
        return {"any": [ch.to_dict() for ch in self.children]}


@dataclass(frozen=True)
class BoundaryArc:
    """A boundary arc and the side the domain lies on.

    ``side`` is -1 when the domain is locally on ``{F < 0}``, +1 for
    ``{F > 0}``, and 0 for a slit (domain on both sides).
    """

    arc: Arc
    side: int

    @property
    def domain_side_circle(self) -> GeneralizedCircle:
        """The circle oriented so the domain is locally on its open side."""
        return self.arc.circle if self.side <= 0 else self.arc.circle.flipped()


# ---------------------------------------------------------------------------
# circular-arc domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircularDomain:
    """Domain bounded by finitely many circular arcs (plus points and slits).

    ``kind``/``params`` name the canonical shape when it has a closed-form
    density, and ``placement`` is the isometry carrying that canonical
    shape to this one.
    """

    expr: object
    punctures: tuple = ()
    slits: tuple = ()
    kind: str = "circular"
    params: dict = field(default_factory=dict)
    placement: Optional[SphericalIsometry] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(as_point(p) for p in self.punctures))
        object.__setattr__(self, "slits", tuple(self.slits))

    # -- structure --------------------------------------------------------

    @cached_property
    def _circles(self):
        circles, index = [], {}
        for leaf in self.expr.leaves():
            for k, c in enumerate(circles):
                s = c.same_circle(leaf.circle)
                if s:
                    index[id(leaf)] = (k, s)
                    break
            else:
                index[id(leaf)] = (len(circles), 1)
                circles.append(leaf.circle)
        return circles, index

    @property
    def circles(self) -> list:
        return list(self._circles[0])

    def _evaluate(self, z, forced=None):
        return self.expr.evaluate(z, forced or {}, self._circles[1])

    def contains(self, z):
        """Exact membership (sign tests); arrays of finite points allowed."""
        if z is INFINITY:
            return bool(self._evaluate(z)) and INFINITY not in self.punctures
        scalar = np.ndim(z) == 0
        z = np.asarray(z, dtype=complex)
        inside = np.asarray(self._evaluate(z), dtype=bool)
        if inside.shape != z.shape:
            inside = np.broadcast_to(inside, z.shape).copy()
        for p in self.punctures:
            if p is not INFINITY:
                inside &= z != p
        pack = self._slit_pack if self.slits else None
        if pack is None:
            for s in self.slits:
                inside &= ~_on_arc(s, z)
        elif inside.any():
            sel = np.flatnonzero(inside.ravel())
            on = np.zeros(sel.size, dtype=bool)
            a, b, _ = pack
            zf = z.ravel()[sel]
            ab = b - a
            step = max(1, SEGMENT_CHUNK // a.size)
            for lo in range(0, sel.size, step):
                zz = zf[lo:lo + step, None]
                # on the segment: on its line to rounding and within its ends
                cross = ((zz - a[None, :]) * ab.conjugate()[None, :])
                t = cross.real / np.abs(ab[None, :]) ** 2
                off = np.abs(cross.imag) / np.abs(ab[None, :])
                on[lo:lo + step] = np.any((off <= 0.5e-13) & (t >= -1e-12) & (t <= 1 + 1e-12), axis=1)
            flat = inside.ravel()
            flat[sel[on]] = False
            inside = flat.reshape(z.shape)
        return bool(inside) if scalar else inside

    @cached_property
    def _segment_pack(self):
        """Boundary arcs that are finite segments, as arrays, so distance
        queries against many slits avoid a Python loop per arc."""
        idx, a, b, B, D = [], [], [], [], []
        for k, arc in enumerate(self.boundary_arcs):
            ends = arc.arc.segment_ends
            if ends is not None:
                idx.append(k)
                a.append(ends[0])
                b.append(ends[1])
                B.append(arc.arc.circle.B)
                D.append(arc.arc.circle.D)
        if len(idx) < SEGMENT_PACK_MIN:
            return None
        return (np.array(idx), np.array(a, dtype=complex), np.array(b, dtype=complex),
                np.array(B, dtype=complex), np.array(D, dtype=float))

    @cached_property
    def _slit_pack(self):
        ends = [s.segment_ends for s in self.slits]
        if len(ends) < SEGMENT_PACK_MIN or any(e is None for e in ends):
            return None
        return (np.array([e[0] for e in ends], dtype=complex), np.array([e[1] for e in ends], dtype=complex),
                [s.circle for s in self.slits])

    def _segment_query(self, z, feature: bool):
        """Nearest packed segment for each finite point: ``(d, k, f, logside)``
        with ``k`` the boundary-arc index and ``f`` the feature code of
        :meth:`Arc.euclid_nearest_feature`."""
        idx, a, b, B, D = self._segment_pack
        n = z.size
        best = np.full(n, np.inf)
        arg = np.zeros(n, dtype=np.int64)
        tpar = np.zeros(n)
        ab = b - a
        L2 = np.abs(ab) ** 2
        step = max(1, SEGMENT_CHUNK // max(1, a.size))
        zf = z.ravel()
        for lo in range(0, n, step):
            zz = zf[lo:lo + step, None]
            t = ((zz - a[None, :]) * ab.conjugate()[None, :]).real / L2[None, :]
            tc = np.clip(t, 0.0, 1.0)
            d = np.abs(zz - (a[None, :] + tc * ab[None, :]))
            k = np.argmin(d, axis=1)
            r = np.arange(k.size)
            best[lo:lo + step] = d[r, k]
            arg[lo:lo + step] = k
            tpar[lo:lo + step] = t[r, k]
        best = best.reshape(z.shape)
        if not feature:
            return best, None, None, None
        arg = arg.reshape(z.shape)
        tpar = tpar.reshape(z.shape)
        f = np.where(tpar < 0.0, 1, np.where(tpar > 1.0, 2, 0))
        with np.errstate(divide="ignore"):
            ls = -np.log(np.abs(2.0 * (B[arg].conjugate() * z).real + D[arg]))
        return best, idx[arg], f, np.where(f == 0, ls, np.nan)

    @cached_property
    def boundary_arcs(self) -> tuple:
        circles, _ = self._circles
        out = []
        for i, ci in enumerate(circles):
            angles = []
            for j, cj in enumerate(circles):
                if i != j:
                    angles.extend(float(ci.sphere_angle(p)) for p in ci.intersection_points(cj))
            pieces = _split_circle(ci, angles)
            kept = []
            for arc in pieces:
                probe = _arc_probe(arc)
                inside = bool(self._evaluate(probe, {i: True}))
                outside = bool(self._evaluate(probe, {i: False}))
                if inside != outside:
                    kept.append(BoundaryArc(arc, -1 if inside else 1))
            out.extend(_merge_arcs(kept))
        out.extend(BoundaryArc(s, 0) for s in self.slits)
        return tuple(out)

    def boundary_pieces(self) -> list:
        """Arcs and isolated points, in the form boundary_chi_distance takes."""
        return [b.arc for b in self.boundary_arcs] + list(self.punctures)

    @property
    def has_boundary(self) -> bool:
        return bool(self.boundary_arcs) or bool(self.punctures)

    @cached_property
    def contains_infinity(self) -> bool:
        return self.contains(INFINITY)

    @cached_property
    def infinity_on_boundary(self) -> bool:
        if INFINITY in self.punctures:
            return True
        north = np.array([0.0, 0.0, 1.0])
        for b in self.boundary_arcs:
            c = b.arc.circle
            if c.is_line and b.arc.contains_angle(float(c.sphere_angle(north))):
                return True
        return False

    @property
    def is_bounded(self) -> bool:
        return not (self.contains_infinity or self.infinity_on_boundary)

    def bounding_box(self, samples: int = 720):
        """Box containing the (bounded) domain, from dense boundary samples."""
        if not self.is_bounded:
            raise DegenerateDomain("domain is unbounded; pass a chart isometry or an explicit box")
        pts = [b.arc.sample(samples) for b in self.boundary_arcs]
        pts.append(np.array([p for p in self.punctures], dtype=complex))
        pts = np.concatenate(pts)
        return (pts.real.min(), pts.imag.min(), pts.real.max(), pts.imag.max())

    def transform(self, T: SphericalIsometry) -> "CircularDomain":
        placement = T if self.placement is None else T.compose(self.placement)
        return CircularDomain(
            self.expr.transform(T),
            punctures=tuple(T(p) for p in self.punctures),
            slits=tuple(s.transform(T) for s in self.slits),
            kind=self.kind,
            params=dict(self.params),
            placement=placement,
            name=self.name,
        )

    # -- distances ----------------------------------------------------------

    def euclid_distance_raw(self, z):
        """Euclidean distance from finite points to the finite boundary
        (no membership check; works for outside points too)."""
        z = np.asarray(z, dtype=complex)
        d = np.full(z.shape, np.inf)
        pack = self._segment_pack
        skip = set()
        if pack is not None and z.size:
            d = np.minimum(d, self._segment_query(z, False)[0])
            skip = set(pack[0].tolist())
        for k, b in enumerate(self.boundary_arcs):
            if k not in skip:
                d = np.minimum(d, b.arc.euclid_nearest(z))
        for p in self.punctures:
            if p is not INFINITY:
                d = np.minimum(d, np.abs(z - p))
        return d

    def nearest_feature(self, z):
        """Nearest boundary feature at finite points.

        Returns ``(d, label, log_side)``: the Euclidean distance, an integer
        label (arc interior, arc endpoint or puncture) that is locally
        constant exactly where ``d`` is smooth, and ``-log |F(z)|`` for the
        nearest arc's circle where that arc's interior is nearest (NaN at
        endpoint and puncture features).  ``-log |F|`` is the log-density
        of the side domain tangent to the boundary there.
        """
        z = np.asarray(z, dtype=complex)
        best = np.full(z.shape, np.inf)
        label = np.full(z.shape, -1, dtype=np.int64)
        logside = np.full(z.shape, np.nan)
        pack = self._segment_pack
        skip = set()
        if pack is not None and z.size:
            best, k, f, logside = self._segment_query(z, True)
            label = 3 * k + f
            skip = set(pack[0].tolist())
        for k, b in enumerate(self.boundary_arcs):
            if k in skip:
                continue
            d, f = b.arc.euclid_nearest_feature(z)
            sel = d < best
            if not sel.any():
                continue
            best = np.where(sel, d, best)
            label = np.where(sel, 3 * k + f, label)
            with np.errstate(divide="ignore"):
                ls = -np.log(np.abs(b.arc.circle.value(z)))
            logside = np.where(sel, np.where(f == 0, ls, np.nan), logside)
        base = 3 * len(self.boundary_arcs)
        for k, p in enumerate(self.punctures):
            if p is not INFINITY:
                d = np.abs(z - p)
                sel = d < best
                best = np.where(sel, d, best)
                label = np.where(sel, base + k, label)
                logside = np.where(sel, np.nan, logside)
        return best, label, logside

    def tau_distance_raw(self, z):
        """Pseudo-chordal distance from finite points to the boundary."""
        z = np.asarray(z, dtype=complex)
        t = np.full(z.shape, np.inf)
        for b in self.boundary_arcs:
            t = np.minimum(t, b.arc.tau_nearest(z))
        for p in self.punctures:
            if p is INFINITY:
                with np.errstate(divide="ignore"):
                    t = np.minimum(t, 1.0 / np.abs(z))
            else:
                t = np.minimum(t, pseudo_tau(z, p))
        return t

    def __repr__(self):
        label = self.name or self.kind
        return f"CircularDomain({label!r}, params={self.params})"


def _on_arc(arc: Arc, z):
    c = arc.circle
    scale = 1.0 if c.is_line else c.radius
    near = np.abs(c.value(z)) <= 1e-13 * max(1.0, scale)
    out = np.zeros(z.shape, dtype=bool)
    if near.any():
        phi = c.sphere_angle(to_sphere(z[near]))
        out[near] = arc.contains_angle(phi)
    return out


def _split_circle(c: GeneralizedCircle, angles) -> list:
    if not angles:
        return [Arc(c)]
    a = np.sort(np.mod(np.asarray(angles), TWO_PI))
    uniq = [a[0]]
    for v in a[1:]:
        if v - uniq[-1] > 1e-10:
            uniq.append(v)
    if len(uniq) > 1 and uniq[0] + TWO_PI - uniq[-1] <= 1e-10:
        uniq.pop()
    if len(uniq) == 1:
        return [Arc(c, float(uniq[0]), TWO_PI)]
    arcs = []
    for k, v in enumerate(uniq):
        nxt = uniq[(k + 1) % len(uniq)]
        arcs.append(Arc(c, float(v), float(np.mod(nxt - v, TWO_PI))))
    return arcs


def _arc_probe(arc: Arc):
    for f in (0.5, 0.381966, 0.618034):
        p = arc.point(f)
        if p is not INFINITY:
            return p
    return INFINITY


def _merge_arcs(kept: list) -> list:
    """Join consecutive boundary arcs of one circle lying on the same side."""
    if len(kept) < 2:
        return kept
    kept = sorted(kept, key=lambda b: b.arc.start)
    merged = [kept[0]]
    for b in kept[1:]:
        last = merged[-1]
        end = last.arc.start + last.arc.span
        if b.side == last.side and abs(np.mod(b.arc.start - end + math.pi, TWO_PI) - math.pi) < 1e-10:
            merged[-1] = BoundaryArc(Arc(last.arc.circle, last.arc.start, last.arc.span + b.arc.span),
                                     last.side)
        else:
            merged.append(b)
    if len(merged) > 1:
        first, last = merged[0], merged[-1]
        end = last.arc.start + last.arc.span
        if first.side == last.side and abs(np.mod(first.arc.start - end + math.pi, TWO_PI) - math.pi) < 1e-10:
            span = last.arc.span + first.arc.span
            merged[0] = BoundaryArc(Arc(last.arc.circle, last.arc.start, min(span, TWO_PI)), last.side)
            merged.pop()
    return merged


# ---------------------------------------------------------------------------
# named domains
# ---------------------------------------------------------------------------


def disk(center=0j, radius: float = 1.0) -> CircularDomain:
    c = complex(center)
    return CircularDomain(Side(GeneralizedCircle.circle(c, radius)), kind="side",
                          params={"center": c, "radius": float(radius)}, name="disk")


def disk_exterior(center=0j, radius: float = 1.0) -> CircularDomain:
    """``{|z - center| > radius}`` in the plane; infinity is a boundary point."""
    c = complex(center)
    return CircularDomain(Side(GeneralizedCircle.circle(c, radius, inside=False)),
                          punctures=(INFINITY,), kind="disk_exterior",
                          params={"center": c, "radius": float(radius)}, name="disk exterior")


def cap_exterior(center=0j, radius: float = 1.0) -> CircularDomain:
    """Complement of a closed disk on the sphere (infinity included)."""
    c = complex(center)
    return CircularDomain(Side(GeneralizedCircle.circle(c, radius, inside=False)), kind="side",
                          params={"center": c, "radius": float(radius)}, name="cap exterior")


def halfplane(point=0j, normal=1j) -> CircularDomain:
    """``{z : Re(conj(normal)(z - point)) > 0}``."""
    return CircularDomain(Side(GeneralizedCircle.line(point, normal)), kind="side",
                          params={"point": complex(point), "normal": complex(normal)},
                          name="half-plane")


def side_domain(circle: GeneralizedCircle, name: str = "side") -> CircularDomain:
    return CircularDomain(Side(circle), kind="side", params={}, name=name)


def annulus(center=0j, inner: float = 1.0, outer: float = 2.0) -> CircularDomain:
    c = complex(center)
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    expr = Intersection(Side(GeneralizedCircle.circle(c, outer)),
                        Side(GeneralizedCircle.circle(c, inner, inside=False)))
    return CircularDomain(expr, kind="annulus",
                          params={"center": c, "inner": float(inner), "outer": float(outer)},
                          name="annulus")


def punctured_disk(center=0j, radius: float = 1.0) -> CircularDomain:
    c = complex(center)
    return CircularDomain(Side(GeneralizedCircle.circle(c, radius)), punctures=(c,),
                          kind="punctured_disk", params={"center": c, "radius": float(radius)},
                          name="punctured disk")


def sector(opening: float, vertex=0j, direction: float = 0.0) -> CircularDomain:
    """``{vertex + r e^{i(direction + s)} : r > 0, 0 < s < opening}``, opening in (0, 2 pi)."""
    if not 0 < opening < TWO_PI:
        raise ValueError("opening must lie in (0, 2 pi)")
    v = complex(vertex)
    e0 = complex(math.cos(direction), math.sin(direction))
    e1 = complex(math.cos(direction + opening), math.sin(direction + opening))
    s0 = Side(GeneralizedCircle.line(v, 1j * e0))
    s1 = Side(GeneralizedCircle.line(v, -1j * e1))
    expr = Intersection(s0, s1) if opening <= math.pi else Union(s0, s1)
    return CircularDomain(expr, kind="sector",
                          params={"opening": float(opening), "vertex": v, "direction": float(direction)},
                          name=f"sector({opening:.4g})")


def strip(width: float = 1.0, offset=0j, direction: float = 0.0) -> CircularDomain:
    """``{z : 0 < Im(e^{-i direction}(z - offset)) < width}``."""
    e = complex(math.cos(direction), math.sin(direction))
    o = complex(offset)
    expr = Intersection(Side(GeneralizedCircle.line(o, 1j * e)),
                        Side(GeneralizedCircle.line(o + 1j * e * width, -1j * e)))
    return CircularDomain(expr, kind="strip",
                          params={"width": float(width), "offset": o, "direction": float(direction)},
                          name="strip")


def union_of_disks(disks: Sequence) -> CircularDomain:
    expr = Union(*(Side(GeneralizedCircle.circle(c, r)) for c, r in disks))
    return CircularDomain(expr, kind="circular", name="union of disks")


def cantor_set_intervals(level: int) -> np.ndarray:
    """Closed intervals (rows ``[a, b]``) of the middle-thirds construction."""
    iv = np.array([[0.0, 1.0]])
    for _ in range(level):
        third = (iv[:, 1] - iv[:, 0]) / 3.0
        iv = np.concatenate([np.stack([iv[:, 0], iv[:, 0] + third], 1),
                             np.stack([iv[:, 1] - third, iv[:, 1]], 1)])
        iv = iv[np.argsort(iv[:, 0])]
    return iv


def cantor_complement(level: int, outer_radius: float = 1.0) -> CircularDomain:
    """Disk about 1/2 with the level-``level`` Cantor intervals slit out."""
    slits = tuple(Arc.segment(a, b) for a, b in cantor_set_intervals(level))
    return CircularDomain(Side(GeneralizedCircle.circle(0.5, outer_radius)), slits=slits,
                          kind="circular", params={"level": level, "outer_radius": outer_radius},
                          name=f"cantor complement (level {level})")


@dataclass(frozen=True)
class SphericalDisk:
    """``{z : tau(z, center) < tau_radius}``."""

    center: object
    tau_radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.tau_radius > 0:
            raise ValueError("tau_radius must be positive")

    @property
    def is_spherically_convex(self) -> bool:
        return self.tau_radius <= 1.0

    def circle(self) -> GeneralizedCircle:
        base = GeneralizedCircle.circle(0j, self.tau_radius)
        return base.transform(SphericalIsometry.moving_to_origin(self.center).inverse())

    def domain(self) -> CircularDomain:
        return CircularDomain(Side(self.circle()), kind="side",
                              params={"center": self.center, "tau_radius": self.tau_radius},
                              name="spherical disk")

    def contains(self, z) -> bool:
        return bool(pseudo_tau(z, self.center) < self.tau_radius)


@dataclass(frozen=True)
class Lune:
    """The normalized lune ``{Re z < -c} minus closed disk {|z + c| <= r}``.

    The half-plane side is the convex disk, the circle ``|z + c| = r`` is the
    concave boundary arc, and the two boundaries meet orthogonally at
    ``-c +- i r``.  The concave arc's spherical midpoint is ``-c - r``.
    """

    c: float
    r: float

    def __post_init__(self):
        if not (self.c > 0 and self.r > 0):
            raise InvalidLune("lune needs c > 0 and r > 0")

    @property
    def in_class(self) -> bool:
        """Both disks strictly spherically convex: needs r^2 < c^2 + 1."""
        return self.r * self.r < self.c * self.c + 1.0

    def require_class(self):
        if not self.in_class:
            raise InvalidLune(f"r^2 = {self.r ** 2:g} >= c^2 + 1 = {self.c ** 2 + 1:g}")

    @property
    def convex_side(self) -> GeneralizedCircle:
        return GeneralizedCircle.line(-self.c, -1.0)

    @property
    def concave_disk(self) -> GeneralizedCircle:
        """The removed disk ``{|z + c| < r}`` (as an open side)."""
        return GeneralizedCircle.circle(-self.c, self.r)

    def midpoint(self) -> complex:
        return complex(-self.c - self.r)

    def contains(self, z) -> bool:
        if z is INFINITY:
            return False
        z = np.asarray(z, dtype=complex)
        out = (z.real < -self.c) & (np.abs(z + self.c) > self.r)
        return bool(out) if out.ndim == 0 else out

    def domain(self) -> CircularDomain:
        expr = Intersection(Side(self.convex_side), Side(self.concave_disk.flipped()))
        return CircularDomain(expr, kind="lune", params={"c": float(self.c), "r": float(self.r)},
                              name=f"lune({self.c:g},{self.r:g})")


def lune_midpoint(G: Lune) -> complex:
    return G.midpoint()


# ---------------------------------------------------------------------------
# grid domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Node-centred rasterization of a domain.

    ``mask[j, i]`` and ``distance[j, i]`` refer to the node
    ``x0 + i*hx + 1j*(y0 + j*hy)``.  ``distance`` is the signed Euclidean
    distance to the boundary (positive inside).  Coordinates are those of
    the grid chart: ``chart`` maps original points into it.
    """

    bbox: tuple
    nx: int
    ny: int
    mask: np.ndarray
    distance: np.ndarray
    source: Optional[CircularDomain] = None
    chart: Optional[SphericalIsometry] = None

    @property
    def hx(self) -> float:
        return (self.bbox[2] - self.bbox[0]) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.bbox[3] - self.bbox[1]) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.bbox[0] + self.hx * np.arange(self.nx)
        y = self.bbox[1] + self.hy * np.arange(self.ny)
        return x[None, :] + 1j * y[:, None]

    def to_grid(self, z):
        return z if self.chart is None else self.chart(z)

    def boundary_distance(self, w):
        """Signed distance at grid-chart points: exact when the source domain
        is known, bilinear interpolation of the stored field otherwise."""
        w = np.asarray(w, dtype=complex)
        if self.source is not None:
            d = self.source.euclid_distance_raw(w)
            return np.where(self.source.contains(w), d, -d)
        return bilinear(self, self.distance, w)

    def contains(self, w):
        """Membership of grid-chart points."""
        scalar = np.ndim(w) == 0
        w = np.asarray(w, dtype=complex)
        if self.source is not None:
            out = self.source.contains(w)
        else:
            out = np.nan_to_num(bilinear(self, self.distance, w), nan=-1.0) > 0
        return bool(out) if scalar else out

    @property
    def diameter(self) -> float:
        pts = self.nodes[self.mask]
        return float(max(np.ptp(pts.real), np.ptp(pts.imag)) * math.sqrt(2.0))


def bilinear(grid: GridDomain, values: np.ndarray, w):
    """Bilinear interpolation of a node field; NaN outside the box."""
    w = np.asarray(w, dtype=complex)
    fx = (w.real - grid.bbox[0]) / grid.hx
    fy = (w.imag - grid.bbox[1]) / grid.hy
    ok = (fx >= 0) & (fx <= grid.nx - 1) & (fy >= 0) & (fy <= grid.ny - 1)
    i = np.clip(np.floor(fx).astype(int), 0, grid.nx - 2)
    j = np.clip(np.floor(fy).astype(int), 0, grid.ny - 2)
    sx, sy = fx - i, fy - j
    v = ((1 - sx) * (1 - sy) * values[j, i] + sx * (1 - sy) * values[j, i + 1]
         + (1 - sx) * sy * values[j + 1, i] + sx * sy * values[j + 1, i + 1])
    return np.where(ok, v, np.nan)


def rasterize(domain: CircularDomain, resolution: int, bbox=None, chart=None,
              ny: Optional[int] = None, margin: float = 0.02) -> GridDomain:
    """Rasterize a circular domain onto a node grid.

    ``chart`` (an isometry) is applied first; use it for unbounded domains.
    Without ``bbox`` the grid covers the domain's bounding box with a
    relative ``margin``.  The distance field is exact (distance to the
    extracted boundary arcs).
    """
    src = domain.transform(chart) if chart is not None else domain
    if bbox is None:
        x0, y0, x1, y1 = src.bounding_box()
        pad = margin * max(x1 - x0, y1 - y0)
        bbox = (x0 - pad, y0 - pad, x1 + pad, y1 + pad)
    bbox = tuple(float(v) for v in bbox)
    nx = int(resolution)
    if ny is None:
        ny = nx
    if nx < 3 or ny < 3:
        raise ValueError("resolution must be at least 3")
    x = bbox[0] + (bbox[2] - bbox[0]) / (nx - 1) * np.arange(nx)
    y = bbox[1] + (bbox[3] - bbox[1]) / (ny - 1) * np.arange(ny)
    nodes = x[None, :] + 1j * y[:, None]
    mask = src.contains(nodes)
    d = src.euclid_distance_raw(nodes)
    signed = np.where(mask, d, -d)
    return GridDomain(bbox, nx, ny, mask, signed, source=src, chart=chart)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def contains(domain, z):
    return domain.contains(z)


def euclidean_boundary_distance(domain, z):
    """Distance from ``z`` to the finite part of the boundary.

    Raises :class:`OutsideDomain` for points not in the domain.
    """
    if isinstance(domain, Lune):
        domain = domain.domain()
    if isinstance(domain, SphericalDisk):
        domain = domain.domain()
    if z is INFINITY:
        raise OutsideDomain("Euclidean distance needs a finite point")
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    inside = np.asarray(domain.contains(z))
    if scalar and not inside:
        raise OutsideDomain(f"{complex(z)} is not in the domain")
    if isinstance(domain, GridDomain):
        d = domain.boundary_distance(z)
    else:
        d = domain.euclid_distance_raw(z)
    d = np.where(inside, d, np.nan)
    return float(d) if scalar else d


def spherical_boundary_distance(domain, z, chi: str = "tau", return_point: bool = False):
    """chi-distance from ``z`` to the boundary (``chi`` in sigma/theta/tau)."""
    if isinstance(domain, (Lune, SphericalDisk)):
        domain = domain.domain()
    if z is INFINITY or np.ndim(z) == 0:
        if not domain.contains(z):
            raise OutsideDomain(f"{z} is not in the domain")
        value, point = boundary_chi_distance(z, domain.boundary_pieces(), chi)
        return (value, point) if return_point else value
    z = np.asarray(z, dtype=complex)
    t = domain.tau_distance_raw(z)
    t = np.where(domain.contains(z), t, np.nan)
    return tau_to_chi(t, chi)
