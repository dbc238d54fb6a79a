"""Distances on the Riemann sphere and its rotation group.

Points of the extended plane are plain Python/numpy complex numbers plus
the singleton :data:`INFINITY`.  Every distance is computed from the pair

    a = |z - w|,   b = |1 + z conj(w)|

(with the obvious limits when one point is infinite), since
``a**2 + b**2 = (1+|z|^2)(1+|w|^2)``.  That gives

    sigma = a / hypot(a, b),   theta = atan2(a, b),   tau = a / b

so the chain sigma <= theta <= tau holds to rounding for every pair and
antipodal pairs (b == 0) get tau = +inf.

Array arguments are supported for finite points; INFINITY is scalar only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EmptyBoundary

CHI_KINDS = ("sigma", "theta", "tau")


class _Infinity:
    """The point at infinity.  Use the module singleton :data:`INFINITY`."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())

    def __hash__(self):
        return hash("hypmetric.INFINITY")


INFINITY = _Infinity()

ExtendedPoint = Union[complex, _Infinity]


def is_infinity(z) -> bool:
    return z is INFINITY


def as_point(z) -> ExtendedPoint:
    """Coerce a number (or INFINITY) to an extended point."""
    if z is INFINITY:
        return z
    if isinstance(z, (tuple, list)) and len(z) == 2:
        z = complex(z[0], z[1])
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"finite point expected, got {z!r}; use INFINITY")
    return z


def _pair_ab(z, w):
    """Homogeneous (|z-w|, |1+z conj w|), handling the point at infinity."""
    zi, wi = z is INFINITY, w is INFINITY
    if zi and wi:
        return 0.0, 1.0
    if zi:
        return 1.0, abs(w)
    if wi:
        return 1.0, abs(z)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.abs(z - w), np.abs(1.0 + z * np.conj(w))


def _scalarize(x):
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return float(x)
    return x


def chordal_sigma(z, w):
    """Chordal distance: Euclidean distance of the images on the sphere of
    diameter one, with values in [0, 1]."""
    a, b = _pair_ab(z, w)
    with np.errstate(invalid="ignore"):
        s = np.where(np.hypot(a, b) > 0, a / np.hypot(a, b), 0.0)
    return _scalarize(s)


def pseudo_tau(z, w):
    """Pseudo-chordal distance |z - w| / |1 + z conj(w)|; +inf for antipodes."""
    a, b = _pair_ab(z, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(b > 0, a / np.where(b > 0, b, 1.0), np.inf)
    return _scalarize(t)


def spherical_theta(z, w):
    """Great-circle distance for the metric |dz|/(1+|z|^2); in [0, pi/2]."""
    a, b = _pair_ab(z, w)
    return _scalarize(np.arctan2(a, b))


def chi_distance(z, w, chi: str):
    try:
        return _CHI_FUNCS[chi](z, w)
    except KeyError:
        raise ValueError(f"chi must be one of {CHI_KINDS}, got {chi!r}") from None


_CHI_FUNCS = {"sigma": chordal_sigma, "theta": spherical_theta, "tau": pseudo_tau}


def tau_to_chi(tau, chi: str):
    """Convert pseudo-chordal values to the requested distance.

    All three distances are increasing functions of each other, which is
    what lets nearest points be computed once in tau and reused.
    """
    tau = np.asarray(tau, dtype=float)
    if chi == "tau":
        out = tau
    elif chi == "theta":
        out = np.arctan(tau)
    elif chi == "sigma":
        with np.errstate(invalid="ignore"):
            out = np.where(np.isinf(tau), 1.0, tau / np.sqrt(1.0 + tau * tau))
    else:
        raise ValueError(f"chi must be one of {CHI_KINDS}, got {chi!r}")
    return _scalarize(out)


def antipode(z) -> ExtendedPoint:
    """Diametrically opposite point -1/conj(z)."""
    if z is INFINITY:
        return 0j
    z = complex(z)
    if z == 0:
        return INFINITY
    return -1.0 / z.conjugate()


def to_sphere(z) -> np.ndarray:
    """Inverse stereographic projection onto the unit sphere in R^3.

    0 goes to the south pole (0, 0, -1) and INFINITY to the north pole.
    Accepts an array of finite points, returning shape (..., 3).
    """
    if z is INFINITY:
        return np.array([0.0, 0.0, 1.0])
    z = np.asarray(z, dtype=complex)
    r2 = (z * np.conj(z)).real
    den = 1.0 + r2
    return np.stack([2 * z.real / den, 2 * z.imag / den, (r2 - 1.0) / den], axis=-1)


def from_sphere(p):
    """Stereographic projection of a unit vector (or (..., 3) array).

    Scalar input at the north pole returns INFINITY; array input returns
    complex inf there.
    """
    p = np.asarray(p, dtype=float)
    x, y, s = p[..., 0], p[..., 1], p[..., 2]
    # Near the north pole use the equivalent (x + iy)(1 + s)/(x^2 + y^2).
    below = s <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w_low = (x + 1j * y) / (1.0 - s)
        rho2 = x * x + y * y
        w_high = np.where(rho2 > 0, (x + 1j * y) * (1.0 + s) / np.where(rho2 > 0, rho2, 1.0),
                          complex(np.inf, 0))
    w = np.where(below, w_low, w_high)
    if p.ndim == 1:
        w = complex(w)
        if not math.isfinite(abs(w)):
            return INFINITY
        return w
    return w


@dataclass(frozen=True)
class SphericalIsometry:
    """A rotation of the sphere, ``e^{it}(z-a)/(1+conj(a) z)`` or ``e^{it}/z``.

    ``kind`` is ``"rotation"`` (needs a finite ``a``) or ``"inversion"``.
    """

    kind: str = "rotation"
    t: float = 0.0
    a: complex = 0j

    def __post_init__(self):
        if self.kind not in ("rotation", "inversion"):
            raise ValueError(f"unknown isometry kind {self.kind!r}")
        if self.kind == "rotation" and self.a is INFINITY:
            raise ValueError("rotation isometry needs a finite centre a")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def identity(cls) -> "SphericalIsometry":
        return cls("rotation", 0.0, 0j)

    @classmethod
    def inversion(cls, t: float = 0.0) -> "SphericalIsometry":
        return cls("inversion", t, 0j)

    @classmethod
    def moving_to_origin(cls, p, t: float = 0.0) -> "SphericalIsometry":
        """An isometry sending ``p`` to 0 (then rotating by ``t`` about 0)."""
        if p is INFINITY:
            return cls("inversion", t, 0j)
        return cls("rotation", t, complex(p))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SphericalIsometry":
        """Haar-distributed rotation (uniform unit quaternion)."""
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        alpha = complex(q[0], q[1])
        beta = complex(q[2], q[3])
        return cls.from_matrix(np.array([[alpha, beta], [-beta.conjugate(), alpha.conjugate()]]))

    def matrix(self) -> np.ndarray:
        """SU(2) matrix representing the map projectively."""
        if self.kind == "inversion":
            beta = 1j * cmath.exp(0.5j * self.t)
            return np.array([[0, beta], [-beta.conjugate(), 0]], dtype=complex)
        e = cmath.exp(0.5j * self.t)
        s = math.sqrt(1.0 + abs(self.a) ** 2)
        return np.array([[e, -self.a * e], [self.a.conjugate() / e, 1 / e]], dtype=complex) / s

    @classmethod
    def from_matrix(cls, m) -> "SphericalIsometry":
        m = np.asarray(m, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        m = m / cmath.sqrt(det)
        alpha, beta = m[0, 0], m[0, 1]
        # sqrt(det) fixes the scale up to sign, and -U is still in SU(2).
        if not (np.allclose(m[1, 0], -np.conj(beta), atol=1e-9)
                and np.allclose(m[1, 1], np.conj(alpha), atol=1e-9)):
            raise ValueError("matrix is not a rotation of the sphere")
        if abs(alpha) > 1e-14:
            return cls("rotation", 2 * cmath.phase(alpha), -beta / alpha)
        return cls("inversion", cmath.phase(-beta / beta.conjugate()), 0j)

    def __call__(self, z):
        return self.apply(z)

    def apply(self, z):
        """Image of a point; arrays of finite points map elementwise (poles
        become complex inf)."""
        e = cmath.exp(1j * self.t)
        if z is INFINITY:
            if self.kind == "inversion":
                return 0j
            if self.a == 0:
                return INFINITY
            return e / self.a.conjugate()
        if np.ndim(z) == 0:
            z = complex(z)
            if self.kind == "inversion":
                return INFINITY if z == 0 else e / z
            den = 1.0 + self.a.conjugate() * z
            if den == 0:
                return INFINITY
            return e * (z - self.a) / den
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "inversion":
                return np.where(z == 0, complex(np.inf), e / np.where(z == 0, 1, z))
            den = 1.0 + self.a.conjugate() * z
            return np.where(den == 0, complex(np.inf), e * (z - self.a) / np.where(den == 0, 1, den))

    def derivative_abs(self, z):
        """|T'(z)| at finite, non-pole points (arrays allowed)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "inversion":
            out = 1.0 / np.abs(z) ** 2
        else:
            out = (1.0 + abs(self.a) ** 2) / np.abs(1.0 + self.a.conjugate() * z) ** 2
        return _scalarize(out)

    def compose(self, other: "SphericalIsometry") -> "SphericalIsometry":
        """``self ∘ other``."""
        return SphericalIsometry.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "SphericalIsometry":
        return SphericalIsometry.from_matrix(np.conj(self.matrix()).T)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t, "a": [self.a.real, self.a.imag]}


def boundary_chi_distance(z, boundary: Iterable, chi: str = "tau"):
    """Minimum of ``chi(z, b)`` over a boundary description.

    ``boundary`` is an iterable of pieces.  A piece is one of

    * an extended point,
    * an object with ``chi_nearest(z) -> (tau, point)`` giving the exact
      nearest point (the circular arcs of :mod:`hypmetric.domains`),
    * a callable ``s -> point`` on ``[0, 1]``; it is densely sampled and the
      best sample refined by golden-section search.

    Returns ``(value, minimizer)``; ties keep the first minimizer found.
    """
    if chi not in CHI_KINDS:
        raise ValueError(f"chi must be one of {CHI_KINDS}, got {chi!r}")
    best_tau, best_pt = math.inf, None
    for piece in boundary:
        if hasattr(piece, "chi_nearest"):
            t, p = piece.chi_nearest(z)
        elif callable(piece):
            t, p = _curve_nearest(z, piece)
        else:
            p = as_point(piece)
            t = pseudo_tau(z, p)
        if best_pt is None or t < best_tau:
            best_tau, best_pt = t, p
    if best_pt is None:
        raise EmptyBoundary("boundary sampler yielded no points")
    return tau_to_chi(best_tau, chi), best_pt


def _curve_nearest(z, curve: Callable, samples: int = 512):
    s = np.linspace(0.0, 1.0, samples)
    pts = [curve(v) for v in s]
    taus = np.array([pseudo_tau(z, p) for p in pts])
    k = int(np.argmin(taus))
    best = (float(taus[k]), pts[k])
    if 0 < k < samples - 1:
        res = minimize_scalar(lambda v: pseudo_tau(z, curve(v)),
                              bracket=(s[k - 1], s[k], s[k + 1]), method="golden", tol=1e-10)
        if s[k - 1] <= res.x <= s[k + 1] and res.fun < best[0]:
            best = (float(res.fun), curve(res.x))
    return best
