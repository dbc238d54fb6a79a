"""Closed-form hyperbolic densities, curvature -4.

All formulas are normalized so that ``Delta log lam = 4 lam^2``; the
disk density is ``r / (r^2 - |z - a|^2)`` and the upper half-plane's is
``1 / (2 Im z)``.  Densities of other canonical domains come from pulling
the half-plane density back through an explicit covering map.

Scalar evaluation raises :class:`OutsideDomain` or
:class:`BoundaryProximity`; array evaluation returns NaN at such points so
that scans can drop them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import CircularDomain, GeneralizedCircle, Lune, SphericalDisk
from .errors import BoundaryProximity, NotApplicable, OutsideDomain
from .sphere_geom import INFINITY, SphericalIsometry, as_point

PROXIMITY = 1e-8


@dataclass(frozen=True)
class DensityValue:
    lam: float
    mu: float


def _finish(value, bad_outside, bad_close, scalar):
    """Apply the scalar-raises / array-NaN policy."""
    if scalar:
        if bool(bad_outside):
            raise OutsideDomain("point is not in the domain")
        if bool(bad_close):
            raise BoundaryProximity(f"point is within {PROXIMITY:g} of the boundary")
        return float(value)
    return np.where(bad_outside | bad_close, np.nan, value)


def _prep(z):
    scalar = np.ndim(z) == 0
    return np.asarray(z, dtype=complex), scalar


# ---------------------------------------------------------------------------
# canonical formulas
# ---------------------------------------------------------------------------


def lambda_disk(center, radius: float, z):
    z, scalar = _prep(z)
    rho = np.abs(z - complex(center))
    gap = radius - rho
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = radius / (gap * (radius + rho))
    return _finish(lam, gap <= 0, gap < PROXIMITY, scalar)


def lambda_halfplane(z):
    """Upper half-plane."""
    z, scalar = _prep(z)
    y = z.imag
    with np.errstate(divide="ignore"):
        lam = 1.0 / (2.0 * y)
    return _finish(lam, y <= 0, y < PROXIMITY, scalar)


def lambda_side(circle: GeneralizedCircle, z):
    """Open side ``{F < 0}`` of a normalized form: ``1 / |F(z)|``."""
    z, scalar = _prep(z)
    f = circle.value(z)
    with np.errstate(divide="ignore"):
        lam = 1.0 / np.abs(f)
    return _finish(lam, f >= 0, circle.euclid_distance(z) < PROXIMITY, scalar)


def _lune_h(G: Lune, z):
    alpha = complex(-G.c, G.r)
    zb = z - alpha.conjugate()
    w = (z - alpha) / zb
    dw = (alpha - alpha.conjugate()) / zb ** 2
    return w * w, 2.0 * w * dw


def lambda_lune(G: Lune, z):
    """Density of the lune through its map onto the upper half-plane.

    ``w = (z - alpha)/(z - conj alpha)`` with ``alpha = -c + i r`` sends the
    lune to the open first quadrant, and squaring lands in the half-plane.
    """
    z, scalar = _prep(z)
    inside = np.asarray(G.contains(z))
    h, dh = _lune_h(G, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.abs(dh) / (2.0 * h.imag)
    d = np.minimum(np.abs(z.real + G.c), np.abs(np.abs(z + G.c) - G.r))
    return _finish(lam, ~inside, d < PROXIMITY, scalar)


def lambda_lune_uv(G: Lune, z):
    """Same density in the form ``r sqrt(U^2 + V^2) / (U V)``;
    ``U = |z + c|^2 - r^2`` and ``V = -2 r Re(z + c)`` are both positive on
    the lune."""
    z = np.asarray(z, dtype=complex)
    u = np.abs(z + G.c) ** 2 - G.r ** 2
    v = -2.0 * G.r * (z.real + G.c)
    out = G.r * np.hypot(u, v) / (u * v)
    return float(out) if out.ndim == 0 else out


def lambda_punctured_disk(z, center=0j, radius: float = 1.0):
    """``1 / (2 |z| log(1/|z|))`` on the punctured unit disk (rescaled for
    other centres and radii)."""
    z, scalar = _prep(z)
    s = np.abs(z - complex(center)) / radius
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = 1.0 / (2.0 * s * np.log(1.0 / s)) / radius
    close = np.minimum(np.abs(z - complex(center)), radius * (1.0 - s)) < PROXIMITY
    return _finish(lam, (s <= 0) | (s >= 1), close, scalar)


def lambda_annulus(R: float, z, inner: float = 1.0, center=0j):
    """Annulus ``inner < |z - center| < inner * R``.

    Pulls back ``pi / (2 L sin(pi x / L))`` on the strip ``0 < x < L = log R``
    through ``z = e^s``.
    """
    z, scalar = _prep(z)
    rho = np.abs(z - complex(center))
    L = math.log(R)
    x = np.log(rho / inner)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = math.pi / (2.0 * L * rho * np.sin(math.pi * x / L))
    close = np.minimum(rho - inner, inner * R - rho) < PROXIMITY
    return _finish(lam, (x <= 0) | (x >= L), close, scalar)


def lambda_strip(width: float, z, offset=0j, direction: float = 0.0):
    """Strip ``0 < Im(e^{-i direction}(z - offset)) < width``."""
    z, scalar = _prep(z)
    y = ((z - complex(offset)) * complex(math.cos(direction), -math.sin(direction))).imag
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = math.pi / (2.0 * width * np.sin(math.pi * y / width))
    close = np.minimum(y, width - y) < PROXIMITY
    return _finish(lam, (y <= 0) | (y >= width), close, scalar)


def lambda_sector(opening: float, z, vertex=0j, direction: float = 0.0):
    """Sector of the given opening: pull back through ``z -> z^(pi/opening)``."""
    z, scalar = _prep(z)
    rel = (z - complex(vertex)) * complex(math.cos(direction), -math.sin(direction))
    rho = np.abs(rel)
    phi = np.mod(np.angle(rel), 2 * math.pi)
    k = math.pi / opening
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = k / (2.0 * rho * np.sin(k * phi))
    outside = (rho == 0) | (phi <= 0) | (phi >= opening)
    dist = np.where(phi < math.pi / 2, rho * np.sin(np.minimum(phi, math.pi / 2)), rho)
    dist = np.minimum(dist, np.where(opening - phi < math.pi / 2,
                                     rho * np.sin(np.clip(opening - phi, 0, math.pi / 2)), rho))
    return _finish(lam, outside, dist < PROXIMITY, scalar)


# ---------------------------------------------------------------------------
# transformation rules
# ---------------------------------------------------------------------------


def pushforward_density(T, lam: float, z) -> float:
    """Density of ``T(Omega)`` at ``T(z)`` given ``lam = lambda_Omega(z)``."""
    return lam / T.derivative_abs(z)


def mu_of(density, z) -> float:
    """Spherical density ``(1 + |z|^2) lambda(z)``.

    ``density`` is a callable.  At infinity it must be a :class:`Density`,
    whose domain is pre-conjugated by the inversion.
    """
    z = as_point(z)
    if z is INFINITY:
        if not isinstance(density, Density):
            raise NotApplicable("mu at infinity needs a domain-aware density")
        J = SphericalIsometry.inversion()
        return mu_of(density.transformed(J), 0j)
    return (1.0 + abs(z) ** 2) * density(z)


class Density:
    """Density of a specific domain, callable on points or arrays.

    ``base`` evaluates the density of the canonical shape; ``placement``
    (if any) carries that shape to the actual domain.
    """

    exact = True

    def __init__(self, base: Callable, domain=None, placement: Optional[SphericalIsometry] = None,
                 label: str = ""):
        self._base = base
        self.domain = domain
        self.placement = placement
        self.label = label
        self.relative_error = 0.0

    def __call__(self, z):
        if self.placement is None:
            return self._base(z)
        Tinv = self.placement.inverse()
        if z is INFINITY:
            return mu_of(self, z)
        scalar = np.ndim(z) == 0
        zz = np.asarray(z, dtype=complex)
        pre = Tinv(zz)
        if scalar and pre is INFINITY:
            raise NotApplicable("preimage is infinity; evaluate mu instead")
        pre = np.asarray(pre, dtype=complex)
        ok = np.isfinite(pre)
        vals = np.full(zz.shape, np.nan)
        if ok.any():
            base = self._base(pre[ok]) if not scalar else self._base(complex(pre))
            vals[ok] = base
        out = vals * Tinv.derivative_abs(zz)
        return float(out) if scalar else out

    def mu(self, z):
        if z is INFINITY:
            return mu_of(self, z)
        z = np.asarray(z, dtype=complex)
        out = (1.0 + np.abs(z) ** 2) * self(z)
        return float(out) if out.ndim == 0 else out

    def value(self, z) -> DensityValue:
        z = as_point(z)
        return DensityValue(float(self(z)), float(self.mu(z)))

    def transformed(self, T: SphericalIsometry) -> "Density":
        if self.domain is not None:
            return density_for(self.domain.transform(T))
        placement = T if self.placement is None else T.compose(self.placement)
        return Density(self._base, None, placement, self.label)

    def __repr__(self):
        return f"Density({self.label!r})"


def _base_density(kind: str, params: dict, domain: CircularDomain) -> Callable:
    p = params
    if kind == "lune":
        G = Lune(p["c"], p["r"])
        return lambda z: lambda_lune(G, z)
    if kind == "annulus":
        return lambda z: lambda_annulus(p["outer"] / p["inner"], z, p["inner"], p["center"])
    if kind == "punctured_disk":
        return lambda z: lambda_punctured_disk(z, p["center"], p["radius"])
    if kind == "disk_exterior":
        c, r = complex(p["center"]), float(p["radius"])

        def ext(z):
            z, scalar = _prep(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = r / (z - c)
                jac = r / np.abs(z - c) ** 2
            v = lambda_punctured_disk(complex(w) if scalar else w)
            return v * (float(jac) if scalar else jac)

        return ext
    if kind == "strip":
        return lambda z: lambda_strip(p["width"], z, p["offset"], p["direction"])
    if kind == "sector":
        return lambda z: lambda_sector(p["opening"], z, p["vertex"], p["direction"])
    if kind == "side":
        circle = domain.circles[0]
        return lambda z: lambda_side(circle, z)
    raise NotApplicable(f"no closed form for domain kind {kind!r}")


def density_for(domain) -> Density:
    """Closed-form density of a canonical domain (possibly moved by an isometry)."""
    if isinstance(domain, (Lune, SphericalDisk)):
        domain = domain.domain()
    if not isinstance(domain, CircularDomain):
        raise NotApplicable("closed forms exist only for named circular domains")
    kind = domain.kind
    if kind == "side":
        # already expressed in the actual coordinates
        return Density(_base_density(kind, domain.params, domain), domain, None, domain.name)
    base = _base_density(kind, domain.params, domain)
    return Density(base, domain, domain.placement, domain.name or kind)


def has_closed_form(domain) -> bool:
    try:
        density_for(domain)
        return True
    except NotApplicable:
        return False
