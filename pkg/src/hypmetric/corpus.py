"""Named test domains shared by the verification suite and the tests."""

from __future__ import annotations

import math

from . import domains as D
from .domains import GeneralizedCircle, Intersection, Lune, Side, SphericalDisk, Union
from .sphere_geom import SphericalIsometry


def quantity_corpus() -> dict:
    """Ten domains, convex and not, for the C and C-hat_tau estimates; the
    union of disks has no closed form and goes through the PDE solver."""
    return {
        "unit disk": D.disk(0j, 1.0),
        "half-plane": D.halfplane(0j, 1j),
        "lune(1,1)": Lune(1.0, 1.0).domain(),
        "annulus(1,4)": D.annulus(0j, 1.0, 4.0),
        "punctured disk": D.punctured_disk(0j, 1.0),
        "sector(3pi/2)": D.sector(1.5 * math.pi),
        "strip(1)": D.strip(1.0),
        "disk exterior": D.disk_exterior(0j, 1.0),
        "spherical cap(0.5)": SphericalDisk(0.3 + 0.2j, 0.5).domain(),
        "union of disks": D.union_of_disks([(0j, 1.0), (1.5, 1.0)]),
    }


def simply_connected(name: str) -> bool:
    return name not in ("annulus(1,4)", "punctured disk", "disk exterior")


def _crescent(c1, r1, c2, r2, name):
    expr = Intersection(Side(GeneralizedCircle.circle(c1, r1)),
                        Side(GeneralizedCircle.circle(c2, r2, inside=False)))
    return D.CircularDomain(expr, name=name)


def _keyhole():
    expr = Union(Side(GeneralizedCircle.circle(0j, 1.0)),
                 Intersection(Side(GeneralizedCircle.line(-0.25j, 1j)),
                              Side(GeneralizedCircle.line(0.25j, -1j)),
                              Side(GeneralizedCircle.line(0j, 1.0))))
    return D.CircularDomain(expr, name="keyhole")


def _slit_disk():
    return D.CircularDomain(Side(GeneralizedCircle.circle(0j, 1.0)),
                            slits=(D.Arc.segment(0j, 0.6),), name="slit disk")


def nonconvex_corpus() -> dict:
    """Twenty arc-bounded domains that are not spherically convex."""
    rot = SphericalIsometry("rotation", 0.7, 0.4 - 0.3j)
    return {
        "lune(1,1)": Lune(1.0, 1.0).domain(),
        "lune(0.5,0.8)": Lune(0.5, 0.8).domain(),
        "lune(2,1)": Lune(2.0, 1.0).domain(),
        "lune(1,0.3)": Lune(1.0, 0.3).domain(),
        "moved lune(1,1)": Lune(1.0, 1.0).domain().transform(rot),
        "annulus(1,2)": D.annulus(0j, 1.0, 2.0),
        "annulus(1,4)": D.annulus(0.2 + 0.1j, 0.5, 2.0),
        "punctured disk": D.punctured_disk(0j, 1.0),
        "disk exterior": D.disk_exterior(0j, 1.0),
        "cap complement tau 0.5": D.cap_exterior(0j, 0.5),
        "sector(3pi/2)": D.sector(1.5 * math.pi),
        "sector(1.2pi) moved": D.sector(1.2 * math.pi, 1 + 1j, 0.3),
        "strip(1)": D.strip(1.0),
        "union of disks": D.union_of_disks([(0j, 1.0), (1.5, 1.0)]),
        "crescent": _crescent(0j, 1.0, 0.6, 0.6, "crescent"),
        "disk minus small disk": _crescent(0j, 1.0, 0.3 + 0.2j, 0.2, "disk minus small disk"),
        "half-plane minus disk": D.CircularDomain(
            Intersection(Side(GeneralizedCircle.line(0j, 1j)),
                         Side(GeneralizedCircle.circle(2j, 1.0, inside=False))),
            name="half-plane minus disk"),
        "keyhole": _keyhole(),
        "slit disk": _slit_disk(),
        "cantor complement level 2": D.cantor_complement(2, 1.0),
    }


def convex_corpus() -> dict:
    """Ten spherically convex domains."""
    return {
        "unit disk": D.disk(0j, 1.0),
        "half-plane": D.halfplane(0j, 1j),
        "moved half-plane": D.halfplane(1 + 1j, 1 - 0.5j),
        "spherical cap(0.3)": SphericalDisk(0.5j, 0.3).domain(),
        "spherical cap(0.9)": SphericalDisk(2.0, 0.9).domain(),
        "cap around infinity": D.cap_exterior(0j, 2.0),
        "sector(pi/2)": D.sector(0.5 * math.pi),
        "sector(0.8pi) rotated": D.sector(0.8 * math.pi, 0j, 1.0),
        "two-cap intersection": D.CircularDomain(
            Intersection(Side(GeneralizedCircle.circle(0j, 1.0)),
                         Side(GeneralizedCircle.circle(0.8, 1.0))),
            name="two-cap intersection"),
        "small disk": D.disk(3 - 2j, 0.25),
    }


def nested_pairs() -> list:
    """(inner, outer) domain pairs with inner contained in outer."""
    return [
        ("disk(0.5) in unit disk", D.disk(0j, 0.5), D.disk(0j, 1.0)),
        ("unit disk in half-plane", D.disk(2j, 1.0), D.halfplane(0j, 1j)),
        ("lune(1,1) in half-plane", Lune(1.0, 1.0).domain(), D.halfplane(-1.0, -1.0)),
    ]
