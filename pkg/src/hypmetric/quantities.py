"""Extremal boundary-distance x density products and related constants.

``C(Omega)`` is the infimum of ``d(z) lam(z)`` with Euclidean boundary
distance; ``Chat_chi(Omega)`` the infimum of ``chi(z, boundary) mu(z)``
with a spherical distance ``chi``.  Both infima are typically approached
at the boundary, so the scan is built around a collar study:

* round 0 evaluates a coarse grid, a geometric ladder of offsets along the
  inward normals of every boundary arc, and rings around punctures;
* rounds 1..5 refine 9x9 patches (spacing shrinking by 4 per round)
  around a few well-separated best points;
* round ``k`` only admits points at least ``delta_k = h_k / 2`` from the
  boundary, and the sequence of round minima is extrapolated linearly in
  the collar width when the minimizer sits on the collar.

Everything is deterministic.  Products are formed in log space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .domains import CircularDomain, Lune, SphericalDisk, cantor_set_intervals
from .errors import InvalidLune, NotApplicable, TooFewPoints
from .metric_exact import density_for, has_closed_form
from .sphere_geom import INFINITY, SphericalIsometry, tau_to_chi, CHI_KINDS

ROUNDS = 5
PATCH = 9
SHRINK = 4.0
COARSE = 64
TRACKS = 4
ROUNDOFF = 1e-13            # relative rounding of products formed through log and exp
POLISH = 400               # simplex iterations for the final descent
WALK = 12                  # patch re-centrings per track and round
COLLAR_LIMIT_CELLS = 3.0   # PDE densities are admitted from two cells; "at the limit" below three


@dataclass
class QuantityEstimate:
    value: float
    argmin: object
    grid_level: int
    error_indicator: float
    quantity_kind: str
    extrapolated: float = math.nan
    trace: list = field(default_factory=list)
    collars: list = field(default_factory=list)
    n_points: int = 0
    grid_difference: float = math.nan

    def report(self) -> dict:
        z = self.argmin
        return {
            "quantity": self.quantity_kind,
            "value": self.value,
            "extrapolated": self.extrapolated,
            "error_indicator": self.error_indicator,
            "argmin": "inf" if z is INFINITY else [complex(z).real, complex(z).imag],
            "grid_level": self.grid_level,
            "refinement_trace": self.trace,
            "collars": self.collars,
            "points_evaluated": self.n_points,
            "grid_difference": self.grid_difference,
        }

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2)


# ---------------------------------------------------------------------------
# scanning engine
# ---------------------------------------------------------------------------


@dataclass
class _Chart:
    T: Optional[SphericalIsometry]   # original -> chart coordinates
    box: tuple                       # scan window in chart coordinates
    radius: float = math.inf         # optional |w| <= radius restriction

    def to_original(self, w):
        return w if self.T is None else self.T.inverse()(w)

    def admits(self, w):
        w = np.asarray(w)
        x0, y0, x1, y1 = self.box
        ok = (w.real >= x0) & (w.real <= x1) & (w.imag >= y0) & (w.imag <= y1)
        return ok & (np.abs(w) <= self.radius)


class _Scan:
    """Point pool for one chart: chart coordinates, collar distance, log product."""

    def __init__(self, chart: _Chart, domain: CircularDomain, log_product: Callable):
        self.chart = chart
        self.cdom = domain if chart.T is None else domain.transform(chart.T)
        self.log_product = log_product
        self.w = np.zeros(0, complex)
        self.d = np.zeros(0)
        self.lp = np.zeros(0)

    def add(self, w):
        w = np.asarray(w, dtype=complex).ravel()
        w = w[self.chart.admits(w) & np.isfinite(w)]
        if w.size == 0:
            return
        w = w[self.cdom.contains(w)]
        if w.size == 0:
            return
        d = self.cdom.euclid_distance_raw(w)
        z = np.asarray(self.chart.to_original(w), dtype=complex)
        with np.errstate(all="ignore"):
            lp = np.asarray(self.log_product(z), dtype=float)
        lp = np.where(np.isfinite(lp) & np.isfinite(z), lp, np.nan)
        keep = np.isfinite(lp)
        self.w = np.concatenate([self.w, w[keep]])
        self.d = np.concatenate([self.d, d[keep]])
        self.lp = np.concatenate([self.lp, lp[keep]])

    def best(self, collar, near=None, radius=math.inf):
        ok = self.d >= collar
        if near is not None:
            ok &= np.abs(self.w - near) <= radius
        if not ok.any():
            return None
        k = np.flatnonzero(ok)[np.argmin(self.lp[ok])]
        return k


def _ladder(cdom: CircularDomain, collars, span: float, per_arc: int, chart: _Chart):
    """Boundary-layer candidates: offsets along inward normals of each arc."""
    offsets = sorted(set(list(collars * 1.0001) + list(collars[0] * 2.0 ** np.arange(1, 8))))
    offsets = np.array([o for o in offsets if o <= span])
    arcs = cdom.boundary_arcs
    lengths = []
    for b in arcs:
        s = b.arc.sample(64)
        s = s[chart.admits(s)] if s.size else s
        lengths.append(float(np.abs(np.diff(s)).sum()) if s.size > 1 else 0.0)
    total = sum(lengths) or 1.0
    out = []
    for b, ln in zip(arcs, lengths):
        n = int(np.clip(per_arc * ln / total * len(arcs), 3, per_arc))
        pts = b.arc.sample(n + 2)
        if not b.arc.is_full:
            pts = pts[1:-1]
        pts = pts[chart.admits(pts)] if pts.size else pts
        if pts.size == 0:
            continue
        c = b.arc.circle
        nrm = c.inward_normal(pts)
        dirs = [-nrm] if b.side > 0 else [nrm] if b.side < 0 else [nrm, -nrm]
        for v in dirs:
            out.append((pts[:, None] + v[:, None] * offsets[None, :]).ravel())
    for p in cdom.punctures:
        if p is INFINITY:
            continue
        ang = np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)
        out.append((p + offsets[:, None] * ang[None, :]).ravel())
    return np.concatenate(out) if out else np.zeros(0, complex)


def _polish(sc: _Scan, w0: complex, lp0: float, h: float):
    """Deterministic simplex descent from the best scanned point, kept on
    admissible points (inside the chart window, outside the last collar), so
    interior minima are located below the patch spacing."""
    collar = sc.collars[-1]

    def f(x):
        w = complex(x[0], x[1])
        if not (sc.chart.admits(w) and sc.cdom.contains(w)):
            return math.inf
        if sc.cdom.euclid_distance_raw(np.array([w]))[0] < collar:
            return math.inf
        with np.errstate(all="ignore"):
            v = float(np.asarray(sc.log_product(np.atleast_1d(sc.chart.to_original(w))))[0])
        return v if math.isfinite(v) else math.inf

    simplex = np.array([[w0.real, w0.imag], [w0.real + h, w0.imag], [w0.real, w0.imag + h]])
    res = minimize(f, [w0.real, w0.imag], method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-4 * h, "fatol": 1e-15, "maxiter": POLISH})
    if math.isfinite(res.fun) and res.fun < lp0:
        return complex(res.x[0], res.x[1]), float(res.fun)
    return w0, lp0


def _run(domain: CircularDomain, log_product: Callable, charts: Sequence[_Chart], kind: str,
         density_error: float = 0.0, return_scans: bool = False):
    scans = [_Scan(ch, domain, log_product) for ch in charts]
    h0_all = []
    for sc in scans:
        x0, y0, x1, y1 = sc.chart.box
        h0 = max(x1 - x0, y1 - y0) / COARSE
        h0_all.append(h0)
        xs = x0 + h0 * (np.arange(COARSE + 1))
        ys = y0 + h0 * (np.arange(COARSE + 1))
        sc.add((xs[None, :] + 1j * ys[:, None]).ravel())
        collars = 0.5 * h0 / SHRINK ** np.arange(ROUNDS + 1)
        sc.collars = collars
        sc.h0 = h0
        sc.add(_ladder(sc.cdom, collars, 0.25 * max(x1 - x0, y1 - y0), 48, sc.chart))

    # tracks: (scan index, centre) for well separated good points
    cands = []
    for i, sc in enumerate(scans):
        ok = np.flatnonzero(sc.d >= sc.collars[0])
        order = ok[np.argsort(sc.lp[ok])]
        chosen = []
        for k in order:
            if all(abs(sc.w[k] - sc.w[j]) > 3 * sc.h0 for j in chosen):
                chosen.append(k)
            if len(chosen) == TRACKS:
                break
        cands.extend((sc.lp[k], i, sc.w[k]) for k in chosen)
    cands.sort(key=lambda t: t[0])
    tracks = [[i, w] for _, i, w in cands[:TRACKS]]
    if not tracks:
        raise NotApplicable(f"no admissible sample points for {kind}")

    grid = np.arange(PATCH) - PATCH // 2
    offs = (grid[None, :] + 1j * grid[:, None]).ravel()

    def global_min(k):
        best = (math.inf, None, None)
        for i, sc in enumerate(scans):
            j = sc.best(sc.collars[k])
            if j is not None and sc.lp[j] < best[0]:
                best = (sc.lp[j], i, j)
        return best

    trace = [global_min(0)]
    for k in range(1, ROUNDS + 1):
        for tr in tracks:
            sc = scans[tr[0]]
            hk = sc.h0 / SHRINK ** k
            # walk the patch with its best point so flat valleys are followed
            for _ in range(WALK):
                sc.add(tr[1] + hk * offs)
                j = sc.best(sc.collars[k], near=tr[1], radius=6 * hk * SHRINK)
                if j is None or sc.w[j] == tr[1]:
                    break
                tr[1] = sc.w[j]
        trace.append(global_min(k))

    lp, i, j = trace[-1]
    sc = scans[i]
    mins = [math.exp(t[0]) for t in trace]
    w, lp = _polish(sc, sc.w[j], lp, sc.h0 / SHRINK ** ROUNDS)
    polish_gain = mins[-1] - math.exp(lp)
    z = sc.chart.to_original(w)
    value = float(math.exp(lp))
    collars = list(sc.collars)
    # collar extrapolation: use the last round that still improved
    jstar = max((k for k in range(1, len(mins)) if mins[k] < mins[k - 1] * (1 - 1e-14)), default=None)
    extrap = value
    if jstar is not None and sc.d[j] < 4.0 * collars[jstar]:
        extrap = mins[jstar] - (mins[jstar - 1] - mins[jstar]) / 3.0
    err = max(abs(mins[-1] - mins[-2]), polish_gain, abs(value - extrap),
              value * float(density_error or 0.0), value * ROUNDOFF)
    est = QuantityEstimate(value=value, argmin=z, grid_level=ROUNDS, error_indicator=err,
                           quantity_kind=kind, extrapolated=extrap, trace=mins, collars=collars,
                           n_points=int(sum(s.w.size for s in scans)))
    return (est, scans) if return_scans else est


# ---------------------------------------------------------------------------
# public estimates
# ---------------------------------------------------------------------------


def _as_domain(domain):
    if isinstance(domain, (Lune, SphericalDisk)):
        return domain.domain()
    return domain


def _resolve_density(domain, density):
    if density is None:
        if has_closed_form(domain):
            return density_for(domain)
        from .metric_pde import PDEDensity
        chart = None if domain.is_bounded else auto_chart(domain)
        return PDEDensity.build(domain, 129, chart=chart)
    return density


def _grid_term(est: QuantityEstimate, density, rerun: Callable) -> QuantityEstimate:
    """Fold PDE discretization error into the indicator: the change against
    the half-resolution solve, and the density's own error bound at the
    minimizer.  Scans reach a couple of cells from the boundary, where the
    solver's relative error does not shrink with h, so the interior error
    alone undersells it."""
    coarse = getattr(density, "coarse", None)
    if coarse is None:
        return est
    try:
        other = rerun(coarse)
    except NotApplicable:
        return est
    est.grid_difference = abs(est.value - other.value)
    at_inf = est.argmin is INFINITY
    local = 0.0 if at_inf else density.local_error(est.argmin)
    est.error_indicator = max(est.error_indicator, est.grid_difference, est.value * local)
    if not at_inf and density.cells_from_boundary(est.argmin) < COLLAR_LIMIT_CELLS:
        # the minimizer sits on the closest admissible collar, which moves
        # in proportion to h: extrapolate to first order in h
        est.extrapolated = est.value - (other.value - est.value)
    return est


def _density_error(density) -> float:
    e = getattr(density, "relative_error", 0.0)
    return 0.0 if e is None or not np.isfinite(e) else float(e)


def planar_window(domain: CircularDomain, pad: float = 0.05) -> tuple:
    """Scan box for Euclidean quantities; unbounded domains get a box a few
    times larger than their finite boundary features."""
    if domain.is_bounded:
        x0, y0, x1, y1 = domain.bounding_box()
        p = pad * max(x1 - x0, y1 - y0)
        return (x0 - p, y0 - p, x1 + p, y1 + p)
    feats = [0j]
    for b in domain.boundary_arcs:
        c = b.arc.circle
        feats.extend(e for e in b.arc.endpoints() if e is not INFINITY)
        if c.is_line:
            feats.append(-0.5 * c.D * c.B)  # foot of the perpendicular from 0
        else:
            feats.extend([c.center + c.radius, c.center - c.radius,
                          c.center + 1j * c.radius, c.center - 1j * c.radius])
    feats.extend(p for p in domain.punctures if p is not INFINITY)
    R = max(1.0, 2.0 * max(abs(f) for f in feats))
    return (-R, -R, R, R)


def planar_charts(domain: CircularDomain) -> list:
    """Scan charts for Euclidean quantities: the planar window, plus the
    chart ``1/z`` over ``|z| >= R`` when the domain reaches infinity."""
    box = planar_window(domain)
    charts = [_Chart(None, box)]
    if not domain.is_bounded:
        rho = 1.1 / box[2]
        charts.append(_Chart(SphericalIsometry.inversion(), (-rho, -rho, rho, rho), rho))
    return charts


def estimate_C(domain, density=None) -> QuantityEstimate:
    """``inf d(z, boundary) lam(z)`` (Euclidean distance to the finite boundary)."""
    domain = _as_domain(domain)
    density = _resolve_density(domain, density)

    def logp(z):
        with np.errstate(divide="ignore"):
            return np.log(domain.euclid_distance_raw(z)) + np.log(density(z))

    est = _run(domain, logp, planar_charts(domain), "C", _density_error(density))
    return _grid_term(est, density, lambda d: estimate_C(domain, d))


def sphere_charts(radius: float = 1.1) -> list:
    """Identity and 1/z, each restricted to ``|w| <= radius``; together they
    cover the sphere with overlap."""
    box = (-radius, -radius, radius, radius)
    return [_Chart(None, box, radius), _Chart(SphericalIsometry.inversion(), box, radius)]


def _mu(density, z):
    z = np.asarray(z, dtype=complex)
    return (1.0 + np.abs(z) ** 2) * density(z)


def estimate_Chat(domain, density=None, chi: str = "tau") -> QuantityEstimate:
    """``inf chi(z, boundary) mu(z)`` over two sphere charts."""
    if chi not in CHI_KINDS:
        raise ValueError(f"chi must be one of {CHI_KINDS}")
    domain = _as_domain(domain)
    density = _resolve_density(domain, density)

    def logp(z):
        t = domain.tau_distance_raw(z)
        with np.errstate(divide="ignore"):
            return np.log(tau_to_chi(t, chi)) + np.log(_mu(density, z))

    est = _run(domain, logp, sphere_charts(), f"Chat_{chi}", _density_error(density))
    return _grid_term(est, density, lambda d: estimate_Chat(domain, d, chi))


def estimate_Chat_chain(domain, density=None) -> dict:
    """All three spherical quantities from one sample set.

    The tau scan drives the sampling; sigma, theta and tau are then
    minimized over exactly the same admitted points, so
    ``sigma <= theta <= tau`` holds pointwise and hence for the minima.
    """
    domain = _as_domain(domain)
    density = _resolve_density(domain, density)

    def logp(z):
        t = domain.tau_distance_raw(z)
        with np.errstate(divide="ignore"):
            return np.log(t) + np.log(_mu(density, z))

    est, scans = _run(domain, logp, sphere_charts(), "Chat_tau", _density_error(density),
                      return_scans=True)
    est = _grid_term(est, density, lambda d: estimate_Chat(domain, d, "tau"))
    z = np.concatenate([np.asarray(sc.chart.to_original(sc.w[sc.d >= sc.collars[-1]]), dtype=complex)
                        for sc in scans])
    t = domain.tau_distance_raw(z)
    m = _mu(density, z)
    ok = np.isfinite(t) & np.isfinite(m)
    z, t, m = z[ok], t[ok], m[ok]
    rel = est.error_indicator / max(est.value, 1e-300)
    out = {}
    for chi in CHI_KINDS:
        prod = tau_to_chi(t, chi) * m
        k = int(np.argmin(prod))
        if chi == "tau":
            extrap = est.extrapolated * float(prod[k]) / est.value
        else:
            # same collar behaviour as tau: sigma, theta and tau agree to second order at 0
            extrap = float(prod[k]) * est.extrapolated / est.value
        out[f"Chat_{chi}"] = QuantityEstimate(
            value=float(prod[k]), argmin=complex(z[k]), grid_level=ROUNDS,
            error_indicator=float(prod[k] * rel), quantity_kind=f"Chat_{chi}",
            extrapolated=extrap, trace=est.trace if chi == "tau" else [],
            collars=est.collars, n_points=int(z.size), grid_difference=est.grid_difference)
    return out


def auto_chart(domain: CircularDomain) -> SphericalIsometry:
    """An isometry sending a point well outside ``domain`` to infinity.

    Makes any domain whose complement has interior bounded in the chart.
    """
    best, bestd = None, -1.0
    for chart in sphere_charts(1.0):
        box = chart.box
        xs = np.linspace(box[0], box[2], 41)
        w = (xs[None, :] + 1j * xs[:, None]).ravel()
        w = w[np.abs(w) <= 1.0]
        z = np.asarray(chart.to_original(w), dtype=complex)
        z = z[np.isfinite(z)]
        out = z[~domain.contains(z)]
        if out.size == 0:
            continue
        t = domain.tau_distance_raw(out)
        k = int(np.argmax(t))
        if t[k] > bestd:
            best, bestd = out[k], t[k]
    if best is None:
        raise NotApplicable("complement has no interior; cannot choose a chart")
    return SphericalIsometry.inversion().compose(SphericalIsometry.moving_to_origin(best))


# ---------------------------------------------------------------------------
# closed-form lune quantities and the Minda bound
# ---------------------------------------------------------------------------


def minda_bound(z=None, domain=None, tau: Optional[float] = None) -> float:
    """``(1 + tau^2) / (2 tau)`` with ``tau = tau(z, boundary)`` (or given)."""
    if tau is None:
        domain = _as_domain(domain)
        tau = float(domain.tau_distance_raw(np.asarray([z], dtype=complex))[0]) if z is not INFINITY \
            else float(domain.transform(SphericalIsometry.inversion()).tau_distance_raw(np.zeros(1, complex))[0])
    return (1.0 + tau * tau) / (2.0 * tau)


def _check_lune(c: float, r: float):
    if not (c > 0 and r > 0) or r * r >= c * c + 1:
        raise InvalidLune(f"need c, r > 0 and r^2 < c^2 + 1 (got c={c}, r={r})")


def lune_product(c: float, r: float, t: float) -> float:
    """``tau(a - t, a) mu_G(a - t)`` at distance ``t`` beyond the concave
    arc's midpoint ``a = -c - r``, in closed form."""
    _check_lune(c, r)
    s = c + r
    first = (1.0 + (s + t) ** 2) / (1.0 + s * (s + t))
    second = ((r + t) ** 2 + r * r) / (2.0 * (2.0 * r + t) * (r + t))
    return first * second


def lune_product_slope(c: float, r: float) -> float:
    """First-order coefficient of ``lune_product`` at ``t = 0``."""
    _check_lune(c, r)
    return -(1.0 + c * c - r * r) / (4.0 * r * (1.0 + (c + r) ** 2))


# ---------------------------------------------------------------------------
# uniform perfectness
# ---------------------------------------------------------------------------


@dataclass
class PerfectnessResult:
    constant: float
    not_uniformly_perfect: bool
    worst_center: object = None
    worst_radius: float = math.nan
    diameter: float = math.nan

    def __float__(self):
        return self.constant


def uniform_perfectness_constant(points) -> PerfectnessResult:
    """Largest ``c`` such that every tested annulus ``{c r <= |x - a| <= r}``
    about a point ``a`` meets the set.

    Radii are tested from ``a``'s nearest-neighbour distance up to the
    diameter (a finite set has empty annuli below that scale; see the
    README).  Within the gap between consecutive distances ``s_j < s_{j+1}``
    from ``a`` the binding radius is the gap's top, giving
    ``c <= s_j / min(s_{j+1}, diam)``.  A point at infinity makes the
    diameter infinite and the constant 0.
    """
    pts = list(points)
    if len(pts) < 2:
        raise TooFewPoints("need at least two points")
    has_inf = any(p is INFINITY for p in pts)
    z = np.array([complex(p) for p in pts if p is not INFINITY])
    z = np.unique(z)
    if z.size + has_inf < 2:
        raise TooFewPoints("need at least two distinct points")
    if has_inf:
        return PerfectnessResult(0.0, True, diameter=math.inf)
    dist = np.abs(z[:, None] - z[None, :])
    diam = float(dist.max())
    if z.size == 2:
        return PerfectnessResult(0.0, True, complex(z[0]), diam, diam)
    dist.sort(axis=1)
    s = dist[:, 1:]                                   # distances to the others, ascending
    top = np.minimum(np.concatenate([s[:, 1:], np.full((s.shape[0], 1), diam)], axis=1), diam)
    valid = s < diam
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid & (top > s), s / top, np.inf)
    k = np.unravel_index(np.argmin(ratio), ratio.shape)
    c = float(ratio[k])
    if not np.isfinite(c):
        return PerfectnessResult(0.0, True, diameter=diam)
    return PerfectnessResult(c, c <= 0.0, complex(z[k[0]]), float(top[k]), diam)


def cantor_endpoints(level: int) -> np.ndarray:
    """Endpoints of the level-``level`` middle-thirds intervals (2^(level+1) points)."""
    return np.unique(cantor_set_intervals(level).ravel()).astype(complex)


def double_exponential_set(levels: int) -> np.ndarray:
    """``{0} union {2^(-2^n) : 0 <= n <= levels}``."""
    return np.concatenate([[0.0], 2.0 ** -(2.0 ** np.arange(levels + 1))]).astype(complex)


def boundary_uniform_perfectness(domain: CircularDomain, samples_per_arc: int = 64) -> PerfectnessResult:
    """Uniform-perfectness constant of a sampled boundary; any isolated
    boundary point (puncture) is an immediate negative verdict."""
    domain = _as_domain(domain)
    if domain.punctures:
        return PerfectnessResult(0.0, True)
    pts = [np.array([e for e in b.arc.endpoints() if e is not INFINITY], dtype=complex)
           if b.side == 0 else b.arc.sample(samples_per_arc) for b in domain.boundary_arcs]
    pts = np.unique(np.concatenate(pts))
    pts = list(pts) + ([INFINITY] if domain.infinity_on_boundary else [])
    return uniform_perfectness_constant(pts)
