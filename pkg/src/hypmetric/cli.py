"""Command-line front end.

Subcommands: ``density``, ``quantity``, ``convexity``, ``witness``,
``solve`` and ``verify``.  Domains are JSON specs (see
:mod:`hypmetric.domainspec`).  Exit codes: 0 success, 2 spec or
configuration error, 3 numerical non-convergence or no witness found,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import domainspec
from .convexity import (
    find_euclidean_nonconvexity_witness,
    find_spherical_nonconvexity_witness,
    is_euclidean_convex,
    is_spherically_convex,
    verify_keogh_witness,
    verify_witness,
)
from .domains import GridDomain
from .errors import HypMetricError, NotApplicable, NotConverged, SpecParse, WitnessNotFound
from .metric_exact import has_closed_form
from .metric_pde import PDEDensity, refine_and_extrapolate, solve, solve_domain
from .quantities import auto_chart, estimate_C, estimate_Chat, estimate_Chat_chain
from .sphere_geom import CHI_KINDS
from .verification import CHECKS, VerifyConfig, run_suite

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(HypMetricError, ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    domain: Optional[str] = None
    chi: str = "tau"
    resolution: int = 129
    tol: float = 1e-8
    levels: int = 1
    output: Optional[str] = None
    format: str = "text"

    def __post_init__(self):
        n = self.resolution
        if not any(n == 2 ** k + 1 for k in range(5, 11)):
            raise ConfigError(f"--resolution must be 2^k+1 with 5 <= k <= 10, got {n}")
        if not (0.0 < self.tol <= 1e-2):
            raise ConfigError(f"--tol must lie in (0, 1e-2], got {self.tol:g}")
        if self.chi not in CHI_KINDS:
            raise ConfigError(f"--chi must be one of {', '.join(CHI_KINDS)}")
        if self.levels < 1:
            raise ConfigError("--levels must be at least 1")
        if self.format not in ("csv", "text"):
            raise ConfigError("--format must be csv or text")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if x is None or isinstance(x, (int, str)):
        return x
    return str(x)


def _text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(header)
    for row in rows:
        wr.writerow(row)
    return buf.getvalue()


def _emit(cfg: RunConfig, content: str):
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(content)
    else:
        sys.stdout.write(content)


def _num(v) -> str:
    v = float(v)
    return repr(v) if math.isfinite(v) else ("" if math.isnan(v) else str(v))


def _load(cfg: RunConfig):
    if not cfg.domain:
        raise ConfigError("--domain is required")
    try:
        return domainspec.load(cfg.domain)
    except OSError as exc:
        raise SpecParse(f"{cfg.domain}: {exc.strerror}") from None


def _chart_for(dom):
    return None if dom.is_bounded else auto_chart(dom)


def _density(dom, cfg: RunConfig):
    """Closed form when available, otherwise a PDE solve at the requested resolution."""
    if isinstance(dom, GridDomain):
        return _GridDensity(solve(dom, cfg.tol)), dom.source, dom.chart
    if has_closed_form(dom):
        from .metric_exact import density_for
        return density_for(dom), dom, None
    return PDEDensity.build(dom, cfg.resolution, chart=_chart_for(dom), tol=cfg.tol), dom, None


class _GridDensity:
    def __init__(self, field):
        self.field = field

    def __call__(self, z):
        return self.field.sample(z)

    def mu(self, z):
        z = np.asarray(z, dtype=complex)
        return (1.0 + np.abs(z) ** 2) * self(z)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _parse_xy(s: str) -> complex:
    try:
        x, y = (float(t) for t in s.split(","))
    except ValueError:
        raise ConfigError(f"--point expects x,y (got {s!r})") from None
    return complex(x, y)


def _grid_points(dom, n: int) -> np.ndarray:
    if isinstance(dom, GridDomain):
        if dom.chart is not None:
            raise ConfigError("--grid on a charted grid spec: pass --point values instead")
        x0, y0, x1, y1 = dom.bbox
    elif dom.is_bounded:
        x0, y0, x1, y1 = dom.bounding_box()
    else:
        x0, y0, x1, y1 = -3.0, -3.0, 3.0, 3.0
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    return (X + 1j * Y).ravel()


def cmd_density(cfg: RunConfig, args) -> int:
    dom = _load(cfg)
    if args.point:
        z = np.array([_parse_xy(p) for p in args.point])
    elif args.grid:
        if args.grid < 2:
            raise ConfigError("--grid needs at least 2 points per side")
        z = _grid_points(dom, args.grid)
    else:
        raise ConfigError("density needs --point or --grid")
    dens, geo, chart = _density(dom, cfg)
    # distances are measured in the original plane
    orig = geo if chart is None else geo.transform(chart.inverse())
    inside = orig.contains(z)
    d = orig.euclid_distance_raw(z)
    tau = orig.tau_distance_raw(z)
    lam = np.full(z.shape, np.nan)
    ok = np.asarray(inside, dtype=bool)
    if ok.any():
        lam[ok] = np.asarray(dens(z[ok]), dtype=float)
    mu = (1.0 + np.abs(z) ** 2) * lam
    status = np.where(~ok, "outside", np.where(np.isfinite(lam), "ok", "near-boundary"))
    if args.grid and not args.point:
        keep = ok
        z, lam, mu, d, tau, status = z[keep], lam[keep], mu[keep], d[keep], tau[keep], status[keep]
    rows = [[_num(p.real), _num(p.imag), _num(a), _num(b), _num(c), _num(e), s]
            for p, a, b, c, e, s in zip(z, lam, mu, d, tau, status)]
    header = ["x", "y", "lambda", "mu", "d", "tau_to_boundary", "status"]
    if cfg.format == "csv":
        _emit(cfg, _csv(header, rows))
    else:
        _emit(cfg, _text({"columns": header, "rows": [
            {"x": p.real, "y": p.imag, "lambda": a, "mu": b, "d": c, "tau_to_boundary": e, "status": s}
            for p, a, b, c, e, s in zip(z, lam, mu, d, tau, status)]}))
    return EXIT_OK


def cmd_quantity(cfg: RunConfig, args) -> int:
    dom = _load(cfg)
    if isinstance(dom, GridDomain):
        raise ConfigError("quantity needs an arc-bounded domain, not a grid spec")
    dens, _, _ = _density(dom, cfg)
    if args.kind == "C":
        reports = {"C": estimate_C(dom, dens)}
    elif args.kind == "Chat":
        reports = {f"Chat_{cfg.chi}": estimate_Chat(dom, dens, cfg.chi)}
    else:
        reports = dict(estimate_Chat_chain(dom, dens))
    if cfg.format == "csv":
        rows = []
        for name, e in reports.items():
            r = e.report()
            rows.append([name, _num(r["value"]), _num(r["extrapolated"]), _num(r["error_indicator"]),
                         json.dumps(r["argmin"]), r["grid_level"], r["points_evaluated"]])
        _emit(cfg, _csv(["quantity", "value", "extrapolated", "error_indicator", "argmin",
                         "grid_level", "points_evaluated"], rows))
    else:
        out = {k: v.report() for k, v in reports.items()}
        _emit(cfg, _text(out if len(out) > 1 else next(iter(out.values()))))
    return EXIT_OK


def cmd_convexity(cfg: RunConfig, args) -> int:
    dom = _load(cfg)
    if isinstance(dom, GridDomain):
        raise ConfigError("convexity tests need an arc-bounded domain, not a grid spec")
    rep = (is_spherically_convex if args.geometry == "spherical" else is_euclidean_convex)(dom)
    d = rep.to_dict()
    if cfg.format == "csv":
        _emit(cfg, _csv(["geometry", "convex", "reasons"],
                        [[args.geometry, str(bool(rep)).lower(), "; ".join(d.get("reasons", []))]]))
    else:
        _emit(cfg, _text(d))
    return EXIT_OK


def cmd_witness(cfg: RunConfig, args) -> int:
    dom = _load(cfg)
    if isinstance(dom, GridDomain):
        raise ConfigError("witness search needs an arc-bounded domain, not a grid spec")
    spherical = args.geometry == "spherical"
    find = find_spherical_nonconvexity_witness if spherical else find_euclidean_nonconvexity_witness
    check = verify_witness if spherical else verify_keogh_witness
    try:
        w = find(dom, max_doublings=args.max_doublings)
    except NotApplicable as exc:
        out = {"status": "not-applicable", "reason": str(exc)}
        _emit(cfg, _csv(["status", "reason"], [[out["status"], out["reason"]]]) if cfg.format == "csv"
              else _text(out))
        return EXIT_OK
    verdict = check(dom, w)
    out = {"status": "verified" if verdict else "verification-failed",
           "witness": w.to_dict(), "verification": verdict.to_dict()}
    if cfg.format == "csv":
        rows = [[name, str(bool(ok)).lower(), _jsonable(detail)] for name, (ok, detail) in verdict.checks.items()]
        _emit(cfg, _csv(["check", "passed", "detail"], rows))
    else:
        _emit(cfg, _text(out))
    return EXIT_OK if verdict else EXIT_VERIFY


def cmd_solve(cfg: RunConfig, args) -> int:
    dom = _load(cfg)
    if isinstance(dom, GridDomain):
        if cfg.levels > 1:
            raise ConfigError("--levels needs an arc-bounded domain to re-rasterize")
        fields, order = [solve(dom, cfg.tol)], math.nan
    else:
        chart = _chart_for(dom)
        if cfg.levels == 1:
            fields, order = [solve_domain(dom, cfg.resolution, cfg.tol, chart=chart)], math.nan
        else:
            base = (cfg.resolution - 1) // 2 ** (cfg.levels - 1) + 1
            if base < 9 or (base - 1) % 8:
                raise ConfigError(f"--resolution {cfg.resolution} is too coarse for {cfg.levels} levels")
            res = refine_and_extrapolate(dom, cfg.levels, base, chart=chart, tol=cfg.tol)
            fields, order = res.fields, res.order
    f = fields[-1]
    g = f.grid
    if cfg.format == "csv":
        nodes = g.nodes[g.mask]
        uu = f.u[g.mask]
        rows = [[_num(p.real), _num(p.imag), _num(v), _num(math.exp(v))] for p, v in zip(nodes, uu)]
        _emit(cfg, _csv(["x", "y", "u", "lambda"], rows))
    else:
        head = f.header()
        head["levels"] = [fl.grid.nx for fl in fields]
        head["observed_order"] = order
        _emit(cfg, _text(head))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    names = args.only or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s) {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    vcfg = VerifyConfig(tol=cfg.tol, resolution=257 if cfg.resolution == 129 else cfg.resolution)

    def progress(r):
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name} ({r.runtime:.1f}s) {r.summary}", file=sys.stderr)

    results = run_suite(names, vcfg, progress if not args.quiet else None)
    all_ok = all(r.ok for r in results)
    if cfg.format == "csv":
        rows = [[r.name, str(r.passed).lower(), r.budget, "; ".join(r.flags), r.summary] for r in results]
        body = _csv(["check", "passed", "budget_seconds", "flags", "summary"], rows)
    else:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        runtimes = " ".join(f"{r.name}={r.runtime:.2f}s" for r in results)
        # wall times vary run to run, so they live on the header line only
        report = {"passed": all_ok, "checks": [
            {"name": r.name, "passed": r.passed, "budget_seconds": r.budget, "flags": r.flags,
             "summary": r.summary, "details": r.details}
            for r in results]}
        over = [r.name for r in results if not r.within_budget]
        body = f"# hypmetric verify {stamp} runtimes: {runtimes} over-budget: {','.join(over) or 'none'}\n" \
               + _text(report)
    _emit(cfg, body)
    return EXIT_OK if all_ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, domain: bool = True):
    if domain:
        p.add_argument("--domain", required=True, help="path to a JSON domain spec")
    p.add_argument("--chi", default="tau", choices=CHI_KINDS, help="sphere distance (default tau)")
    p.add_argument("--resolution", type=int, default=129, help="grid size 2^k+1, 5 <= k <= 10")
    p.add_argument("--tol", type=float, default=1e-8, help="Newton residual tolerance, in (0, 1e-2]")
    p.add_argument("--levels", type=int, default=1, help="refinement levels for solve")
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--format", default="text", choices=("csv", "text"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypmetric", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("density", help="tabulate lambda and mu at points")
    _common(p)
    p.add_argument("--point", action="append", metavar="X,Y", help="probe point (repeatable)")
    p.add_argument("--grid", type=int, metavar="N", help="N x N probes over the bounding box")

    p = sub.add_parser("quantity", help="estimate C or C-hat")
    _common(p)
    p.add_argument("--kind", default="Chat", choices=("C", "Chat", "chain"))

    for name, text in (("convexity", "test convexity"), ("witness", "find and verify a non-convexity witness")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--geometry", default="spherical", choices=("spherical", "euclidean"))
        if name == "witness":
            p.add_argument("--max-doublings", type=int, default=2)

    p = sub.add_parser("solve", help="solve the density PDE on a grid")
    _common(p)

    p = sub.add_parser("verify", help="run the acceptance checks")
    _common(p, domain=False)
    p.add_argument("--only", action="append", metavar="CHECK", help="run only this check (repeatable)")
    p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return ap


COMMANDS = {"density": cmd_density, "quantity": cmd_quantity, "convexity": cmd_convexity,
            "witness": cmd_witness, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.subcommand, getattr(args, "domain", None), args.chi, args.resolution,
                        args.tol, args.levels, args.output, args.format)
        return COMMANDS[args.subcommand](cfg, args)
    except (SpecParse, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NotConverged, WitnessNotFound) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HypMetricError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
