"""Command-line interface.

Subcommands mirror the library: ``constants``, ``exchange-scan``,
``weyl-scan``, ``spectral-error``, ``semilocal-scan``, ``gga-audit``,
``tessellate-check``.  Every command writes machine-readable output
(CSV with a schema header and/or JSON with the resolved configuration
echoed back) plus a companion plot-data file with x/y/theory columns
and a generic plot script.

Exit codes: 0 success, 1 usage error, 2 numerical non-convergence,
3 fixture violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import coefficients, functionals, geometry, spectral
from ._parallel import ordered_map, worker_count
from .enhancement import (ParseError, ValidationError, builtin_enhancement,
                          parse_enhancement)
from .quad import QuadratureSpec

CSV_SCHEMA = "# polyspec-csv schema=1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_VIOLATION = 3

_FIXTURES = {
    "square": ("box", [1.0, 1.0]),
    "cube": ("box", [1.0, 1.0, 1.0]),
    "triangle-right-isosceles": ("triangle-right-isosceles", [1.0]),
    "triangle-equilateral": ("triangle-equilateral", [1.0]),
    "triangle-30-60-90": ("triangle-30-60-90", [1.0]),
    "triangle-50-60-70": ("triangle-50-60-70", [1.0]),
}

PLOT_TEMPLATE = """\
#!/usr/bin/env python3
\"\"\"Generic plot script for polyspec scan output (x, y, theory columns).\"\"\"
import sys
import csv

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{data}"
xs, ys, th = [], [], []
with open(path) as fh:
    rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
for row in rows[1:]:
    xs.append(float(row[0]))
    ys.append(float(row[1]))
    th.append(float(row[2]))
plt.plot(xs, ys, "o-", label=rows[0][1])
plt.plot(xs, th, "--", label=rows[0][2])
plt.xlabel(rows[0][0])
plt.legend()
plt.tight_layout()
plt.savefig(path.replace(".csv", ".png"), dpi=150)
print("wrote", path.replace(".csv", ".png"))
"""


class UsageError(ValueError):
    pass


def _resolve_fixture(name: str, fixture_file: str | None):
    if fixture_file:
        desc = json.loads(Path(fixture_file).read_text())
        if desc.get("kind") == "torus":
            return geometry.Lattice.cubic(desc["parameters"])
        return geometry.polytope_from_descriptor(desc)
    if name is None:
        raise UsageError("a --fixture (or --fixture-file) is required")
    if name.startswith("torus"):
        sides = [float(v) for v in name.split(":")[1].split(",")] if ":" in name else [1.0, 1.0]
        return geometry.Lattice.cubic(sides)
    if name.startswith("box:"):
        return geometry.make_polytope("box", [float(v) for v in name.split(":")[1].split(",")])
    if name in _FIXTURES:
        kind, params = _FIXTURES[name]
        return geometry.make_polytope(kind, params)
    raise UsageError(f"unknown fixture {name!r}; known: {sorted(_FIXTURES)}, "
                     "box:L1,L2[,L3], torus[:L1,L2[,L3]]")


def _numeric(value, error=None) -> dict:
    if error is None:
        return {"value": value, "tag": "exact"}
    return {"value": value, "error_estimate": error}


def _write_csv(path: Path, header: list[str], rows: list[list]):
    lines = [CSV_SCHEMA, ",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_plot_data(prefix: Path, xlabel: str, ylabel: str, theory_label: str,
                     rows: list[list]):
    data = prefix.with_suffix(".plot.csv")
    _write_csv(data, [xlabel, ylabel, theory_label], rows)
    script = prefix.parent / (prefix.stem + "_plot.py")
    script.write_text(PLOT_TEMPLATE.format(data=data.name))


def _write_json(path: Path, payload: dict, config_echo: dict):
    payload = {"config": config_echo, **payload}
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _quad_spec(args, default_evals=2 ** 20) -> QuadratureSpec:
    return QuadratureSpec(rtol=args.rtol, max_evals=args.max_evals or default_evals,
                          seed=args.seed, shifts=args.shifts)


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not callable(v)}


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(args) -> int:
    n, s = args.n, args.s
    if not 0 < s < n:
        print(f"error: s must lie in (0, n); got s={s}, n={n}", file=sys.stderr)
        return EXIT_USAGE
    spec = _quad_spec(args, default_evals=3_000_000)
    cx1 = coefficients.c_x1(n, s, spec.with_(rtol=min(args.rtol, 1e-7)))
    cfs = coefficients.c_fs(n, s, spec.with_(rtol=min(args.rtol, 1e-5)))
    cbd = coefficients.c_bl(n, s, "dirichlet", spec.with_(rtol=min(args.rtol, 1e-5)))
    cbn = coefficients.c_bl(n, s, "neumann", spec.with_(rtol=min(args.rtol, 1e-5)))
    report = {
        "n": n, "s": s,
        "c_x1": _numeric(cx1.value, cx1.error_estimate),
        "c_fs": _numeric(cfs.value, cfs.error_estimate),
        "c_bl_dir": _numeric(cbd.value, cbd.error_estimate),
        "c_bl_neu": _numeric(cbn.value, cbn.error_estimate),
        "c_bl_per": _numeric(0.0),
        "evaluations": {
            "c_x1": cx1.evaluations, "c_fs": cfs.evaluations,
            "c_bl_dir": cbd.evaluations, "c_bl_neu": cbn.evaluations,
        },
    }
    if (n, s) == (3, 1.0):
        gold = {
            "c_x1": 1.0 / (4.0 * math.pi ** 3),
            "c_fs": -1.0 / (24.0 * math.pi ** 2),
            "c_bl_dir": -math.log(2.0) / (12.0 * math.pi ** 2),
        }
        report["golden_match"] = {
            key: bool(abs(report[key]["value"] - val) <= 1e-3 * abs(val))
            for key, val in gold.items()
        }
        report["golden_values"] = gold
    out = Path(args.out or "constants.json")
    _write_json(out, report, _config_echo(args))
    print(f"wrote {out}")
    ok = cx1.converged and cfs.converged and cbd.converged and cbn.converged
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _lam_grid(args) -> np.ndarray:
    if args.count < 1:
        raise UsageError("grid count must be >= 1")
    if args.spacing == "log":
        return np.geomspace(args.lmin, args.lmax, args.count)
    return np.linspace(args.lmin, args.lmax, args.count)


def _exchange_point(task):
    enum, domain, bc_value, lam, s, spec, idx = task
    ex = functionals.exchange_energy(enum, lam, s, spec.with_(seed=spec.seed + idx))
    ctm = functionals.exchange_energy_ctm(domain, bc_value, lam, s,
                                          spec.with_(seed=spec.seed + idx,
                                                     max_evals=2 ** 19))
    return lam, ex, ctm


def cmd_exchange_scan(args) -> int:
    domain = _resolve_fixture(args.fixture, args.fixture_file)
    bc = spectral.BC.parse(args.bc)
    grid = _lam_grid(args)
    n = domain.dim
    enum = spectral.enumerate_modes(domain, bc, float(grid[-1]) + 1e-9)
    spec = _quad_spec(args, default_evals=2 ** 21)
    tasks = [(enum, domain, bc.value, float(lam), args.s, spec, idx)
             for idx, lam in enumerate(grid)]
    results = ordered_map(_exchange_point, tasks)
    theory = _exchange_theory(domain, bc, n, args.s)
    rows = []
    records = []
    for lam, ex, ctm in results:
        diag = {k: v["signed_scaled"] for k, v in ctm["terms"].items()}
        top = sorted(diag.items(), key=lambda kv: -abs(kv[1]))[:3]
        rows.append([lam, ex.value, ex.error_estimate, ctm["total"].value,
                     ctm["total"].error_estimate,
                     ";".join(f"{k}:{v:.6g}" for k, v in top)])
        records.append((lam, ex.value))
    out = Path(args.out or "exchange_scan")
    _write_csv(out.with_suffix(".csv"),
               ["lambda", "E_x", "E_x_err", "E_x_ctm", "E_x_ctm_err", "top_terms"],
               rows)
    fit_summary = {}
    if len(records) >= 4:
        fit = functionals.fit_two_term(records, (n + args.s, n - 1 + args.s))
        fit_summary = {
            "exponents": list(fit.exponents),
            "leading": _numeric(fit.leading, math.sqrt(max(fit.covariance[0, 0], 0.0))),
            "second": _numeric(fit.second, math.sqrt(max(fit.covariance[1, 1], 0.0))),
            "residual_norm": fit.residual_norm,
            "drift": fit.drift,
            "theory": theory,
        }
    _write_json(out.with_suffix(".json"), {"fit": fit_summary}, _config_echo(args))
    _write_plot_data(out, "lambda", "E_x",
                     "theory_two_term",
                     [[lam, ex.value,
                       theory["leading"] * lam ** (n + args.s)
                       + theory["second"] * lam ** (n - 1 + args.s)]
                      for lam, ex, _ in results])
    print(f"wrote {out}.csv, {out}.json")
    return EXIT_OK


def _exchange_theory(domain, bc, n, s) -> dict:
    poly = domain.fundamental_domain() if isinstance(domain, geometry.Lattice) else domain
    cx1 = coefficients.c_x1(n, s)
    cfs = coefficients.c_fs(n, s)
    cbl = coefficients.c_bl(n, s, bc)
    return {
        "leading": cx1.value * poly.volume,
        "second": (cfs.value + cbl.value) * poly.boundary_area,
        "c_x1": cx1.value, "c_fs": cfs.value, "c_bl": cbl.value,
    }


def cmd_weyl_scan(args) -> int:
    domain = _resolve_fixture(args.fixture, args.fixture_file)
    bc = spectral.BC.parse(args.bc)
    enum = spectral.enumerate_modes(domain, bc, args.lmax)
    lo = args.window_lo or 0.5 * args.lmax
    hi = args.window_hi or args.lmax
    grid = np.linspace(lo, hi, args.count)
    resid = spectral.weyl_residual(enum, grid)
    pred = spectral.weyl_surface_prediction(domain, bc)
    avg = float(np.mean(resid))
    rows = [[float(l), float(r), pred] for l, r in zip(grid, resid)]
    out = Path(args.out or "weyl_scan")
    _write_csv(out.with_suffix(".csv"), ["lambda", "residual", "prediction"], rows)
    _write_json(out.with_suffix(".json"), {
        "window_average": _numeric(avg, float(np.std(resid) / math.sqrt(len(grid)))),
        "prediction": _numeric(pred),
        "relative_gap": abs(avg - pred) / abs(pred) if pred else None,
        "n_modes": len(enum),
    }, _config_echo(args))
    _write_plot_data(out, "lambda", "residual", "prediction", rows)
    print(f"wrote {out}.csv, {out}.json (avg {avg:.6f} vs {pred:.6f})")
    return EXIT_OK


def cmd_spectral_error(args) -> int:
    domain = _resolve_fixture(args.fixture, args.fixture_file)
    bc = spectral.BC.parse(args.bc)
    grid = _lam_grid(args)
    enum = spectral.enumerate_modes(domain, bc, float(grid[-1]) + 1e-9)
    records = spectral.error_scan(enum, domain, bc, grid,
                                  n_samples=args.samples, seed=args.seed)
    rows = [[r["lambda"], r["n_modes"], r["linf"], r["l2"], r["lp"],
             r["slope_to_date"]] for r in records]
    out = Path(args.out or "spectral_error")
    _write_csv(out.with_suffix(".csv"),
               ["lambda", "n_modes", "linf", "l2", "lp", "slope_to_date"], rows)
    n = domain.dim
    linf_slope = spectral.slope_fit(grid, [r["linf"] for r in records])
    l2_slope = spectral.slope_fit(grid, [r["l2"] for r in records])
    bound_linf = n - 1 - (n - 1) / (n + 1)
    bound_l2 = (n - 1) / 2.0
    _write_json(out.with_suffix(".json"), {
        "linf_slope": linf_slope, "l2_slope": l2_slope,
        "linf_bound_exponent": bound_linf, "l2_bound_exponent": bound_l2,
    }, _config_echo(args))
    theory0 = records[0]["linf"]
    _write_plot_data(out, "lambda", "linf", "bound_slope_line",
                     [[r["lambda"], r["linf"],
                       theory0 * (r["lambda"] / grid[0]) ** bound_linf]
                      for r in records])
    print(f"wrote {out}.csv (linf slope {linf_slope:.3f}, l2 slope {l2_slope:.3f})")
    return EXIT_OK


def cmd_semilocal_scan(args) -> int:
    domain = _resolve_fixture(args.fixture, args.fixture_file)
    bc = spectral.BC.parse(args.bc)
    grid = _lam_grid(args)
    enum = spectral.enumerate_modes(domain, bc, float(grid[-1]) + 1e-9)
    if args.integrand == "density":
        f = functionals.density_integrand()
    elif args.integrand == "dirac":
        f = functionals.dirac_lda_integrand()
    else:
        f = functionals.gga_integrand(builtin_enhancement(args.integrand))
    rows = []
    records = []
    conv = True
    for lam in grid:
        r = functionals.semilocal_value(enum, float(lam), f)
        rows.append([float(lam), r.value, r.error_estimate, enum.counting(float(lam))])
        records.append((float(lam), r.value))
        conv = conv and r.converged
    n = domain.dim
    out = Path(args.out or "semilocal_scan")
    _write_csv(out.with_suffix(".csv"), ["lambda", "F", "F_err", "N"], rows)
    payload = {}
    if len(records) >= 4:
        fit = functionals.fit_two_term(records, (n, n - 1))
        surf = coefficients.semilocal_surface_coefficient(f, _poly_of(domain), bc)
        payload = {
            "fit_leading": _numeric(fit.leading, math.sqrt(max(fit.covariance[0, 0], 0.0))),
            "fit_second": _numeric(fit.second, math.sqrt(max(fit.covariance[1, 1], 0.0))),
            "surface_coefficient": _numeric(surf.value, surf.error_estimate),
            "drift": fit.drift,
        }
    _write_json(out.with_suffix(".json"), payload, _config_echo(args))
    theory_a = payload.get("fit_leading", {}).get("value", 0.0)
    _write_plot_data(out, "lambda", "F", "bulk_term",
                     [[lam, val, theory_a * lam ** n] for lam, val in records])
    print(f"wrote {out}.csv, {out}.json")
    return EXIT_OK if conv else EXIT_NO_CONVERGENCE


def _poly_of(domain):
    return domain.fundamental_domain() if isinstance(domain, geometry.Lattice) else domain


def cmd_gga_audit(args) -> int:
    try:
        if args.expr_file:
            factor = parse_enhancement(Path(args.expr_file).read_text().strip(),
                                       provenance=args.expr_file)
        else:
            factor = builtin_enhancement(args.builtin or "lda")
    except (ParseError, ValidationError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    spec = _quad_spec(args, default_evals=2_000_000)
    try:
        report = functionals.gga_constraint(factor, spec.with_(rtol=1e-9))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    out = Path(args.out or "gga_audit.json")
    _write_json(out, {
        "functional": str(factor),
        "provenance": factor.provenance,
        "lhs": _numeric(report["lhs"], report["lhs_error_estimate"]),
        "rhs": _numeric(report["rhs"]),
        "defect": _numeric(report["defect"], report["lhs_error_estimate"]),
        "quadrature": {"evaluations": report["evaluations"],
                       "converged": report["converged"]},
    }, _config_echo(args))
    print(f"wrote {out} (defect {report['defect']:.3e})")
    return EXIT_OK if report["converged"] else EXIT_NO_CONVERGENCE


def cmd_tessellate_check(args) -> int:
    domain = _resolve_fixture(args.fixture, args.fixture_file)
    if isinstance(domain, geometry.Lattice):
        print("error: tessellation check applies to polytopes", file=sys.stderr)
        return EXIT_USAGE
    radius = args.radius or 3.0 * domain.diameter
    cert = geometry.strict_tessellation_check(domain, radius,
                                              samples=args.samples, seed=args.seed)
    out = Path(args.out or "tessellation.json")
    out.write_text(cert.to_json() + "\n")
    print(f"{cert.status} ({out})")
    return EXIT_OK if cert.status == "verified-to-radius" else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p: argparse.ArgumentParser, fixture=True):
    if fixture:
        p.add_argument("--fixture", help="square | cube | triangle-* | box:.. | torus[:..]")
        p.add_argument("--fixture-file", help="JSON descriptor {kind, parameters}")
        p.add_argument("--bc", default="dirichlet",
                       help="dirichlet | neumann | periodic")
    p.add_argument("--seed", type=int, default=0xFE121)
    p.add_argument("--rtol", type=float, default=1e-4)
    p.add_argument("--max-evals", type=int, default=None, dest="max_evals")
    p.add_argument("--shifts", type=int, default=8)
    p.add_argument("--out", help="output path or prefix")
    p.add_argument("--config", help="JSON config file; entries override flags")


def _add_grid(p: argparse.ArgumentParser, lmin=10.0, lmax=40.0, count=11):
    p.add_argument("--lmin", type=float, default=lmin)
    p.add_argument("--lmax", type=float, default=lmax)
    p.add_argument("--count", type=int, default=count)
    p.add_argument("--spacing", choices=["linear", "log"], default="linear")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyspec",
                                 description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="two-term expansion constants")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    _add_common(p, fixture=False)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("exchange-scan", help="exchange energy over a lambda grid")
    _add_common(p)
    _add_grid(p, lmin=15.0, lmax=40.0, count=51)
    p.add_argument("--s", type=float, default=1.0)
    p.set_defaults(func=cmd_exchange_scan)

    p = sub.add_parser("weyl-scan", help="counting-function residual scan")
    _add_common(p)
    p.add_argument("--lmax", type=float, default=300.0)
    p.add_argument("--window-lo", type=float, default=None)
    p.add_argument("--window-hi", type=float, default=None)
    p.add_argument("--count", type=int, default=6001)
    p.set_defaults(func=cmd_weyl_scan)

    p = sub.add_parser("spectral-error", help="S - S_ctm error scan")
    _add_common(p)
    _add_grid(p, lmin=10.0, lmax=40.0, count=13)
    p.add_argument("--samples", type=int, default=2 ** 14)
    p.set_defaults(func=cmd_spectral_error)

    p = sub.add_parser("semilocal-scan", help="semi-local functional scan")
    _add_common(p)
    _add_grid(p, lmin=10.0, lmax=40.0, count=25)
    p.add_argument("--integrand", default="dirac",
                   help="density | dirac | <builtin enhancement name>")
    p.set_defaults(func=cmd_semilocal_scan)

    p = sub.add_parser("gga-audit", help="enhancement-factor constraint audit")
    p.add_argument("--builtin", help="lda | pbe | b88-like")
    p.add_argument("--expr-file", help="file with an F_x(s) expression")
    _add_common(p, fixture=False)
    p.set_defaults(func=cmd_gga_audit)

    p = sub.add_parser("tessellate-check", help="bounded tessellation certificate")
    _add_common(p)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_tessellate_check)
    return ap


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text())
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise UsageError(f"unknown config key {key!r}")
            setattr(args, attr, value)
    return args


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _apply_config(args)
        code = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
