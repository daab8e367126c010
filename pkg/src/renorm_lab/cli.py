"""Command-line front end: ``renorm-lab <command> [options]``.

Every command prints (or writes) a JSON report with a versioned schema.
The ``hashed`` part of a report holds inputs, outputs and checks; its
SHA-256 is stored alongside, and timings live outside it, so identical
configurations give identical digests.

Exit codes: 0 success, 2 input or domain error, 3 nothing found,
4 every level of a pipeline failed.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import annulus_modulus as am
from . import complex_bounds as cb
from . import quadratic_dynamics as qd
from . import renormalization as rn
from . import slit_geometry as sg
from .curves import DomainBoundary
from .errors import DomainError, NoIntersection, NoRoot, RenormLabError

SCHEMA = "renorm-lab/1"
EXIT_OK, EXIT_INPUT, EXIT_EMPTY, EXIT_FAILED = 0, 2, 3, 4
MAX_DEPTH = 16
MAX_GRID = 4096


@dataclass
class RunConfig:
    """Parameters of one command; round-trips through JSON."""

    command: str
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        for key, val in self.params.items():
            if key.endswith("tol") and val is not None and not val > 0:
                raise DomainError(f"{key} must be positive")
            if key in ("depth", "max_depth") and val is not None and not 0 <= val <= MAX_DEPTH:
                raise DomainError(f"{key} must lie in [0, {MAX_DEPTH}]")
            if key == "grid" and val is not None and not 16 <= val <= MAX_GRID:
                raise DomainError(f"grid must lie in [16, {MAX_GRID}]")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        obj = json.loads(text)
        return cls(command=obj["command"], params=dict(obj.get("params", {})))


def _clean(obj):
    """Plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def make_report(command: str, inputs: dict, outputs: dict, checks: dict,
                timings: Optional[dict] = None) -> dict:
    hashed = _clean({"command": command, "inputs": inputs, "outputs": outputs,
                     "checks": checks})
    text = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return {"schema": SCHEMA, "hashed": hashed,
            "sha256": hashlib.sha256(text.encode()).hexdigest(),
            "timings": _clean(timings or {})}


def write_csv(path: str, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore",
                       lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow(_clean(r))
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _resolve_c(value) -> float:
    if value is None or str(value).lower() in ("feigenbaum", "f"):
        return qd.feigenbaum_parameter(10).value
    return float(value)


def _floats(text) -> list:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_range(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    text = str(text).strip()
    if not text:
        return []
    for sep in ("..", "-", ":"):
        if sep in text[1:]:
            a, b = text.split(sep, 1)
            return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


# --------------------------------------------------------------------------
# commands; each returns (report, exit code)


def cmd_superstable(a):
    if a.q is None:
        raise DomainError("--q is required")
    bracket = _floats(a.bracket) or None
    c = qd.find_superstable(a.q, bracket)
    res = abs(qd.critical_orbit_value(c, a.q))
    return make_report("superstable", {"q": a.q, "bracket": bracket},
                       {"c": c, "residual": res},
                       {"residual_ok": res <= qd.SUPERSTABLE_TOL,
                        "primitive": qd.is_primitive(c, a.q)}), EXIT_OK


def cmd_feigenbaum(a):
    est = qd.feigenbaum_parameter(a.depth)
    return make_report("feigenbaum", {"depth": a.depth},
                       {"c_inf": est.value, "sequence": est.sequence, "ratios": est.ratios},
                       {}), EXIT_OK


def _level_row(lvl, c, N, L, depth):
    return {"c": c, "N": N, "L": L, "depth": depth, "q": lvl.q, "a": lvl.a, "beta": lvl.beta,
            "I_length": 2 * abs(lvl.beta), "W_lo": lvl.W[0], "W_hi": lvl.W[1],
            "multiplier": lvl.multiplier, "critical_value": lvl.critical_value}


def cmd_cascade(a):
    c = _resolve_c(a.c)
    f = qd.QuadraticMap(c)
    levels = qd.renorm_cascade(f, a.N, a.depth)
    rows = [_level_row(l, c, a.N, a.L, a.depth) for l in levels]
    checks, extra = {}, {}
    if len(levels) >= 2:
        rb = qd.verify_real_bounds(levels, a.L, start=1)
        for r, ratio in zip(rows, rb.ratios + [None]):
            r["ratio"] = ratio
        extra = {"ratios": rb.ratios, "ratio_differences": rb.ratio_differences(),
                 "mu_hat": rb.mu_hat, "lambda_hat": rb.lambda_hat, "L_hat": rb.L_hat,
                 "failures": rb.failures}
        checks = {"real_bounds": rb.ok}
    if a.csv:
        write_csv(a.csv, ["c", "N", "L", "depth", "q", "a", "beta", "I_length", "ratio", "W_lo", "W_hi",
                          "multiplier", "critical_value"], rows)
    rep = make_report("cascade", {"c": c, "N": a.N, "depth": a.depth, "L": a.L},
                      dict(levels=rows, **extra), checks)
    return rep, (EXIT_OK if levels else EXIT_EMPTY)


def cmd_tower(a):
    c = _resolve_c(a.c)
    f = qd.QuadraticMap(c)
    levels = qd.renorm_cascade(f, a.N, max(a.m, 1))
    if len(levels) < a.m:
        return make_report("tower", {"c": c, "m": a.m, "N": a.N, "L": a.L},
                           {"levels_found": len(levels)}, {"built": False}), EXIT_EMPTY
    t = rn.build_tower(f, levels, a.m, a.L, a.N)
    return make_report("tower", {"c": c, "m": a.m, "N": a.N, "L": a.L}, t.to_json(),
                       {"tower_ok": t.ok}), EXIT_OK


def cmd_geometry(a):
    thetas = _floats(a.theta)
    rows = []
    for th in thetas:
        k = sg.k_of_theta(th)
        row = {"K": a.K, "theta": th, "k_formula": k.formula, "k_measured": k.measured,
               "discrepancy": k.discrepancy}
        try:
            Z = sg.ls_intersection(a.K, th)
            # the same crossing seen after Q^-1, against the endpoint K
            row.update(Z_re=Z.real, Z_im=Z.imag, dist_to_K2=abs(Z - a.K ** 2),
                       dist_sqrt_to_K=abs(cmath.sqrt(Z) - a.K))
        except NoIntersection:
            row.update(Z_re=None, Z_im=None, dist_to_K2=None, dist_sqrt_to_K=None)
        rows.append(row)
        if a.curves:
            d = Path(a.curves)
            d.mkdir(parents=True, exist_ok=True)
            region = sg.poincare_region((-1.0, 1.0), th)
            (d / f"poincare_theta{th:.6g}.json").write_text(json.dumps(region.boundary().to_json()))
            (d / f"square_image_theta{th:.6g}.json").write_text(
                json.dumps(sg.square_image_boundary(th).to_json()))
    if a.csv:
        write_csv(a.csv, ["K", "theta", "k_formula", "k_measured", "discrepancy", "Z_re",
                          "Z_im", "dist_to_K2", "dist_sqrt_to_K"], rows)
    d = [r["dist_to_K2"] for r in rows if r["dist_to_K2"] is not None]
    order = sorted(range(len(thetas)), key=lambda i: -thetas[i])
    dd = [rows[i]["dist_to_K2"] for i in order if rows[i]["dist_to_K2"] is not None]
    return make_report("geometry", {"K": a.K, "theta": thetas}, {"rows": rows},
                       {"distance_decreasing_as_theta_decreases":
                        all(y < x for x, y in zip(dd, dd[1:])) if d else True}), EXIT_OK


def cmd_invariant_set(a):
    c = _resolve_c(a.c)
    f = qd.QuadraticMap(c)
    levels = qd.renorm_cascade(f, 2 if a.N is None else a.N, a.n)
    if len(levels) < a.n:
        return make_report("invariant-set", {"c": c, "n": a.n}, {"levels_found": len(levels)},
                           {}), EXIT_EMPTY
    g = rn.rescale(f, levels[a.n - 1], a.L)
    cloud = cb.invariant_set(g, a.depth, a.density)
    cc = cb.compact_containment_check(cloud, g.J)
    hull = cb.hull_boundary(cloud, a.hull_resolution)
    inv = cb.invariance_check(hull, g, a.samples, cloud=cloud)
    if a.points:
        with open(a.points, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["re", "im", "depth"])
            for z, d in zip(cloud.points, cloud.depths):
                w.writerow([repr(float(z.real)), repr(float(z.imag)), int(d)])
    if a.curves:
        Path(a.curves).mkdir(parents=True, exist_ok=True)
        (Path(a.curves) / "hull.json").write_text(json.dumps(hull.boundary.to_json()))
    out = {"points": len(cloud), "counts": cloud.counts(), "skipped": cloud.skipped,
           "slit_distance": cc.slit_distance, "max_modulus": cc.max_modulus,
           "alarm_points": cc.alarm_points, "hull_area": hull.area, "hull_h": hull.h,
           "forward_escapes": inv.forward_escapes, "backward_escapes": inv.backward_escapes}
    return make_report("invariant-set", {"c": c, "n": a.n, "depth": a.depth,
                                         "density": a.density, "L": a.L,
                                         "hull_resolution": a.hull_resolution,
                                         "samples": a.samples},
                       out, {"containment": cc.ok, "invariance": inv.ok}), EXIT_OK


def cmd_complex_bounds(a):
    c = _resolve_c(a.c)
    f = qd.QuadraticMap(c)
    n_range = _int_range(a.n_range)
    table = cb.complex_bounds_sweep(f, a.N, n_range, L=a.L, strategy=a.strategy,
                                    grid=a.grid, depth=a.depth, density=a.density,
                                    keep=True)
    level_checks = {}
    for r in table.rows:
        d = r.get("_detail", {})
        cc, inv, hull = d.get("containment"), d.get("invariance"), d.get("hull")
        if cc is None:
            continue
        level_checks[str(r["n"])] = {
            "slit_distance": cc.slit_distance, "max_modulus": cc.max_modulus,
            "alarm": cc.alarm, "containment_ok": cc.ok,
            "hull_area": hull.area if hull is not None else None,
            "invariance_samples": inv.samples if inv else None,
            "forward_escapes": inv.forward_escapes if inv else None,
            "backward_escapes": inv.backward_escapes if inv else None}
    if a.curves:
        d = Path(a.curves)
        d.mkdir(parents=True, exist_ok=True)
        for r in table.rows:
            res = r.get("_detail", {}).get("restriction")
            if res is not None:
                (d / f"V_n{r['n']}.json").write_text(json.dumps(res.V.to_json()))
                (d / f"V_prime_n{r['n']}.json").write_text(json.dumps(res.V_prime.to_json()))
    rows = [{k: v for k, v in r.items() if not k.startswith("_")} for r in table.rows]
    if a.csv:
        write_csv(a.csv, cb.SWEEP_COLUMNS, rows)
    ok = table.successes
    out = {"rows": rows, "levels": level_checks,
           "min_modulus": table.min_modulus if ok else None,
           "modulus_ratio": table.modulus_ratio if ok else None,
           "real_bounds_L_hat": table.params.get("real_bounds_L_hat")}
    rep = make_report("complex-bounds", {"c": c, "N": a.N, "n_range": n_range, "L": a.L,
                                         "strategy": a.strategy, "grid": a.grid,
                                         "depth": a.depth, "density": a.density},
                      out, {"all_levels_ok": len(ok) == len(rows)})
    if n_range and not ok:
        return rep, EXIT_FAILED
    return rep, EXIT_OK


def _load_curve(path) -> DomainBoundary:
    return DomainBoundary.from_json(Path(path).read_text())


def cmd_modulus(a):
    if a.round:
        r, R = _floats(a.round)
        outer, inner = am.round_annulus(r, R)
        inputs = {"round": [r, R], "grid": a.grid}
    else:
        if not (a.outer and a.inner):
            raise DomainError("give --round r,R or both --outer and --inner")
        outer, inner = _load_curve(a.outer), _load_curve(a.inner)
        inputs = {"outer": outer.to_json(), "inner": inner.to_json(), "grid": a.grid}
    est = am.modulus(outer, inner, a.grid)
    checks = {}
    if a.round:
        exact = math.log(R / r) / (2 * math.pi)
        checks["relative_error"] = abs(est.richardson - exact) / exact
    if a.m is not None:
        checks["lower_bound"] = am.modulus_lower_bound_check(est, a.m)
    return make_report("modulus", inputs, est.to_json(), checks), EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renorm-lab",
                                description="Renormalization and complex bounds for x^2 + c.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file whose keys override the defaults")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--csv", help="write the table as CSV")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    s = common(sub.add_parser("superstable", help="superstable parameter of period q"))
    s.add_argument("--q", type=int, help="period (required, from a flag or the config)")
    s.add_argument("--bracket", help="lo,hi")
    s.set_defaults(func=cmd_superstable)

    s = common(sub.add_parser("feigenbaum", help="accumulation of period doubling"))
    s.add_argument("--depth", type=int, default=10)
    s.set_defaults(func=cmd_feigenbaum)

    s = common(sub.add_parser("cascade", help="renormalization levels and real bounds"))
    s.add_argument("--c", default="feigenbaum")
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--L", type=float, default=1.05)
    s.set_defaults(func=cmd_cascade)

    s = common(sub.add_parser("tower", help="finite tower with its inequality checks"))
    s.add_argument("--c", default="feigenbaum")
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--L", type=float, default=1.05)
    s.set_defaults(func=cmd_tower)

    s = common(sub.add_parser("geometry", help="Poincare neighbourhoods and Z(K, theta)"))
    s.add_argument("--K", type=float, default=2.0)
    s.add_argument("--theta", default="0.2,0.1,0.05", help="comma-separated angles")
    s.add_argument("--curves", help="directory for curve files")
    s.set_defaults(func=cmd_geometry)

    s = common(sub.add_parser("invariant-set", help="backward orbit, hull and checks"))
    s.add_argument("--c", default="feigenbaum")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--L", type=float, default=1.6)
    s.add_argument("--depth", type=int, default=cb.DEFAULT_DEPTH)
    s.add_argument("--density", type=int, default=cb.DEFAULT_DENSITY)
    s.add_argument("--hull-resolution", type=int, default=256)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--points", help="CSV file for the cloud")
    s.add_argument("--curves", help="directory for curve files")
    s.set_defaults(func=cmd_invariant_set)

    s = common(sub.add_parser("complex-bounds", help="restriction and modulus per level"))
    s.add_argument("--c", default="feigenbaum")
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--n-range", default="2..5")
    s.add_argument("--L", type=float, default=1.6)
    s.add_argument("--strategy", choices=["preimage", "poincare"], default="preimage")
    s.add_argument("--grid", type=int, default=256)
    s.add_argument("--depth", type=int, default=cb.DEFAULT_DEPTH)
    s.add_argument("--density", type=int, default=cb.DEFAULT_DENSITY)
    s.add_argument("--curves", help="directory for V and V' curve files")
    s.set_defaults(func=cmd_complex_bounds)

    s = common(sub.add_parser("modulus", help="modulus of an annulus between two curves"))
    s.add_argument("--outer", help="curve JSON file")
    s.add_argument("--inner", help="curve JSON file")
    s.add_argument("--round", help="r,R for a round annulus")
    s.add_argument("--grid", type=int, default=512)
    s.add_argument("--m", type=float, help="lower bound to check")
    s.set_defaults(func=cmd_modulus)
    return p


_NOT_PARAMS = {"func", "command", "config", "out", "csv", "curves", "points"}
_LIST_FLAGS = {"--bracket", "--theta", "--round", "--n-range"}


def _join_list_values(argv):
    """Turn ``--bracket -1.8,-1.7`` into ``--bracket=-1.8,-1.7`` so argparse
    does not read the negative value as an option."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _LIST_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = _join_list_values(sys.argv[1:] if argv is None else list(argv))
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        cfg = cfg.get("params", cfg)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)  # explicit flags still win
    return args


def run(argv=None):
    """Run a command and return ``(report, exit_code)``."""
    args = parse(argv)
    cfg = RunConfig(args.command, {k: v for k, v in vars(args).items()
                                   if k not in _NOT_PARAMS})
    t0 = time.perf_counter()
    try:
        cfg.validate()
        report, code = args.func(args)
    except (DomainError, NoRoot, ValueError) as exc:
        report = make_report(args.command, cfg.params, {"error": str(exc)}, {})
        code = EXIT_INPUT
    except RenormLabError as exc:
        report = make_report(args.command, cfg.params, {"error": str(exc)}, {})
        code = EXIT_FAILED
    report["timings"] = {"seconds": time.perf_counter() - t0}
    report["exit_code"] = code
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return report, code


def main(argv=None) -> int:
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
