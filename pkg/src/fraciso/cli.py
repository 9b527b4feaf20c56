"""Command-line front end.

Every subcommand accepts its options on the command line or in a JSON
object passed with ``--config`` (keys are option names with ``-`` or ``_``;
command-line values win).  Unknown keys, missing required options and bad
JSON exit with status 2, precondition failures with status 3, and selftest
violations with status 4.

JSON summaries go to stdout and, with ``--out DIR``, to ``DIR/summary.json``
together with CSV detail tables.  Files written to ``--out`` contain no
timings, so reruns with the same configuration are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from .certifier import certify_interaction_lower_bound
from .dg import DGParams, caccioppoli_sides, growth_simulation, membership_scan
from .errors import PreconditionError
from .grid import KernelParams, LatticeDomain, build_grid_function
from .gridio import load_grid, load_pixel_set
from .iso_probe import family_generator, fit_beta_C, iso_report
from .psi import psi
from .quadrature import Mode, QuadratureSpec, gagliardo_p, interaction, interaction_annulus, tail
from .selftest import run_selftest, summary

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_SELFTEST = 0, 2, 3, 4
JSON_DIGITS, CSV_DIGITS = 12, 6


class ConfigError(Exception):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# option name -> (converter, default, help); default REQUIRED marks mandatory options
REQUIRED = object()
KERNEL = {
    "s": (float, REQUIRED, "fractional order s in (0, 1)"),
    "p": (float, REQUIRED, "integrability exponent p > 1"),
}
QUAD = {
    "mode": (str, "midpoint", "quadrature mode: midpoint, refined or guaranteed_lower"),
    "m": (int, 4, "sub-cell refinement factor for the refined mode"),
}
DG = {
    "d": (float, 0.0, "class parameter d"),
    "H": (float, 1.0, "class parameter H"),
    "lam": (float, 0.0, "class parameter lambda"),
}
COMMANDS = {
    "psi": ("evaluate the modulus Psi_alpha(t)", {
        "alpha": (float, REQUIRED, "exponent alpha = sp >= 1"),
        "t": (float, REQUIRED, "argument in [0, 1]"),
    }),
    "seminorm": ("Gagliardo seminorm [u]^p of a serialized grid", {
        "grid": (str, REQUIRED, "grid file"), **KERNEL, **QUAD,
    }),
    "interaction": ("interaction energy I(A, B) of two serialized pixel sets", {
        "set_a": (str, REQUIRED, "pixel-set file for A"),
        "set_b": (str, REQUIRED, "pixel-set file for B"),
        "alpha": (float, REQUIRED, "kernel exponent alpha"),
        "gamma": (float, None, "annulus ratio (with --r)"),
        "r": (float, None, "annulus scale (with --gamma)"),
        **QUAD,
    }),
    "tail": ("nonlocal tail of a serialized grid", {
        "grid": (str, REQUIRED, "grid file"), **KERNEL,
        "x0": (_floats, REQUIRED, "center, comma separated"),
        "R": (float, REQUIRED, "radius"),
    }),
    "certify-lower-bound": ("certified lower bound on I(A, B) for subsets of the unit cube", {
        "sets": (list, REQUIRED, "pixel-set files for A and B"),
        "alpha": (float, REQUIRED, "kernel exponent alpha >= 1"),
    }),
    "probe-iso": ("isoperimetric probe over a function family", {
        "family": (str, "smoothed_step", "smoothed_step, radial_ramp or trig_polynomial"),
        "eps_list": (_floats, None, "comma-separated eps values (step and ramp families)"),
        "degrees": (_floats, None, "comma-separated degrees (trig_polynomial)"),
        "n": (int, 1, "dimension"),
        "N": (int, 1024, "cells per axis"),
        **KERNEL,
        "beta": (float, None, "exponent beta (default from the constants ledger)"),
        "h": (float, 0.0, "lower level"),
        "k": (float, 1.0, "upper level"),
        "svg": (_bool, False, "write a log-log scatter to DIR/scatter.svg"),
        **QUAD,
    }),
    "dg-check": ("both sides of the Caccioppoli inequality for one instance", {
        "grid": (str, REQUIRED, "grid file"), **KERNEL, **DG,
        "x0": (_floats, REQUIRED, "center, comma separated"),
        "r": (float, REQUIRED, "inner radius"),
        "R": (float, REQUIRED, "outer radius"),
        "k": (float, REQUIRED, "truncation level"),
        "sign": (str, "-", "truncation sign, + or -"),
        "strong_term": (_bool, False, "also evaluate the strong-class mixed term"),
        **QUAD,
    }),
    "dg-scan": ("worst Caccioppoli ratio over a sample of instances", {
        "grid": (str, REQUIRED, "grid file"), **KERNEL, **DG,
        "samples": (list, None, "list of [x0, r, R, k, sign] (x0 a number or list)"),
        "count": (int, 20, "number of random samples when --samples is absent"),
        **QUAD,
    }),
    "growth-sim": ("level-set chain of the growth lemma", {
        "grid": (str, None, "grid file on a lattice containing B_4"),
        "family": (str, None, "built-in family instead of --grid: ramp (clamp(slope x1, 0, 1))"),
        "slope": (float, 2.0, "slope of the ramp family"),
        "n": (int, 1, "dimension of the built-in family"),
        "N": (int, 1024, "cells per axis of the built-in family"),
        **KERNEL, **DG,
        "delta": (float, REQUIRED, "smallness parameter in (0, 1/8)"),
        "tau": (float, 0.5, "target density"),
        "iso_constant": (float, 1.0, "isoperimetric constant on B_2"),
        "iso_exponent": (float, None, "isoperimetric exponent on B_2 (default p * beta)"),
        "C1": (float, None, "seminorm constant (default: empirical, at least 1)"),
    }),
    "selftest": ("run the invariant suites", {
        "quick": (_bool, False, "reduced instance counts"),
    }),
}
GLOBAL = {
    "config": "JSON file with option values",
    "out": "directory for JSON/CSV/SVG artifacts",
    "threads": "worker cap for quadrature",
    "seed": "seed for randomized suites",
}


def _fmt(x, digits):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format(x, f".{digits}g"))
    if isinstance(x, dict):
        return {str(k): _fmt(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_fmt(v, digits) for v in x]
    if hasattr(x, "value"):
        return x.value
    return x


def dumps_json(obj) -> str:
    return json.dumps(_fmt(obj, JSON_DIGITS), indent=2, sort_keys=True) + "\n"


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    v = _fmt(v, CSV_DIGITS)
    return format(v, f".{CSV_DIGITS}g") if isinstance(v, float) else v


def svg_scatter(xs, ys, title="", logx=True, logy=True, width=480, height=360) -> str:
    """Minimal SVG scatter plot (log axes by default)."""
    pts = [(x, y) for x, y in zip(xs, ys) if (x > 0 or not logx) and (y > 0 or not logy)
           and math.isfinite(x) and math.isfinite(y)]
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="10" y="20" font-size="14">{title}</text>',
             f'<rect x="40" y="30" width="{width - 60}" height="{height - 70}" fill="none" stroke="black"/>']
    if pts:
        X = [tx(x) for x, _ in pts]
        Y = [ty(y) for _, y in pts]
        x0, x1 = min(X), max(X)
        y0, y1 = min(Y), max(Y)
        sx = (width - 80) / ((x1 - x0) or 1.0)
        sy = (height - 90) / ((y1 - y0) or 1.0)
        for a, b in zip(X, Y):
            cx = 50 + (a - x0) * sx
            cy = height - 50 - (b - y0) * sy
            lines.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3"/>')
        lines.append(f'<text x="40" y="{height - 20}" font-size="11">x: {x0:.3g} .. {x1:.3g}'
                     f'{" (log10)" if logx else ""}; y: {y0:.3g} .. {y1:.3g}{" (log10)" if logy else ""}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraciso", description="Fractional seminorms, interaction "
                                     "energies, isoperimetric probes and De Giorgi class checks on lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, opts) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        for opt, (conv, default, h) in opts.items():
            flag = "--" + opt.replace("_", "-")
            kw = {"dest": opt, "default": None, "help": h}
            if conv is list:
                kw["nargs"] = "+"
            elif conv is _bool:
                kw.update(nargs="?", const="true")
            sp.add_argument(flag, **kw)
        sp.add_argument("--config", help=GLOBAL["config"])
        sp.add_argument("--out", help=GLOBAL["out"])
        sp.add_argument("--threads", type=int, default=None, help=GLOBAL["threads"])
        sp.add_argument("--seed", type=int, default=None, help=GLOBAL["seed"])
    return parser


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Merge the JSON config under the command line, convert and validate."""
    opts = COMMANDS[command][1]
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: the config must be a JSON object")
        globals_ok = {"out", "threads", "seed"}
        for key, value in cfg.items():
            norm = key.replace("-", "_")
            if norm in globals_ok:
                if getattr(args, norm) is None:
                    setattr(args, norm, value)
                continue
            if norm not in opts:
                raise ConfigError(f"{args.config}: unknown key {key!r} for {command}")
            raw[norm] = value
    for opt in opts:
        v = getattr(args, opt)
        if v is not None:
            raw[opt] = v
    out = {}
    for opt, (conv, default, _) in opts.items():
        if opt in raw:
            try:
                out[opt] = list(raw[opt]) if conv is list else conv(raw[opt])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"option {opt}: {exc}") from None
        elif default is REQUIRED:
            raise ConfigError(f"missing required option --{opt.replace('_', '-')}")
        else:
            out[opt] = default
    try:
        out["threads"] = max(1, int(args.threads)) if args.threads is not None else 1
        out["seed"] = int(args.seed) if args.seed is not None else 0
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad global option: {exc}") from None
    if not 0 <= out["seed"] < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    out["out"] = args.out
    if "mode" in out:
        try:
            Mode(out["mode"])
        except ValueError:
            raise ConfigError(f"unknown quadrature mode {out['mode']!r}") from None
    return out


def _spec(o) -> QuadratureSpec:
    mode = Mode(o["mode"])
    return QuadratureSpec(mode, o["m"] if mode is Mode.REFINED else 1, threads=o["threads"])


def _kernel(o, n) -> KernelParams:
    return KernelParams(n, o["s"], o["p"])


def _x0(o, n):
    x0 = o["x0"]
    if len(x0) == 1:
        x0 = x0 * n
    if len(x0) != n:
        raise PreconditionError(f"x0 has {len(x0)} coordinates for dimension {n}")
    return x0


# each runner returns (summary dict, {filename: text}, timing-free) ------------

def run_psi(o):
    v = psi(o["alpha"], o["t"])
    return {"alpha": o["alpha"], "t": o["t"], "value": v}, {}


def run_seminorm(o):
    u = load_grid(o["grid"])
    spec = _spec(o)
    val = gagliardo_p(u, _kernel(o, u.domain.n), spec)
    return {"value": val, "resolution": u.domain.N, "mode": spec.mode.value, "m": spec.effective_m}, {}


def run_interaction(o):
    A, B = load_pixel_set(o["set_a"]), load_pixel_set(o["set_b"])
    spec = _spec(o)
    if (o["gamma"] is None) != (o["r"] is None):
        raise ConfigError("--gamma and --r go together")
    if o["gamma"] is None:
        val = interaction(A, B, o["alpha"], spec)
    else:
        val = interaction_annulus(A, B, o["alpha"], o["gamma"], o["r"], spec)
    return {"value": val, "resolution": A.domain.N, "mode": spec.mode.value, "m": spec.effective_m,
            "annulus": None if o["gamma"] is None else {"gamma": o["gamma"], "r": o["r"]}}, {}


def run_tail(o):
    u = load_grid(o["grid"])
    tv = tail(u, _kernel(o, u.domain.n), _x0(o, u.domain.n), o["R"])
    return {"value": tv.value, "resolution": u.domain.N, "mode": "midpoint", "center": list(tv.center),
            "radius": tv.radius, "support_warning": tv.support_warning}, {}


def run_certify(o):
    if len(o["sets"]) != 2:
        raise ConfigError("--sets takes exactly two files")
    A, B = load_pixel_set(o["sets"][0]), load_pixel_set(o["sets"][1])
    cert = certify_interaction_lower_bound(A, B, o["alpha"])
    d = cert.to_dict()
    rows = [(s.k, s.inv_r, s.r, s.bound, s.admissible, s.aligned) for s in cert.per_scale]
    return d, {"per_scale.csv": dumps_csv(["k", "inv_r", "r", "bound", "admissible", "aligned"], rows)}


def run_probe_iso(o):
    kp = KernelParams(o["n"], o["s"], o["p"])
    dom = LatticeDomain.ball(o["n"], o["N"])
    spec = _spec(o)
    fam = o["family"]
    if fam == "trig_polynomial":
        members = [("degree", int(d), dict(seed=o["seed"], degree=int(d))) for d in (o["degrees"] or [])]
    else:
        members = [("eps", e, dict(eps=e)) for e in (o["eps_list"] or [])]
    if not members:
        raise ConfigError("probe-iso needs --eps-list (or --degrees for trig_polynomial)")
    reports = []
    for _, key, kw in members:
        u = family_generator(fam, dom, **kw)
        reports.append(iso_report(u, o["h"], o["k"], kp, o["beta"], spec))
    header = [members[0][0], "measure_le", "measure_ge", "measure_between", "seminorm", "psi",
              "lhs", "rhs", "implied_C", "trivial_branch"]
    rows = [(key, r.measure_le, r.measure_ge, r.measure_between, r.seminorm, r.psi_value,
             r.lhs, r.rhs, r.implied_C, r.trivial_branch) for (_, key, _), r in zip(members, reports)]
    finite = [r.implied_C for r in reports if math.isfinite(r.implied_C) and r.implied_C > 0]
    summ = {"family": fam, "n": o["n"], "N": o["N"], "s": o["s"], "p": o["p"], "beta": reports[0].beta,
            "members": len(reports), "implied_C_max": max(finite) if finite else None,
            "implied_C_min": min(finite) if finite else None}
    try:
        fit = fit_beta_C(reports)
        summ["fit"] = {"beta_hat": fit.beta_hat, "C_hat": fit.C_hat, "slope": fit.slope,
                       "intercept": fit.intercept}
    except PreconditionError as exc:
        summ["fit"] = {"error": str(exc)}
    files = {"members.csv": dumps_csv(header, rows)}
    if o["svg"]:
        files["scatter.svg"] = svg_scatter([r.rhs for r in reports], [r.measure_product for r in reports],
                                           title=f"{fam}: |A||B| against rhs")
    return summ, files


def run_dg_check(o):
    u = load_grid(o["grid"])
    n = u.domain.n
    params = DGParams(o["d"], o["H"], o["lam"], _kernel(o, n))
    rep = caccioppoli_sides(u, params, _x0(o, n), o["r"], o["R"], o["k"], o["sign"], _spec(o),
                            strong_term=o["strong_term"])
    d = rep.to_dict()
    d["rhs_terms"] = list(rep.rhs_terms)
    return d, {}


def _scan_samples(o, u):
    dom = u.domain
    n = dom.n
    if o["samples"] is not None:
        out = []
        for item in o["samples"]:
            if not isinstance(item, (list, tuple)) or len(item) != 5:
                raise ConfigError(f"sample {item!r} is not [x0, r, R, k, sign]")
            x0, r, R, k, sign = item
            x0 = [float(v) for v in (x0 if isinstance(x0, (list, tuple)) else [x0] * n)]
            out.append((x0, float(r), float(R), float(k), str(sign)))
        return out
    rng = np.random.default_rng(o["seed"])
    lo = dom.lower
    hi = lo + 2 * dom.radius
    vals = u.values
    out = []
    for _ in range(o["count"]):
        x0 = lo + (hi - lo) * rng.uniform(0.25, 0.75, n)
        room = float(np.min(np.minimum(x0 - lo, hi - x0)))
        R = room * rng.uniform(0.3, 0.95)
        r = R * rng.uniform(0.2, 0.9)
        k = float(rng.uniform(vals.min(), vals.max())) if vals.size else 0.0
        out.append((x0.tolist(), r, R, k, "+" if rng.integers(2) else "-"))
    return out


def run_dg_scan(o):
    u = load_grid(o["grid"])
    params = DGParams(o["d"], o["H"], o["lam"], _kernel(o, u.domain.n))
    res = membership_scan(u, params, _scan_samples(o, u), _spec(o))
    header = ["x0", "r", "R", "k", "sign", "lhs", "level_term", "bulk_term", "tail_term", "ratio", "vacuous"]
    rows = [(" ".join(format(c, f".{CSV_DIGITS}g") for c in rep.x0), rep.r, rep.R, rep.k, rep.sign, rep.lhs,
             rep.level_term, rep.bulk_term, rep.tail_term, rep.ratio, rep.vacuous) for rep in res.reports]
    summ = {"H_min": res.H_min, "instances": len(res.reports), "skipped": res.skipped, "vacuous": res.vacuous}
    return summ, {"scan.csv": dumps_csv(header, rows)}


def run_growth(o):
    if o["grid"] is not None:
        u = load_grid(o["grid"])
    elif o["family"] == "ramp":
        dom = LatticeDomain.ball(o["n"], o["N"], radius=4.0)
        u = build_grid_function(dom, lambda x: np.clip(o["slope"] * x[:, 0], 0.0, 1.0))
    else:
        raise ConfigError("growth-sim needs --grid or --family ramp")
    params = DGParams(o["d"], o["H"], o["lam"], _kernel(o, u.domain.n))
    rep = growth_simulation(u, params, o["delta"], o["tau"], o["iso_constant"], o["iso_exponent"], o["C1"])
    d = rep.to_dict()
    d["band_sum_ok"] = rep.band_sum_ok
    d["hypotheses_ok"] = rep.hypotheses_ok
    header = ["j", "level", "density_upper", "density_lower", "density_band", "seminorm_p", "seminorm_ratio",
              "chain_lhs", "chain_rhs", "chain_slack", "tail_split_lhs", "tail_split_rhs"]
    rows = [tuple(getattr(r, h) for h in header) for r in rep.rows]
    return d, {"levels.csv": dumps_csv(header, rows)}


def run_selftest_cmd(o):
    results = run_selftest(o["seed"], o["quick"])
    summ = summary(results, o["seed"], o["quick"])
    rows = [(r.name, r.instances, r.violations) for r in results]
    return summ, {"suites.csv": dumps_csv(["suite", "instances", "violations"], rows)}


RUNNERS = {
    "psi": run_psi,
    "seminorm": run_seminorm,
    "interaction": run_interaction,
    "tail": run_tail,
    "certify-lower-bound": run_certify,
    "probe-iso": run_probe_iso,
    "dg-check": run_dg_check,
    "dg-scan": run_dg_scan,
    "growth-sim": run_growth,
    "selftest": run_selftest_cmd,
}
TIMED = {"seminorm", "interaction", "tail"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        opts = resolve_options(args.command, args)
        t0 = time.perf_counter()
        summ, files = RUNNERS[args.command](opts)
        elapsed = (time.perf_counter() - t0) * 1000.0
    except ConfigError as exc:
        print(f"fraciso: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"fraciso: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"fraciso: cannot read input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if opts["out"]:
        os.makedirs(opts["out"], exist_ok=True)
        with open(os.path.join(opts["out"], "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps_json(summ))
        for name, text in files.items():
            with open(os.path.join(opts["out"], name), "w", encoding="utf-8") as fh:
                fh.write(text)
    if args.command == "psi":
        print(format(_fmt(summ["value"], JSON_DIGITS), ".12g"))
    else:
        shown = dict(summ)
        if args.command in TIMED:
            shown["runtime_ms"] = elapsed
        sys.stdout.write(dumps_json(shown))
    if args.command == "selftest" and not summ["passed"]:
        print("fraciso: selftest found invariant violations", file=sys.stderr)
        return EXIT_SELFTEST
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
