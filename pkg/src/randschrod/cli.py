"""Command-line surface.

Exit codes: 0 success; 1 verification failure (checks ran, a property did
not hold); 2 invalid input; 3 numeric failure.  Every JSON document carries
``schema_version`` and the fully resolved configuration, and identical
(command, flags, seed) produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import cocycle, constructor, moebius, quasiperiodic, spectrum, weyl, wordtree
from .errors import InvalidInput, NumericFailure, RandschrodError

SCHEMA_VERSION = 1


def _parse_floats(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as exc:
        raise InvalidInput(f"expected comma-separated numbers, got {text!r}") from exc


def _load_config(path: str) -> dict:
    """key=value lines; blank lines and #-comments ignored."""
    out = {}
    try:
        with open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidInput(f"{path}:{line_no}: expected key=value")
                key, _, val = line.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise InvalidInput(f"cannot read config file {path}: {exc}") from exc
    return out


def _apply_config(args: argparse.Namespace, argv) -> None:
    """Fill namespace entries from the config file for flags not given on the
    command line (flags win on conflict)."""
    if not getattr(args, "config", None):
        return
    given = {tok.split("=", 1)[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, raw in _load_config(args.config).items():
        if key in given or not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, key, int(raw))
        elif isinstance(current, float):
            setattr(args, key, float(raw))
        else:
            setattr(args, key, raw)


def _resolved_config(args: argparse.Namespace) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func",):
            continue
        cfg[k] = v
    return cfg


def _emit(args, result: dict, csv_rows=None, csv_header=None) -> None:
    if args.format == "csv" and csv_rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if csv_header:
            writer.writerow(csv_header)
        writer.writerows(csv_rows)
        text = buf.getvalue()
    else:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "config": _resolved_config(args),
            "result": result,
        }
        text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _support(text: str, weights: str | None = None) -> spectrum.SiteSupport:
    pts = _parse_floats(text)
    w = _parse_floats(weights) if weights else None
    return spectrum.SiteSupport(tuple(sorted(pts)), tuple(w) if w else None)


def _background(args) -> quasiperiodic.QPBackground:
    return quasiperiodic.QPBackground(
        fourier_cos=tuple(_parse_floats(args.f_cos)),
        fourier_sin=tuple(_parse_floats(args.f_sin)) if args.f_sin else (),
        alpha=args.alpha,
        theta0=args.theta0,
        c=args.c,
    )


def _maybe_figures(args, render) -> list:
    if not getattr(args, "fig_dir", None):
        return []
    from . import figures  # deferred: pulls in matplotlib

    return render(figures)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_asspec(args) -> int:
    sup = _support(args.support)
    est = spectrum.anderson_almost_sure_spectrum(sup)
    _emit(args, {"support": list(sup.points), "intervals": est.to_pairs()},
          csv_rows=est.to_pairs(), csv_header=["lo", "hi"])
    return 0


def _mc_params(args) -> spectrum.MCParams:
    return spectrum.MCParams(
        window_half_length=args.window,
        samples=args.samples,
        grid_step=args.grid_step,
        seed=args.seed,
        K=args.big_k,
        N=args.big_n,
        angle_grid=args.angle_grid,
        min_count=args.min_count,
        threads=args.threads,
    )


def cmd_mc_spectrum(args) -> int:
    sup = _support(args.support, args.weights)
    rng = None
    if args.energy_min is not None and args.energy_max is not None:
        rng = (args.energy_min, args.energy_max)
    est, report = spectrum.mc_essential_spectrum(sup, _mc_params(args), energy_range=rng)
    figs = _maybe_figures(args, lambda f: [f.spectrum_figure(report, args.fig_dir)])
    if figs:
        report["figures"] = figs
    _emit(args, report,
          csv_rows=[(s["E"], int(s["found"])) for s in report["stats"]],
          csv_header=["E", "witnessed"])
    return 0


def cmd_support_check(args) -> int:
    s1 = _support(args.support1)
    s2 = _support(args.support2)
    report = spectrum.support_monotonicity_check(s1, s2, _mc_params(args))
    _emit(args, report,
          csv_rows=report["violations"], csv_header=["gap_lo", "gap_hi"])
    return 0 if report["contained"] else 1


def _constructor_params(args) -> constructor.ConstructorParams:
    return constructor.ConstructorParams(
        lam=args.lam,
        a=args.a,
        delta=args.delta,
        n_back=args.n_back,
        n_fwd=args.n_fwd,
        x0=args.x0,
        choice_policy=args.policy,
    )


def cmd_construct(args) -> int:
    cert = constructor.construct(_constructor_params(args))
    doc = cert.to_json_dict()
    figs = _maybe_figures(args, lambda f: [f.certificate_figure(cert, args.fig_dir)])
    if figs:
        doc["figures"] = figs
    _emit(args, doc)
    return 0


def _load_certificate(path: str) -> constructor.GroundStateCertificate:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read certificate {path}: {exc}") from exc
    if "result" in doc and isinstance(doc["result"], dict):
        doc = doc["result"]
    return constructor.GroundStateCertificate.from_json_dict(doc)


def _tolerances(args) -> dict:
    tol = {}
    if args.tol_res is not None:
        tol["tol_res"] = args.tol_res
    if args.tol_eig is not None:
        tol["tol_eig"] = args.tol_eig
    if args.rho_min is not None:
        tol["rho_min"] = args.rho_min
    return tol


def cmd_verify(args) -> int:
    cert = _load_certificate(args.cert)
    report = constructor.verify_certificate(cert, _tolerances(args))
    _emit(args, report)
    return 0 if report["ok"] else 1


def _a_grid(args):
    if args.count < 1:
        raise InvalidInput("count must be positive")
    if args.count == 1:
        return [args.a_min]
    return list(np.linspace(args.a_min, args.a_max, args.count))


def cmd_sweep(args) -> int:
    base = {
        "delta": args.delta,
        "n_back": args.n_back,
        "n_fwd": args.n_fwd,
        "choice_policy": args.policy,
    }
    report = constructor.sweep_interval(args.lam, _a_grid(args), base, _tolerances(args))
    figs = _maybe_figures(args, lambda f: [f.sweep_figure(report, args.fig_dir)])
    if figs:
        report["figures"] = figs
    _emit(args, report,
          csv_rows=[(r["a"], r["E"], int(bool(r.get("ok"))), r.get("residual", ""),
                     r.get("top_gap", "")) for r in report["rows"]],
          csv_header=["a", "E", "ok", "residual", "top_gap"])
    return 0 if report["verified"] == report["total"] else 1


def cmd_qp_sections(args) -> int:
    bg = _background(args)
    e_star = args.e_star
    if e_star is None:
        e_star = 2.0 if bg.c == 0.0 else quasiperiodic.top_energy(bg)
    E = e_star + args.lam - args.a
    att, rep = quasiperiodic.invariant_sections(bg, E, grid=args.grid)
    report = {
        "background": bg.to_dict(),
        "e_star": e_star,
        "E": E,
        "grid": args.grid,
        "section_gap": quasiperiodic.section_gap(att, rep),
        "residual_att": att.invariance_residual(bg, E),
        "residual_rep": rep.invariance_residual(bg, E),
        "att_range": [float(att.values.min()), float(att.values.max())],
        "rep_range": [float(rep.values.min()), float(rep.values.max())],
    }
    figs = _maybe_figures(args, lambda f: [f.sections_figure(att, rep, args.fig_dir)])
    if figs:
        report["figures"] = figs
    _emit(args, report,
          csv_rows=quasiperiodic.sections_to_rows(att, rep),
          csv_header=["theta", "x_att", "x_rep"])
    return 0


def _qp_params(args) -> quasiperiodic.QPConstructParams:
    return quasiperiodic.QPConstructParams(
        lam=args.lam,
        a=args.a,
        delta=args.delta,
        n_back=args.n_back,
        n_fwd=args.n_fwd,
        x0=args.x0,
        choice_policy=args.policy,
        grid=args.grid,
        e_star=args.e_star,
    )


def cmd_qp_construct(args) -> int:
    bg = _background(args)
    cert = quasiperiodic.qp_construct(bg, _qp_params(args))
    doc = cert.to_json_dict()
    figs = _maybe_figures(args, lambda f: [f.certificate_figure(cert, args.fig_dir)])
    if figs:
        doc["figures"] = figs
    _emit(args, doc)
    return 0


def cmd_qp_sweep(args) -> int:
    bg = _background(args)
    base = {
        "delta": args.delta,
        "n_back": args.n_back,
        "n_fwd": args.n_fwd,
        "choice_policy": args.policy,
        "grid": args.grid,
        "e_star": args.e_star,
    }
    report = quasiperiodic.qp_sweep_interval(bg, args.lam, _a_grid(args), base, _tolerances(args))
    figs = _maybe_figures(args, lambda f: [f.sweep_figure(report, args.fig_dir)])
    if figs:
        report["figures"] = figs
    _emit(args, report,
          csv_rows=[(r["a"], r["E"], int(bool(r.get("ok"))), r.get("residual", ""),
                     r.get("section_gap", "")) for r in report["rows"]],
          csv_header=["a", "E", "ok", "residual", "section_gap"])
    return 0 if report["verified"] == report["total"] else 1


def cmd_dimension(args) -> int:
    params = _constructor_params(args)
    tree = wordtree.build_tree(params, depth=args.depth, cap=args.cap, x0=args.x0)
    report = tree.to_dict()
    report["growth_rate"] = wordtree.growth_rate(tree)
    report["dimension_lower_bound"] = wordtree.dimension_lower_bound(tree.n_observed)
    holder = wordtree.holder_check(tree, args.pairs, seed=args.seed)
    report["holder"] = holder
    figs = _maybe_figures(args, lambda f: [f.tree_figure(tree, args.fig_dir)])
    if figs:
        report["figures"] = figs
    _emit(args, report, csv_rows=tree.stats_rows(), csv_header=["depth", "branch_count"])
    return 0 if holder["ok"] else 1


def cmd_nondecay(args) -> int:
    lam = args.lam
    length = 2 * args.window + 1
    counts = {}
    failures = []
    for k in range(args.samples):
        rng = np.random.default_rng([args.seed, k])
        word = rng.choice([0.0, lam], size=length)
        x0 = float(np.exp(rng.uniform(-1.5, 1.5)))
        cls = moebius.classify_positive_orbit(word, lam, x0)
        counts[cls.case] = counts.get(cls.case, 0) + 1
        one_sided = cls.forward_bounded or cls.backward_bounded or (
            cls.case == moebius.CASE_CONTRADICTION
        )
        if not one_sided:
            failures.append({"sample": k, "x0": x0, "report": cls.to_dict()})
    report = {
        "lambda": lam,
        "samples": args.samples,
        "window_half_length": args.window,
        "case_counts": counts,
        "two_sided_decay_candidates": failures,
        "ok": not failures,
    }
    _emit(args, report,
          csv_rows=sorted(counts.items()), csv_header=["case", "count"])
    return 0 if report["ok"] else 1


def cmd_mfunction(args) -> int:
    if args.cert:
        cert = _load_certificate(args.cert)
        win = cert.realization
        pot = win.potential[-win.n_min + 1:]  # sites 1 .. n_max
        hl = weyl.HalfLineWindow(1, pot)
    elif args.potential:
        hl = weyl.HalfLineWindow(args.anchor, np.array(_parse_floats(args.potential)))
    else:
        hl = weyl.HalfLineWindow(args.anchor, np.zeros(args.length))
    report = {"anchor": hl.anchor, "length": hl.length, "top_eigenvalue": hl.top}
    ok = True
    if args.z is not None:
        report["z"] = args.z
        report["m_solve"] = weyl.m_function(hl, args.z)
        report["m_continued_fraction"] = weyl.m_function_continued_fraction(hl, args.z)
        csv_rows = [(args.z, report["m_solve"], "")]
    else:
        z_lo = args.z_min if args.z_min is not None else hl.top + 0.1
        z_hi = args.z_max if args.z_max is not None else hl.top + 3.0
        grid = np.linspace(z_lo, z_hi, args.z_count)
        scan = weyl.negativity_monotonicity_scan(hl, grid)
        report["scan"] = scan
        ok = scan["ok"]
        figs = _maybe_figures(args, lambda f: [f.mfunction_figure(scan, args.fig_dir)])
        if figs:
            report["figures"] = figs
        csv_rows = [
            (z, m, s)
            for z, m, s in zip(scan["z"], scan["m"], scan["slopes"] + [""])
        ]
    if args.limit is not None:
        report["subordinate"] = weyl.subordinate_limit(hl, args.limit)
        ok = ok and not report["subordinate"]["solver_bug_signal"]
    _emit(args, report, csv_rows=csv_rows, csv_header=["z", "m", "slope"])
    return 0 if ok else 1


def cmd_ramp_demo(args) -> int:
    lo, hi = _parse_floats(args.interval)
    counts = {}
    for L in (args.l1, args.l2):
        win = spectrum.RealizationWindow.ramp(-L, L)
        counts[L] = spectrum.eigenvalue_count_in_interval(win, (lo, hi))
    per_n = max(1, args.cone_samples // (args.n_max - args.n_min + 1))
    cone_reports = []
    cone_ok = True
    for n in range(args.n_min, args.n_max + 1):
        rep = cocycle.cone_check(args.energy, args.bound_m, n, per_n, seed=args.seed)
        cone_ok = cone_ok and rep["ok"]
        cone_reports.append({"n": n, "ok": rep["ok"],
                             "min_expansion_factor": rep["min_expansion_factor"],
                             "required_factor": rep["required_factor"]})
    report = {
        "interval": [lo, hi],
        "counts": {str(k): v for k, v in counts.items()},
        "counts_equal": counts[args.l1] == counts[args.l2],
        "cone_samples_per_n": per_n,
        "cone_ok": cone_ok,
        "cone": cone_reports,
        "ok": cone_ok and counts[args.l1] == counts[args.l2],
    }
    _emit(args, report,
          csv_rows=[(r["n"], int(r["ok"])) for r in cone_reports],
          csv_header=["n", "cone_ok"])
    return 0 if report["ok"] else 1


# ---------------------------------------------------------------------------
# Parser assembly


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="write output to this path instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", default=None, help="key=value config file; flags win on conflict")
    p.add_argument("--fig-dir", dest="fig_dir", default=None,
                   help="render figures into this directory alongside the output")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("RANDSCHROD_THREADS", "1")))
    p.add_argument("--seed", type=int, default=0)


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--window", type=int, default=1000, help="window half-length")
    p.add_argument("--grid-step", dest="grid_step", type=float, default=0.02)
    p.add_argument("--witness-bound", dest="big_k", type=float, default=10.0)
    p.add_argument("--witness-offsets", dest="big_n", type=int, default=20)
    p.add_argument("--angle-grid", dest="angle_grid", type=int, default=64)
    p.add_argument("--min-count", dest="min_count", type=int, default=3)


def _add_construct(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-back", dest="n_back", type=int, default=200)
    p.add_argument("--n-fwd", dest="n_fwd", type=int, default=200)
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--policy", choices=constructor.POLICIES, default="max_margin")


def _add_sweep_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--a-min", dest="a_min", type=float, default=1e-4)
    p.add_argument("--a-max", dest="a_max", type=float, default=5e-3)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-back", dest="n_back", type=int, default=200)
    p.add_argument("--n-fwd", dest="n_fwd", type=int, default=200)
    p.add_argument("--policy", choices=constructor.POLICIES, default="max_margin")


def _add_tol(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-res", dest="tol_res", type=float, default=None)
    p.add_argument("--tol-eig", dest="tol_eig", type=float, default=None)
    p.add_argument("--rho-min", dest="rho_min", type=float, default=None)


def _add_bg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--f-cos", dest="f_cos", default="0,1",
                   help="cosine coefficients of f, harmonics 0,1,...")
    p.add_argument("--f-sin", dest="f_sin", default="",
                   help="sine coefficients of f, harmonics 1,2,...")
    p.add_argument("--alpha", type=float, default=quasiperiodic.GOLDEN_MEAN)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=quasiperiodic.DEFAULT_GRID)
    p.add_argument("--e-star", dest="e_star", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randschrod",
        description="Spectra, ground-state constructions and diagnostics for "
        "1D discrete Schrodinger operators with random/quasi-periodic potentials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asspec", help="almost-sure spectrum from a site support")
    p.add_argument("--support", required=True, help="comma-separated support points")
    _add_common(p)
    p.set_defaults(func=cmd_asspec)

    p = sub.add_parser("mc-spectrum", help="Monte-Carlo essential-spectrum estimate")
    p.add_argument("--support", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--energy-min", dest="energy_min", type=float, default=None)
    p.add_argument("--energy-max", dest="energy_max", type=float, default=None)
    _add_mc(p)
    _add_common(p)
    p.set_defaults(func=cmd_mc_spectrum)

    p = sub.add_parser("support-check", help="spectrum monotonicity in the support")
    p.add_argument("--support1", required=True)
    p.add_argument("--support2", required=True)
    _add_mc(p)
    _add_common(p)
    p.set_defaults(func=cmd_support_check)

    p = sub.add_parser("construct", help="ground-state certificate at E = 2 + lambda - a")
    _add_construct(p)
    _add_common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="verify a stored certificate")
    p.add_argument("--cert", required=True)
    _add_tol(p)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="construct+verify across an a-grid")
    _add_sweep_grid(p)
    _add_tol(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("qp-sections", help="invariant sections of the quasi-periodic cocycle")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    _add_bg(p)
    _add_common(p)
    p.set_defaults(func=cmd_qp_sections)

    p = sub.add_parser("qp-construct", help="certificate over a quasi-periodic background")
    _add_construct(p)
    _add_bg(p)
    _add_common(p)
    p.set_defaults(func=cmd_qp_construct)

    p = sub.add_parser("qp-sweep", help="construct+verify across an a-grid, QP background")
    _add_sweep_grid(p)
    _add_bg(p)
    _add_tol(p)
    _add_common(p)
    p.set_defaults(func=cmd_qp_sweep)

    p = sub.add_parser("dimension", help="word-tree growth and dimension lower bound")
    _add_construct(p)
    p.add_argument("--depth", type=int, default=wordtree.DEFAULT_DEPTH)
    p.add_argument("--cap", type=int, default=wordtree.DEFAULT_CAP)
    p.add_argument("--pairs", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("nondecay", help="orbit classification at the spectral top")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--window", type=int, default=200, help="orbit horizon (half-length)")
    _add_common(p)
    p.set_defaults(func=cmd_nondecay)

    p = sub.add_parser("mfunction", help="half-line m-function diagnostics")
    p.add_argument("--cert", default=None, help="use the potential of a stored certificate")
    p.add_argument("--potential", default=None, help="explicit comma-separated potential")
    p.add_argument("--length", type=int, default=2000, help="free half-line length")
    p.add_argument("--anchor", type=int, default=0)
    p.add_argument("--z", type=float, default=None, help="single evaluation point")
    p.add_argument("--z-min", dest="z_min", type=float, default=None)
    p.add_argument("--z-max", dest="z_max", type=float, default=None)
    p.add_argument("--z-count", dest="z_count", type=int, default=30)
    p.add_argument("--limit", type=float, default=None,
                   help="estimate the boundary limit at this energy")
    _add_common(p)
    p.set_defaults(func=cmd_mfunction)

    p = sub.add_parser("ramp-demo", help="linear-ramp eigenvalue counts and cone check")
    p.add_argument("--l1", type=int, default=50)
    p.add_argument("--l2", type=int, default=200)
    p.add_argument("--interval", default="-1,1")
    p.add_argument("--cone-samples", dest="cone_samples", type=int, default=10000)
    p.add_argument("--n-min", dest="n_min", type=int, default=5)
    p.add_argument("--n-max", dest="n_max", type=int, default=100)
    p.add_argument("--energy", type=float, default=0.0)
    p.add_argument("--bound-m", dest="bound_m", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_ramp_demo)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except RandschrodError as exc:  # pragma: no cover - internal invariant broken
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
