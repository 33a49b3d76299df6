"""Command-line entry point: ``ssfourier <command> SPEC [options]``.

Every run writes its results into ``--out`` together with
``run_manifest.json``. Result files name the manifest but carry nothing
run-specific (no timings, no worker count), so repeated runs with the same
parameters produce byte-identical results at any ``--workers``.

Exit codes: 0 ok, 2 invalid IFS, 3 malformed JSON, 4 bad parameters,
5 computation failure.
"""

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .arith_diag import diagnostic_report
from .errors import IfsValidationError, SSFourierError
from .ifs_core import attractor_hull, load_spec, moments, normalize_to_unit, similarity_dimension
from .regularity import correlation_mass, holder_exponent_fit
from .spectral import SpectrumScan, fit_log_decay, fourier_many, spectrum_scan, stopping_sum_sides
from .walk_renewal import (
    ks_statistic,
    limit_law,
    overshoot_histogram,
    sample_residues,
    step_distribution,
    weakly_dioph_scan,
)

MANIFEST = "run_manifest.json"
EXIT_OK, EXIT_INVALID, EXIT_JSON, EXIT_PARAM, EXIT_COMPUTE = 0, 2, 3, 4, 5


class ParamError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error({"error": "ParameterError", "message": message})
        sys.exit(EXIT_PARAM)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _emit_error(doc):
    sys.stderr.write(_dumps(doc))


class Run:
    """Collects output files and the summary table for one command."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.files = []
        self.summary = []

    def write_json(self, name, doc):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(_dumps({"manifest": MANIFEST, **doc}))
        self.files.append(name)

    def write_csv(self, name, rows, columns):
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / name, "w", newline="") as fh:
            fh.write(f"# manifest: {MANIFEST}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c] for c in columns])
        self.files.append(name)

    def note(self, key, value):
        self.summary.append((key, value))

    def finish(self, started):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "workers", "out")}
        manifest = {
            "spec_path": getattr(self.args, "spec", None),
            "command": self.args.command,
            "parameters": params,
            "seed": getattr(self.args, "seed", None),
            "workers": self.args.workers,
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - started, 6),
            "outputs": self.files,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / MANIFEST).write_text(_dumps(manifest))
        print_table(self.summary + [("outputs", ", ".join(self.files))])


def print_table(pairs):
    if not pairs:
        return
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        if isinstance(v, float):
            v = f"{v:.10g}"
        print(f"{k:<{width}}  {v}")


def _load(args, normalize=False):
    return load_spec(args.spec, normalize=normalize)


def _positive(name, value):
    if not value > 0:
        raise ParamError(f"--{name} must be positive, got {value}")


# -- commands -----------------------------------------------------------------

def cmd_validate(args, run):
    spec = _load(args)
    unit = normalize_to_unit(spec)
    lo, hi = attractor_hull(spec)
    doc = {
        "valid": True,
        "n_maps": len(spec),
        "already_normalized": spec.normalized,
        "hull": [lo, hi],
        "similarity_dimension": similarity_dimension(spec),
        "normalized": unit.to_dict(),
    }
    print(_dumps(doc), end="")
    return None


def cmd_moments(args, run):
    if args.k < 0:
        raise ParamError("--k must be >= 0")
    spec = _load(args, normalize=args.normalize)
    m = moments(spec, args.k)
    run.write_json("moments.json", {"normalized": spec.normalized and args.normalize, "moments": m.tolist()})
    run.note("m1", float(m[1]) if args.k >= 1 else 1.0)
    return run


def cmd_fourier(args, run):
    _positive("tol", args.tol)
    spec = _load(args, normalize=True)
    evals = fourier_many(spec, args.xi, tol=args.tol)
    run.write_json("fourier.json", {"evaluations": [e.to_dict() for e in evals]})
    for e in evals:
        run.note(f"|mu_hat({e.frequency:g})|", abs(e.value))
    return run


def cmd_scan(args, run):
    _positive("xi-max", args.xi_max - 1.0)
    spec = _load(args, normalize=True)
    sc = spectrum_scan(spec, args.xi_max, args.bands_per_decade, args.samples_per_band,
                       seed=args.seed, tol=args.tol, workers=args.workers)
    run.write_csv("scan.csv", sc.rows(), ["xi_low", "xi_high", "sup_abs_mu_hat", "n_samples"])
    run.note("bands", len(sc.bands))
    run.note("first sup", sc.bands[0].sup_abs)
    run.note("last sup", sc.bands[-1].sup_abs)
    return run


def read_scan_csv(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return SpectrumScan.from_rows(csv.DictReader(lines))


def cmd_fit(args, run):
    try:
        sc = read_scan_csv(args.spec)
    except (KeyError, ValueError) as exc:
        raise ParamError(f"{args.spec} is not a scan CSV: {exc}") from None
    fit = fit_log_decay(sc, min_bands=args.min_bands)
    run.write_json("fit.json", fit.to_dict())
    run.note("beta", fit.beta)
    run.note("bands used", fit.n_bands)
    return run


def cmd_renewal(args, run):
    _positive("t", args.t)
    _positive("n", args.n)
    dist = step_distribution(_load(args))
    law = limit_law(dist)
    batch = sample_residues(dist, args.t, args.n, args.seed, workers=args.workers)
    ks = ks_statistic(batch.overshoot, law.cdf)
    rows = overshoot_histogram(batch, law, bins=args.bins)
    run.write_csv("renewal_histogram.csv", rows, ["bin_left", "bin_right", "empirical_mass", "limit_mass"])
    run.write_json("renewal.json", {
        "t": args.t, "n": args.n, "sigma": dist.mean, "ks": ks,
        "mean_overshoot": float(batch.overshoot.mean()), "limit_mean_overshoot": law.overshoot_mean(),
    })
    run.note("sigma", dist.mean)
    run.note("KS", ks)
    return run


def cmd_identity(args, run):
    spec = _load(args)
    lhs, rhs = stopping_sum_sides(spec, args.s, args.t, args.x, args.y)
    res = abs(lhs - rhs)
    run.write_json("identity.json", {"lhs": lhs, "rhs": rhs, "residual": res})
    run.note("residual", res)
    return run


def cmd_dioph(args, run):
    _positive("b-max", args.b_max - 1.0)
    _positive("grid-step", args.grid_step)
    spec = _load(args)
    report = diagnostic_report(spec, depth=args.depth)
    out = weakly_dioph_scan(step_distribution(spec), args.l, args.b_max, args.grid_step,
                            keep_every=args.keep_every or None)
    scan, rows = out if args.keep_every else (out, None)
    report["scan"] = {"l": scan.l, "min_weighted": scan.min_weighted, "argmin_b": scan.argmin,
                      "min_abs": scan.min_abs, "n_grid": scan.n_grid}
    run.write_json("dioph.json", report)
    if rows is not None:
        rows = [{"b": b, "abs_one_minus_laplace": a, "weighted": w} for b, a, w in rows]
        run.write_csv("dioph_scan.csv", rows, ["b", "abs_one_minus_laplace", "weighted"])
    run.note("verdict", report["verdict"])
    run.note("min |b|^l |1-L|", scan.min_weighted)
    run.note("argmin b", scan.argmin)
    return run


def cmd_holder(args, run):
    _positive("n", args.n)
    spec = _load(args)
    if args.radii:
        radii = np.array(args.radii, dtype=float)
    else:
        radii = np.geomspace(args.r_max, args.r_min, args.n_radii)
    try:
        fit = holder_exponent_fit(spec, radii, args.n, seed=args.seed, workers=args.workers)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    run.write_csv("holder.csv", fit.rows(), ["radius", "mass_estimate", "se"])
    run.write_json("holder.json", fit.report())
    run.note("alpha", fit.alpha)
    run.note("C", fit.c_constant)
    return run


def cmd_corr(args, run):
    _positive("delta", args.delta)
    _positive("n", args.n)
    p, se = correlation_mass(_load(args), args.delta, args.n, seed=args.seed, workers=args.workers)
    run.write_json("corr.json", {"delta": args.delta, "n": args.n, "estimate": p, "se": se})
    run.note("mass", p)
    run.note("se", se)
    return run


# -- parser -------------------------------------------------------------------

def argv_from_manifest(manifest):
    """Command line that reproduces the run recorded in ``manifest``."""
    params = dict(manifest["parameters"])
    argv = [manifest["command"], params.pop("spec")]
    params.pop("command", None)
    for key, value in sorted(params.items()):
        flag = "--" + key.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag] + [repr(v) for v in value]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


def _default_workers():
    raw = os.environ.get("SSFOURIER_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=_default_workers(),
                        help="thread count (default $SSFOURIER_WORKERS or 1)")

    p = _Parser(prog="ssfourier", description="Fourier and renewal diagnostics for self-similar measures")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, spec_help="IFS spec JSON file"):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("spec", help=spec_help)
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "check a spec and echo its normalized form")
    sp = add("moments", cmd_moments, "moments m_0..m_K")
    sp.add_argument("--k", type=int, default=8)
    sp.add_argument("--normalize", action="store_true", help="conjugate onto [0, 1] first")

    sp = add("fourier", cmd_fourier, "evaluate mu_hat at given frequencies")
    sp.add_argument("--xi", type=float, nargs="+", required=True)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("scan", cmd_scan, "band suprema of |mu_hat|")
    sp.add_argument("--xi-max", type=float, required=True)
    sp.add_argument("--bands-per-decade", type=int, default=4)
    sp.add_argument("--samples-per-band", type=int, default=16)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("fit", cmd_fit, "fit a log-decay rate to a scan CSV", spec_help="scan.csv from the scan command")
    sp.add_argument("--min-bands", type=int, default=5)

    sp = add("renewal", cmd_renewal, "overshoot histogram and KS distance to the limit law")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--bins", type=int, default=40)

    sp = add("identity", cmd_identity, "both sides of the stopping-sum identity")
    for name, default in (("s", 1.0), ("t", 5.0), ("x", 0.25), ("y", 0.75)):
        sp.add_argument(f"--{name}", type=float, default=default)

    sp = add("dioph", cmd_dioph, "arithmetic report and weakly diophantine scan")
    sp.add_argument("--l", type=float, default=1.0)
    sp.add_argument("--b-max", type=float, default=100.0)
    sp.add_argument("--grid-step", type=float, default=1e-3)
    sp.add_argument("--depth", type=int, default=30)
    sp.add_argument("--keep-every", type=int, default=0, help="write every k-th grid row to CSV")

    sp = add("holder", cmd_holder, "correlation exponent fit")
    sp.add_argument("--radii", type=float, nargs="+")
    sp.add_argument("--r-max", type=float, default=1e-2)
    sp.add_argument("--r-min", type=float, default=1e-4)
    sp.add_argument("--n-radii", type=int, default=9)
    sp.add_argument("--n", type=int, default=200_000)

    sp = sub.add_parser("replay", help="re-run the command recorded in a run manifest")
    sp.add_argument("manifest", help="run_manifest.json")
    sp.add_argument("--out", default=None, help="output directory (default: alongside the manifest)")
    sp.add_argument("--workers", type=int, default=None)

    sp = add("corr", cmd_corr, "correlation mass of the delta-diagonal")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--n", type=int, default=1_000_000)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        return _replay(args)
    if args.workers < 1:
        _emit_error({"error": "ParameterError", "message": "--workers must be >= 1"})
        return EXIT_PARAM
    started = time.perf_counter()
    try:
        run = args.func(args, Run(args))
    except json.JSONDecodeError as exc:
        _emit_error({"error": "JSONDecodeError", "message": exc.msg, "line": exc.lineno, "column": exc.colno})
        return EXIT_JSON
    except IfsValidationError as exc:
        _emit_error(exc.to_dict())
        return EXIT_INVALID
    except (ParamError, FileNotFoundError) as exc:
        _emit_error({"error": "ParameterError", "message": str(exc)})
        return EXIT_PARAM
    except SSFourierError as exc:
        _emit_error(exc.to_dict())
        return EXIT_COMPUTE
    except (ValueError, ArithmeticError, MemoryError) as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_COMPUTE
    if run is not None:
        run.finish(started)
    return EXIT_OK


def _replay(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = argv_from_manifest(manifest)
    except json.JSONDecodeError as exc:
        _emit_error({"error": "JSONDecodeError", "message": exc.msg, "line": exc.lineno, "column": exc.colno})
        return EXIT_JSON
    except (OSError, KeyError, TypeError) as exc:
        _emit_error({"error": "ParameterError", "message": f"unusable manifest: {exc}"})
        return EXIT_PARAM
    out = args.out if args.out is not None else str(Path(args.manifest).parent)
    workers = args.workers if args.workers is not None else manifest.get("workers", 1)
    return main(argv + ["--out", out, "--workers", str(workers)])


if __name__ == "__main__":
    sys.exit(main())
