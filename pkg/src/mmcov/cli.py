"""Command-line front end: run scenario files and write CSV curves plus a JSON manifest.

Exit codes: 0 success, 1 usage or scenario error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analytic, kernels, model
from . import montecarlo as mc
from .errors import MmcovError, ScenarioError
from .scenario import KEYS, Scenario, parse_scenario

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


def fmt(v) -> str:
    """Fixed 17-significant-digit formatting so equal runs give identical bytes."""
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(stream, header, rows):
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


@dataclasses.dataclass
class JobResult:
    header: list
    rows: list
    summary: dict = dataclasses.field(default_factory=dict)


# --------------------------------------------------------------------------
# Jobs
# --------------------------------------------------------------------------


def _db(t):
    return 10 * math.log10(t)


def job_coverage(sc: Scenario, log) -> JobResult:
    cfg = sc.network
    t = sc.thresholds
    curve = analytic.coverage_general(cfg, t)
    header = ["threshold_db", "threshold", "p_cov_analytic", "p_cov_mc", "mc_stderr"]
    if sc.mc_trials:
        emp = mc.empirical_coverage(cfg, sc.mc_settings(), curve.thresholds)
        rows = [[_db(x), x, a, m, s] for x, a, m, s in
                zip(curve.thresholds, curve.probabilities, emp.probabilities, emp.stderr)]
    else:
        rows = [[_db(x), x, a, math.nan, math.nan] for x, a in zip(curve.thresholds, curve.probabilities)]
    summary = {"avg_rate_bps": analytic.avg_rate(cfg)}
    return JobResult(header, rows, summary)


def job_validate(sc: Scenario, log) -> JobResult:
    res = job_coverage(sc, log)
    res.header.append("abs_gap")
    for r in res.rows:
        r.append(abs(r[2] - r[3]))
    gap = max(r[-1] for r in res.rows)
    worst = max(res.rows, key=lambda r: r[-1])
    res.summary.update(max_abs_gap=gap, worst_threshold_db=worst[0])
    log(f"max |analytic - monte-carlo| = {gap:.4f} at {worst[0]:.1f} dB")
    return res


def job_assoc(sc: Scenario, log) -> JobResult:
    cfg = sc.network
    rep = analytic.assoc_probabilities(cfg)
    names = ("a_los", "a_nlos", "b_los", "b_nlos")
    emp = mc.empirical_association(cfg, sc.mc_settings()) if sc.mc_trials else None
    rows = []
    for name in names:
        m = getattr(emp, name) if emp else math.nan
        s = emp.stderr if emp and name == "a_los" else math.nan
        rows.append([name, getattr(rep, name), m, s])
    return JobResult(["quantity", "analytic", "mc", "mc_stderr"], rows,
                     {"a_los": rep.a_los, "a_los_plus_a_nlos": rep.a_los + rep.a_nlos})


def _dense_pmf(sc):
    return sc.network.pmf


def _dense_mc_config(sc, rho):
    """Configuration whose LOS ball and density reproduce ``rho``."""
    d = sc.dense
    cfg = sc.network
    return dataclasses.replace(
        cfg, los=model.BallLos(d.ball_radius), bs_density=model.density_from_relative(rho, d.ball_radius),
        pathloss=dataclasses.replace(cfg.pathloss, alpha_los=d.alpha))


def job_dense(sc: Scenario, log) -> JobResult:
    d = sc.dense
    pmf = _dense_pmf(sc)
    t = sc.thresholds
    curve = analytic.coverage_dense(d.rho, pmf, d.alpha, d.n_terms, t)
    cols = {"p_cov_dense": curve.probabilities}
    if d.alpha == 2:
        cols["p_cov_dense_alpha2"] = analytic.coverage_dense_alpha2(d.rho, pmf, d.n_terms, t).probabilities
    if sc.mc_trials:
        emp = mc.empirical_coverage(_dense_mc_config(sc, d.rho), sc.mc_settings(), t)
        cols["p_cov_mc"] = emp.probabilities
        cols["mc_stderr"] = emp.stderr
    header = ["threshold_db", "threshold", *cols]
    rows = [[_db(x), x, *(c[i] for c in cols.values())] for i, x in enumerate(curve.thresholds)]
    return JobResult(header, rows, {"rho": d.rho, "n_terms": d.n_terms, "alpha_los": d.alpha})


def job_sweep(sc: Scenario, log) -> JobResult:
    var = sc.get("sweep.var")
    grid = sc.get("sweep.grid")
    t = sc.thresholds
    header = [var, *[f"p_cov_{_db(x):g}dB" for x in t]]
    want_mc = sc.mc_trials > 0
    if want_mc:
        header += [f"p_cov_mc_{_db(x):g}dB" for x in t] + [f"mc_stderr_{_db(x):g}dB" for x in t]
    rows = []
    for v in grid:
        if var == "rho":
            d = sc.dense
            probs = analytic.coverage_dense(v, _dense_pmf(sc), d.alpha, d.n_terms, t).probabilities
            cfg = _dense_mc_config(sc, v)
        else:
            cfg = dataclasses.replace(sc.network, bs_density=model.density_from_cell_radius(v))
            probs = analytic.coverage_general(cfg, t).probabilities
        row = [v, *probs]
        if want_mc:
            emp = mc.empirical_coverage(cfg, sc.mc_settings(), t)
            row += [*emp.probabilities, *emp.stderr]
        rows.append(row)
        log(f"{var} = {v:.6g} done")
    best = max(rows, key=lambda r: r[1])
    return JobResult(header, rows, {"argmax_first_threshold": best[0]})


def job_rate(sc: Scenario, log) -> JobResult:
    cfg = sc.network
    rhos = sc.get("rate.rho")
    header = ["source", "rho", "spectral_efficiency_bps_hz", "avg_rate_bps"]
    rows = []
    if rhos:
        d = sc.dense
        pmf = _dense_pmf(sc)
        for rho in rhos:
            fn = _dense_fn(rho, pmf, d.alpha, d.n_terms)
            se = analytic.spectral_efficiency(fn, cfg.bandwidth, cfg.sinr_cap)
            rows.append(["analytic-dense", rho, se, se * cfg.bandwidth])
    else:
        r = analytic.avg_rate(cfg)
        rows.append(["analytic-general", model.relative_density(cfg), r / cfg.bandwidth, r])
    summary = {}
    gammas = sc.get("rate.gamma")
    if gammas:
        # rate coverage from the same model as the rows, keyed by rho when dense
        if rhos:
            sources = {fmt(rho): _dense_fn(rho, pmf, d.alpha, d.n_terms) for rho in rhos}
        else:
            sources = {"general": analytic.coverage_fn(cfg)}
        summary["rate_coverage"] = {
            name: {fmt(g): float(analytic.rate_coverage(fn, g, cfg.bandwidth, cfg.sinr_cap)) for g in gammas}
            for name, fn in sources.items()}
    return JobResult(header, rows, summary)


def _dense_fn(rho, pmf, alpha, n_terms):
    def fn(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        order = np.argsort(t)
        out = np.empty_like(t)
        out[order] = analytic.coverage_dense(rho, pmf, alpha, n_terms, t[order]).probabilities
        return out

    return fn


def job_dominance(sc: Scenario, log) -> JobResult:
    a, b = sc.network, sc.dominance_b
    t = sc.thresholds
    res = mc.dominance_check(a, b, sc.mc_settings(), t)
    header = ["threshold_db", "threshold", "p_cov_a", "p_cov_b", "diff", "diff_stderr"]
    rows = [[_db(x), x, pa, pb, dd, se] for x, pa, pb, dd, se in
            zip(t, res.curve_a.probabilities, res.curve_b.probabilities, res.diff, res.diff_stderr)]
    log(f"verdict: {res.verdict}")
    return JobResult(header, rows, {"verdict": res.verdict, "per_trial_a_geq_b": res.per_trial_a_geq_b})


JOB_RUNNERS = {
    "coverage": job_coverage,
    "validate": job_validate,
    "assoc": job_assoc,
    "dense": job_dense,
    "sweep": job_sweep,
    "rate": job_rate,
    "dominance": job_dominance,
}


# --------------------------------------------------------------------------
# Manifest and entry point
# --------------------------------------------------------------------------


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.init:
                out[f.name] = _jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def build_manifest(sc: Scenario, result: JobResult, wall_time: float, csv_path) -> dict:
    return {
        "job": sc.job,
        "seed": sc.seed,
        "scenario": sc.as_dict(),
        "scenario_text": sc.to_text(),
        "resolved_config": _jsonable(sc.network),
        "summary": _jsonable(result.summary),
        "csv": str(csv_path) if csv_path else None,
        "versions": {
            "mmcov": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": kernels.BACKEND,
        },
        "wall_time_s": wall_time,
    }


def run(sc: Scenario, output=None, quiet=False) -> tuple[JobResult, dict]:
    """Execute a scenario; writes the CSV and manifest when an output path is known."""

    def log(msg):
        if not quiet:
            print(msg, file=sys.stderr)

    t0 = time.perf_counter()
    result = JOB_RUNNERS[sc.job](sc, log)
    wall = time.perf_counter() - t0
    out = output or sc.output
    buf = io.StringIO()
    write_csv(buf, result.header, result.rows)
    if out in (None, "-"):
        sys.stdout.write(buf.getvalue())
        manifest = build_manifest(sc, result, wall, None)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buf.getvalue())
        manifest = build_manifest(sc, result, wall, path)
        mpath = path.with_suffix(".manifest.json")
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        log(f"wrote {path} and {mpath}")
    return result, manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="mmcov", description="SINR and rate coverage of mmWave cellular networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario", help="scenario file ('-' for stdin)")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario key (repeatable)")
    r.add_argument("-o", "--output", help="CSV path ('-' for stdout); manifest goes next to it")
    r.add_argument("-q", "--quiet", action="store_true")

    c = sub.add_parser("check", help="validate a scenario and print its canonical form")
    c.add_argument("scenario")
    c.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    sub.add_parser("keys", help="list the recognised scenario keys")
    return p


def _read(path):
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "keys":
        for key, entry in KEYS.items():
            extra = f" ({'|'.join(entry[1])})" if entry[0] == "choice" else ""
            print(f"{key:28s} {entry[0]}{extra}")
        return EXIT_OK
    try:
        sc = parse_scenario(_read(args.scenario), args.overrides)
    except OSError as exc:
        print(f"mmcov: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"mmcov: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "check":
        sys.stdout.write(sc.to_text())
        return EXIT_OK
    try:
        run(sc, args.output, args.quiet)
    except (MmcovError, ArithmeticError, FloatingPointError) as exc:
        print(f"mmcov: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
