"""Command-line entry point: solve | charfun | asym | oracle | verify.

Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 verification failure. Every output file references a run manifest
(written alongside) that carries the config echo, tool version, the
tolerances in effect and per-phase wall-clock timings; the primary
outputs themselves contain no timings and are byte-reproducible.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import build_grids, match_spectrum, predicted_s
from .charfn import char_fn_many
from .ode import IntegrationError, StepBudgetError
from .oracle import discretize, dump_matrix_csv, solve_discrete
from .basis import NotAnEigenvalueError
from .problem import ConfigError, ConstraintError, Problem, parse_config
from .spectrum import BoundaryProximityError, ScanConfig, find_eigenvalues
from .verify import run_verification
from .volterra import PicardError, diagnose_conventions, with_unit_potential

__all__ = ["main"]

USAGE_EXIT = 1
NUMERICAL_EXIT = 2
VERIFICATION_EXIT = 3

_NUMERICAL_ERRORS = (IntegrationError, StepBudgetError, PicardError,
                     BoundaryProximityError, NotAnEigenvalueError,
                     np.linalg.LinAlgError, ArithmeticError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


@dataclass
class RunManifest:
    subcommand: str
    argv: list
    config_path: str
    problem: dict
    version: str = __version__
    tolerances: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def write(self, path: Path):
        path.write_text(json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")


def _load_problem(path: str) -> Problem:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _manifest_name(out: Path) -> str:
    return out.stem + ".manifest.json"


def _records_csv(records, manifest_name: str) -> str:
    lines = [f"# manifest: {manifest_name}",
             "n,lambda_re,lambda_im,s_re,s_im,residual,multiplicity,"
             "asym_family,asym_n,asym_pred,asym_rel_err"]
    for r in records:
        fam = r.asym_family or ""
        an = "" if r.asym_n is None else str(r.asym_n)
        ap = "" if r.asym_pred is None else repr(r.asym_pred)
        ae = "" if r.asym_rel_err is None else repr(r.asym_rel_err)
        lines.append(
            f"{r.n},{r.lam.real!r},{r.lam.imag!r},{r.s.real!r},{r.s.imag!r},"
            f"{r.residual!r},{r.multiplicity},{fam},{an},{ap},{ae}")
    return "\n".join(lines) + "\n"


def _parse_s_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("s-grid must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop <= start:
        raise ValueError("need start < stop and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _add_common(p: _Parser):
    p.add_argument("--config", required=True, help="problem config JSON")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the PNG figure next to the data output")


def _jobs_value(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("SPECTRA4_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def cmd_solve(args) -> int:
    problem = _load_problem(args.config)
    jobs = _jobs_value(args)
    cfg = ScanConfig(
        s_min=args.s_min, s_max=args.s_max,
        samples_per_half_wave=args.samples_per_half_wave,
        refine_tol=args.refine_tol,
        include_negative=not args.positive_only,
        jobs=jobs,
    )
    out = Path(args.out)
    manifest = RunManifest(
        subcommand="solve", argv=sys.argv[1:], config_path=args.config,
        problem=problem.describe(),
        tolerances={"refine_tol": cfg.refine_tol, "ode_accuracy": cfg.ode_accuracy,
                    "cluster_tol": cfg.cluster_tol, "s_min": cfg.s_min,
                    "s_max": cfg.s_max, "jobs": jobs},
    )
    t0 = time.perf_counter()
    records = find_eigenvalues(problem, cfg)
    manifest.timings["find_eigenvalues_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    n_max = int(math.ceil(cfg.s_max / (math.pi * min(problem.a1, problem.a2)))) + 2
    grids = build_grids(problem, n_max)
    rep = match_spectrum(records, grids)
    records = rep.records
    manifest.timings["match_s"] = time.perf_counter() - t0

    payload = {
        "manifest": _manifest_name(out),
        "records": [r.to_dict() for r in records],
    }
    _json_dump(payload, out)
    manifest.outputs.append(out.name)
    csv_path = out.with_suffix(".csv")
    csv_path.write_text(_records_csv(records, _manifest_name(out)), encoding="utf-8")
    manifest.outputs.append(csv_path.name)
    if not args.no_plot:
        from .report import fig_spectrum
        png = out.with_suffix(".png")
        fig_spectrum(records, grids, str(png), _manifest_name(out))
        manifest.outputs.append(png.name)
    manifest.write(out.parent / _manifest_name(out))
    print(f"{len(records)} eigenvalue records -> {out}")
    return 0


def cmd_charfun(args) -> int:
    problem = _load_problem(args.config)
    svals = _parse_s_grid(args.s_grid)
    out = Path(args.out)
    manifest = RunManifest(
        subcommand="charfun", argv=sys.argv[1:], config_path=args.config,
        problem=problem.describe(),
        tolerances={"ode_accuracy": args.accuracy, "x_eval": args.x_eval},
    )
    t0 = time.perf_counter()
    lams = np.array([complex(s) ** 4 for s in svals])
    w, logs = char_fn_many(problem, lams, args.accuracy, args.x_eval)
    manifest.timings["charfun_s"] = time.perf_counter() - t0
    lines = [f"# manifest: {_manifest_name(out)}",
             "lambda_re,lambda_im,s_re,s_im,w_scaled_re,w_scaled_im,log_scale"]
    for s, lam, wv, lg in zip(svals, lams, w, logs):
        lines.append(f"{lam.real!r},{lam.imag!r},{float(s)!r},{0.0!r},"
                     f"{wv.real!r},{wv.imag!r},{lg!r}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.outputs.append(out.name)
    if not args.no_plot:
        from .report import fig_charfun
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(w)) + logs
        png = out.with_suffix(".png")
        fig_charfun(svals, lm, str(png), args.x_eval, _manifest_name(out))
        manifest.outputs.append(png.name)
    manifest.write(out.parent / _manifest_name(out))
    print(f"{len(svals)} samples -> {out}")
    return 0


def cmd_asym(args) -> int:
    problem = _load_problem(args.config)
    out = Path(args.out)
    manifest = RunManifest(
        subcommand="asym", argv=sys.argv[1:], config_path=args.config,
        problem=problem.describe(), tolerances={"n_max": args.n_max},
    )
    families = ["prime", "double-prime"] if args.family == "both" else [args.family]
    lines = [f"# manifest: {_manifest_name(out)}", "n,family,s_pred,lambda_pred"]
    for family in families:
        for n in range(1, args.n_max + 1):
            sv = predicted_s(n, family, problem)
            lines.append(f"{n},{family},{sv!r},{sv ** 4!r}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.outputs.append(out.name)

    if args.match:
        from .spectrum import EigRecord
        data = json.loads(Path(args.match).read_text(encoding="utf-8"))
        records = []
        for d in data["records"]:
            records.append(EigRecord(
                n=d["n"], lam=complex(d["lambda_re"], d["lambda_im"]),
                s=complex(d["s_re"], d["s_im"]), residual=d["residual"],
                method=d.get("method", "shooting"),
                multiplicity=d.get("multiplicity", 1)))
        grids = build_grids(problem, args.n_max)
        rep = match_spectrum(records, grids, (args.window_lo, args.window_hi))
        annotated = {
            "manifest": _manifest_name(out),
            "window": list(rep.window),
            "median_error": rep.median_error,
            "kendall_tau": rep.tau,
            "unmatched": rep.unmatched,
            "records": [r.to_dict() for r in rep.records],
        }
        match_out = out.with_suffix(".match.json")
        _json_dump(annotated, match_out)
        manifest.outputs.append(match_out.name)
        if not args.no_plot:
            from .report import fig_asym_errors
            png = out.with_suffix(".png")
            fig_asym_errors(rep, str(png), _manifest_name(out))
            manifest.outputs.append(png.name)
    manifest.write(out.parent / _manifest_name(out))
    print(f"asymptotic grid -> {out}")
    return 0


def cmd_oracle(args) -> int:
    problem = _load_problem(args.config)
    out = Path(args.out)
    manifest = RunManifest(
        subcommand="oracle", argv=sys.argv[1:], config_path=args.config,
        problem=problem.describe(), tolerances={"N": args.n, "k": args.k},
    )
    t0 = time.perf_counter()
    op = discretize(problem, args.n)
    eigs = solve_discrete(op, min(args.k, op.dim_reduced))
    manifest.timings["discretize_solve_s"] = time.perf_counter() - t0
    payload = {
        "manifest": _manifest_name(out),
        "N": args.n,
        "dim_reduced": op.dim_reduced,
        "eigenvalues": [[w.real, w.imag] for w in eigs],
    }
    _json_dump(payload, out)
    manifest.outputs.append(out.name)
    if args.dump_matrix:
        Path(args.dump_matrix).write_text(dump_matrix_csv(op), encoding="utf-8")
        manifest.outputs.append(Path(args.dump_matrix).name)
    if not args.no_plot:
        from .report import fig_oracle
        png = out.with_suffix(".png")
        fig_oracle(eigs, str(png), manifest=_manifest_name(out))
        manifest.outputs.append(png.name)
    manifest.write(out.parent / _manifest_name(out))
    print(f"{len(eigs)} oracle eigenvalues -> {out}")
    return 0


def cmd_verify(args) -> int:
    problem = _load_problem(args.config)
    jobs = _jobs_value(args)
    if args.volterra:
        # convention determination needs a nonvanishing potential; the
        # report runs on the configured coefficients with q = 1
        report = diagnose_conventions(with_unit_potential(problem), args.volterra_s)
        print(json.dumps(report, sort_keys=True, indent=2))
        return 0
    out = Path(args.out)
    manifest = RunManifest(
        subcommand="verify", argv=sys.argv[1:], config_path=args.config,
        problem=problem.describe(),
        tolerances={"s_max": args.s_max, "oracle_ns": list(args.oracle_ns),
                    "jobs": jobs},
    )
    t0 = time.perf_counter()
    report = run_verification(problem, s_max=args.s_max,
                              oracle_ns=tuple(args.oracle_ns), jobs=jobs)
    manifest.timings["verification_s"] = time.perf_counter() - t0
    payload = {"manifest": _manifest_name(out), **report}
    _json_dump(payload, out)
    manifest.outputs.append(out.name)
    if not args.no_plot:
        from .report import fig_verify
        png = out.with_suffix(".png")
        fig_verify(report, str(png), _manifest_name(out))
        manifest.outputs.append(png.name)
    manifest.write(out.parent / _manifest_name(out))
    for name, res in report["checks"].items():
        print(f"{name:28s} {'PASS' if res['passed'] else 'FAIL'}")
    if not report["all_passed"]:
        print("verification FAILED", file=sys.stderr)
        return VERIFICATION_EXIT
    print("verification passed")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="spectra4",
                description="spectral solver for a discontinuous fourth-order "
                            "boundary value problem")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="locate eigenvalues")
    _add_common(ps)
    ps.add_argument("--s-min", type=float, default=0.0)
    ps.add_argument("--s-max", type=float, default=20.0)
    ps.add_argument("--samples-per-half-wave", type=int, default=8)
    ps.add_argument("--refine-tol", type=float, default=1e-10)
    ps.add_argument("--positive-only", action="store_true",
                    help="skip the negative real axis scan")
    ps.add_argument("--jobs", type=int, default=None,
                    help="worker processes (fallback: SPECTRA4_JOBS)")
    ps.add_argument("--out", required=True, help="output JSON path")
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("charfun", help="sample the characteristic function")
    _add_common(pc)
    pc.add_argument("--s-grid", required=True, help="start:stop:step in s")
    pc.add_argument("--x-eval", type=float, default=-0.5)
    pc.add_argument("--accuracy", type=float, default=1e-10)
    pc.add_argument("--out", required=True, help="output CSV path")
    pc.set_defaults(func=cmd_charfun)

    pa = sub.add_parser("asym", help="asymptotic eigenvalue grids")
    _add_common(pa)
    pa.add_argument("--n-max", type=int, default=20)
    pa.add_argument("--family", choices=["prime", "double-prime", "both"],
                    default="both")
    pa.add_argument("--match", default=None,
                    help="solve output JSON to annotate against the grids")
    pa.add_argument("--window-lo", type=int, default=5)
    pa.add_argument("--window-hi", type=int, default=15)
    pa.add_argument("--out", required=True, help="output CSV path")
    pa.set_defaults(func=cmd_asym)

    po = sub.add_parser("oracle", help="finite-difference matrix oracle")
    _add_common(po)
    po.add_argument("--n", type=int, default=200, help="interior points per segment")
    po.add_argument("--k", type=int, default=12, help="eigenvalues to report")
    po.add_argument("--dump-matrix", default=None,
                    help="write the reduced dense matrix as CSV")
    po.add_argument("--out", required=True, help="output JSON path")
    po.set_defaults(func=cmd_oracle)

    pv = sub.add_parser("verify", help="run the cross-validation pipeline")
    _add_common(pv)
    pv.add_argument("--s-max", type=float, default=21.0)
    pv.add_argument("--oracle-ns", type=int, nargs="+", default=[100, 200, 400])
    pv.add_argument("--jobs", type=int, default=None)
    pv.add_argument("--volterra", action="store_true",
                    help="print only the integral-equation convention report")
    pv.add_argument("--volterra-s", type=float, default=3.0)
    pv.add_argument("--out", default="verify_report.json")
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT
    except (ConfigError, ConstraintError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
