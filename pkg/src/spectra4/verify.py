"""Cross-validation pipeline: every inter-module identity and oracle
comparison, runnable as a whole (the CLI `verify` subcommand) or check
by check (the acceptance tests call these directly).

Each check returns a JSON-ready dict with at least {"passed": bool};
measured values ride along for the report.
"""
from __future__ import annotations

import math

import numpy as np

from .asymptotics import GrowthCheck, build_grids, growth_ratio, match_spectrum
from .basis import (
    FundamentalBasis,
    TransmissionMap,
    eigenfunction,
    null_direction,
)
from .charfn import (
    char_fn,
    cubic_identity_check,
    wronskian_right_compound,
)
from .ode import Segment, _rk4_fixed
from .oracle import discretize, solve_discrete
from .problem import Problem, parse_config
from .spectrum import ScanConfig, count_complex, find_eigenvalues, verify_bounded_below
from .volterra import (diagnose_conventions, make_spec, picard_solve,
                       with_unit_potential)

__all__ = [
    "sample_lambdas",
    "check_w1_equals_w2",
    "check_x_independence",
    "check_transmission_det",
    "check_cubic_identity",
    "check_transmission_residuals",
    "check_hand_eigenpair",
    "check_oracle_agreement",
    "check_volterra",
    "check_asymptotic_match",
    "check_growth_and_boundedness",
    "check_rk_order",
    "run_verification",
    "HAND_CONFIG_JSON",
    "REFERENCE_CONFIG_JSON",
]

REFERENCE_CONFIG_JSON = (
    '{"a1": 1.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [1.0, 1.0], '
    '"q_left": "0", "q_right": "0"}'
)
HAND_CONFIG_JSON = (
    '{"a1": 1.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [0.0, 0.0], '
    '"q_left": "0", "q_right": "0", "strict_validation": false}'
)


def sample_lambdas(n: int, radius: float = 100.0, seed: int = 71) -> np.ndarray:
    """Deterministic complex sample in the disc |lambda| <= radius."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.05, 1.0, n))
    th = rng.uniform(0.0, 2.0 * math.pi, n)
    return r * np.exp(1j * th)


def check_w1_equals_w2(problem: Problem, n_samples: int = 20,
                       tol: float = 1e-8, accuracy: float = 1e-10) -> dict:
    lams = sample_lambdas(n_samples)
    worst = 0.0
    for lam in lams:
        w1 = char_fn(problem, lam, accuracy)
        w2 = wronskian_right_compound(problem, lam, 0.5, accuracy)
        v1 = w1.w_scaled * np.exp(w1.log_scale - max(w1.log_scale, w2.log_scale))
        v2 = w2.w_scaled * np.exp(w2.log_scale - max(w1.log_scale, w2.log_scale))
        rel = abs(v1 - v2) / max(abs(v1), 1e-300)
        worst = max(worst, float(rel))
    return {"passed": worst <= tol, "max_rel_diff": worst, "tol": tol,
            "n_samples": n_samples}


def check_x_independence(problem: Problem, n_samples: int = 20,
                         tol: float = 1e-6, accuracy: float = 1e-10) -> dict:
    lams = sample_lambdas(n_samples)
    xs_left = [-0.9, -0.7, -0.5, -0.3, -0.1]
    xs_right = [0.1, 0.3, 0.5, 0.7, 0.9]
    worst = 0.0
    for lam in lams:
        vals = []
        for x in xs_left:
            w = char_fn(problem, lam, accuracy, x_eval=x)
            vals.append(w.w_scaled * np.exp(w.log_scale))
        for x in xs_right:
            w = wronskian_right_compound(problem, lam, x, accuracy)
            vals.append(w.w_scaled * np.exp(w.log_scale))
        vals = np.array(vals)
        spread = float(np.max(np.abs(vals - vals[2])) / max(np.abs(vals[2]), 1e-300))
        worst = max(worst, spread)
    return {"passed": worst <= tol, "max_rel_spread": worst, "tol": tol}


def check_transmission_det(problem: Problem, n_samples: int = 20,
                           tol: float = 1e-14) -> dict:
    lams = sample_lambdas(n_samples)
    worst = 0.0
    for lam in lams:
        for direction in ("forward", "backward"):
            T = TransmissionMap(lam, problem.delta1, problem.delta2, direction)
            worst = max(worst, float(abs(np.linalg.det(T.as_matrix()) - 1.0)))
    return {"passed": bool(worst <= tol), "max_det_deviation": worst, "tol": tol}


def check_cubic_identity(problem: Problem, n_samples: int = 3,
                         tol: float = 1e-6, accuracy: float = 1e-10) -> dict:
    """det of the 8x8 boundary-form system against +-W^3.

    The determinant matches +W^3; the printed sign in the source
    identity is negative, so the report carries both mismatches and the
    measured sign explicitly.
    """
    lams = sample_lambdas(n_samples, radius=60.0, seed=123)
    rel_plus, rel_minus, signs = [], [], []
    for lam in lams:
        r = cubic_identity_check(problem, lam, accuracy)
        rel_plus.append(r["rel_err_plus_w3"])
        rel_minus.append(r["rel_err_minus_w3"])
        signs.append(r["measured_sign"])
    best = [min(p, m) for p, m in zip(rel_plus, rel_minus)]
    return {
        "passed": max(best) <= tol and len(set(signs)) == 1,
        "measured_sign": signs[0] if len(set(signs)) == 1 else 0,
        "max_rel_err_vs_plus_w3": float(max(rel_plus)),
        "max_rel_err_vs_minus_w3": float(max(rel_minus)),
        "tol": tol,
        "note": "identity holds with the + sign; the printed - sign does not match",
    }


def check_transmission_residuals(problem: Problem, n_samples: int = 10,
                                 tol: float = 1e-12,
                                 accuracy: float = 1e-10) -> dict:
    """L3..L6 forms of the continued phi and chi pairs vanish
    (relative to the participating state magnitudes)."""
    lams = sample_lambdas(n_samples, radius=80.0, seed=7)
    worst = 0.0
    for lam in lams:
        b = FundamentalBasis(problem, lam, accuracy)
        d1, d2 = problem.delta1, problem.delta2
        for (m0, p0) in ((b.phi_at_0m, b.phi_at_0p), (b.chi_at_0m, b.chi_at_0p)):
            for j in range(2):
                vm, vp = m0[:, j], p0[:, j]
                forms = np.array([
                    vp[0] - vm[0],
                    vp[1] - vm[1],
                    vp[2] - vm[2] + lam * d1 * vm[1],
                    vp[3] - vm[3] + lam * d2 * vm[0],
                ])
                scale = max(float(np.max(np.abs(vm))), float(np.max(np.abs(vp))), 1e-300)
                worst = max(worst, float(np.max(np.abs(forms)) / scale))
    return {"passed": worst <= tol, "max_rel_residual": worst, "tol": tol}


def check_hand_eigenpair(tol_lambda: float = 1e-8, tol_shape: float = 1e-6,
                         accuracy: float = 1e-10) -> dict:
    """The relaxed config has the eigenvalue 0 with eigenfunction x+1."""
    problem = parse_config(HAND_CONFIG_JSON)
    cfg = ScanConfig(s_min=0.0, s_max=2.0, include_negative=False,
                     ode_accuracy=accuracy)
    records = find_eigenvalues(problem, cfg)
    zero = [r for r in records if abs(r.lam) < tol_lambda]
    result = {"eigenvalue_found": bool(zero),
              "records": [abs(r.lam) for r in records]}
    if not zero:
        result["passed"] = False
        return result
    lam = zero[0].lam
    k3, k4 = null_direction(problem, lam, accuracy)
    xs = np.linspace(-1.0, 1.0, 201)
    ef = eigenfunction(problem, lam, k3, k4, xs, accuracy)
    target = (xs + 1.0) / 2.0
    err = min(float(np.max(np.abs(ef.values - target))),
              float(np.max(np.abs(ef.values + target))))
    result.update({
        "lambda": [lam.real, lam.imag],
        "shape_sup_error": err,
        "form_residual_max": float(np.max(ef.form_residuals)),
        "passed": err < tol_shape,
    })
    return result


def check_oracle_agreement(problem: Problem, n_first: int = 5,
                           tol_rel: float = 0.01,
                           order_min: float = 1.8,
                           ns=(100, 200, 400),
                           shooting_records=None,
                           accuracy: float = 1e-10) -> dict:
    """Shooting vs finite-difference oracle: first eigenvalues within
    tol_rel at the largest N, measured convergence order >= order_min.

    The agreement metric uses |a-b| / max(|a|,|b|,1): the spectrum
    contains a genuine eigenvalue at lambda = 0 where a pure relative
    error is undefined.
    """
    if shooting_records is None:
        cfg = ScanConfig(s_min=0.0, s_max=8.0, include_negative=True,
                         ode_accuracy=accuracy)
        shooting_records = find_eigenvalues(problem, cfg)
    lam_shoot = np.array([r.lam.real for r in shooting_records[:n_first]])

    per_n = {}
    for N in ns:
        op = discretize(problem, N)
        w = solve_discrete(op, min(3 * n_first + 10, op.dim_reduced))
        w_real = np.sort(w[np.abs(w.imag) < 1e-6 * (1.0 + np.abs(w))].real)
        # align with the shooting list: nearest oracle value per target
        approx = []
        for lv in lam_shoot:
            approx.append(w_real[np.argmin(np.abs(w_real - lv))])
        per_n[N] = np.array(approx)

    N_last = max(ns)
    rel = np.abs(per_n[N_last] - lam_shoot) / np.maximum(
        np.maximum(np.abs(per_n[N_last]), np.abs(lam_shoot)), 1.0)
    # convergence order via errors against the shooting values,
    # skipping eigenvalues too close to zero (eigensolver roundoff floor)
    orders = []
    sorted_ns = sorted(ns)
    for j, lv in enumerate(lam_shoot):
        if abs(lv) < 1.0:
            continue
        errs = [abs(per_n[N][j] - lv) for N in sorted_ns]
        if min(errs) <= 0:
            continue
        fits = np.polyfit(np.log([1.0 / (N + 1) for N in sorted_ns]),
                          np.log(errs), 1)
        orders.append(float(fits[0]))
    order = float(np.median(orders)) if orders else float("nan")
    return {
        "passed": bool(np.all(rel <= tol_rel) and order >= order_min),
        "lambda_shooting": lam_shoot.tolist(),
        "lambda_oracle": per_n[N_last].tolist(),
        "max_rel_disagreement": float(np.max(rel)),
        "tol_rel": tol_rel,
        "convergence_orders": orders,
        "median_order": order,
        "order_min": order_min,
    }


def check_volterra(problem: Problem, s: float = 3.0, grid_n: int = 1024) -> dict:
    """Convention determination (on the q=1 variant of the problem:
    a vanishing q cannot discriminate) + the q=0 fixed-point identity."""
    report = diagnose_conventions(with_unit_potential(problem), s, "phi11", grid_n)
    corrected = report["variants"]["corrected"]
    printed = report["variants"]["as-printed"]
    ratios = corrected["ratios"]
    contraction_ok = (not ratios) or max(ratios) < corrected["kernel_bound"]

    # q = 0: the fixed point equals the free term to quadrature precision
    q0 = parse_config(REFERENCE_CONFIG_JSON)
    spec0 = make_spec(q0, "phi11", s)
    pr0 = picard_solve(spec0, 256)
    free0 = np.asarray(spec0.free_value(pr0.xs), dtype=complex)
    q0_dev = float(np.max(np.abs(pr0.u - free0)) / max(np.max(np.abs(free0)), 1e-300))

    passed = (
        corrected["converged"]
        and contraction_ok
        and corrected["winner"] == "paper-eq-1.1"
        and corrected["cross_check_mismatch"] < 1e-6
        and q0_dev <= 1e-12
    )
    return {
        "passed": bool(passed),
        "winner": corrected["winner"],
        "residuals_corrected": corrected["residuals"],
        "residuals_as_printed": printed["residuals"],
        "cross_check_mismatch": corrected["cross_check_mismatch"],
        "contraction_ratios": ratios,
        "kernel_bound": corrected["kernel_bound"],
        "q0_fixed_point_deviation": q0_dev,
        "full_report": report,
    }


def check_asymptotic_match(problem: Problem, records=None,
                           s_max: float = 50.0,
                           n_window=(5, 15),
                           median_tol: float = 0.10,
                           count_tol: float = 3.0,
                           jobs: int = 1,
                           accuracy: float = 1e-10) -> dict:
    """Matched fourth roots against the union grid + counting function."""
    if records is None:
        cfg = ScanConfig(s_min=0.0, s_max=s_max, include_negative=True,
                         ode_accuracy=accuracy, jobs=jobs)
        records = find_eigenvalues(problem, cfg)
    n_max = int(math.ceil(s_max / (math.pi * min(problem.a1, problem.a2)))) + 2
    grids = build_grids(problem, n_max)
    rep = match_spectrum(records, grids, n_window)
    s_real = sorted(r.s.real for r in records
                    if abs(r.lam.imag) <= 1e-8 * (1 + abs(r.lam))
                    and r.lam.real >= 0.0)
    counting = []
    worst_count = 0.0
    for S in range(10, 21):
        nS = sum(1 for sv in s_real if sv <= S)
        dev = abs(nS - 2.0 * S / math.pi)
        counting.append({"S": S, "N": nS, "two_S_over_pi": 2.0 * S / math.pi,
                         "deviation": dev})
        worst_count = max(worst_count, dev)
    passed = (
        rep.median_error is not None
        and rep.median_error < median_tol
        and rep.tau is not None
        and rep.tau < 0.0
        and worst_count <= count_tol
    )
    return {
        "passed": bool(passed),
        "median_error": rep.median_error,
        "kendall_tau": rep.tau,
        "window": list(rep.window),
        "window_errors": rep.window_errors,
        "counting": counting,
        "max_count_deviation": worst_count,
        "n_records": len(records),
    }


def check_growth_and_boundedness(problem: Problem, records=None,
                                 accuracy: float = 1e-10) -> dict:
    """Asymptotic growth bound for W, lower-bound monotonicity, the
    no-eigenvalue-below-bound statement and the off-axis winding."""
    g = 2.0 * (problem.a1 + problem.a2) / (problem.a1 * problem.a2)
    s_vals = np.linspace(5.0, 40.0, 36)
    gw = growth_ratio(problem, GrowthCheck("charfn", 11.0, g), s_vals, accuracy)

    bb = verify_bounded_below(problem, np.linspace(5.0, 15.0, 21))
    if records is None:
        cfg = ScanConfig(s_min=0.0, s_max=8.0, include_negative=True,
                         ode_accuracy=accuracy)
        records = find_eigenvalues(problem, cfg)
    real_lams = [r.lam.real for r in records
                 if abs(r.lam.imag) <= 1e-8 * (1 + abs(r.lam))]
    none_below = all(lv >= bb["no_zero_below"] for lv in real_lams)

    winding = count_complex(problem, (0.0, 1.0e4, 0.1, 10.0), 64,
                            ScanConfig(s_max=11.0, ode_accuracy=accuracy))
    passed = (gw["bounded"] and bb["strictly_increasing"] and none_below
              and winding == 0)
    return {
        "passed": bool(passed),
        "growth_drift": gw["drift"],
        "growth_bounded": gw["bounded"],
        "log_w_strictly_increasing_on_5_15": bb["strictly_increasing"],
        "no_zero_below": bb["no_zero_below"],
        "no_real_eigenvalue_below_bound": bool(none_below),
        "offaxis_winding": winding,
    }


def check_rk_order(tol: float = 0.2) -> dict:
    """Measured RK4 slope on the closed-form u'''' = s^4 u case, s=2."""
    from .expr import parse_potential

    q0 = parse_potential("0")
    prob = Problem(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, q0, q0)
    seg = Segment(-1.0, 0.0, prob.a1, q0)
    s = 2.0
    lam = s ** 4
    y0 = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    exact = np.array([
        0.5 * (math.cos(s) + math.cosh(s)),
        0.5 * s * (-math.sin(s) + math.sinh(s)),
        0.5 * s ** 2 * (-math.cos(s) + math.cosh(s)),
        0.5 * s ** 3 * (math.sin(s) + math.sinh(s)),
    ], dtype=complex)
    ns = [20, 40, 80, 160]
    errs = []
    for n in ns:
        y = _rk4_fixed(seg, y0, lam, n)
        errs.append(float(np.max(np.abs(y - exact))))
    slope = float(-np.polyfit(np.log(ns), np.log(errs), 1)[0])
    return {"passed": abs(slope - 4.0) <= tol, "slope": slope,
            "steps": ns, "errors": errs, "tol": tol}


def run_verification(problem: Problem, s_max: float = 21.0,
                     oracle_ns=(100, 200, 400), jobs: int = 1,
                     accuracy: float = 1e-10) -> dict:
    """The full pipeline on one problem; heavyweight pieces share one
    spectrum computation."""
    cfg = ScanConfig(s_min=0.0, s_max=s_max, include_negative=True,
                     ode_accuracy=accuracy, jobs=jobs)
    records = find_eigenvalues(problem, cfg)
    checks = {
        "w1_equals_w2": check_w1_equals_w2(problem, accuracy=accuracy),
        "x_independence": check_x_independence(problem, accuracy=accuracy),
        "transmission_det": check_transmission_det(problem),
        "cubic_identity": check_cubic_identity(problem, accuracy=accuracy),
        "transmission_residuals": check_transmission_residuals(
            problem, accuracy=accuracy),
        "hand_eigenpair": check_hand_eigenpair(accuracy=accuracy),
        "oracle_agreement": check_oracle_agreement(
            problem, ns=oracle_ns, shooting_records=records, accuracy=accuracy),
        "volterra": check_volterra(problem),
        "asymptotic_match": check_asymptotic_match(
            problem, records=records, s_max=s_max, jobs=jobs, accuracy=accuracy),
        "growth_and_boundedness": check_growth_and_boundedness(
            problem, records=records, accuracy=accuracy),
        "rk_order": check_rk_order(),
    }
    for c in checks.values():
        c["passed"] = bool(c["passed"])  # normalize numpy bools for JSON
    return {
        "checks": checks,
        "all_passed": bool(all(c["passed"] for c in checks.values())),
        "n_records": len(records),
        "records": [r.to_dict() for r in records],
    }
