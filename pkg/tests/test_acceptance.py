"""Acceptance suite: each numbered criterion runs at its stated
tolerance and prints one PASS/FAIL line.

Two literal clauses are asserted exactly as stated but marked
strict-xfail because the mathematics contradicts them (the adjacent
"corrected" tests pin the measured truth):

* criterion 1's sign: the 8x8 boundary-form determinant equals +W^3,
  not -W^3 (verified by hand algebra, by an exact-propagator hand case
  and numerically at random complex lambda; the negative sign in the
  source display is a typo that its own argument never uses).

* criterion 2's radius: the beta=(1,0) problem genuinely has an
  eigenvalue at lambda ~ 0.36148 < 0.5, confirmed independently by the
  exact closed form, the shooting method and the finite-difference
  oracle. Only lambda = 0 is excluded by the hand computation.
"""
import json

import numpy as np
import pytest

from spectra4.charfn import char_fn, cubic_identity_check
from spectra4.cli import main
from spectra4.oracle import discretize, solve_discrete
from spectra4.spectrum import ScanConfig, find_eigenvalues
from spectra4.verify import (
    check_asymptotic_match,
    check_growth_and_boundedness,
    check_hand_eigenpair,
    check_oracle_agreement,
    check_rk_order,
    check_transmission_det,
    check_volterra,
    check_w1_equals_w2,
    check_x_independence,
    sample_lambdas,
)


def _report(name: str, passed: bool, detail: str = ""):
    print(f"criterion {name}: {'PASS' if passed else 'FAIL'}"
          + (f"  ({detail})" if detail else ""))
    assert passed


# ------------------------------------------------------------ criterion 1

def test_criterion_1_structural_identities(ref_problem):
    """<= 30 s: W1=W2 to 1e-8, x-spread to 1e-6, det(T)=1 to 1e-14,
    and the cubic determinant identity at 3 sample lambda."""
    r_w = check_w1_equals_w2(ref_problem, n_samples=20, tol=1e-8)
    r_x = check_x_independence(ref_problem, n_samples=20, tol=1e-6)
    r_t = check_transmission_det(ref_problem, n_samples=20, tol=1e-14)
    ok = r_w["passed"] and r_x["passed"] and r_t["passed"]
    _report("1 (W1=W2, x-independence, det T)", ok,
            f"w1w2 {r_w['max_rel_diff']:.2e}, spread {r_x['max_rel_spread']:.2e}, "
            f"detT {r_t['max_det_deviation']:.2e}")


def test_criterion_1_cubic_identity_corrected_sign(ref_problem):
    """The cubic identity itself, at the measured (+) sign."""
    worst = 0.0
    for lam in sample_lambdas(3, radius=60.0, seed=123):
        r = cubic_identity_check(ref_problem, lam)
        assert r["measured_sign"] == 1
        worst = max(worst, r["rel_err_plus_w3"])
    _report("1 (8x8 det = +W^3 to 1e-6)", worst <= 1e-6, f"max rel {worst:.2e}")


@pytest.mark.xfail(strict=True, reason=(
    "stated sign is wrong: the determinant of the 8x8 boundary-form system "
    "equals +W^3 (Laplace expansion gives det = W2*(-W1)*(-W2); verified by "
    "an exact hand case and numerically to 1e-12). The printed -W^3 never "
    "matches; only the != 0 consequence is ever used."))
def test_criterion_1_cubic_identity_literal_minus_sign(ref_problem):
    """det8 == -W^3 to relative 1e-6, literally as stated."""
    for lam in sample_lambdas(3, radius=60.0, seed=123):
        r = cubic_identity_check(ref_problem, lam)
        assert r["rel_err_minus_w3"] <= 1e-6


# ------------------------------------------------------------ criterion 2

def test_criterion_2_hand_eigenpair():
    """<= 5 s: the relaxed configuration has the zero eigenvalue with
    eigenfunction x+1 (sup error < 1e-6 after normalization)."""
    r = check_hand_eigenpair(tol_lambda=1e-8, tol_shape=1e-6)
    _report("2 (lambda=0 eigenpair, eigenfunction x+1)", r["passed"],
            f"|lambda| {abs(complex(*r['lambda'])):.1e}, "
            f"shape err {r['shape_sup_error']:.1e}")


def test_criterion_2_beta10_no_zero_eigenvalue(beta10_problem):
    """Corrected twin: lambda = 0 is NOT an eigenvalue for beta=(1,0)
    (W(0) = -1 by cubic elimination) and no eigenvalue exists within
    |lambda| < 0.2; the genuine root at 0.36148 is confirmed by both
    methods."""
    w0 = char_fn(beta10_problem, 0.0)
    w0_val = w0.w_scaled * np.exp(w0.log_scale)
    assert abs(w0_val - (-1.0)) < 1e-9
    cfg = ScanConfig(s_min=0.0, s_max=1.2, include_negative=True)
    records = find_eigenvalues(beta10_problem, cfg)
    inside_02 = [r for r in records if abs(r.lam) < 0.2]
    near_0361 = [r for r in records if abs(r.lam - 0.3614777) < 1e-4]
    op = discretize(beta10_problem, 200)
    w = solve_discrete(op, 2)
    oracle_hit = any(abs(x.imag) < 1e-8 and abs(x.real - 0.3614777) < 5e-3
                     for x in w)
    ok = not inside_02 and len(near_0361) == 1 and oracle_hit
    _report("2 (beta=(1,0): W(0)=-1, genuine root at 0.3615)", ok,
            f"records {[round(r.lam.real, 5) for r in records]}")


@pytest.mark.xfail(strict=True, reason=(
    "stated radius is wrong: the beta=(1,0) relaxed problem has a genuine "
    "eigenvalue at lambda ~ 0.361478 < 0.5, found independently by the exact "
    "q=0 closed form (sign change of W), the shooting scan, and the "
    "finite-difference oracle (0.36151 at N=200). The hand computation only "
    "rules out lambda = 0."))
def test_criterion_2_beta10_literal_radius(beta10_problem):
    """No eigenvalue within |lambda| < 0.5, literally as stated."""
    cfg = ScanConfig(s_min=0.0, s_max=1.2, include_negative=True)
    records = find_eigenvalues(beta10_problem, cfg)
    assert not [r for r in records if abs(r.lam) < 0.5]


# ------------------------------------------------------------ criterion 3

def test_criterion_3_cross_method_agreement(ref_problem, ref_spectrum_50):
    """<= 5 min: shooting vs oracle first 5 within 1% at N=400,
    measured convergence order >= 1.8 across N in {100, 200, 400}."""
    r = check_oracle_agreement(ref_problem, n_first=5, tol_rel=0.01,
                               order_min=1.8, ns=(100, 200, 400),
                               shooting_records=ref_spectrum_50)
    _report("3 (shooting vs oracle)", r["passed"],
            f"max rel {r['max_rel_disagreement']:.2e}, "
            f"median order {r['median_order']:.2f}")


# ------------------------------------------------------------ criterion 4

def test_criterion_4_integrator_order():
    """<= 10 s: RK slope 4 +- 0.2 on the closed-form s=2 case."""
    r = check_rk_order(tol=0.2)
    _report("4 (RK4 order)", r["passed"], f"slope {r['slope']:.3f}")


# ------------------------------------------------------------ criterion 5

def test_criterion_5_volterra(ref_problem):
    """<= 60 s: q=1, s=3 Picard converges under the kernel bound;
    exactly one sign convention has residual < 1e-3; cross-check
    mismatch < 1e-6; the q=0 fixed point equals the free term to
    1e-12."""
    r = check_volterra(ref_problem, s=3.0)
    winners = [c for c, v in r["residuals_corrected"].items() if v < 1e-3]
    ok = (r["passed"] and winners == ["paper-eq-1.1"]
          and (not r["contraction_ratios"]
               or max(r["contraction_ratios"]) < r["kernel_bound"])
          and r["cross_check_mismatch"] < 1e-6
          and r["q0_fixed_point_deviation"] <= 1e-12)
    _report("5 (integral equations)", ok,
            f"winner {winners}, residuals {r['residuals_corrected']}, "
            f"cross {r['cross_check_mismatch']:.1e}, "
            f"q0 dev {r['q0_fixed_point_deviation']:.1e}")


# ------------------------------------------------------------ criterion 6

def test_criterion_6_asymptotic_trend(ref_problem, ref_spectrum_50):
    """<= 10 min: fourth roots matched to the union grid of odd
    multiples of pi/2: median relative error < 0.10 on the index
    window [5, 15], downward trend (tau < 0), counting function within
    3 of 2S/pi on S in [10, 20]."""
    r = check_asymptotic_match(ref_problem, records=ref_spectrum_50,
                               s_max=50.0, n_window=(5, 15),
                               median_tol=0.10, count_tol=3.0)
    _report("6 (asymptotic grids)", r["passed"],
            f"median {r['median_error']:.4f}, tau {r['kendall_tau']:.3f}, "
            f"count dev {r['max_count_deviation']:.2f}")


# ------------------------------------------------------------ criterion 7

def test_criterion_7_growth_and_boundedness(ref_problem, ref_spectrum_50):
    """<= 2 min: growth-bound drift <= 0.5 nats on s in [5, 40];
    log|W(-t^4)| strictly increasing on t in [5, 15]; no real
    eigenvalue below the reported bound; zero winding over the
    off-axis rectangle."""
    r = check_growth_and_boundedness(ref_problem, records=ref_spectrum_50)
    _report("7 (growth and boundedness)", r["passed"],
            f"drift {r['growth_drift']:.2f}, "
            f"increasing {r['log_w_strictly_increasing_on_5_15']}, "
            f"winding {r['offaxis_winding']}")


# ------------------------------------------------------------ criterion 8

def test_criterion_8_determinism(tmp_path, config_file):
    """Repeated solve runs and --jobs in {1, 4} byte-identical
    eigenvalue outputs (manifest name normalized; it is the only
    run-specific token in the payload)."""
    blobs = []
    for tag, jobs in (("r1", "1"), ("r2", "1"), ("j4", "4")):
        out = tmp_path / f"{tag}.json"
        rc = main(["solve", "--config", str(config_file), "--s-max", "6.0",
                   "--jobs", jobs, "--no-plot", "--out", str(out)])
        assert rc == 0
        j = out.read_bytes().replace(f"{tag}.manifest".encode(), b"M")
        c = (tmp_path / f"{tag}.csv").read_bytes().replace(
            f"{tag}.manifest".encode(), b"M")
        blobs.append((j, c))
    ok = blobs[0] == blobs[1] == blobs[2]
    _report("8 (determinism incl. --jobs)", ok)


# ------------------------------------------- full verify pipeline (CLI)

def test_verify_cli_end_to_end(tmp_path, config_file):
    """The verify subcommand on the reference configuration exits 0 and
    writes a report with every check marked passed."""
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", str(config_file), "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["all_passed"]
    assert len(report["checks"]) == 11
    assert (tmp_path / "report.png").exists()
