import numpy as np
import pytest

from spectra4.charfn import char_fn
from spectra4.spectrum import (
    BracketError,
    BoundaryProximityError,
    ScanConfig,
    count_complex,
    find_eigenvalues,
    refine,
    scan_real,
    verify_bounded_below,
)

# ground truth for the unit-coefficient zero-potential configuration,
# computed from the exact q=0 propagator and confirmed by the
# finite-difference oracle (see exact_q0.py and test_oracle.py)
REF_S_ROOTS = [1.6530270, 3.3218214, 4.6541639, 6.8461563, 7.8225488,
               10.0774718, 10.9795059]
REF_NEG_LAMBDAS = [-66.9138777, -1.1855371]


def test_scan_config_validation():
    with pytest.raises(ValueError):
        ScanConfig(s_min=2.0, s_max=1.0)
    with pytest.raises(ValueError):
        ScanConfig(samples_per_half_wave=4)
    with pytest.raises(ValueError):
        ScanConfig(refine_tol=0.0)
    with pytest.raises(ValueError):
        ScanConfig(x_eval=0.5)


def test_short_interval_no_brackets(ref_problem):
    cfg = ScanConfig(s_min=0.1, s_max=0.2)
    res = scan_real(ref_problem, cfg)
    assert res.brackets == []


def test_known_roots_found(ref_problem, ref_spectrum_12):
    s_found = sorted(r.s.real for r in ref_spectrum_12
                     if r.lam.real > 1e-6 and abs(r.lam.imag) < 1e-9)
    assert len(s_found) == len(REF_S_ROOTS)
    for got, expect in zip(s_found, REF_S_ROOTS):
        assert abs(got - expect) < 2e-6 * expect


def test_negative_axis_roots_found(ref_spectrum_12):
    neg = sorted(r.lam.real for r in ref_spectrum_12 if r.lam.real < -1e-9)
    assert len(neg) == len(REF_NEG_LAMBDAS)
    for got, expect in zip(neg, REF_NEG_LAMBDAS):
        assert abs(got - expect) < 1e-5 * abs(expect)


def test_zero_eigenvalue_found_by_dip(ref_spectrum_12):
    zero = [r for r in ref_spectrum_12 if abs(r.lam) < 1e-8]
    assert len(zero) == 1
    assert zero[0].multiplicity == 1


def test_records_sorted_and_indexed(ref_spectrum_12):
    for i, r in enumerate(ref_spectrum_12):
        assert r.n == i
    lams = [r.lam.real for r in ref_spectrum_12]
    assert lams == sorted(lams)
    assert all(r.residual <= 1e-6 for r in ref_spectrum_12)


def test_refine_single_bracket(ref_problem):
    rec = refine(ref_problem, (1.55, 1.75), ScanConfig(s_max=2.0))
    assert abs(rec.s.real - REF_S_ROOTS[0]) < 1e-7


def test_refine_rejects_monotone_bracket(ref_problem):
    with pytest.raises(BracketError):
        refine(ref_problem, (0.1, 0.2), ScanConfig(s_max=2.0))


def test_refined_root_stable_under_tolerance_halving(ref_problem):
    cfg1 = ScanConfig(s_max=2.0, ode_accuracy=1e-10)
    cfg2 = ScanConfig(s_max=2.0, ode_accuracy=5e-11)
    r1 = refine(ref_problem, (1.55, 1.75), cfg1)
    r2 = refine(ref_problem, (1.55, 1.75), cfg2)
    assert abs(r1.s.real - r2.s.real) < 10 * cfg1.refine_tol * max(1.0, r1.s.real)


def test_eigenvalues_invariant_under_x_eval(ref_problem):
    cfg_a = ScanConfig(s_max=5.0, include_negative=False, x_eval=-0.5)
    cfg_b = ScanConfig(s_max=5.0, include_negative=False, x_eval=-0.25)
    ra = find_eigenvalues(ref_problem, cfg_a)
    rb = find_eigenvalues(ref_problem, cfg_b)
    assert len(ra) == len(rb)
    for a, b in zip(ra, rb):
        assert abs(a.lam - b.lam) <= 1e-8 * max(1.0, abs(a.lam))


def test_determinism_and_jobs_equivalence(ref_problem):
    cfg1 = ScanConfig(s_max=6.0, jobs=1)
    cfg2 = ScanConfig(s_max=6.0, jobs=2)
    r1 = find_eigenvalues(ref_problem, cfg1)
    r1b = find_eigenvalues(ref_problem, cfg1)
    r2 = find_eigenvalues(ref_problem, cfg2)
    assert [(r.lam, r.s, r.residual) for r in r1] == \
           [(r.lam, r.s, r.residual) for r in r1b]
    assert [(r.lam, r.s, r.residual) for r in r1] == \
           [(r.lam, r.s, r.residual) for r in r2]


def test_winding_counts(ref_problem, hand_problem):
    cfg = ScanConfig(s_max=4.0)
    # rectangle around the hand-case zero at the origin
    assert count_complex(hand_problem, (-1e-3, 1.5e-3, -6e-4, 6e-4), 32, cfg) == 1
    # zero-free zone of the reference problem
    assert count_complex(ref_problem, (20.0, 100.0, -5.0, 5.0), 32, cfg) == 0
    # box holding the first two positive eigenvalues (7.47 and 121.76)
    assert count_complex(ref_problem, (1.0, 200.0, -2.0, 2.0), 48, cfg) == 2


def test_winding_rejects_contour_through_zero(ref_problem):
    cfg = ScanConfig(s_max=4.0, refine_tol=1e-13)
    root_lam = refine(ref_problem, (1.55, 1.75), cfg).lam.real
    with pytest.raises(BoundaryProximityError):
        count_complex(ref_problem, (root_lam - 50.0, root_lam, -3.0, 3.0), 32, cfg)


def test_bounded_below_report(ref_problem):
    rep = verify_bounded_below(ref_problem, np.linspace(5.0, 15.0, 21))
    assert rep["strictly_increasing"]
    assert rep["monotone_tail"]
    assert rep["no_zero_below"] == -(15.0 ** 4)
    assert rep["sign_changes"] == []
    # the bound really is below every real eigenvalue
    assert all(lv >= rep["no_zero_below"] for lv in REF_NEG_LAMBDAS)


def test_bounded_below_single_point():
    import spectra4
    problem = spectra4.parse_config(
        '{"a1":1,"a2":1,"beta":[0,1],"delta":[1,1],"q_left":"0","q_right":"0"}')
    rep = verify_bounded_below(problem, np.array([5.0]))
    assert rep["monotone_tail"] and rep["strictly_increasing"]


def test_bounded_below_rejects_unsorted(ref_problem):
    with pytest.raises(ValueError):
        verify_bounded_below(ref_problem, np.array([5.0, 4.0]))


def test_char_fn_sign_change_is_genuine(ref_problem):
    # endpoints of the first bracket really straddle the root
    lo = char_fn(ref_problem, 1.55 ** 4)
    hi = char_fn(ref_problem, 1.75 ** 4)
    assert np.sign(lo.w_scaled.real) != np.sign(hi.w_scaled.real)
