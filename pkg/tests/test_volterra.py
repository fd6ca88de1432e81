import json

import numpy as np
import pytest

from spectra4.problem import parse_config
from spectra4.volterra import (
    CONVENTIONS,
    cross_check,
    diagnose_conventions,
    kernel_diagonal_values,
    make_spec,
    ode_residual,
    picard_solve,
)


@pytest.fixture(scope="module")
def q1_problem():
    return parse_config(json.dumps({
        "a1": 1.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [1.0, 1.0],
        "q_left": "1", "q_right": "1",
    }))


def test_s_zero_rejected(ref_problem):
    with pytest.raises(ValueError):
        make_spec(ref_problem, "phi11", 0.0)


def test_grid_too_small(ref_problem):
    spec = make_spec(ref_problem, "phi11", 2.0)
    with pytest.raises(ValueError):
        picard_solve(spec, 32)


def test_kernel_diagonal_corrected(generic_problem):
    spec = make_spec(generic_problem, "phi11", 2.7)
    d = kernel_diagonal_values(spec)
    assert d["d0_relative"] < 1e-12
    assert d["d1_relative"] < 1e-12
    assert d["d2_relative"] < 1e-12


def test_kernel_diagonal_as_printed(generic_problem):
    # as printed, the first x-derivative does NOT vanish on the
    # diagonal: it equals -scale * s/a = -a^2/(2 s^2) exactly
    s, a = 2.7, generic_problem.a1
    spec = make_spec(generic_problem, "phi11", s, variant="as-printed")
    d = kernel_diagonal_values(spec)
    assert d["d0_relative"] < 1e-12
    assert d["d2_relative"] < 1e-12
    expected_d1 = -a ** 2 / (2.0 * s ** 2)
    assert abs(d["d1"] - expected_d1) < 1e-12 * abs(expected_d1)


def test_free_terms_reproduce_cauchy_data(generic_problem):
    s = 3.3
    spec11 = make_spec(generic_problem, "phi11", s)
    data11 = [complex(spec11.free_value(-1.0, k)) for k in range(4)]
    assert np.max(np.abs(np.array(data11) - np.array([0, 0, 0, -1]))) < 1e-10
    spec21 = make_spec(generic_problem, "phi21", s)
    data21 = [complex(spec21.free_value(-1.0, k)) for k in range(4)]
    expect = np.array([0.0, generic_problem.beta2, -generic_problem.beta1, 0.0])
    assert np.max(np.abs(np.array(data21) - expect)) < 1e-10


def test_q_zero_fixed_point_is_free_term(ref_problem):
    spec = make_spec(ref_problem, "phi11", 3.0)
    res = picard_solve(spec, 256)
    assert res.iterations == 1
    free = np.asarray(spec.free_value(res.xs), dtype=complex)
    dev = np.max(np.abs(res.u - free)) / np.max(np.abs(free))
    assert dev <= 1e-12


def test_contraction_ratio_below_kernel_bound(q1_problem):
    spec = make_spec(q1_problem, "phi11", 3.0)
    res = picard_solve(spec, 1024)
    assert res.converged
    assert res.kernel_bound < 1.0
    assert res.ratios and max(res.ratios) < res.kernel_bound


def test_convention_determination(q1_problem):
    spec = make_spec(q1_problem, "phi11", 3.0)
    res = picard_solve(spec, 1024)
    r = {c: ode_residual(res.xs, res.u, spec.lam, spec.a, spec.q, c)
         for c in CONVENTIONS}
    assert r["paper-eq-1.1"] < 1e-3
    assert r["lemma-4.1-sign"] > 1.0
    winners = [c for c, v in r.items() if v < 1e-3]
    assert winners == ["paper-eq-1.1"]


def test_as_printed_satisfies_neither_convention(q1_problem):
    spec = make_spec(q1_problem, "phi11", 3.0, variant="as-printed")
    res = picard_solve(spec, 1024)
    for c in CONVENTIONS:
        assert ode_residual(res.xs, res.u, spec.lam, spec.a, spec.q, c) > 1e-2


def test_closed_form_residual_conventions(ref_problem):
    # q=0, s=2: the free term IS the solution of u'''' = s^4 u
    spec = make_spec(ref_problem, "phi11", 2.0)
    xs = np.linspace(-1.0, 0.0, 1025)
    u = np.asarray(spec.free_value(xs), dtype=complex)
    r_good = ode_residual(xs, u, 16.0, 1.0, ref_problem.q_left, "paper-eq-1.1")
    r_bad = ode_residual(xs, u, 16.0, 1.0, ref_problem.q_left, "lemma-4.1-sign")
    # float64 floor: the 5-point stencil cannot do better than ~1.5e-4
    # here (h^2 truncation vs 16*eps/h^4 roundoff; optimum h ~ 2.4e-3)
    assert r_good < 2.5e-4
    assert r_bad > 0.1


def test_ode_residual_needs_points(ref_problem):
    spec = make_spec(ref_problem, "phi11", 2.0)
    xs = np.linspace(-1.0, 0.0, 9)
    u = np.asarray(spec.free_value(xs), dtype=complex)
    with pytest.raises(ValueError):
        ode_residual(xs, u, 16.0, 1.0, ref_problem.q_left, "paper-eq-1.1", stride=2)
    with pytest.raises(ValueError):
        ode_residual(xs, u, 16.0, 1.0, ref_problem.q_left, "nonsense")


def test_cross_check_phi11(q1_problem):
    rep = cross_check(q1_problem, 81.0, "phi11")
    implied = np.asarray(rep["implied_initial_data"], dtype=complex)
    assert np.max(np.abs(implied - np.array([0, 0, 0, -1]))) < 1e-10
    assert rep["ode_match_error"] < 1e-6


def test_cross_check_right_segment(generic_problem):
    rep = cross_check(generic_problem, 3.1 ** 4, "phi12")
    assert rep["ode_match_error"] < 1e-6


def test_grid_doubling_stability(q1_problem):
    spec = make_spec(q1_problem, "phi11", 3.0)
    u1 = picard_solve(spec, 512).u[::2]
    u2 = picard_solve(spec, 1024).u[::4]
    # compare on the common coarse grid
    scale = np.max(np.abs(u2))
    assert np.max(np.abs(u1 - u2)) / scale < 1e-8


def test_diagnose_report_structure(q1_problem):
    rep = diagnose_conventions(q1_problem, 3.0)
    assert rep["variants"]["corrected"]["winner"] == "paper-eq-1.1"
    assert rep["variants"]["as-printed"]["winner"] is None
    assert rep["variants"]["corrected"]["cross_check_mismatch"] < 1e-6
    json.dumps(rep)  # JSON-ready
