import math

import numpy as np
import pytest

from spectra4.asymptotics import (
    GrowthCheck,
    build_grids,
    growth_ratio,
    kendall_tau,
    match_spectrum,
    predicted_s,
)
from spectra4.spectrum import EigRecord
from spectra4.problem import principal_fourth_root


def _rec(n, lam):
    return EigRecord(n=n, lam=complex(lam), s=principal_fourth_root(lam),
                     residual=0.0, method="shooting")


def test_predicted_values(ref_problem, generic_problem):
    assert abs(predicted_s(1, "prime", ref_problem) - math.pi / 2) < 1e-15
    assert abs(predicted_s(1, "double-prime", ref_problem) - 3 * math.pi / 2) < 1e-15
    import json
    from spectra4.problem import parse_config
    p2 = parse_config(json.dumps({
        "a1": 2.0, "a2": 1.0, "beta": [0.0, 1.0], "delta": [1.0, 1.0],
        "q_left": "0", "q_right": "0"}))
    assert abs(predicted_s(3, "prime", p2) - 5 * math.pi) < 1e-14
    with pytest.raises(ValueError):
        predicted_s(0, "prime", ref_problem)
    with pytest.raises(ValueError):
        predicted_s(1, "third", ref_problem)


def test_grid_spacing_exact(generic_problem):
    grids = build_grids(generic_problem, 12)
    for family, grid in grids.items():
        diffs = np.diff(grid.entries)
        assert np.allclose(diffs, grid.spacing, rtol=0, atol=1e-12)
        assert len(grid.entries) == 12


def test_exact_grid_matches_with_zero_error(ref_problem):
    grids = build_grids(ref_problem, 10)
    records = [_rec(i, sv ** 4) for i, sv in enumerate(grids["prime"].entries)]
    rep = match_spectrum(records, grids, (1, 10))
    assert all(r.asym_rel_err is not None and r.asym_rel_err < 1e-12
               for r in rep.records)
    assert rep.median_error < 1e-12


def test_far_record_unmatched(ref_problem):
    grids = build_grids(ref_problem, 4)
    rep = match_spectrum([_rec(0, 80.0 ** 4)], grids, (1, 4))
    assert rep.records[0].asym_n is None
    assert rep.unmatched == 1


def test_negative_and_zero_records_unmatched(ref_problem):
    grids = build_grids(ref_problem, 6)
    recs = [_rec(0, -4.0), _rec(1, 0.0), _rec(2, (math.pi / 2) ** 4)]
    rep = match_spectrum(recs, grids, (1, 6))
    assert rep.records[0].asym_n is None
    assert rep.records[1].asym_n is None
    assert rep.records[2].asym_n == 1 and rep.records[2].asym_family == "prime"


def test_one_to_one_no_double_claim(ref_problem):
    grids = build_grids(ref_problem, 3)
    s1 = grids["prime"].entries[0]
    recs = [_rec(0, (s1 * 0.99) ** 4), _rec(1, (s1 * 1.01) ** 4)]
    rep = match_spectrum(recs, grids, (1, 3))
    claimed = [(r.asym_family, r.asym_n) for r in rep.records if r.asym_n]
    assert len(claimed) == len(set(claimed))


def test_kendall_tau_extremes():
    assert kendall_tau([5, 4, 3, 2, 1]) == -1.0
    assert kendall_tau([1, 2, 3, 4, 5]) == 1.0
    assert kendall_tau([1.0]) == 0.0


def test_growth_phi11_bound(ref_problem):
    # |phi11(0)| should stay under |s|^-1 e^(|s|/a1) up to a constant
    check = GrowthCheck("phi11", p=-1.0, g=1.0 / ref_problem.a1, k=0, x=0.0)
    rep = growth_ratio(ref_problem, check, np.linspace(5.0, 30.0, 26))
    assert rep["bounded"]


def test_growth_charfn_bound_and_sanity(ref_problem):
    g = 2.0 * (ref_problem.a1 + ref_problem.a2) / (ref_problem.a1 * ref_problem.a2)
    svals = np.linspace(5.0, 25.0, 21)
    good = growth_ratio(ref_problem, GrowthCheck("charfn", 11.0, g), svals)
    assert good["bounded"]
    # the measured growth rate along the real axis is exactly g/2
    # (1/a1 + 1/a2); the full rate g is attained only off the real
    # axis, so g/2 is still borderline-bounded here and the sanity
    # case that must fail is g/4
    borderline = growth_ratio(ref_problem, GrowthCheck("charfn", 11.0, g / 2.0), svals)
    assert abs(borderline["drift"]) < 3.0
    bad = growth_ratio(ref_problem, GrowthCheck("charfn", 11.0, g / 4.0), svals)
    assert not bad["bounded"]
    assert bad["drift"] > 0.5


def test_growth_rejects_nonpositive_s(ref_problem):
    with pytest.raises(ValueError):
        growth_ratio(ref_problem, GrowthCheck("charfn", 11.0, 4.0),
                     np.array([-1.0, 2.0]))


def test_match_report_on_computed_spectrum(ref_problem, ref_spectrum_12):
    grids = build_grids(ref_problem, 8)
    rep = match_spectrum(ref_spectrum_12, grids, (2, 6))
    # pairs approach odd multiples of pi/2: every in-window error is
    # below 15%, and the upper member of each pair is much closer
    assert rep.window_errors and max(rep.window_errors) < 0.15
    assert rep.median_error < 0.10
