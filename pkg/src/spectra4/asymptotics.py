"""Asymptotic eigenvalue grids, spectrum matching, and empirical growth
checks of the fundamental solutions and the characteristic function.

Two asymptotic families: the fourth roots of the eigenvalues approach
a1*pi*(2n-1)/2 (prime family) and a2*pi*(2n+1)/2 (double-prime family),
each with spacing a*pi. Whether and how the families interleave or
exhaust the spectrum is not asserted; computed records are matched
one-to-one against the union multiset of both grids and annotated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .charfn import char_fn_many
from .basis import phi_initial_data, chi_terminal_data
from .ode import DEFAULT_ACCURACY, Segment, propagate_states
from .problem import Problem
__all__ = [
    "AsymGrid",
    "predicted_s",
    "build_grids",
    "match_spectrum",
    "MatchReport",
    "kendall_tau",
    "GrowthCheck",
    "growth_ratio",
]

FAMILIES = ("prime", "double-prime")


def predicted_s(n: int, family: str, problem: Problem) -> float:
    """Asymptotic fourth-root location of the n-th family member."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "prime":
        return problem.a1 * math.pi * (2 * n - 1) / 2.0
    if family == "double-prime":
        return problem.a2 * math.pi * (2 * n + 1) / 2.0
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class AsymGrid:
    family: str
    a: float
    entries: tuple  # s values, index n = 1..len

    @property
    def spacing(self) -> float:
        return self.a * math.pi


def build_grids(problem: Problem, n_max: int) -> dict:
    """Both family grids up to index n_max."""
    grids = {}
    for family in FAMILIES:
        a = problem.a1 if family == "prime" else problem.a2
        entries = tuple(predicted_s(n, family, problem) for n in range(1, n_max + 1))
        grids[family] = AsymGrid(family, a, entries)
    return grids


def kendall_tau(values) -> float:
    """Kendall tau-a of a sequence against its index (trend statistic)."""
    v = list(values)
    n = len(v)
    if n < 2:
        return 0.0
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            if v[j] > v[i]:
                conc += 1
            elif v[j] < v[i]:
                disc += 1
    return (conc - disc) / (n * (n - 1) / 2.0)


@dataclass
class MatchReport:
    records: list                  # annotated EigRecords (same order as input)
    window: tuple                  # (n_lo, n_hi) used for the statistics
    window_errors: list            # matched in-window relative errors, by record s
    median_error: float | None
    tau: float | None
    unmatched: int


def match_spectrum(records, grids: dict, n_window=(5, 15)) -> MatchReport:
    """Greedy nearest one-to-one matching of real-s records against the
    union multiset of both grids.

    Only records with essentially real nonnegative lambda participate
    (others are left unmatched: their fourth roots are off the real-s
    grids). A record is unmatched when every remaining grid point is
    farther than half its family spacing. Window statistics cover
    matched records whose grid index n lies in n_window.
    """
    pool = []
    for family, grid in grids.items():
        for idx, sv in enumerate(grid.entries, start=1):
            pool.append((family, idx, sv, grid.spacing))
    # candidate records: real s (real nonnegative lambda)
    cands = []
    for i, rec in enumerate(records):
        if abs(rec.lam.imag) <= 1e-8 * (1.0 + abs(rec.lam)) and rec.lam.real >= 0.0:
            cands.append((i, rec.s.real))
    # all candidate-gridpoint distances, deterministic order
    edges = []
    for ci, (ri, sv) in enumerate(cands):
        for pi, (family, idx, sp, spacing) in enumerate(pool):
            d = abs(sv - sp)
            if d <= 0.5 * spacing:
                edges.append((d, 0 if family == "prime" else 1, idx, ri, pi))
    edges.sort()
    taken_rec: set = set()
    taken_pool: set = set()
    assignment = {}
    for d, fam_rank, idx, ri, pi in edges:
        if ri in taken_rec or pi in taken_pool:
            continue
        taken_rec.add(ri)
        taken_pool.add(pi)
        assignment[ri] = pi

    out = []
    for i, rec in enumerate(records):
        if i in assignment:
            family, idx, sp, _ = pool[assignment[i]]
            err = abs(rec.s.real - sp) / sp
            out.append(replace(rec, asym_family=family, asym_n=idx,
                               asym_pred=sp, asym_rel_err=err))
        else:
            out.append(rec)

    n_lo, n_hi = n_window
    in_window = [r for r in out
                 if r.asym_n is not None and n_lo <= r.asym_n <= n_hi]
    in_window.sort(key=lambda r: r.s.real)
    errors = [r.asym_rel_err for r in in_window]
    return MatchReport(
        records=out,
        window=(n_lo, n_hi),
        window_errors=errors,
        median_error=float(np.median(errors)) if errors else None,
        tau=kendall_tau(errors) if len(errors) >= 2 else None,
        unmatched=sum(1 for r in out if r.asym_n is None),
    )


# --------------------------------------------------------------- growth

@dataclass(frozen=True)
class GrowthCheck:
    """A claimed bound |s|^p * exp(g |s|) for one quantity.

    quantity: charfn | phi11 | phi21 | chi12 | chi22 (solution checks
    evaluate the k-th state component at the point x).
    """

    quantity: str
    p: float
    g: float
    k: int = 0
    x: float = 0.0


def _solution_log_magnitude(problem: Problem, check: GrowthCheck, s_values,
                            accuracy: float) -> np.ndarray:
    """log of the k-th derivative magnitude of one fundamental solution
    at check.x, batched over real s, in the log domain."""
    s_values = np.asarray(s_values, dtype=float)
    lams = s_values.astype(complex) ** 4
    m = lams.shape[0]
    if check.quantity in ("phi11", "phi21"):
        col = 0 if check.quantity == "phi11" else 1
        if not -1.0 <= check.x <= 0.0:
            raise ValueError("left-solution growth check needs x in [-1, 0]")
        Y0 = np.repeat(phi_initial_data(problem)[:, col][:, None], m, axis=1)
        seg = Segment(-1.0, check.x, problem.a1, problem.q_left)
        Y, logs = propagate_states(seg, Y0, lams, accuracy)
    elif check.quantity in ("chi12", "chi22"):
        col = 0 if check.quantity == "chi12" else 1
        if not 0.0 <= check.x <= 1.0:
            raise ValueError("right-solution growth check needs x in [0, 1]")
        Y0 = np.empty((4, m), dtype=complex)
        for j in range(m):
            Y0[:, j] = chi_terminal_data(problem, lams[j])[:, col]
        seg = Segment(1.0, check.x, problem.a2, problem.q_right)
        Y, logs = propagate_states(seg, Y0, lams, accuracy)
    else:
        raise ValueError(f"unknown quantity {check.quantity!r}")
    with np.errstate(divide="ignore"):
        return np.log(np.abs(Y[check.k, :])) + logs


def growth_ratio(problem: Problem, check: GrowthCheck, s_values,
                 accuracy: float = DEFAULT_ACCURACY,
                 drift_threshold: float = 0.5) -> dict:
    """Series r(s) = log|Q(s)| - (p log s + g s) along a real-s ray.

    The bound holds (up to its unknown constant) when the series never
    drifts upward: drift = max over the tail minus the max over the
    first quartile. Downward spikes near zeros of Q are harmless.
    """
    s_values = np.asarray(s_values, dtype=float)
    if np.any(s_values <= 0):
        raise ValueError("growth checks need positive real s values")
    if check.quantity == "charfn":
        lams = s_values.astype(complex) ** 4
        w, logs = char_fn_many(problem, lams, accuracy)
        with np.errstate(divide="ignore"):
            logq = np.log(np.abs(w)) + logs
    else:
        logq = _solution_log_magnitude(problem, check, s_values, accuracy)
    series = logq - (check.p * np.log(s_values) + check.g * s_values)
    head = max(2, len(series) // 4)
    head_max = float(np.max(series[:head]))
    tail_max = float(np.max(series[head:])) if len(series) > head else head_max
    drift = tail_max - head_max
    return {
        "s": s_values.tolist(),
        "series": series.tolist(),
        "head_max": head_max,
        "tail_max": tail_max,
        "drift": drift,
        "bounded": bool(drift <= drift_threshold),
        "p": check.p,
        "g": check.g,
        "quantity": check.quantity,
    }
