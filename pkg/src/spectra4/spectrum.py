"""Eigenvalue location: sign-change scans with bracketed bisection,
magnitude-dip detection for roots without sign change (even multiplicity
in s, or lambda = 0), winding-number counts over complex rectangles, and
the lower-boundedness report for the real spectrum.

The scan variable is s with lambda = s^4 on the positive real axis: the
asymptotic root spacing is uniform in s, so a fixed step tied to
pi * min(a1, a2) cannot skip sign changes at large s. Real negative
eigenvalues (the problem is bounded below, not nonnegative) are scanned
the same way through lambda = -t^4.
"""
from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np

from .charfn import char_fn_many
from .ode import DEFAULT_ACCURACY, IntegrationError, StepBudgetError
from .problem import Problem, principal_fourth_root

__all__ = [
    "ScanConfig",
    "EigRecord",
    "BracketError",
    "BoundaryProximityError",
    "scan_real",
    "scan_negative",
    "refine",
    "count_complex",
    "find_eigenvalues",
    "verify_bounded_below",
]


class BracketError(ValueError):
    """Bracket endpoints do not actually straddle a sign change."""


class BoundaryProximityError(ArithmeticError):
    """A contour sample sits too close to a zero of W."""


@dataclass(frozen=True)
class ScanConfig:
    s_min: float = 0.0
    s_max: float = 20.0
    samples_per_half_wave: int = 8
    refine_tol: float = 1e-10        # on |ds| / max(1, s)
    cluster_tol: float = 1e-6        # relative grouping tolerance in lambda
    ode_accuracy: float = DEFAULT_ACCURACY
    include_negative: bool = True
    t_max: float | None = None       # negative-axis reach; defaults to s_max
    dip_rel_threshold: float = 1e-6
    x_eval: float = -0.5
    jobs: int = 1

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValueError("need s_min < s_max")
        if self.s_min < 0:
            raise ValueError("s_min must be >= 0")
        if self.samples_per_half_wave < 8:
            raise ValueError("samples_per_half_wave must be >= 8")
        for name in ("refine_tol", "cluster_tol", "ode_accuracy", "dip_rel_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not -1.0 <= self.x_eval <= 0.0:
            raise ValueError("x_eval must lie in [-1, 0]")

    def step(self, problem: Problem) -> float:
        return math.pi * min(problem.a1, problem.a2) / (2.0 * self.samples_per_half_wave)


@dataclass(frozen=True)
class EigRecord:
    n: int
    lam: complex
    s: complex
    residual: float
    method: str
    multiplicity: int = 1
    asym_family: str | None = None
    asym_n: int | None = None
    asym_pred: float | None = None
    asym_rel_err: float | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "s_re": self.s.real,
            "s_im": self.s.imag,
            "residual": self.residual,
            "method": self.method,
            "multiplicity": self.multiplicity,
            "asym_family": self.asym_family,
            "asym_n": self.asym_n,
            "asym_pred": self.asym_pred,
            "asym_rel_err": self.asym_rel_err,
        }


@dataclass
class ScanResult:
    """Samples and sign-change brackets from one axis scan."""

    grid: np.ndarray             # scan variable values (s or t)
    w_scaled: np.ndarray
    log_scale: np.ndarray
    brackets: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def log_magnitude(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.w_scaled)) + self.log_scale


def _scan_axis(problem: Problem, grid: np.ndarray, to_lambda, cfg: ScanConfig) -> ScanResult:
    lams = np.array([to_lambda(g) for g in grid], dtype=complex)
    try:
        w, logs = char_fn_many(problem, lams, cfg.ode_accuracy, cfg.x_eval)
        skipped = []
    except (IntegrationError, StepBudgetError):
        # fall back to per-sample evaluation so one bad point only
        # leaves a logged gap instead of killing the sweep
        w = np.zeros(len(grid), dtype=complex)
        logs = np.zeros(len(grid))
        skipped = []
        for i, lam in enumerate(lams):
            try:
                wi, li = char_fn_many(problem, lams[i:i + 1],
                                      cfg.ode_accuracy, cfg.x_eval)
                w[i], logs[i] = wi[0], li[0]
            except (IntegrationError, StepBudgetError) as exc:
                w[i], logs[i] = np.nan, 0.0
                skipped.append({"value": float(grid[i]), "reason": str(exc)})
    res = ScanResult(grid=grid, w_scaled=w, log_scale=logs, skipped=skipped)
    sign = np.sign(w.real)
    for i in range(len(grid) - 1):
        if not (np.isfinite(w[i]) and np.isfinite(w[i + 1])):
            continue  # skipped sample leaves a gap
        if sign[i] == 0 or sign[i + 1] == 0:
            continue  # exact zeros belong to the dip path
        if sign[i] != sign[i + 1]:
            res.brackets.append((float(grid[i]), float(grid[i + 1])))
    return res


def scan_real(problem: Problem, cfg: ScanConfig) -> ScanResult:
    """Scan W(s^4) for real s in [s_min, s_max]; brackets where the
    (real) scaled Wronskian changes sign."""
    ds = cfg.step(problem)
    n = max(2, int(math.ceil((cfg.s_max - cfg.s_min) / ds)) + 1)
    grid = np.linspace(cfg.s_min, cfg.s_max, n)
    return _scan_axis(problem, grid, lambda s: complex(s) ** 4, cfg)


def scan_negative(problem: Problem, cfg: ScanConfig) -> ScanResult:
    """Scan W(-t^4) for t in (0, t_max]; same bracket machinery in t."""
    t_max = cfg.t_max if cfg.t_max is not None else cfg.s_max
    ds = cfg.step(problem)
    n = max(2, int(math.ceil(t_max / ds)) + 1)
    grid = np.linspace(ds * 1e-3, t_max, n)
    return _scan_axis(problem, grid, lambda t: -(complex(t) ** 4), cfg)


def _bisect_many(problem: Problem, brackets, to_lambda, cfg: ScanConfig):
    """Batched bracket refinement in the scan variable.

    Illinois-accelerated false position with a forced bisection step
    every fourth iteration as safeguard; the bracket always shrinks and
    each bracket's trajectory depends only on its own evaluations, so
    results are independent of batching and worker partitioning.

    Returns (roots, residuals, rejected); residual is the dip depth
    |w(root)| relative to the larger original endpoint magnitude.
    """
    if not brackets:
        return [], [], []

    def f_of(vals):
        w, logs = char_fn_many(problem, np.array([to_lambda(v) for v in vals]),
                               cfg.ode_accuracy, cfg.x_eval)
        return w, logs

    lo = np.array([b[0] for b in brackets], dtype=float)
    hi = np.array([b[1] for b in brackets], dtype=float)
    w_lo, lg_lo = f_of(lo)
    w_hi, lg_hi = f_of(hi)
    s_lo = np.sign(w_lo.real)
    s_hi = np.sign(w_hi.real)
    ok = (s_lo != 0) & (s_hi != 0) & (s_lo != s_hi)
    rejected = [brackets[i] for i in range(len(brackets)) if not ok[i]]
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        return [], [], rejected
    lo, hi = lo[idx], hi[idx]
    # per-bracket normalized endpoint values (dimensionless, same log ref)
    ref = np.maximum(lg_lo[idx], lg_hi[idx])
    f_lo = (w_lo.real[idx] * np.exp(lg_lo[idx] - ref)).astype(float)
    f_hi = (w_hi.real[idx] * np.exp(lg_hi[idx] - ref)).astype(float)
    w_orig = np.maximum(np.abs(f_lo), np.abs(f_hi))
    last_moved = np.zeros(lo.shape[0], dtype=int)  # +1 lo side, -1 hi side

    max_iter = 200
    for it in range(max_iter):
        width = hi - lo
        active = width > cfg.refine_tol * np.maximum(1.0, np.abs(hi))
        if not np.any(active):
            break
        ai = np.nonzero(active)[0]
        mid = 0.5 * (lo[ai] + hi[ai])
        if it % 4 != 3:
            denom = f_hi[ai] - f_lo[ai]
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = (lo[ai] * f_hi[ai] - hi[ai] * f_lo[ai]) / denom
            margin = 0.01 * width[ai]
            bad = ~np.isfinite(cand)
            cand = np.where(bad, mid, np.clip(cand, lo[ai] + margin, hi[ai] - margin))
        else:
            cand = mid
        w_c, lg_c = f_of(cand)
        f_c = w_c.real * np.exp(np.clip(lg_c - ref[ai], -600.0, 600.0))
        s_c = np.sign(f_c)
        goes_lo = s_c == np.sign(f_lo[ai])
        for rel, j in enumerate(ai):
            if s_c[rel] == 0:
                lo[j] = hi[j] = cand[rel]
                f_lo[j] = f_hi[j] = 0.0
                continue
            if goes_lo[rel]:
                lo[j] = cand[rel]
                f_lo[j] = f_c[rel]
                if last_moved[j] == 1:
                    f_hi[j] *= 0.5  # Illinois: cut the stale endpoint weight
                last_moved[j] = 1
            else:
                hi[j] = cand[rel]
                f_hi[j] = f_c[rel]
                if last_moved[j] == -1:
                    f_lo[j] *= 0.5
                last_moved[j] = -1
    roots = 0.5 * (lo + hi)
    w_r, lg_r = f_of(roots)
    resid = np.abs(w_r) * np.exp(np.clip(lg_r - ref, -600.0, 600.0))
    resid = resid / np.maximum(w_orig, 1e-300)
    return roots.tolist(), resid.tolist(), rejected


def refine(problem: Problem, bracket, cfg: ScanConfig) -> EigRecord:
    """Bisect one positive-axis bracket to an eigenvalue record."""
    roots, resid, rejected = _bisect_many(problem, [tuple(bracket)],
                                          lambda s: complex(s) ** 4, cfg)
    if rejected:
        raise BracketError(f"no sign change across bracket {bracket}")
    s = roots[0]
    lam = complex(s) ** 4
    return EigRecord(n=0, lam=lam, s=principal_fourth_root(lam),
                     residual=float(resid[0]), method="shooting")


def count_complex(problem: Problem, rect, quadrature_points: int = 64,
                  cfg: ScanConfig | None = None) -> int:
    """Winding number of W along the boundary of a lambda rectangle.

    rect = (re_lo, re_hi, im_lo, im_hi). The boundary is sampled and
    adaptively subdivided until every step's phase change is below
    pi/2; raises BoundaryProximityError when a sample's magnitude
    drops more than 28 nats under the boundary maximum (a zero is too
    close to the contour for the count to be trusted).
    """
    cfg = cfg or ScanConfig(s_max=1.0, s_min=0.0)
    re_lo, re_hi, im_lo, im_hi = map(float, rect)
    if not (re_lo < re_hi and im_lo < im_hi):
        raise ValueError("degenerate rectangle")
    corners = [complex(re_lo, im_lo), complex(re_hi, im_lo),
               complex(re_hi, im_hi), complex(re_lo, im_hi)]

    def boundary_point(t: float) -> complex:
        t = t % 1.0
        seg, frac = divmod(t * 4.0, 1.0)
        a = corners[int(seg) % 4]
        b = corners[(int(seg) + 1) % 4]
        return a + (b - a) * frac

    per_edge = max(4, quadrature_points // 4)
    ts = list(np.linspace(0.0, 1.0, 4 * per_edge, endpoint=False))
    lams = np.array([boundary_point(t) for t in ts], dtype=complex)
    w, logs = char_fn_many(problem, lams, cfg.ode_accuracy, cfg.x_eval)
    phases = list(np.angle(w))
    with np.errstate(divide="ignore"):
        logmags = list(np.log(np.abs(w)) + logs)

    def proximity_guard():
        # a zero near the contour shows up as a deep local dip of
        # log |W| relative to its neighbors (a global floor would
        # misfire on contours whose |W| legitimately spans many nats)
        m = len(ts)
        for i in range(m):
            here = logmags[i]
            if not np.isfinite(here) and here < 0:
                raise BoundaryProximityError(
                    "contour sample landed on a zero of W")
            neigh = min(logmags[(i - 1) % m], logmags[(i + 1) % m])
            if here < neigh - 23.0:
                raise BoundaryProximityError(
                    "contour sample more than 23 nats under its neighbors; "
                    "a zero is too close to the rectangle boundary")

    for _ in range(24):
        proximity_guard()
        need = []
        m = len(ts)
        for i in range(m):
            dphi = phases[(i + 1) % m] - phases[i]
            dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
            if abs(dphi) >= math.pi / 2.0:
                t_next = ts[(i + 1) % m] if i + 1 < m else 1.0
                need.append((i, 0.5 * (ts[i] + t_next)))
        if not need:
            break
        new_lams = np.array([boundary_point(t) for _, t in need], dtype=complex)
        w_new, logs_new = char_fn_many(problem, new_lams, cfg.ode_accuracy, cfg.x_eval)
        with np.errstate(divide="ignore"):
            lm_new = np.log(np.abs(w_new)) + logs_new
        for off, ((i, t), wn, ln) in enumerate(zip(need, w_new, lm_new)):
            pos = i + 1 + off
            ts.insert(pos, t)
            phases.insert(pos, float(np.angle(wn)))
            logmags.insert(pos, float(ln))
    else:
        raise BoundaryProximityError("phase tracking did not settle; "
                                     "a zero is suspiciously close to the contour")

    total = 0.0
    m = len(ts)
    for i in range(m):
        dphi = phases[(i + 1) % m] - phases[i]
        total += (dphi + math.pi) % (2.0 * math.pi) - math.pi
    winding = round(total / (2.0 * math.pi))
    if abs(total - 2.0 * math.pi * winding) > 1.0:
        raise BoundaryProximityError("winding sum far from an integer multiple "
                                     f"of 2*pi: {total:.3f}")
    return int(winding)


def _golden_min(f, a: float, b: float, iters: int = 80) -> float:
    """Golden-section minimizer of a scalar function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a < 1e-14 * max(1.0, abs(b)):
            break
    return 0.5 * (a + b)


def _dip_candidates(scan: ScanResult, cfg: ScanConfig) -> list:
    """Indices of magnitude dips: local minima of log|W| more than
    log(1/dip_rel_threshold) below the neighborhood median."""
    lm = scan.log_magnitude
    n = len(lm)
    drop = -math.log(cfg.dip_rel_threshold)
    out = []
    for i in range(n):
        left = lm[i - 1] if i > 0 else np.inf
        right = lm[i + 1] if i + 1 < n else np.inf
        if not (lm[i] <= left and lm[i] <= right):
            continue
        w0, w1 = max(0, i - 8), min(n, i + 9)
        neigh = np.concatenate([lm[w0:i], lm[i + 1:w1]])
        neigh = neigh[np.isfinite(neigh)]
        if neigh.size == 0:
            continue
        med = float(np.median(neigh))
        if lm[i] < med - drop:
            out.append(i)
    return out


def _refine_dip(problem: Problem, scan: ScanResult, i: int, cfg: ScanConfig):
    """Polish a magnitude dip and confirm by a small winding count.

    Returns (lam, multiplicity, residual) or None when the winding
    count does not confirm an enclosed zero.
    """
    grid = scan.grid
    a = float(grid[max(0, i - 1)])
    b = float(grid[min(len(grid) - 1, i + 1)])

    def absw(s: float) -> float:
        w, logs = char_fn_many(problem, np.array([complex(s) ** 4]),
                               cfg.ode_accuracy, cfg.x_eval)
        return float(np.abs(w[0]) * np.exp(min(logs[0], 600.0)))

    s_c = _golden_min(absw, a, b)
    lam_c = float(s_c) ** 4
    lam_a, lam_b = float(a) ** 4, float(b) ** 4
    span = max(lam_b - lam_a, 1e-9, abs(lam_c) * 1e-6)
    rect = (lam_a - 0.1 * span, lam_b + 0.1 * span, -0.6 * span, 0.6 * span)
    try:
        mult = count_complex(problem, rect, max(32, 4 * cfg.samples_per_half_wave), cfg)
    except BoundaryProximityError:
        return None
    if mult < 1:
        return None
    # dip depth relative to the neighborhood scale of |W|
    lm = scan.log_magnitude
    w0, w1 = max(0, i - 8), min(len(lm), i + 9)
    neigh = np.concatenate([lm[w0:i], lm[i + 1:w1]])
    neigh = neigh[np.isfinite(neigh)]
    local = float(np.median(neigh)) if neigh.size else 0.0
    w, logs = char_fn_many(problem, np.array([complex(lam_c)]),
                           cfg.ode_accuracy, cfg.x_eval)
    with np.errstate(divide="ignore"):
        depth = float(np.log(np.abs(w[0])) + logs[0]) - local
    return complex(lam_c), int(mult), float(np.exp(min(depth, 0.0)))


def _refine_chunk(args):
    """Worker: refine a chunk of positive (axis='s') or negative
    (axis='t') brackets. Top-level for pickling."""
    problem, brackets, cfg, axis = args
    if axis == "s":
        to_lambda = lambda v: complex(v) ** 4  # noqa: E731
    else:
        to_lambda = lambda v: -(complex(v) ** 4)  # noqa: E731
    return _bisect_many(problem, brackets, to_lambda, cfg)


def _refine_all(problem: Problem, brackets, axis: str, cfg: ScanConfig):
    """Refine brackets, optionally across processes; per-bracket results
    do not depend on the partition (step counts are pure per value)."""
    if not brackets:
        return [], [], []
    jobs = min(cfg.jobs, len(brackets))
    if jobs <= 1:
        return _refine_chunk((problem, brackets, cfg, axis))
    chunks = [brackets[k::jobs] for k in range(jobs)]
    roots, resid, rejected = [], [], []
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        for r, rs, rej in pool.map(_refine_chunk,
                                   [(problem, c, cfg, axis) for c in chunks]):
            roots.extend(r)
            resid.extend(rs)
            rejected.extend(rej)
    order = np.argsort(roots, kind="stable")
    roots = [roots[i] for i in order]
    resid = [resid[i] for i in order]
    return roots, resid, rejected


def find_eigenvalues(problem: Problem, cfg: ScanConfig) -> list:
    """Scan + refine + dip-confirm + cluster + sort + index.

    Output is deterministic and independent of cfg.jobs.
    """
    found = []  # (lam complex, residual, multiplicity)

    pos = scan_real(problem, cfg)
    roots, resid, _ = _refine_all(problem, pos.brackets, "s", cfg)
    for s, r in zip(roots, resid):
        found.append((complex(s) ** 4, float(r), 1))

    for i in _dip_candidates(pos, cfg):
        s_i = float(pos.grid[i])
        near_bracket = any(lo - 1e-12 <= s_i <= hi + 1e-12 for lo, hi in pos.brackets)
        near_root = any(abs(s_i - s) <= 2.0 * cfg.step(problem) for s in roots)
        if near_bracket or near_root:
            continue
        hit = _refine_dip(problem, pos, i, cfg)
        if hit is not None:
            lam, mult, r = hit
            found.append((lam, r, mult))

    if cfg.include_negative:
        neg = scan_negative(problem, cfg)
        nroots, nresid, _ = _refine_all(problem, neg.brackets, "t", cfg)
        for t, r in zip(nroots, nresid):
            found.append((-(complex(t) ** 4), float(r), 1))

    # cluster by relative distance in lambda
    found.sort(key=lambda it: (it[0].real, it[0].imag))
    clustered = []
    for lam, r, mult in found:
        if clustered:
            lam0, r0, m0 = clustered[-1]
            if abs(lam - lam0) <= cfg.cluster_tol * max(1.0, abs(lam0)):
                clustered[-1] = (lam0 if r0 <= r else lam,
                                 min(r0, r), m0 + mult)
                continue
        clustered.append((lam, r, mult))

    records = []
    for n, (lam, r, mult) in enumerate(clustered):
        records.append(EigRecord(n=n, lam=lam, s=principal_fourth_root(lam),
                                 residual=r, method="shooting",
                                 multiplicity=mult))
    return records


def verify_bounded_below(problem: Problem, t_grid,
                         cfg: ScanConfig | None = None) -> dict:
    """Sample log|W(-t^4)| on an increasing t grid.

    Reports whether the log magnitude is strictly increasing (whole
    grid and largest increasing tail) and the most negative lambda of
    the scanned range, below which no sign change was found.
    """
    cfg = cfg or ScanConfig(s_max=max(float(np.max(t_grid)), 1.0))
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    lams = -(t_grid.astype(complex) ** 4)
    w, logs = char_fn_many(problem, lams, cfg.ode_accuracy, cfg.x_eval)
    with np.errstate(divide="ignore"):
        lm = np.log(np.abs(w)) + logs
    diffs = np.diff(lm)
    strictly_increasing = bool(np.all(diffs > 0)) if diffs.size else True
    # largest strictly-increasing suffix
    k = len(lm) - 1
    while k > 0 and lm[k] > lm[k - 1]:
        k -= 1
    tail_start = k
    monotone_tail = tail_start <= (len(lm) - 1) // 2 if len(lm) > 1 else True
    sign = np.sign(w.real)
    changes = [(-float(t_grid[i + 1]) ** 4, -float(t_grid[i]) ** 4)
               for i in range(len(t_grid) - 1)
               if sign[i] != 0 and sign[i + 1] != 0 and sign[i] != sign[i + 1]]
    return {
        "t_grid": t_grid.tolist(),
        "log_magnitude": lm.tolist(),
        "strictly_increasing": strictly_increasing,
        "monotone_tail": bool(monotone_tail),
        "tail_start_index": int(tail_start),
        "no_zero_below": -float(t_grid[-1]) ** 4,
        "sign_changes": changes,
    }
