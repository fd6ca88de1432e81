"""Independent verification path: finite-difference discretization of
the augmented operator that linearizes the eigenparameter.

The augmented vector is F = (f, h1, h2, h3, h4) with h1 = f(1),
h2 = f'(1), h3 = -delta1 f'(0), h4 = -delta2 f(0); the operator action
is (Lf, -f'''(1), -f''(1), f''-jump at 0, f'''-jump at 0) and the
problem becomes the standard eigenproblem A F = lambda F.

Discretely, the full unknown vector over both uniform grids is

    [f(-1), fL_1..fL_N, f(0-), f(0+), fR_1..fR_N, f(1), h1, h2, h3, h4]

of size 2N+8. The lambda-free relations (the two left boundary forms,
the two continuity forms, and the four h definitions) are eliminated
exactly through an orthonormal null-space basis; the remaining
lambda-carrying rows (interior 5-point fourth-difference rows plus the
four augmentation rows, built from one-sided stencils of order >= 2)
then form a dense standard eigenproblem. When delta_i = 0 the matching
jump condition is lambda-free and moves into the constraint block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import Problem

__all__ = [
    "DiscreteOperator",
    "discretize",
    "solve_discrete",
    "solve_discrete_pairs",
    "boundary_form_residuals",
    "weighted_symmetry_defect",
    "dump_matrix_csv",
]


def onesided_stencil(order: int, h: float, npts: int = 5, direction: int = +1) -> np.ndarray:
    """Coefficients of the npts-point one-sided stencil for the
    `order`-th derivative at the first point; points step by
    direction*h. 5 points give order >= 2 for derivatives up to 3."""
    A = np.zeros((npts, npts))
    for j in range(npts):
        for i in range(npts):
            A[i, j] = (direction * j * h) ** i / math.factorial(i)
    b = np.zeros(npts)
    b[order] = 1.0
    return np.linalg.solve(A, b)


@dataclass
class DiscreteOperator:
    """Reduced standard eigenproblem plus the full-space bookkeeping."""

    problem: Problem
    N: int
    h: float
    dim_full: int
    constraints: np.ndarray      # (n_con, dim_full) lambda-free rows
    K: np.ndarray                # lambda rows, action part
    M: np.ndarray                # lambda rows, coordinate part
    basis: np.ndarray            # (dim_full, dim_reduced) orthonormal null basis
    A: np.ndarray                # reduced standard matrix
    index: dict                  # coordinate name -> full index

    @property
    def dim_reduced(self) -> int:
        return self.A.shape[0]

    def lift(self, z: np.ndarray) -> np.ndarray:
        """Reduced coordinates -> full augmented vector."""
        return self.basis @ z

    def grid_x(self) -> tuple:
        """(left grid incl. endpoints, right grid incl. endpoints)."""
        xl = np.linspace(-1.0, 0.0, self.N + 2)
        xr = np.linspace(0.0, 1.0, self.N + 2)
        return xl, xr


def discretize(problem: Problem, N: int) -> DiscreteOperator:
    if N < 8:
        raise ValueError("N must be >= 8 for the interface stencils")
    h = 1.0 / (N + 1)
    dim = 2 * N + 8

    i_m1 = 0
    def iL(k: int) -> int:  # k = 1..N
        return k
    i_0m = N + 1
    i_0p = N + 2
    def iR(k: int) -> int:  # k = 1..N
        return N + 2 + k
    i_p1 = 2 * N + 3
    ih = [2 * N + 4 + j for j in range(4)]
    index = {"f(-1)": i_m1, "f(0-)": i_0m, "f(0+)": i_0p, "f(1)": i_p1,
             "h1": ih[0], "h2": ih[1], "h3": ih[2], "h4": ih[3]}

    xL = lambda k: -1.0 + k * h  # noqa: E731
    xR = lambda k: k * h         # noqa: E731

    d1f = onesided_stencil(1, h, direction=+1)
    d1b = onesided_stencil(1, h, direction=-1)
    d2f = onesided_stencil(2, h, direction=+1)
    d2b = onesided_stencil(2, h, direction=-1)
    d3f = onesided_stencil(3, h, direction=+1)
    d3b = onesided_stencil(3, h, direction=-1)

    pts_m1 = [i_m1, iL(1), iL(2), iL(3), iL(4)]           # forward at -1
    pts_0m = [i_0m, iL(N), iL(N - 1), iL(N - 2), iL(N - 3)]  # backward at 0-
    pts_0p = [i_0p, iR(1), iR(2), iR(3), iR(4)]           # forward at 0+
    pts_p1 = [i_p1, iR(N), iR(N - 1), iR(N - 2), iR(N - 3)]  # backward at 1

    def put(row, coeffs, pts, scale=1.0):
        for c, i in zip(coeffs, pts):
            row[i] += scale * c

    b1, b2 = problem.beta1, problem.beta2
    d1, d2 = problem.delta1, problem.delta2

    cons = []
    r = np.zeros(dim); r[i_m1] = 1.0; cons.append(r)                 # u(-1) = 0
    r = np.zeros(dim)
    put(r, d1f, pts_m1, b1)
    put(r, d2f, pts_m1, b2)
    cons.append(r)                                                   # left form
    r = np.zeros(dim); r[i_0p] = 1.0; r[i_0m] = -1.0; cons.append(r)  # u cont.
    r = np.zeros(dim)
    put(r, d1f, pts_0p, +1.0)
    put(r, d1b, pts_0m, -1.0)
    cons.append(r)                                                   # u' cont.
    r = np.zeros(dim); r[ih[0]] = 1.0; r[i_p1] = -1.0; cons.append(r)  # h1 def
    r = np.zeros(dim); r[ih[1]] = 1.0
    put(r, d1b, pts_p1, -1.0)
    cons.append(r)                                                   # h2 def
    if d1 != 0.0:
        r = np.zeros(dim); r[ih[2]] = 1.0
        put(r, d1b, pts_0m, d1)
        cons.append(r)                                               # h3 def
    else:
        r = np.zeros(dim); r[ih[2]] = 1.0; cons.append(r)            # h3 = 0
        r = np.zeros(dim)
        put(r, d2f, pts_0p, +1.0)
        put(r, d2b, pts_0m, -1.0)
        cons.append(r)                                               # u'' cont.
    if d2 != 0.0:
        r = np.zeros(dim); r[ih[3]] = 1.0; r[i_0m] = d2; cons.append(r)
    else:
        r = np.zeros(dim); r[ih[3]] = 1.0; cons.append(r)
        r = np.zeros(dim)
        put(r, d3f, pts_0p, +1.0)
        put(r, d3b, pts_0m, -1.0)
        cons.append(r)                                               # u''' cont.
    C = np.array(cons)

    Krows, Mrows = [], []
    a14, a24 = problem.a1 ** 4, problem.a2 ** 4
    inv_h4 = 1.0 / h ** 4
    cent = np.array([1.0, -4.0, 6.0, -4.0, 1.0])
    for k in range(2, N):          # interior rows, left grid
        r = np.zeros(dim)
        pts = [iL(k - 2) if k >= 3 else i_m1, iL(k - 1), iL(k), iL(k + 1),
               iL(k + 2) if k + 2 <= N else i_0m]
        put(r, cent * a14 * inv_h4, pts)
        r[iL(k)] += problem.q_left.eval(xL(k))
        m = np.zeros(dim); m[iL(k)] = 1.0
        Krows.append(r); Mrows.append(m)
    for k in range(2, N):          # interior rows, right grid
        r = np.zeros(dim)
        pts = [iR(k - 2) if k >= 3 else i_0p, iR(k - 1), iR(k), iR(k + 1),
               iR(k + 2) if k + 2 <= N else i_p1]
        put(r, cent * a24 * inv_h4, pts)
        r[iR(k)] += problem.q_right.eval(xR(k))
        m = np.zeros(dim); m[iR(k)] = 1.0
        Krows.append(r); Mrows.append(m)
    # augmentation rows: -f'''(1), -f''(1), f''-jump, f'''-jump
    r = np.zeros(dim)
    put(r, d3b, pts_p1, -1.0)
    m = np.zeros(dim); m[ih[0]] = 1.0
    Krows.append(r); Mrows.append(m)
    r = np.zeros(dim)
    put(r, d2b, pts_p1, -1.0)
    m = np.zeros(dim); m[ih[1]] = 1.0
    Krows.append(r); Mrows.append(m)
    if d1 != 0.0:
        r = np.zeros(dim)
        put(r, d2f, pts_0p, +1.0)
        put(r, d2b, pts_0m, -1.0)
        m = np.zeros(dim); m[ih[2]] = 1.0
        Krows.append(r); Mrows.append(m)
    if d2 != 0.0:
        r = np.zeros(dim)
        put(r, d3f, pts_0p, +1.0)
        put(r, d3b, pts_0m, -1.0)
        m = np.zeros(dim); m[ih[3]] = 1.0
        Krows.append(r); Mrows.append(m)
    K = np.array(Krows)
    M = np.array(Mrows)

    u, sv, vt = np.linalg.svd(C)
    rank = int(np.sum(sv > sv[0] * 1e-12))
    B = vt[rank:].T
    if B.shape[1] != K.shape[0]:
        raise RuntimeError(
            f"reduction mismatch: null dim {B.shape[1]} vs {K.shape[0]} rows")
    MB = M @ B
    A = np.linalg.solve(MB, K @ B)
    if not np.all(np.isfinite(A)):
        raise ArithmeticError("non-finite entries in the reduced operator")
    return DiscreteOperator(problem, N, h, dim, C, K, M, B, A, index)


def solve_discrete(op: DiscreteOperator, k: int) -> np.ndarray:
    """The k smallest-|lambda| eigenvalues, sorted by real part."""
    if k > op.dim_reduced:
        raise ValueError("k exceeds the reduced dimension")
    w = np.linalg.eigvals(op.A)
    w = w[np.argsort(np.abs(w), kind="stable")][:k]
    return w[np.lexsort((w.imag, w.real))]


def solve_discrete_pairs(op: DiscreteOperator, k: int):
    """(eigenvalues, full-space eigenvectors) for the k smallest-|lambda|."""
    w, V = np.linalg.eig(op.A)
    order = np.argsort(np.abs(w), kind="stable")[:k]
    inner = np.lexsort((w[order].imag, w[order].real))
    order = order[inner]
    vecs = [op.lift(V[:, j]) for j in order]
    return w[order], vecs


def boundary_form_residuals(op: DiscreteOperator, lam: complex,
                            full_vec: np.ndarray) -> np.ndarray:
    """|L5..L8| residuals of a discrete eigenvector, in the
    finite-difference forms, normalized by the vector's sup norm."""
    p = op.problem
    N, h = op.N, op.h
    v = full_vec
    d1b = onesided_stencil(1, h, direction=-1)
    d2f = onesided_stencil(2, h, direction=+1)
    d2b = onesided_stencil(2, h, direction=-1)
    d3f = onesided_stencil(3, h, direction=+1)
    d3b = onesided_stencil(3, h, direction=-1)
    iL = lambda k: k                      # noqa: E731
    iR = lambda k: N + 2 + k              # noqa: E731
    i_0m, i_0p, i_p1 = N + 1, N + 2, 2 * N + 3
    pts_0m = [i_0m, iL(N), iL(N - 1), iL(N - 2), iL(N - 3)]
    pts_0p = [i_0p, iR(1), iR(2), iR(3), iR(4)]
    pts_p1 = [i_p1, iR(N), iR(N - 1), iR(N - 2), iR(N - 3)]

    def stencil(coeffs, pts):
        return sum(c * v[i] for c, i in zip(coeffs, pts))

    fpp_p = stencil(d2f, pts_0p)
    fpp_m = stencil(d2b, pts_0m)
    fppp_p = stencil(d3f, pts_0p)
    fppp_m = stencil(d3b, pts_0m)
    fp_0m = stencil(d1b, pts_0m)
    fp_1 = stencil(d1b, pts_p1)
    fpp_1 = stencil(d2b, pts_p1)
    fppp_1 = stencil(d3b, pts_p1)
    forms = np.array([
        fpp_p - fpp_m + lam * p.delta1 * fp_0m,
        fppp_p - fppp_m + lam * p.delta2 * v[i_0m],
        lam * v[i_p1] + fppp_1,
        lam * fp_1 + fpp_1,
    ], dtype=complex)
    # normalize each form by the magnitude of its own ingredients so the
    # result measures cancellation, not the 1/h^k stencil scale
    scales = np.array([
        abs(fpp_p) + abs(fpp_m) + abs(lam * p.delta1 * fp_0m),
        abs(fppp_p) + abs(fppp_m) + abs(lam * p.delta2 * v[i_0m]),
        abs(lam * v[i_p1]) + abs(fppp_1),
        abs(lam * fp_1) + abs(fpp_1),
    ])
    # floor at the vector norm: degenerate modes (e.g. the x+1 mode at
    # lambda=0) make every ingredient itself roundoff-small
    scales = np.maximum(scales, float(np.max(np.abs(v))) + 1e-300)
    return np.abs(forms) / scales


def _weighted_inner(op: DiscreteOperator, u: np.ndarray, v: np.ndarray) -> complex:
    """Discrete version of the augmented-space inner product: trapezoid
    quadrature with weights 1/a^4 on each segment, plus the four
    component terms with weights 1, 1, 1/delta1, 1/delta2."""
    p = op.problem
    N, h = op.N, op.h
    uL = u[0:N + 2]
    vL = v[0:N + 2]
    uR = u[N + 2:2 * N + 4]
    vR = v[N + 2:2 * N + 4]

    def trap(a, b):
        prod = a * np.conj(b)
        return h * (np.sum(prod) - 0.5 * prod[0] - 0.5 * prod[-1])

    out = trap(uL, vL) / p.a1 ** 4 + trap(uR, vR) / p.a2 ** 4
    ih0 = 2 * N + 4
    out += u[ih0] * np.conj(v[ih0]) + u[ih0 + 1] * np.conj(v[ih0 + 1])
    if p.delta1 != 0.0:
        out += u[ih0 + 2] * np.conj(v[ih0 + 2]) / p.delta1
    if p.delta2 != 0.0:
        out += u[ih0 + 3] * np.conj(v[ih0 + 3]) / p.delta2
    return complex(out)


def weighted_symmetry_defect(op: DiscreteOperator, n_pairs: int = 10,
                             seed: int = 20240) -> float:
    """max over smooth random pairs of |[Au,v] - [u,Av]| relative to
    (||Au|| + ||u||)(||Av|| + ||v||) in the weighted inner product.

    Test vectors are low-order Fourier grid functions projected onto
    the constrained subspace: the finite-difference operator is only
    symmetric up to truncation error, which is O(h^2) on smooth
    vectors but O(1/h^3) on rough ones.
    """
    p = op.problem
    N = op.N
    xl, xr = op.grid_x()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        vecs = []
        for _ in range(2):
            raw = np.zeros(op.dim_full)
            for m in range(1, 5):
                cl, sl, cr, sr = rng.normal(size=4)
                raw[0:N + 2] += cl * np.cos(m * np.pi * xl) + sl * np.sin(m * np.pi * xl)
                raw[N + 2:2 * N + 4] += cr * np.cos(m * np.pi * xr) + sr * np.sin(m * np.pi * xr)
            z = op.basis.T @ raw          # project into the constrained subspace
            vecs.append(z)
        zu, zv = vecs
        u = op.lift(zu)
        v = op.lift(zv)
        Au = op.lift(op.A @ zu)
        Av = op.lift(op.A @ zv)
        defect = abs(_weighted_inner(op, Au, v) - _weighted_inner(op, u, Av))
        nu = math.sqrt(abs(_weighted_inner(op, u, u)))
        nv = math.sqrt(abs(_weighted_inner(op, v, v)))
        nAu = math.sqrt(abs(_weighted_inner(op, Au, Au)))
        nAv = math.sqrt(abs(_weighted_inner(op, Av, Av)))
        denom = (nAu + nu) * (nAv + nv)
        if denom > 0:
            worst = max(worst, defect / denom)
    return worst


def dump_matrix_csv(op: DiscreteOperator) -> str:
    """Dense row-major CSV of the reduced matrix (debugging aid)."""
    lines = []
    for row in op.A:
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
