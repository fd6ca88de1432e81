"""Fundamental solutions and the interface transmission maps.

Left-launched pair (phi11, phi21) starts at x=-1 with Cauchy data
(0,0,0,-1) and (0, beta2, -beta1, 0), which annihilates the two left
boundary forms by construction. Right-launched pair (chi12, chi22)
starts at x=1 with data (-1,0,0,lambda) and (0,-1,lambda,0), which
annihilates the two lambda-dependent right forms. Each pair is carried
across x=0 by the lambda-dependent transmission map and continued over
the other segment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ode import DEFAULT_ACCURACY, Segment, propagate_states
from .problem import Problem

__all__ = [
    "TransmissionMap",
    "FundamentalBasis",
    "launch_phi",
    "launch_chi",
    "boundary_forms",
    "null_direction",
    "eigenfunction",
    "EigenfunctionSamples",
    "NotAnEigenvalueError",
]


@dataclass(frozen=True)
class TransmissionMap:
    """The lambda-dependent linear map carrying states across x=0.

    forward (0- -> 0+):  (u, u', u'' - lam*d1*u', u''' - lam*d2*u)
    backward (0+ -> 0-): (u, u', u'' + lam*d1*u', u''' + lam*d2*u)

    Unipotent, so the determinant is exactly 1 and backward is the
    exact inverse of forward.
    """

    lam: complex
    delta1: float
    delta2: float
    direction: str = "forward"

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")

    @property
    def _sign(self) -> float:
        return -1.0 if self.direction == "forward" else 1.0

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4, dtype=complex)
        T[2, 1] = self._sign * self.lam * self.delta1
        T[3, 0] = self._sign * self.lam * self.delta2
        return T

    def apply(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=complex)
        out = y.copy()
        out[2] = y[2] + self._sign * self.lam * self.delta1 * y[1]
        out[3] = y[3] + self._sign * self.lam * self.delta2 * y[0]
        return out

    def inverse(self) -> "TransmissionMap":
        other = "backward" if self.direction == "forward" else "forward"
        return TransmissionMap(self.lam, self.delta1, self.delta2, other)


def _left_segment(problem: Problem, x_from: float, x_to: float) -> Segment:
    return Segment(x_from, x_to, problem.a1, problem.q_left)


def _right_segment(problem: Problem, x_from: float, x_to: float) -> Segment:
    return Segment(x_from, x_to, problem.a2, problem.q_right)


def phi_initial_data(problem: Problem) -> np.ndarray:
    """Columns (phi11, phi21) at x=-1."""
    return np.array([
        [0.0, 0.0],
        [0.0, problem.beta2],
        [0.0, -problem.beta1],
        [-1.0, 0.0],
    ], dtype=complex)


def chi_terminal_data(problem: Problem, lam: complex) -> np.ndarray:
    """Columns (chi12, chi22) at x=1."""
    return np.array([
        [-1.0, 0.0],
        [0.0, -1.0],
        [0.0, lam],
        [lam, 0.0],
    ], dtype=complex)


class FundamentalBasis:
    """All four fundamental solutions at one spectral parameter.

    Endpoint states are stored as (4, 2) column blocks with per-column
    log scale factors; true states are column * exp(log).
    """

    def __init__(self, problem: Problem, lam: complex,
                 accuracy: float = DEFAULT_ACCURACY):
        self.problem = problem
        self.lam = complex(lam)
        self.accuracy = accuracy
        lam2 = np.array([self.lam, self.lam])

        # phi pair: -1 -> 0-, transmit forward, 0+ -> 1
        self.phi_at_m1 = phi_initial_data(problem)
        self.phi_at_0m, self.phi_logs_left = propagate_states(
            _left_segment(problem, -1.0, 0.0), self.phi_at_m1, lam2, accuracy)
        fwd = TransmissionMap(self.lam, problem.delta1, problem.delta2, "forward")
        self.phi_at_0p = fwd.as_matrix() @ self.phi_at_0m
        self.phi_at_1, self.phi_logs_right = propagate_states(
            _right_segment(problem, 0.0, 1.0), self.phi_at_0p, lam2, accuracy,
            logs=self.phi_logs_left)

        # chi pair: 1 -> 0+, transmit backward, 0- -> -1
        self.chi_at_1 = chi_terminal_data(problem, self.lam)
        self.chi_at_0p, self.chi_logs_right = propagate_states(
            _right_segment(problem, 1.0, 0.0), self.chi_at_1, lam2, accuracy)
        bwd = TransmissionMap(self.lam, problem.delta1, problem.delta2, "backward")
        self.chi_at_0m = bwd.as_matrix() @ self.chi_at_0p
        self.chi_at_m1, self.chi_logs_left = propagate_states(
            _left_segment(problem, 0.0, -1.0), self.chi_at_0m, lam2, accuracy,
            logs=self.chi_logs_right)

    # ---------------------------------------------------------- queries

    def left_states(self, x: float):
        """(4, 4) columns (phi11, phi21, chi11, chi21) at x in [-1, 0],
        with their per-column log scales."""
        if not -1.0 <= x <= 0.0:
            raise ValueError("left query point must lie in [-1, 0]")
        lam2 = np.array([self.lam, self.lam])
        if x == -1.0:
            phi, phi_logs = self.phi_at_m1, np.zeros(2)
        elif x == 0.0:
            phi, phi_logs = self.phi_at_0m, self.phi_logs_left
        else:
            phi, phi_logs = propagate_states(
                _left_segment(self.problem, -1.0, x), self.phi_at_m1, lam2,
                self.accuracy)
        if x == 0.0:
            chi, chi_logs = self.chi_at_0m, self.chi_logs_right
        elif x == -1.0:
            chi, chi_logs = self.chi_at_m1, self.chi_logs_left
        else:
            chi, chi_logs = propagate_states(
                _left_segment(self.problem, 0.0, x), self.chi_at_0m, lam2,
                self.accuracy, logs=self.chi_logs_right)
        return np.hstack([phi, chi]), np.concatenate([phi_logs, chi_logs])

    def right_states(self, x: float):
        """(4, 4) columns (phi12, phi22, chi12, chi22) at x in [0, 1]."""
        if not 0.0 <= x <= 1.0:
            raise ValueError("right query point must lie in [0, 1]")
        lam2 = np.array([self.lam, self.lam])
        if x == 0.0:
            phi, phi_logs = self.phi_at_0p, self.phi_logs_left
        elif x == 1.0:
            phi, phi_logs = self.phi_at_1, self.phi_logs_right
        else:
            phi, phi_logs = propagate_states(
                _right_segment(self.problem, 0.0, x), self.phi_at_0p, lam2,
                self.accuracy, logs=self.phi_logs_left)
        if x == 1.0:
            chi, chi_logs = self.chi_at_1, np.zeros(2)
        elif x == 0.0:
            chi, chi_logs = self.chi_at_0p, self.chi_logs_right
        else:
            chi, chi_logs = propagate_states(
                _right_segment(self.problem, 1.0, x), self.chi_at_1, lam2,
                self.accuracy)
        return np.hstack([phi, chi]), np.concatenate([phi_logs, chi_logs])

    def chi_combination_states(self, k3: complex, k4: complex):
        """States of k3*chi1 + k4*chi2 at -1, 0-, 0+, 1, on one common
        scale (exp of the max chi log)."""
        k = np.array([k3, k4], dtype=complex)
        ref = float(np.max(self.chi_logs_left))
        u_m1 = (self.chi_at_m1 * np.exp(self.chi_logs_left - ref)) @ k
        u_0m = (self.chi_at_0m * np.exp(self.chi_logs_right - ref)) @ k
        u_0p = (self.chi_at_0p * np.exp(self.chi_logs_right - ref)) @ k
        u_1 = (self.chi_at_1 * np.exp(np.zeros(2) - ref)) @ k
        return u_m1, u_0m, u_0p, u_1


def launch_phi(problem: Problem, lam: complex, accuracy: float = DEFAULT_ACCURACY):
    """(phi11, phi21) states at -1 and 0-, and (phi12, phi22) at 0+ and 1.

    Returns a dict of (4, 2) column blocks keyed by point, plus the
    per-column log scales at the interface and the far end.
    """
    b = FundamentalBasis(problem, lam, accuracy)
    return {
        "-1": b.phi_at_m1,
        "0-": b.phi_at_0m,
        "0+": b.phi_at_0p,
        "1": b.phi_at_1,
        "logs_0": b.phi_logs_left,
        "logs_1": b.phi_logs_right,
    }


def launch_chi(problem: Problem, lam: complex, accuracy: float = DEFAULT_ACCURACY):
    """(chi12, chi22) states at 1 and 0+, and (chi11, chi21) at 0- and -1."""
    b = FundamentalBasis(problem, lam, accuracy)
    return {
        "1": b.chi_at_1,
        "0+": b.chi_at_0p,
        "0-": b.chi_at_0m,
        "-1": b.chi_at_m1,
        "logs_0": b.chi_logs_right,
        "logs_-1": b.chi_logs_left,
    }


def boundary_forms(problem: Problem, lam: complex, u_m1, u_0m, u_0p, u_1):
    """The eight boundary/transmission forms applied to a piecewise state.

    Arguments are the 4-vector states of the function at -1, 0-, 0+, 1.
    Returns the (8,) form values (all zero on an eigenfunction).
    """
    u_m1 = np.asarray(u_m1, dtype=complex)
    u_0m = np.asarray(u_0m, dtype=complex)
    u_0p = np.asarray(u_0p, dtype=complex)
    u_1 = np.asarray(u_1, dtype=complex)
    b1, b2 = problem.beta1, problem.beta2
    d1, d2 = problem.delta1, problem.delta2
    return np.array([
        u_m1[0],
        b1 * u_m1[1] + b2 * u_m1[2],
        u_0p[0] - u_0m[0],
        u_0p[1] - u_0m[1],
        u_0p[2] - u_0m[2] + lam * d1 * u_0m[1],
        u_0p[3] - u_0m[3] + lam * d2 * u_0m[0],
        lam * u_1[0] + u_1[3],
        lam * u_1[1] + u_1[2],
    ], dtype=complex)


class NotAnEigenvalueError(ValueError):
    """The 2x2 left-boundary system is nonsingular beyond tolerance."""


def null_direction(problem: Problem, lam: complex,
                   accuracy: float = DEFAULT_ACCURACY,
                   singular_tol: float = 1e-6):
    """(k3, k4) spanning the null space of the 2x2 left-boundary system
    [[L1 chi11, L1 chi21], [L2 chi11, L2 chi21]].

    Uses the larger-magnitude row for conditioning. Raises
    NotAnEigenvalueError when the system is nonsingular beyond
    `singular_tol` (determinant relative to the row norms).
    """
    b = FundamentalBasis(problem, lam, accuracy)
    chi = b.chi_at_m1  # columns chi11, chi21 at -1
    scale = np.exp(b.chi_logs_left - np.max(b.chi_logs_left))
    r1 = np.array([chi[0, 0] * scale[0], chi[0, 1] * scale[1]])
    r2 = np.array([
        (problem.beta1 * chi[1, 0] + problem.beta2 * chi[2, 0]) * scale[0],
        (problem.beta1 * chi[1, 1] + problem.beta2 * chi[2, 1]) * scale[1],
    ])
    # singularity via the singular-value ratio: a determinant relative
    # to row norms misreads the case where one row vanishes entirely
    sv = np.linalg.svd(np.vstack([r1, r2]), compute_uv=False)
    ratio = sv[1] / max(sv[0], 1e-300)
    if ratio > singular_tol:
        raise NotAnEigenvalueError(
            f"left-boundary system nonsingular at lambda={lam:g}: "
            f"singular-value ratio {ratio:.3e}"
        )
    n1 = float(np.max(np.abs(r1)))
    n2 = float(np.max(np.abs(r2)))
    row = r1 if n1 >= n2 else r2
    k = np.array([-row[1], row[0]], dtype=complex)
    nrm = float(np.max(np.abs(k)))
    if nrm == 0.0:
        raise NotAnEigenvalueError("degenerate 2x2 system: zero rows")
    return k[0] / nrm, k[1] / nrm


@dataclass(frozen=True)
class EigenfunctionSamples:
    """Piecewise samples of an eigenfunction, max-norm normalized."""

    lam: complex
    xs: np.ndarray
    values: np.ndarray
    sides: list
    k3: complex
    k4: complex
    form_residuals: np.ndarray  # |L1..L8| of the normalized combination

    def to_csv(self) -> str:
        lines = ["x,re_u,im_u,side"]
        for x, u, side in zip(self.xs, self.values, self.sides):
            lines.append(f"{float(x)!r},{u.real!r},{u.imag!r},{side}")
        return "\n".join(lines) + "\n"


def eigenfunction(problem: Problem, lam: complex, k3: complex, k4: complex,
                  xs, accuracy: float = DEFAULT_ACCURACY) -> EigenfunctionSamples:
    """Samples of k3*chi1 + k4*chi2 on both segments, sup-normalized.

    xs may mix points from both segments; x=0 is sampled from the right
    (the combination is continuous there by construction).
    """
    b = FundamentalBasis(problem, lam, accuracy)
    lam2 = np.array([b.lam, b.lam])
    xs = np.asarray(xs, dtype=float)
    k = np.array([k3, k4], dtype=complex)
    ref = float(np.max(b.chi_logs_left))
    values = np.empty(xs.shape[0], dtype=complex)
    sides = []
    for pos, x in enumerate(xs):
        x = float(x)
        if x < 0.0:
            if x == -1.0:
                st, logs = b.chi_at_m1, b.chi_logs_left
            else:
                st, logs = propagate_states(
                    _left_segment(problem, 0.0, x), b.chi_at_0m, lam2, accuracy,
                    logs=b.chi_logs_right)
            sides.append("L")
        else:
            if x == 0.0:
                st, logs = b.chi_at_0p, b.chi_logs_right
            elif x == 1.0:
                st, logs = b.chi_at_1, np.zeros(2)
            else:
                st, logs = propagate_states(
                    _right_segment(problem, 1.0, x), b.chi_at_1, lam2, accuracy)
            sides.append("R")
        col = st[0, :] * np.exp(logs - ref)
        values[pos] = k[0] * col[0] + k[1] * col[1]
    norm = float(np.max(np.abs(values)))
    if norm == 0.0:
        raise NotAnEigenvalueError("eigenfunction combination vanished identically")
    values = values / norm

    u_m1, u_0m, u_0p, u_1 = b.chi_combination_states(k3, k4)
    res = np.abs(boundary_forms(problem, b.lam, u_m1, u_0m, u_0p, u_1)) / norm
    return EigenfunctionSamples(b.lam, xs, values, sides, k3, k4, res)
