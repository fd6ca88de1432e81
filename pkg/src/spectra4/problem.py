"""Problem data model, parameter validation and config parsing.

The boundary value problem on [-1,0) u (0,1]:

    (a(x) u'')'' + q(x) u = lambda u,     a(x) = a1^4 (left), a2^4 (right)

with u(-1)=0, beta1 u'(-1) + beta2 u''(-1) = 0, continuity of u and u'
across 0, lambda-dependent jumps of u'' and u''' across 0 weighted by
delta1/delta2, and lambda-dependent conditions lambda*u(1)+u'''(1)=0,
lambda*u'(1)+u''(1)=0 at the right end.
"""
from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field

from .expr import EvalError, ExprError, PotentialExpr, parse_potential

__all__ = [
    "Problem",
    "ConfigError",
    "ConstraintError",
    "parse_config",
    "principal_fourth_root",
    "SpectralParam",
]


class ConfigError(ValueError):
    """Malformed config document."""


class ConstraintError(ValueError):
    """A problem invariant is violated; the message names the constraint."""


@dataclass(frozen=True)
class Problem:
    """Immutable parameter set; safe to share across workers."""

    a1: float
    a2: float
    beta1: float
    beta2: float
    delta1: float
    delta2: float
    q_left: PotentialExpr
    q_right: PotentialExpr
    strict_validation: bool = True

    def __post_init__(self):
        for name in ("a1", "a2", "beta1", "beta2", "delta1", "delta2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not cmath.isfinite(v):
                raise ConstraintError(f"{name} must be a finite real number")
        if self.a1 <= 0:
            raise ConstraintError("a1 must be > 0")
        if self.a2 <= 0:
            raise ConstraintError("a2 must be > 0")
        if self.strict_validation:
            if abs(self.beta1) + abs(self.beta2) == 0:
                raise ConstraintError("|beta1|+|beta2| must be nonzero")
            if abs(self.delta1) + abs(self.delta2) == 0:
                raise ConstraintError("|delta1|+|delta2| must be nonzero")
        # both potentials must evaluate to finite reals on their segment,
        # including the one-sided limits at 0
        for name, p, lo, hi in (
            ("q_left", self.q_left, -1.0, 0.0),
            ("q_right", self.q_right, 0.0, 1.0),
        ):
            try:
                for k in range(33):
                    p.eval(lo + (hi - lo) * k / 32.0)
            except (EvalError, ExprError) as exc:
                raise ConstraintError(f"{name} not evaluable on [{lo},{hi}]: {exc}") from exc

    def describe(self) -> dict:
        """JSON-ready echo of the parameters (used in manifests)."""
        return {
            "a1": self.a1,
            "a2": self.a2,
            "beta": [self.beta1, self.beta2],
            "delta": [self.delta1, self.delta2],
            "q_left": self.q_left.source,
            "q_right": self.q_right.source,
            "strict_validation": self.strict_validation,
        }


def parse_config(text: str) -> Problem:
    """Parse a JSON config document into a validated Problem.

    Keys: a1, a2, beta ([b1,b2]), delta ([d1,d2]), q_left, q_right,
    strict_validation (optional, default true).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    required = ("a1", "a2", "beta", "delta", "q_left", "q_right")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ConfigError(f"config missing keys: {', '.join(missing)}")
    for key in ("beta", "delta"):
        v = doc[key]
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigError(f"{key} must be a two-element array")
    for key in ("a1", "a2"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise ConfigError(f"{key} must be a number")
    for key in ("q_left", "q_right"):
        if not isinstance(doc[key], str):
            raise ConfigError(f"{key} must be an expression string")
    strict = doc.get("strict_validation", True)
    if not isinstance(strict, bool):
        raise ConfigError("strict_validation must be a boolean")
    try:
        q_left = parse_potential(doc["q_left"])
        q_right = parse_potential(doc["q_right"])
    except ExprError as exc:
        raise ConfigError(f"bad potential expression: {exc}") from exc
    return Problem(
        a1=float(doc["a1"]),
        a2=float(doc["a2"]),
        beta1=float(doc["beta"][0]),
        beta2=float(doc["beta"][1]),
        delta1=float(doc["delta"][0]),
        delta2=float(doc["delta"][1]),
        q_left=q_left,
        q_right=q_right,
        strict_validation=strict,
    )


def principal_fourth_root(lam: complex) -> complex:
    """Fourth root s of lambda with arg(s) in (-pi/4, pi/4] and s(0)=0.

    s**4 == lambda to relative 1e-14; the branch choice makes s of a
    positive real lambda positive real, and of a negative real lambda
    the arg=pi/4 ray value.
    """
    lam = complex(lam)
    if lam == 0:
        return 0j
    if lam.imag == 0.0:
        lam = complex(lam.real, 0.0)  # map -0.0j to +0.0j: phase(-x) = +pi
    r = abs(lam) ** 0.25
    theta = cmath.phase(lam) / 4.0  # phase in (-pi, pi] -> quarter in (-pi/4, pi/4]
    return r * cmath.exp(1j * theta)


@dataclass(frozen=True)
class SpectralParam:
    """Spectral parameter lambda with its principal fourth root."""

    lam: complex
    s: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "s", principal_fourth_root(self.lam))

    @classmethod
    def from_s(cls, s: complex) -> "SpectralParam":
        return cls(complex(s) ** 4)
