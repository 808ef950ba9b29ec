"""Physical parameters and constitutive laws for the damped beam with tip stops.

Everything in this module is a pure function of its inputs or an immutable
parameter record; instances can be shared freely across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

STABILIZING = "stabilizing"
EXCLUDED = "excluded"
IRRATIONAL = "irrational-input"


@dataclass(frozen=True)
class BeamParams:
    """Material/geometry constants of the beam and the location of the damper.

    rho1, rho2 are the translational and rotational inertia densities, k the
    shear stiffness, b the bending stiffness, ell the length.  The damper sits
    at xi, which is stored as an exact fraction of ell when available (the
    location verdicts need exact rationals) with a real-valued fallback.
    gamma1 damps the transverse velocity at xi, gamma2 the rotation rate.
    """

    rho1: float
    rho2: float
    k: float
    b: float
    ell: float
    gamma1: float = 0.0
    gamma2: float = 0.0
    xi_fraction: Fraction | None = None
    xi_real: float | None = None

    def __post_init__(self):
        for name in ("rho1", "rho2", "k", "b", "ell"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.gamma1 < 0.0 or self.gamma2 < 0.0:
            raise ValueError("damping coefficients must be nonnegative")
        if (self.xi_fraction is None) == (self.xi_real is None):
            raise ValueError("specify exactly one of xi_fraction, xi_real")
        if not 0.0 < self.xi < self.ell:
            raise ValueError(f"xi={self.xi} must lie strictly inside (0, {self.ell})")

    @property
    def xi(self) -> float:
        if self.xi_fraction is not None:
            return float(self.xi_fraction) * self.ell
        return float(self.xi_real)


@dataclass(frozen=True)
class TipParams:
    """Tip-body coupling at the free end.

    When enabled, the free end carries a body of coefficient epsilon that adds
    epsilon to the mass, damping and stiffness seen by the end deflection.
    damping_on=False zeroes only the damping contribution, which is useful for
    conservative verification runs.  Disabled entirely, the end is traction
    free and the model reduces to the plain transmission beam.
    """

    enabled: bool = False
    epsilon: float = 0.0
    damping_on: bool = True

    def __post_init__(self):
        if self.enabled and self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0 when the tip body is enabled")


@dataclass(frozen=True)
class NoContact:
    """Free end: no obstacle."""


@dataclass(frozen=True)
class NormalCompliance:
    """Power-law compliant stops: traction grows as penetration**p.

    g_lo < 0 < g_hi are the lower/upper stop positions; d1/d2 the lower/upper
    stiffness coefficients; p in {1, 2, 3}.
    """

    d1: float
    d2: float
    p: int
    g_lo: float
    g_hi: float

    def __post_init__(self):
        if self.d1 <= 0.0 or self.d2 <= 0.0:
            raise ValueError("contact stiffness coefficients must be positive")
        if self.p not in (1, 2, 3):
            raise ValueError("compliance exponent p must be 1, 2 or 3")
        _check_gap(self.g_lo, self.g_hi)


@dataclass(frozen=True)
class SignoriniPenalty:
    """Stiff linear penalisation of the stops with parameter eps_pen."""

    eps_pen: float
    g_lo: float
    g_hi: float

    def __post_init__(self):
        if self.eps_pen <= 0.0:
            raise ValueError("eps_pen must be positive")
        _check_gap(self.g_lo, self.g_hi)


ContactLaw = NoContact | NormalCompliance | SignoriniPenalty


def _check_gap(g_lo, g_hi):
    # rest position v=0 must be admissible, so the stops straddle zero
    if not g_lo < 0.0 < g_hi:
        raise ValueError(f"stops must satisfy g_lo < 0 < g_hi, got [{g_lo}, {g_hi}]")


@dataclass(frozen=True)
class ForceLaw:
    """Semilinear restoring force mu*s*|s|**alpha with optional truncation.

    With cutoff_R set, the slope saturates beyond |s| = R, which makes the law
    globally Lipschitz with constant at most mu*(alpha+1)*R**alpha.  f0 is a
    constant distributed load applied to the same field equation (it is not
    part of the pointwise law: body_force(0) == 0 always).
    """

    mu: float = 0.0
    alpha: float = 0.0
    cutoff_R: float | None = None
    f0: float = 0.0

    def __post_init__(self):
        if self.mu < 0.0 or self.alpha < 0.0:
            raise ValueError("mu and alpha must be nonnegative")
        if self.cutoff_R is not None and self.cutoff_R <= 0.0:
            raise ValueError("cutoff_R must be positive when given")


def _pos(x):
    return np.maximum(x, 0.0)


def contact_traction(v: float, law: ContactLaw) -> float:
    """Traction added to the force balance of the end deflection v.

    Zero inside the gap; pushes back toward the gap outside it (negative above
    g_hi, positive below g_lo).
    """
    if isinstance(law, NoContact):
        return 0.0
    if isinstance(law, NormalCompliance):
        up = max(v - law.g_hi, 0.0)
        lo = max(law.g_lo - v, 0.0)
        return -law.d2 * up**law.p + law.d1 * lo**law.p
    if isinstance(law, SignoriniPenalty):
        up = max(v - law.g_hi, 0.0)
        lo = max(law.g_lo - v, 0.0)
        return (-up + lo) / law.eps_pen
    raise TypeError(f"unknown contact law {law!r}")


def contact_stiffness(v: float, law: ContactLaw) -> float:
    """Semismooth derivative d(contact_traction)/dv.

    At the kinks (contact onset) the positive parts vanish, so the inactive
    branch slope 0 is returned; this is the generalized derivative used by the
    Newton corrector.
    """
    if isinstance(law, NoContact):
        return 0.0
    if isinstance(law, NormalCompliance):
        s = 0.0
        if v > law.g_hi:
            s -= law.d2 * law.p * (v - law.g_hi) ** (law.p - 1)
        if v < law.g_lo:
            s -= law.d1 * law.p * (law.g_lo - v) ** (law.p - 1)
        return s
    if isinstance(law, SignoriniPenalty):
        return -(float(v > law.g_hi) + float(v < law.g_lo)) / law.eps_pen
    raise TypeError(f"unknown contact law {law!r}")


def contact_potential(v: float, law: ContactLaw) -> float:
    """Stored contact energy; nonnegative, zero on the gap.

    Its negative derivative with respect to v is contact_traction.
    """
    if isinstance(law, NoContact):
        return 0.0
    if isinstance(law, NormalCompliance):
        up = max(v - law.g_hi, 0.0)
        lo = max(law.g_lo - v, 0.0)
        q = law.p + 1
        return law.d2 / q * up**q + law.d1 / q * lo**q
    if isinstance(law, SignoriniPenalty):
        up = max(v - law.g_hi, 0.0)
        lo = max(law.g_lo - v, 0.0)
        return (up**2 + lo**2) / (2.0 * law.eps_pen)
    raise TypeError(f"unknown contact law {law!r}")


def body_force(s, law: ForceLaw):
    """Pointwise semilinear force mu*s*|s|**alpha, slope-saturated past cutoff_R.

    Accepts scalars or arrays.
    """
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    if law.cutoff_R is not None:
        a = np.minimum(a, law.cutoff_R)
    out = law.mu * s * a**law.alpha
    return float(out) if out.ndim == 0 else out


def body_force_derivative(s, law: ForceLaw):
    """d(body_force)/ds; the inner branch mu*(alpha+1)*|s|**alpha up to the cutoff."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    if law.cutoff_R is None:
        out = law.mu * (law.alpha + 1.0) * a**law.alpha
    else:
        inner = a <= law.cutoff_R
        out = np.where(
            inner,
            law.mu * (law.alpha + 1.0) * np.minimum(a, law.cutoff_R) ** law.alpha,
            law.mu * law.cutoff_R**law.alpha,
        )
    return float(out) if out.ndim == 0 else out


def body_force_primitive(s, law: ForceLaw):
    """Antiderivative of body_force vanishing at 0 (an even, nonnegative function)."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    if law.cutoff_R is None:
        out = law.mu * a ** (law.alpha + 2.0) / (law.alpha + 2.0)
    else:
        R = law.cutoff_R
        core = law.mu * np.minimum(a, R) ** (law.alpha + 2.0) / (law.alpha + 2.0)
        tail = np.where(a > R, law.mu * R**law.alpha * (a**2 - R**2) / 2.0, 0.0)
        out = core + tail
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MultiplierSpec:
    """Sharpness parameter of the exponential observability multiplier."""

    n: int
    ell: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("multiplier parameter n must be a positive integer")
        if self.ell <= 0.0:
            raise ValueError("ell must be positive")


def default_multiplier(ell: float) -> MultiplierSpec:
    """Default sharpness: large enough that the weight's slope dominates its value."""
    return MultiplierSpec(n=math.ceil(8.0 / ell), ell=ell)


def _check_domain(x, ell):
    if np.any(np.asarray(x) < 0.0) or np.any(np.asarray(x) > ell):
        raise ValueError(f"position outside [0, {ell}]")


def multiplier_q(x, spec: MultiplierSpec):
    """Increasing multiplier anchored at the left end: returns (q(x), q'(x)).

    q(x) = (exp(n x) - 1)/n, so q(0) = 0 and q' = exp(n x).
    """
    _check_domain(x, spec.ell)
    x = np.asarray(x, dtype=float)
    e = np.exp(spec.n * x)
    q = (e - 1.0) / spec.n
    if q.ndim == 0:
        return float(q), float(e)
    return q, e


def multiplier_q0(x, spec: MultiplierSpec):
    """Decreasing companion anchored at the right end: returns (q0(x), q0'(x)).

    q0(x) = (exp(-n x) - exp(-n ell))/n vanishes at x = ell.
    """
    _check_domain(x, spec.ell)
    x = np.asarray(x, dtype=float)
    e = np.exp(-spec.n * x)
    q0 = (e - math.exp(-spec.n * spec.ell)) / spec.n
    d = -e
    if q0.ndim == 0:
        return float(q0), float(d)
    return q0, d


def is_stabilizing_xi(xi_fraction: Fraction | tuple[int, int] | None) -> str:
    """Damper-location verdict for xi = (p/q) * ell.

    After reduction, fractions with an even numerator (and hence odd
    denominator) are the obstructed locations: they coincide with interior
    zeros of the transverse half-wave traces, so the transverse damper misses
    a whole family of modes there.  Everything else rational is stabilizing.
    A None input means no exact rational was supplied; the location theorem
    assumes rationality, so the verdict is left open rather than guessed.
    """
    if xi_fraction is None:
        return IRRATIONAL
    if isinstance(xi_fraction, tuple):
        num, den = xi_fraction
        if den == 0:
            raise ValueError("zero denominator")
        xi_fraction = Fraction(num, den)
    if not 0 < xi_fraction < 1:
        raise ValueError(f"xi fraction {xi_fraction} must lie strictly in (0, 1)")
    num, den = xi_fraction.numerator, xi_fraction.denominator
    if num % 2 == 0 and den % 2 == 1:
        return EXCLUDED
    return STABILIZING
