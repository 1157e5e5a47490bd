"""Decentralised internal-stability certificate.

A bus passes when ``q = gamma_i h_i`` is stable, has ``q(0) != 0`` and
``(s / (s + tau_alpha)) (1 + q / s) - epsilon`` is positive real. For the
bus catalogue here that function is a ratio of two cubics ``xi(s) / eta(s)``
with closed-form coefficients, so positive realness is decided algebraically.
All buses must pass with one shared ``(tau_alpha, epsilon)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateCoefficients, UnsupportedOrder
from .netmodel import Case, coupling_bounds
from .ratfun import S, RatFun, rf_is_stable
from .synthesis import bus_tf

TAU_ALPHA_GRID = tuple(np.logspace(-2, 5, 22))
EPSILON_GRID = (1e-6, 1e-4, 1e-3, 1e-2)
ORACLE_GRID = np.logspace(-4, 4, 400)
ORACLE_TOL = 1e-9
# relative slack for the real-part polynomial; float noise only
_REAL_PART_RTOL = 1e-12


@dataclass(frozen=True)
class PrCoeffs:
    """Ascending coefficients of the cubic numerator ``xi`` and denominator ``eta``."""

    xi: tuple[float, float, float, float]
    eta: tuple[float, float, float, float]

    def tf(self) -> RatFun:
        return RatFun.from_coeffs(self.xi, self.eta)


def _second_order_shape(h: RatFun) -> tuple[float, float, float, float, float]:
    """``(c1, c0, q2, q1, q0)`` for ``h = (c1 s + c0) / (q2 s^2 + q1 s + q0)``."""
    if h.den.degree > 2 or h.num.degree > 1 or not h.is_proper:
        raise UnsupportedOrder(
            f"expected (c1 s + c0)/(q2 s^2 + q1 s + q0), got degrees {h.num.degree}/{h.den.degree}"
        )
    c = list(h.num.coeffs) + [0.0] * (2 - len(h.num.coeffs))
    q = list(h.den.coeffs) + [0.0] * (3 - len(h.den.coeffs))
    return c[1], c[0], q[2], q[1], q[0]


def build_pr_coeffs(h: RatFun, gamma: float, tau_alpha: float, epsilon: float) -> PrCoeffs:
    c1, c0, q2, q1, q0 = _second_order_shape(h)
    if q0 == 0:
        raise UnsupportedOrder("h has a pole at the origin")
    ta, e = tau_alpha, epsilon
    xi = (
        gamma * c0 - q0 * ta * e,
        q0 * (1 - e) + gamma * c1 - q1 * ta * e,
        q1 * (1 - e) - q2 * ta * e,
        q2 * (1 - e),
    )
    eta = (q0 * ta, q0 + q1 * ta, q1 + q2 * ta, q2)
    return PrCoeffs(tuple(map(float, xi)), tuple(map(float, eta)))


def coefficients_nonnegative(c: PrCoeffs) -> bool:
    return all(x >= 0 for x in c.xi) and all(x >= 0 for x in c.eta) and any(x > 0 for x in c.eta)


def product_inequality(c: PrCoeffs) -> bool:
    """``(xi1+eta1)(xi2+eta2) >= (xi0+eta0)(xi3+eta3)``: Hurwitz test on ``xi + eta``."""
    p = [x + y for x, y in zip(c.xi, c.eta)]
    return p[1] * p[2] >= p[0] * p[3]


def real_part_polynomial(c: PrCoeffs) -> np.ndarray:
    """Ascending coefficients in ``x = w^2`` of ``Re[xi(jw) eta(-jw)]``."""
    x0, x1, x2, x3 = c.xi
    e0, e1, e2, e3 = c.eta
    return np.array(
        [
            x0 * e0,
            x1 * e1 - x0 * e2 - x2 * e0,
            x2 * e2 - x1 * e3 - x3 * e1,
            x3 * e3,
        ]
    )


def _nonnegative_on_halfline(p: np.ndarray) -> bool:
    """Whether the cubic ``p`` (ascending) is ``>= 0`` for every ``x >= 0``."""
    poly = np.polynomial.polynomial
    abs_p = np.abs(p)
    if abs_p.max() == 0:
        return True

    def ok(x):
        return poly.polyval(x, p) >= -_REAL_PART_RTOL * poly.polyval(x, abs_p)

    if not ok(0.0):
        return False
    top = np.trim_zeros(np.where(abs_p > _REAL_PART_RTOL * abs_p.max(), p, 0.0), "b")
    if top[-1] < 0:
        return False
    deriv = np.trim_zeros(poly.polyder(top), "b")
    if deriv.size > 1:
        for r in poly.polyroots(deriv):
            if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > 0 and not ok(r.real):
                return False
    return True


def pr_cubic_test(c: PrCoeffs) -> bool:
    """Algebraic positive-realness test for a nondegenerate cubic ratio.

    Needs both the Hurwitz product inequality on ``xi + eta`` and a
    nonnegative real part along the imaginary axis. The inequality alone is
    necessary but not sufficient.
    """
    if not coefficients_nonnegative(c):
        raise DegenerateCoefficients(f"coefficients must be >= 0 with eta != 0: {c}")
    return product_inequality(c) and _nonnegative_on_halfline(real_part_polynomial(c))


def pr_numeric_oracle(f: RatFun, freq_grid=ORACLE_GRID, tol: float = ORACLE_TOL) -> bool:
    """Frequency-sweep positive-realness check, independent of the cubic formulas."""
    if not f.is_proper:
        return False
    poles = f.poles()
    if np.any(poles.real > 1e-9):
        return False
    axis = poles[np.abs(poles.real) <= 1e-9]
    for k, p in enumerate(axis):
        if np.any(np.abs(np.delete(axis, k) - p) <= 1e-6):
            return False
        delta = 1e-6
        residue = delta * complex(f.num(p + delta) / f.den(p + delta))
        if residue.real < -tol or abs(residue.imag) > 1e-3 * max(1.0, abs(residue)):
            return False
    w = np.asarray(freq_grid, dtype=float)
    w = w[np.min(np.abs(1j * w[:, None] - axis[None, :]), axis=1) > 1e-6] if axis.size else w
    vals = f.num(1j * w) / f.den(1j * w)
    if np.any(vals.real < -tol):
        return False
    if f.num.degree == f.den.degree and f.num.lead / f.den.lead < -tol:
        return False
    return True


def assembled_pr_function(h: RatFun, gamma: float, tau_alpha: float, epsilon: float) -> RatFun:
    """``(s/(s+tau_alpha)) (1 + gamma h / s) - epsilon`` built by plain rational arithmetic."""
    return (S / (S + tau_alpha)) * (1 + gamma * h / S) - epsilon


@dataclass(frozen=True)
class BusVerdict:
    bus_id: Optional[int]
    certified: bool
    reason: Optional[str] = None  # "hinf", "dc", "pr-screen" or "pr-test"

    def to_dict(self) -> dict:
        out = {"id": self.bus_id, "verdict": "certified" if self.certified else "failed"}
        if self.reason:
            out["reason"] = self.reason
        return out


def certify_bus(
    h: RatFun, gamma: float, tau_alpha: float, epsilon: float, bus_id: Optional[int] = None
) -> BusVerdict:
    if not (gamma > 0 and tau_alpha > 0 and 0 < epsilon < 1):
        raise ValueError("need gamma > 0, tau_alpha > 0 and 0 < epsilon < 1")
    q = gamma * h
    if not rf_is_stable(q):
        return BusVerdict(bus_id, False, "hinf")
    if abs(q(0.0)) <= 1e-12:
        return BusVerdict(bus_id, False, "dc")
    coeffs = build_pr_coeffs(h, gamma, tau_alpha, epsilon)
    if not coefficients_nonnegative(coeffs):
        return BusVerdict(bus_id, False, "pr-screen")
    if not pr_cubic_test(coeffs):
        return BusVerdict(bus_id, False, "pr-test")
    return BusVerdict(bus_id, True)


@dataclass
class Certificate:
    tau_alpha: Optional[float]
    epsilon: Optional[float]
    per_bus: list[BusVerdict] = field(default_factory=list)
    overall: bool = False
    attempts: int = 0
    v_max_factor: float = 1.1

    def to_dict(self) -> dict:
        return {
            "attempts": self.attempts,
            "epsilon": self.epsilon,
            "overall": self.overall,
            "per_bus": [v.to_dict() for v in self.per_bus],
            "tau_alpha": self.tau_alpha,
            "v_max_factor": self.v_max_factor,
        }


def certify_system(
    case: Case,
    tau_alpha_grid: Sequence[float] = TAU_ALPHA_GRID,
    epsilon_grid: Sequence[float] = EPSILON_GRID,
    v_max_factor: float = 1.1,
) -> Certificate:
    """Search the ``(tau_alpha, epsilon)`` grid for one pair certifying every bus.

    ``epsilon`` is tried smallest first for each ``tau_alpha``. Without a full
    pass the pair certifying the most buses is reported.
    """
    gammas = coupling_bounds(case, v_max_factor)
    tfs = [bus_tf(b) for b in case.buses]
    best: Optional[Certificate] = None
    attempts = 0
    for ta in tau_alpha_grid:
        for eps in sorted(epsilon_grid):
            attempts += 1
            verdicts = [
                certify_bus(h, g, float(ta), float(eps), bus.id)
                for bus, h, g in zip(case.buses, tfs, gammas)
            ]
            passed = sum(v.certified for v in verdicts)
            if best is None or passed > sum(v.certified for v in best.per_bus):
                best = Certificate(float(ta), float(eps), verdicts, False, 0, v_max_factor)
            if passed == len(verdicts):
                best.overall = True
                best.attempts = attempts
                return best
    if best is None:
        return Certificate(None, None, [], False, 0, v_max_factor)
    best.attempts = attempts
    return best
