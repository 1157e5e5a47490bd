"""Real rational transfer functions in the Laplace variable ``s``.

Coefficients are stored in ascending order, ``coeffs[k]`` multiplies ``s**k``.
Every :class:`RatFun` is kept with a monic denominator. Common factors are
only removed by an explicit :func:`simplify` call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    EmptyTurbineSet,
    ImproperTransferFunction,
    PoleEvaluation,
    ZeroNumerator,
)

# Coefficients below this fraction of the largest one are trimmed as zero.
_TRIM_RTOL = 1e-14
ROUTH_EPS = 1e-12
DEFAULT_TOL = 1e-9


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    if not c:
        return ()
    scale = max(abs(x) for x in c)
    if scale == 0.0:
        return ()
    while c and abs(c[-1]) <= _TRIM_RTOL * scale:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with ascending real coefficients; ``()`` is the zero polynomial."""

    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @property
    def degree(self) -> int:
        # -1 for the zero polynomial
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    def array(self) -> np.ndarray:
        return np.array(self.coeffs if self.coeffs else (0.0,), dtype=float)

    def __call__(self, s):
        return P.polyval(s, self.array())

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polyadd(self.array(), other.array()))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polysub(self.array(), other.array()))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(P.polymul(self.array(), other.array()))
        return Polynomial(self.array() * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.array())

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.array([], dtype=complex)
        return P.polyroots(self.array())


@dataclass(frozen=True)
class RatFun:
    """Transfer function ``num(s) / den(s)`` with a monic denominator."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")
        if self.num.is_zero:
            object.__setattr__(self, "den", Polynomial((1.0,)))
            return
        lead = self.den.lead
        if lead != 1.0:
            object.__setattr__(self, "num", self.num * (1.0 / lead))
            object.__setattr__(self, "den", self.den * (1.0 / lead))

    @classmethod
    def from_coeffs(cls, num: Sequence[float], den: Sequence[float]) -> "RatFun":
        return cls(Polynomial(tuple(num)), Polynomial(tuple(den)))

    @classmethod
    def constant(cls, k: float) -> "RatFun":
        return cls(Polynomial((k,)), Polynomial((1.0,)))

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    @property
    def is_proper(self) -> bool:
        return self.num.is_zero or self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.is_zero or self.num.degree < self.den.degree

    def poles(self) -> np.ndarray:
        return self.den.roots()

    def zeros(self) -> np.ndarray:
        return self.num.roots()

    def __call__(self, s):
        return rf_eval(self, s)

    def __add__(self, other):
        return rf_add(self, _as_ratfun(other))

    __radd__ = __add__

    def __neg__(self):
        return RatFun(-self.num, self.den)

    def __sub__(self, other):
        return rf_add(self, -_as_ratfun(other))

    def __rsub__(self, other):
        return rf_add(_as_ratfun(other), -self)

    def __mul__(self, other):
        other = _as_ratfun(other)
        return RatFun(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * rf_inverse(_as_ratfun(other))

    def __rtruediv__(self, other):
        return _as_ratfun(other) * rf_inverse(self)

    def __repr__(self):
        return f"RatFun(num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"


def _as_ratfun(x) -> RatFun:
    if isinstance(x, RatFun):
        return x
    return RatFun.constant(float(x))


S = RatFun.from_coeffs((0.0, 1.0), (1.0,))


def rf_add(f: RatFun, g: RatFun) -> RatFun:
    """Sum by cross-multiplication; the denominator is ``den(f) * den(g)``."""
    return RatFun(f.num * g.den + g.num * f.den, f.den * g.den)


def rf_inverse(f: RatFun) -> RatFun:
    if f.num.is_zero:
        raise ZeroNumerator("cannot invert a transfer function with zero numerator")
    return RatFun(f.den, f.num)


def rf_eval(f: RatFun, s):
    den = f.den(s)
    scale = P.polyval(np.abs(s), np.abs(f.den.array()))
    if np.any(np.abs(den) <= 1e-14 * scale):
        raise PoleEvaluation(f"s={s} is (numerically) a pole")
    return f.num(s) / den


def routh_first_column(coeffs_desc: Sequence[float]) -> tuple[np.ndarray, bool]:
    """First column of the Routh array for a polynomial given highest power first.

    Returns ``(column, marginal)``. A vanishing pivot is replaced by
    ``ROUTH_EPS`` and flags the polynomial as marginal; so does an all-zero row.
    """
    a = np.asarray(coeffs_desc, dtype=float)
    n = len(a) - 1
    scale = np.abs(a).max()
    tiny = ROUTH_EPS * scale
    width = n // 2 + 1
    r0 = np.zeros(width)
    r1 = np.zeros(width)
    r0[: len(a[0::2])] = a[0::2]
    r1[: len(a[1::2])] = a[1::2]
    col = [r0[0]]
    marginal = False
    rows = [r0, r1]
    for _ in range(n):
        prev, cur = rows[-2], rows[-1]
        if np.all(np.abs(cur) <= tiny):
            return np.array(col + [0.0] * (n + 1 - len(col))), True
        if abs(cur[0]) <= tiny:
            cur = cur.copy()
            cur[0] = ROUTH_EPS
            marginal = True
        col.append(cur[0])
        nxt = np.zeros(width)
        nxt[:-1] = (cur[0] * prev[1:] - prev[0] * cur[1:]) / cur[0]
        rows.append(nxt)
    return np.array(col), marginal


def is_hurwitz(poly: Polynomial) -> bool:
    """True iff every root has strictly negative real part (Routh–Hurwitz)."""
    if poly.is_zero:
        return False
    if poly.degree == 0:
        return True
    desc = np.array(poly.coeffs[::-1])
    if desc[0] < 0:
        desc = -desc
    col, marginal = routh_first_column(desc)
    if marginal:
        return False
    return bool(np.all(col > 0))


def rf_is_stable(f: RatFun) -> bool:
    if not f.is_proper:
        raise ImproperTransferFunction(
            f"numerator degree {f.num.degree} exceeds denominator degree {f.den.degree}"
        )
    return is_hurwitz(f.den)


def rf_approx_equal(f: RatFun, g: RatFun, tol: float = DEFAULT_TOL) -> bool:
    """Compare ``num(f) den(g)`` with ``num(g) den(f)`` coefficient-wise."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lhs = (f.num * g.den).array()
    rhs = (g.num * f.den).array()
    k = max(len(lhs), len(rhs))
    lhs = np.pad(lhs, (0, k - len(lhs)))
    rhs = np.pad(rhs, (0, k - len(rhs)))
    scale = max(np.abs(lhs).max(), np.abs(rhs).max())
    if scale == 0.0:
        return True
    return bool(np.abs(lhs - rhs).max() <= tol * scale)


def relative_coefficient_error(f: RatFun, g: RatFun) -> float:
    """The quantity bounded by :func:`rf_approx_equal`."""
    lhs = (f.num * g.den).array()
    rhs = (g.num * f.den).array()
    k = max(len(lhs), len(rhs))
    lhs = np.pad(lhs, (0, k - len(lhs)))
    rhs = np.pad(rhs, (0, k - len(rhs)))
    scale = max(np.abs(lhs).max(), np.abs(rhs).max())
    return 0.0 if scale == 0.0 else float(np.abs(lhs - rhs).max() / scale)


def simplify(f: RatFun, root_tol: float = 1e-6) -> RatFun:
    """Cancel numerator/denominator roots that coincide within ``root_tol``.

    Matched roots are divided out of both polynomials; the division remainders
    are discarded.
    """
    if f.num.is_zero or f.num.degree < 1 or f.den.degree < 1:
        return f
    zs = list(f.zeros())
    ps = list(f.poles())
    common = []
    for z in zs:
        best, best_d = None, None
        for k, p in enumerate(ps):
            d = abs(z - p)
            if d <= root_tol * max(1.0, abs(p)) and (best_d is None or d < best_d):
                best, best_d = k, d
        if best is not None:
            common.append(0.5 * (z + ps.pop(best)))
    if not common:
        return f
    factor = np.real(P.polyfromroots(common))
    num, _ = P.polydiv(f.num.array(), factor)
    den, _ = P.polydiv(f.den.array(), factor)
    return RatFun(Polynomial(num), Polynomial(den))


@dataclass(frozen=True)
class ReducedTurbine:
    """First-order aggregate ``r_tilde_inv / (tau_tilde s + 1)``."""

    r_tilde_inv: float
    tau_tilde: float

    def __post_init__(self):
        if not (self.r_tilde_inv > 0 and self.tau_tilde > 0):
            raise ValueError("reduced turbine gain and time constant must be positive")

    def tf(self) -> RatFun:
        return RatFun.from_coeffs((self.r_tilde_inv,), (1.0, self.tau_tilde))


def reduce_turbines_first_order(turbines: Iterable[tuple[float, float]]) -> ReducedTurbine:
    """Collapse ``sum r_i / (tau_i s + 1)`` to one lag.

    The DC gain is matched exactly and the time constant is the gain-weighted
    mean of the individual ones.
    """
    turbines = list(turbines)
    if not turbines:
        raise EmptyTurbineSet("no turbines to reduce")
    gains = np.array([t[0] for t in turbines], dtype=float)
    taus = np.array([t[1] for t in turbines], dtype=float)
    if np.any(gains <= 0) or np.any(taus <= 0):
        raise ValueError("turbine gains and time constants must be positive")
    total = float(gains.sum())
    return ReducedTurbine(total, float((gains * taus).sum() / total))
