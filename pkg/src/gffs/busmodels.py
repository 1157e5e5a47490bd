"""Per-bus frequency dynamics, mapping net power imbalance to frequency deviation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .ratfun import RatFun


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class GeneratorParams:
    """Swing dynamics with a first-order turbine governor.

    ``rt`` is the droop coefficient; ``rt = math.inf`` disables the turbine
    (allowed here, rejected when a :class:`~gffs.netmodel.Case` is built).
    """

    m: float
    d: float
    tau: float
    rt: float

    def __post_init__(self):
        for name in ("m", "d", "tau", "rt"):
            _positive(name, getattr(self, name))

    @property
    def rt_inv(self) -> float:
        return 0.0 if math.isinf(self.rt) else 1.0 / self.rt


@dataclass(frozen=True)
class FirstOrderG:
    """Inverter turbine-emulation filter ``rho / (sigma s + 1)``."""

    rho: float
    sigma: float

    def __post_init__(self):
        _positive("rho", self.rho)
        _positive("sigma", self.sigma)

    def tf(self) -> RatFun:
        return RatFun.from_coeffs((self.rho,), (1.0, self.sigma))


@dataclass(frozen=True)
class GffsParams:
    """Frequency-shaping inverter ``1 / (m_inv s + d_inv - g(s))``; ``g=None`` is the zero filter."""

    m_inv: float
    d_inv: float
    g: Optional[FirstOrderG] = None

    def __post_init__(self):
        _positive("m_inv", self.m_inv)
        _positive("d_inv", self.d_inv)

    @property
    def rho(self) -> float:
        return 0.0 if self.g is None else self.g.rho


@dataclass(frozen=True)
class GfviParams:
    m_v: float
    d_v: float

    def __post_init__(self):
        _positive("m_v", self.m_v)
        _positive("d_v", self.d_v)


@dataclass(frozen=True)
class LoadParams:
    d: float

    def __post_init__(self):
        _positive("d", self.d)


InverterController = Union[GffsParams, GfviParams]


def generator_tf(p: GeneratorParams) -> RatFun:
    # (tau s + 1) / (m tau s^2 + (m + d tau) s + d + 1/rt)
    return RatFun.from_coeffs(
        (1.0, p.tau),
        (p.d + p.rt_inv, p.m + p.d * p.tau, p.m * p.tau),
    )


def gffs_tf(p: GffsParams) -> RatFun:
    if p.g is None:
        return RatFun.from_coeffs((1.0,), (p.d_inv, p.m_inv))
    rho, sigma = p.g.rho, p.g.sigma
    return RatFun.from_coeffs(
        (1.0, sigma),
        (p.d_inv - rho, p.m_inv + p.d_inv * sigma, p.m_inv * sigma),
    )


def gfvi_tf(p: GfviParams) -> RatFun:
    return RatFun.from_coeffs((1.0,), (p.d_v, p.m_v))


def load_tf(p: LoadParams) -> RatFun:
    """Memoryless frequency-proportional load, ``omega = u / d``."""
    return RatFun.constant(1.0 / p.d)


def controller_tf(c: InverterController) -> RatFun:
    if isinstance(c, GffsParams):
        return gffs_tf(c)
    if isinstance(c, GfviParams):
        return gfvi_tf(c)
    raise TypeError(f"unknown inverter controller {c!r}")


def inertia_of(params) -> float:
    """Inertia weight used for centre-of-inertia averaging (0 for loads)."""
    if isinstance(params, GeneratorParams):
        return params.m
    if isinstance(params, GffsParams):
        return params.m_inv
    if isinstance(params, GfviParams):
        return params.m_v
    return 0.0


def static_gain_inverse(params) -> float:
    """``1 / h(0)``: steady-state power absorbed per unit frequency deviation."""
    if isinstance(params, GeneratorParams):
        return params.d + params.rt_inv
    if isinstance(params, GffsParams):
        return params.d_inv - params.rho
    if isinstance(params, GfviParams):
        return params.d_v
    if isinstance(params, LoadParams):
        return params.d
    raise TypeError(f"no static gain for {params!r}")
