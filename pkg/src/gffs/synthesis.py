"""Frequency-shaping controller synthesis.

Inverters are tuned so that the network's coherent response (the parallel
combination of all bus dynamics) becomes ``1 / (a s + b)``: ``a`` fixes the
initial RoCoF and ``b`` the steady-state deviation after a power step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .busmodels import (
    FirstOrderG,
    GeneratorParams,
    GffsParams,
    GfviParams,
    controller_tf,
    generator_tf,
    load_tf,
)
from .errors import (
    CardinalityViolation,
    InfeasibleTarget,
    NoInverters,
    ValidationError,
    WeightError,
)
from .netmodel import BusKind, Case
from .ratfun import RatFun, ReducedTurbine, reduce_turbines_first_order, rf_add, rf_inverse

MISMATCH_GRID = np.logspace(-3, 3, 601)


@dataclass(frozen=True)
class SynthesisTarget:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")


@dataclass(frozen=True)
class FrequencySpec:
    """Worst-case aggregate step and the frequency limits it must respect (p.u.)."""

    delta_p: float
    max_ss_dev: float
    max_rocof: float

    def __post_init__(self):
        if not (self.delta_p != 0 and self.max_ss_dev > 0 and self.max_rocof > 0):
            raise ValueError("delta_p must be nonzero and the limits positive")


def target_gains(spec: FrequencySpec) -> SynthesisTarget:
    """Smallest ``(a, b)`` meeting the RoCoF and steady-state limits with equality."""
    return SynthesisTarget(abs(spec.delta_p) / spec.max_rocof, abs(spec.delta_p) / spec.max_ss_dev)


def predict_response(target: SynthesisTarget, u0_sum: float) -> tuple[float, float]:
    """``(omega_ss, rocof0)`` of the first-order coherent response to an aggregate step."""
    return u0_sum / target.b, u0_sum / target.a


def _generator_params(case: Case) -> list[GeneratorParams]:
    return [b.params for b in case.generators]


def allocate_equal(target: SynthesisTarget, case: Case) -> dict[int, tuple[float, float]]:
    """Split the inertia and damping left over by the generators evenly over inverters.

    Returns ``{inverter id: (m_inv, d_inv_base)}``.
    """
    inverters = case.inverters
    if not inverters:
        raise NoInverters("case has no inverter buses")
    gens = _generator_params(case)
    m_gen = sum(p.m for p in gens)
    d_gen = sum(p.d for p in gens)
    if target.a <= m_gen:
        raise InfeasibleTarget(f"a={target.a} does not exceed generator inertia {m_gen}")
    if target.b <= d_gen:
        raise InfeasibleTarget(f"b={target.b} does not exceed generator damping {d_gen}")
    k = len(inverters)
    m_inv = (target.a - m_gen) / k
    d_inv = (target.b - d_gen) / k
    return {b.id: (m_inv, d_inv) for b in inverters}


def g_match_individual(case: Case) -> dict[int, Optional[FirstOrderG]]:
    """Give each generator's turbine lag to its own inverter, in ascending id order."""
    gens = sorted(case.generators, key=lambda b: b.id)
    invs = sorted(case.inverters, key=lambda b: b.id)
    if len(invs) < len(gens):
        raise CardinalityViolation(f"{len(invs)} inverters cannot match {len(gens)} turbines")
    out: dict[int, Optional[FirstOrderG]] = {b.id: None for b in invs}
    for gen, inv in zip(gens, invs):
        out[inv.id] = FirstOrderG(gen.params.rt_inv, gen.params.tau)
    return out


def reduced_turbine(case: Case) -> ReducedTurbine:
    return reduce_turbines_first_order((p.rt_inv, p.tau) for p in _generator_params(case))


def g_distribute_reduced(
    case: Case, weights: Optional[Sequence[float]] = None
) -> dict[int, Optional[FirstOrderG]]:
    """Share the first-order aggregate turbine model over inverters by ``weights``.

    ``weights`` follows ascending inverter id order and defaults to uniform.
    """
    invs = sorted(case.inverters, key=lambda b: b.id)
    if not invs:
        raise NoInverters("case has no inverter buses")
    z = np.full(len(invs), 1.0 / len(invs)) if weights is None else np.asarray(weights, float)
    if z.shape != (len(invs),):
        raise WeightError(f"expected {len(invs)} weights, got {z.shape}")
    if np.any(z < 0) or abs(z.sum() - 1.0) > 1e-12:
        raise WeightError("weights must be non-negative and sum to one")
    red = reduced_turbine(case)
    return {
        inv.id: (FirstOrderG(zi * red.r_tilde_inv, red.tau_tilde) if zi > 0 else None)
        for inv, zi in zip(invs, z)
    }


def turbine_mismatch_norm(case: Case, g: dict[int, Optional[FirstOrderG]], grid=MISMATCH_GRID) -> float:
    """``max_w |sum g_i(jw) - sum r_i / (tau_i jw + 1)|`` over a log grid."""
    s = 1j * np.asarray(grid)
    inv_sum = sum((gi.rho / (gi.sigma * s + 1) for gi in g.values() if gi is not None), 0 * s)
    turb = sum((p.rt_inv / (p.tau * s + 1) for p in _generator_params(case)), 0 * s)
    return float(np.abs(inv_sum - turb).max())


def bus_tf(bus) -> RatFun:
    p = bus.params
    if bus.kind == BusKind.GENERATOR:
        return generator_tf(p)
    if bus.kind == BusKind.LOAD:
        return load_tf(p)
    if p is None:
        raise ValidationError(f"inverter bus {bus.id} has no controller assigned")
    return controller_tf(p)


def coherent_tf(case: Case) -> RatFun:
    """Parallel combination of every generator and inverter, with load damping added.

    Loads enter as constant terms ``d_i`` of the inverse sum (an extension of
    the generator/inverter-only definition).
    """
    total = RatFun.constant(sum(b.params.d for b in case.loads))
    for bus in case.buses:
        if bus.kind != BusKind.LOAD:
            total = rf_add(total, rf_inverse(bus_tf(bus)))
    return rf_inverse(total)


def coherent_gains(case: Case) -> tuple[float, float]:
    """Effective ``(a, b)``: high-frequency inertia and DC damping of the coherent response."""
    hc = coherent_tf(case)
    b = hc.den.coeffs[0] / hc.num.coeffs[0]
    a = hc.den.lead / hc.num.lead
    return float(a), float(b)


@dataclass
class SynthesisReport:
    a: float
    b: float
    b_effective: float
    strategy: str
    inverters: list = field(default_factory=list)
    mismatch_norm: float = 0.0
    delta_p: Optional[float] = None
    load_damping: float = 0.0
    turbine_raise: float = 0.0

    def predicted(self, u0_sum: float) -> tuple[float, float]:
        return u0_sum / self.b_effective, u0_sum / self.a

    def to_dict(self) -> dict:
        out = {
            "a": self.a,
            "b": self.b,
            "b_effective": self.b_effective,
            "coherent_model": "extended h_c (load damping folded in)",
            "inverters": self.inverters,
            "load_damping": self.load_damping,
            "mismatch_norm": self.mismatch_norm,
            "strategy": self.strategy,
            "turbine_raise": self.turbine_raise,
        }
        if self.delta_p is not None:
            ss, rocof = self.predicted(self.delta_p)
            out.update(delta_p=self.delta_p, predicted_omega_ss=ss, predicted_rocof=rocof)
        return out


def synthesize(
    case: Case,
    target: SynthesisTarget,
    strategy: str = "match",
    weights: Optional[Sequence[float]] = None,
    delta_p: Optional[float] = None,
) -> tuple[Case, SynthesisReport]:
    """Assign frequency-shaping controllers to every inverter of ``case``.

    ``strategy="match"`` copies individual turbine lags and leaves the damping
    split untouched, so the coherent response is exactly ``1/(a s + b)`` plus
    load damping. ``strategy="distribute"`` shares the reduced aggregate lag and
    raises each inverter's damping by its share ``rho_i``, which adds the total
    turbine gain to the effective ``b``.
    """
    alloc = allocate_equal(target, case)
    if strategy == "match":
        g = g_match_individual(case)
    elif strategy == "distribute":
        g = g_distribute_reduced(case, weights)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    raise_d = strategy == "distribute"
    controllers = {}
    rows = []
    for inv_id in sorted(alloc):
        m_inv, d_base = alloc[inv_id]
        gi = g[inv_id]
        d_inv = d_base + (gi.rho if (raise_d and gi is not None) else 0.0)
        controllers[inv_id] = GffsParams(m_inv, d_inv, gi)
        rows.append(
            {
                "id": inv_id,
                "m_inv": m_inv,
                "d_inv": d_inv,
                "d_inv_base": d_base,
                "rho": 0.0 if gi is None else gi.rho,
                "sigma": 0.0 if gi is None else gi.sigma,
            }
        )
    load_d = sum(b.params.d for b in case.loads)
    turbine_raise = sum(r["d_inv"] - r["d_inv_base"] for r in rows)
    report = SynthesisReport(
        a=target.a,
        b=target.b,
        b_effective=target.b + turbine_raise + load_d,
        strategy=strategy,
        inverters=rows,
        mismatch_norm=turbine_mismatch_norm(case, g),
        delta_p=delta_p,
        load_damping=load_d,
        turbine_raise=turbine_raise,
    )
    return case.with_controllers(controllers), report


def benchmark_controllers(case: Case, delta_p: float = -0.3) -> tuple[Case, Case, SynthesisReport]:
    """The matched GF-VI / GF-FS pair used for side-by-side comparison.

    GF-VI inverters get the mean generator inertia and damping. GF-FS
    inverters get the same inertia, the mean damping plus an equal share of
    the reduced turbine gain, and that share as their filter gain. Both legs
    then have identical predicted RoCoF and steady-state deviation.
    """
    gens = _generator_params(case)
    invs = case.inverters
    if not invs:
        raise NoInverters("case has no inverter buses")
    if not gens:
        raise ValidationError("benchmark tuning needs at least one generator")
    m_bar = sum(p.m for p in gens) / len(gens)
    d_bar = sum(p.d for p in gens) / len(gens)
    gfvi = case.with_controllers({b.id: GfviParams(m_bar, d_bar) for b in invs})
    target = SynthesisTarget(
        sum(p.m for p in gens) + len(invs) * m_bar,
        sum(p.d for p in gens) + len(invs) * d_bar,
    )
    gffs, report = synthesize(case, target, "distribute", delta_p=delta_p)
    report.strategy = "distribute (benchmark tuning)"
    return gfvi, gffs, report
