"""Closed-loop time-domain simulation of bus dynamics coupled through the network.

Buses see ``u_P = p_in - p_e`` and return their frequency deviation ``omega``.
Network flows ``p_e`` come from angle deviations ``theta`` with
``d theta / dt = omega``, either linearised (``L_B theta``) or as full sine flows.
All quantities are per unit; frequency is per unit of ``case.nominal_hz``.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .busmodels import (
    GeneratorParams,
    GffsParams,
    GfviParams,
    LoadParams,
    inertia_of,
    static_gain_inverse,
)
from .errors import ImproperTransferFunction
from .netmodel import BusKind, Case, build_laplacian
from .ratfun import RatFun
from .synthesis import bus_tf

LOSS_OF_SYNC = "loss_of_synchronism"


@dataclass
class StateSpace:
    """``x' = A x + B u``, ``y = C x + D u`` with optional auxiliary outputs.

    ``aux`` maps a name to ``(C_aux, D_aux)``; the closed loop from
    :func:`assemble_linear` carries ``"theta"`` and ``"u_p"``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    aux: dict = field(default_factory=dict)
    bus_ids: tuple = ()
    inverter_rows: tuple = ()

    def __post_init__(self):
        nx = self.A.shape[0]
        if self.A.shape != (nx, nx) or self.B.shape[0] != nx or self.C.shape[1] != nx:
            raise ValueError("inconsistent state-space dimensions")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise ValueError("D does not match C and B")


@dataclass(frozen=True)
class Scenario:
    u0: tuple
    t_step: float = 1.0
    t_end: float = 30.0
    dt: float = 1e-3
    deadband_hz: float = 0.0
    nonlinear: bool = False

    def __post_init__(self):
        object.__setattr__(self, "u0", tuple(float(x) for x in self.u0))
        if self.t_step < 0 or self.t_end <= self.t_step or self.dt <= 0:
            raise ValueError("need 0 <= t_step < t_end and dt > 0")
        if self.dt > (self.t_end - self.t_step) / 100:
            raise ValueError("dt must resolve at least 100 steps after the disturbance")
        if self.deadband_hz < 0:
            raise ValueError("deadband must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def step_index(self) -> int:
        return int(round(self.t_step / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    omega: np.ndarray  # (n, T)
    theta: np.ndarray  # (n, T)
    inverter_power: np.ndarray  # (|I|, T), equal to -u_P at inverter buses
    bus_ids: tuple = ()
    inverter_ids: tuple = ()
    flags: list = field(default_factory=list)
    turbine_power: Optional[np.ndarray] = None  # (|G|, T), nonlinear model only


@dataclass
class Metrics:
    nadir: float
    rocof_peak: float
    rocof_window: float
    ss_dev: float
    overshoot_ratio: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "flags": list(self.flags),
            "nadir": self.nadir,
            "overshoot_ratio": self.overshoot_ratio,
            "rocof_500ms": self.rocof_window,
            "rocof_peak": self.rocof_peak,
            "ss_dev": self.ss_dev,
        }


# --- linear model --------------------------------------------------------------


def controllable_canonical(h: RatFun) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """SISO realisation ``(A, B, C, D)`` of a proper transfer function."""
    if not h.is_proper:
        raise ImproperTransferFunction(f"{h} is improper")
    den = np.array(h.den.coeffs)  # monic, ascending
    k = len(den) - 1
    num = np.zeros(k + 1)
    num[: len(h.num.coeffs)] = h.num.coeffs
    d = num[k] if k >= 0 else 0.0
    A = np.zeros((k, k))
    if k:
        A[:-1, 1:] = np.eye(k - 1)
        A[-1, :] = -den[:k]
    B = np.zeros((k, 1))
    if k:
        B[-1, 0] = 1.0
    C = (num[:k] - d * den[:k]).reshape(1, k)
    return A, B, C, float(d)


def assemble_linear(case: Case, ground: bool = True, reference: int = 0) -> StateSpace:
    """Closed loop from bus power injections ``p_in`` to bus frequencies.

    Each bus transfer function is realised in controllable canonical form.
    With ``ground=True`` angles are kept relative to bus index ``reference``,
    which removes the uniform-shift zero mode; otherwise all ``n`` absolute
    angles are states and that zero mode is present.
    """
    n = case.n
    L = build_laplacian(case)
    blocks = [controllable_canonical(bus_tf(b)) for b in case.buses]
    nxb = sum(blk[0].shape[0] for blk in blocks)
    Ab = np.zeros((nxb, nxb))
    Bb = np.zeros((nxb, n))
    Cb = np.zeros((n, nxb))
    Db = np.zeros((n, n))
    off = 0
    for i, (A, B, C, D) in enumerate(blocks):
        k = A.shape[0]
        Ab[off : off + k, off : off + k] = A
        Bb[off : off + k, i] = B[:, 0]
        Cb[i, off : off + k] = C[0]
        Db[i, i] = D
        off += k
    if ground and n > 1:
        keep = [j for j in range(n) if j != reference]
        T = np.zeros((n, n - 1))
        T[keep, range(n - 1)] = 1.0
        Sel = T.T.copy()
        Sel[:, reference] = -1.0
    elif ground:
        T = np.zeros((n, 0))
        Sel = np.zeros((0, n))
    else:
        T = np.eye(n)
        Sel = np.eye(n)
    LT = L @ T
    A = np.block([[Ab, -Bb @ LT], [Sel @ Cb, -Sel @ Db @ LT]])
    B = np.vstack([Bb, Sel @ Db])
    C = np.hstack([Cb, -Db @ LT])
    nth = T.shape[1]
    aux = {
        "theta": (np.hstack([np.zeros((n, nxb)), T]), np.zeros((n, n))),
        "u_p": (np.hstack([np.zeros((n, nxb)), -LT]), np.eye(n)),
    }
    inv_rows = tuple(k for k, b in enumerate(case.buses) if b.kind == BusKind.INVERTER)
    assert A.shape == (nxb + nth, nxb + nth)
    return StateSpace(A, B, C, Db, aux, case.bus_ids, inv_rows)


def closed_loop_eigenvalues(ss: StateSpace, drop_zero_mode: bool = False) -> np.ndarray:
    ev = np.linalg.eigvals(ss.A)
    if drop_zero_mode and ev.size:
        ev = np.delete(ev, np.argmin(np.abs(ev)))
    return ev


def rk4_transition(A: np.ndarray, B: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One classical RK4 step for ``x' = A x + B u`` with ``u`` held over the step."""
    n = A.shape[0]
    hA = h * A
    I = np.eye(n)
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    phi = I + hA + hA2 / 2 + hA3 / 6 + hA3 @ hA / 24
    gam = h * (I + hA / 2 + hA2 / 6 + hA3 / 24) @ B
    return phi, gam


def integrate_linear(ss: StateSpace, scenario: Scenario) -> Trajectory:
    """Fixed-step RK4 response to a step of ``scenario.u0`` applied at ``t_step``."""
    u0 = np.asarray(scenario.u0)
    nsteps = scenario.n_steps
    k_step = scenario.step_index
    phi, gam = rk4_transition(ss.A, ss.B, scenario.dt)
    drive = gam @ u0
    X = np.zeros((nsteps + 1, ss.A.shape[0]))
    x = np.zeros(ss.A.shape[0])
    for k in range(nsteps):
        x = phi @ x + drive if k >= k_step else phi @ x
        X[k + 1] = x
    U = np.zeros((nsteps + 1, len(u0)))
    U[k_step:] = u0
    times = np.arange(nsteps + 1) * scenario.dt
    omega = (X @ ss.C.T + U @ ss.D.T).T
    n = ss.C.shape[0]
    theta = np.zeros((n, nsteps + 1))
    p_inv = np.zeros((len(ss.inverter_rows), nsteps + 1))
    if "theta" in ss.aux:
        Ct, Dt = ss.aux["theta"]
        theta = (X @ Ct.T + U @ Dt.T).T
    if "u_p" in ss.aux:
        Cu, Du = ss.aux["u_p"]
        up = (X @ Cu.T + U @ Du.T).T
        p_inv = -up[list(ss.inverter_rows)]
    inv_ids = tuple(ss.bus_ids[k] for k in ss.inverter_rows) if ss.bus_ids else ()
    return Trajectory(times, omega, theta, p_inv, tuple(ss.bus_ids), inv_ids)


# --- nonlinear model -----------------------------------------------------------


def deadband(x, band: float):
    """Offset deadband: zero inside ``[-band, band]``, shifted linear outside."""
    return np.sign(x) * np.maximum(np.abs(x) - band, 0.0)


class _NonlinearModel:
    """Physical-state model: swing + turbine, inverter filters, sine power flows."""

    def __init__(self, case: Case, scenario: Scenario):
        n = case.n
        self.n = n
        kinds = [b.kind for b in case.buses]
        self.dyn = np.array([k != BusKind.LOAD for k in kinds])
        self.load = ~self.dyn
        self.gen_idx = np.array([i for i, b in enumerate(case.buses) if isinstance(b.params, GeneratorParams)], int)
        self.ffs_idx = np.array(
            [i for i, b in enumerate(case.buses) if isinstance(b.params, GffsParams) and b.params.g is not None], int
        )
        for b in case.buses:
            if b.kind == BusKind.INVERTER and b.params is None:
                raise ValueError(f"inverter bus {b.id} has no controller assigned")
        self.M = np.array([inertia_of(b.params) for b in case.buses])
        damp = []
        for b in case.buses:
            p = b.params
            damp.append(
                p.d if isinstance(p, (GeneratorParams, LoadParams)) else p.d_inv if isinstance(p, GffsParams) else p.d_v
            )
        self.Dmp = np.array(damp)
        gp = [case.buses[i].params for i in self.gen_idx]
        self.tau = np.array([p.tau for p in gp])
        self.rinv = np.array([p.rt_inv for p in gp])
        fp = [case.buses[i].params.g for i in self.ffs_idx]
        self.rho = np.array([g.rho for g in fp])
        self.sigma = np.array([g.sigma for g in fp])
        self.band = scenario.deadband_hz / case.nominal_hz
        self.dyn_idx = np.nonzero(self.dyn)[0]
        self.load_idx = np.nonzero(self.load)[0]
        # state: [omega (dyn), p_turbine (gen), x_filter (ffs), theta (all)]
        self.nd = len(self.dyn_idx)
        self.sl_w = slice(0, self.nd)
        self.sl_t = slice(self.nd, self.nd + len(self.gen_idx))
        self.sl_g = slice(self.sl_t.stop, self.sl_t.stop + len(self.ffs_idx))
        self.sl_th = slice(self.sl_g.stop, self.sl_g.stop + n)
        self.nx = self.sl_th.stop
        self.li = np.array([case.index_of(ln.i) for ln in case.lines], int)
        self.lj = np.array([case.index_of(ln.j) for ln in case.lines], int)
        V = np.array([b.voltage_mag for b in case.buses])
        self.w = V[self.li] * V[self.lj] * np.array([ln.b for ln in case.lines])
        th0 = np.array([b.angle0 for b in case.buses])
        self.d0 = th0[self.li] - th0[self.lj]
        self.sin0 = np.sin(self.d0)
        # positions of generators / filtered inverters within the dyn-omega block
        pos = {b: k for k, b in enumerate(self.dyn_idx)}
        self.gen_pos = np.array([pos[i] for i in self.gen_idx], int)
        self.ffs_pos = np.array([pos[i] for i in self.ffs_idx], int)

    def flows(self, theta):
        f = self.w * (np.sin(self.d0 + theta[self.li] - theta[self.lj]) - self.sin0)
        pe = np.zeros(self.n)
        np.add.at(pe, self.li, f)
        np.add.at(pe, self.lj, -f)
        return pe

    def outputs(self, x, p):
        """Full bus frequency vector and net power imbalance ``u_P``."""
        theta = x[self.sl_th]
        up = p - self.flows(theta)
        omega = np.zeros(self.n)
        omega[self.dyn_idx] = x[self.sl_w]
        omega[self.load_idx] = up[self.load_idx] / self.Dmp[self.load_idx]
        return omega, up

    def rhs(self, x, p):
        omega, up = self.outputs(x, p)
        dx = np.empty_like(x)
        w_dyn = x[self.sl_w]
        power = up[self.dyn_idx] - self.Dmp[self.dyn_idx] * w_dyn
        pt = x[self.sl_t]
        power[self.gen_pos] -= pt
        xg = x[self.sl_g]
        power[self.ffs_pos] += xg
        dx[self.sl_w] = power / self.M[self.dyn_idx]
        w_gen = w_dyn[self.gen_pos]
        dx[self.sl_t] = (self.rinv * deadband(w_gen, self.band) - pt) / self.tau
        dx[self.sl_g] = (self.rho * w_dyn[self.ffs_pos] - xg) / self.sigma
        dx[self.sl_th] = omega
        return dx

    def angle_spread(self, theta):
        return np.abs(self.d0 + theta[self.li] - theta[self.lj])


def simulate_nonlinear(case: Case, scenario: Scenario) -> Trajectory:
    """RK4 simulation with sine power flows and turbine governor deadbands.

    Integration stops early, with the ``loss_of_synchronism`` flag, once an
    angle difference across a line exceeds pi/2.
    """
    model = _NonlinearModel(case, scenario)
    u0 = np.asarray(scenario.u0)
    zero = np.zeros_like(u0)
    h = scenario.dt
    nsteps, k_step = scenario.n_steps, scenario.step_index
    inv_rows = [k for k, b in enumerate(case.buses) if b.kind == BusKind.INVERTER]
    X = np.zeros((nsteps + 1, model.nx))
    x = np.zeros(model.nx)
    flags = []
    last = nsteps
    for k in range(nsteps):
        p = u0 if k >= k_step else zero
        k1 = model.rhs(x, p)
        k2 = model.rhs(x + 0.5 * h * k1, p)
        k3 = model.rhs(x + 0.5 * h * k2, p)
        k4 = model.rhs(x + h * k3, p)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        X[k + 1] = x
        if model.li.size and np.any(model.angle_spread(x[model.sl_th]) > math.pi / 2):
            flags.append(LOSS_OF_SYNC)
            last = k + 1
            break
    X = X[: last + 1]
    times = np.arange(last + 1) * h
    omega = np.zeros((case.n, last + 1))
    up = np.zeros((case.n, last + 1))
    for k in range(last + 1):
        p = u0 if k >= k_step else zero
        omega[:, k], up[:, k] = model.outputs(X[k], p)
    theta = X[:, model.sl_th].T.copy()
    inv_ids = tuple(case.buses[k].id for k in inv_rows)
    turbine = X[:, model.sl_t].T.copy()
    return Trajectory(times, omega, theta, -up[inv_rows], case.bus_ids, inv_ids, flags, turbine)


def simulate(case: Case, scenario: Scenario) -> Trajectory:
    if scenario.nonlinear:
        return simulate_nonlinear(case, scenario)
    return integrate_linear(assemble_linear(case), scenario)


# --- post-processing ---------------------------------------------------------------


def coi_weights(case: Case) -> np.ndarray:
    M = np.array([inertia_of(b.params) for b in case.buses])
    if M.sum() <= 0:
        raise ValueError("case has no inertia to weight by")
    return M / M.sum()


def coi_frequency(traj: Trajectory, case: Case) -> np.ndarray:
    """Inertia-weighted mean frequency; loads carry zero weight."""
    return coi_weights(case) @ traj.omega


def compute_metrics(
    traj: Trajectory, case: Case, time_constant: Optional[float] = None, window: float = 0.5
) -> Metrics:
    """Nadir, RoCoF, steady-state deviation and overshoot of the CoI frequency."""
    w = coi_frequency(traj, case)
    dt = traj.times[1] - traj.times[0]
    if time_constant is not None and traj.times[-1] < 10 * time_constant:
        warnings.warn("horizon shorter than ten coherent time constants", stacklevel=2)
    nadir = float(w[np.argmax(np.abs(w))])
    rocof_peak = float(np.max(np.abs(np.diff(w))) / dt) if w.size > 1 else 0.0
    lag = max(1, int(round(window / dt)))
    rocof_win = float(np.max(np.abs(w[lag:] - w[:-lag])) / (lag * dt)) if w.size > lag else rocof_peak
    tail = w[int(math.floor(0.9 * w.size)) :]
    ss = float(tail.mean())
    overshoot = 0.0 if ss == 0 else abs(nadir - ss) / abs(ss)
    return Metrics(nadir, rocof_peak, rocof_win, ss, overshoot, list(traj.flags))


def steady_state_frequency(case: Case, u0_sum: float, deadband_pu: float = 0.0) -> float:
    """Synchronous steady-state deviation after an aggregate step ``u0_sum``.

    Every bus settles at the same ``w`` with ``sum_i k_i(w) = u0_sum``. Turbines
    contribute ``r_i^{-1} deadband(w)`` and all other terms are linear in ``w``.
    """
    lin = 0.0
    turb = 0.0
    for b in case.buses:
        p = b.params
        if isinstance(p, GeneratorParams):
            lin += p.d
            turb += p.rt_inv
        else:
            lin += static_gain_inverse(p)

    def balance(w):
        return lin * w + turb * float(deadband(w, deadband_pu)) - u0_sum

    if u0_sum == 0:
        return 0.0
    hi = abs(u0_sum) / lin + deadband_pu + 1.0
    return float(brentq(balance, -hi, hi, xtol=1e-15, rtol=1e-14))


def trajectory_csv(traj: Trajectory, case: Case) -> str:
    """CSV text with CoI (p.u. and Hz), per-bus frequency and inverter power columns."""
    coi = coi_frequency(traj, case)
    cols = ["t", "omega_coi_pu", "omega_coi_hz"]
    cols += [f"omega_bus_{i}" for i in traj.bus_ids]
    cols += [f"p_inv_{i}" for i in traj.inverter_ids]
    data = np.column_stack([traj.times, coi, coi * case.nominal_hz, traj.omega.T, traj.inverter_power.T])
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    np.savetxt(buf, data, delimiter=",", fmt="%.10e")
    return buf.getvalue()
