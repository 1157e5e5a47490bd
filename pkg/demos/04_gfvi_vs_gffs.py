"""Virtual inertia versus frequency shaping after a -0.3 p.u. step.

Both inverter tunings predict the same RoCoF and steady state; only the
frequency-shaping one removes the nadir.
"""

import numpy as np

from gffs.netmodel import synthetic_case
from gffs.sim import Scenario, coi_frequency, compute_metrics, simulate, steady_state_frequency
from gffs.synthesis import benchmark_controllers

case = synthetic_case()
gfvi, gffs, report = benchmark_controllers(case, delta_p=-0.3)
print(f"a = {report.a:.2f}, b_effective = {report.b_effective:.2f}")

u0 = np.zeros(case.n)
u0[case.index_of(13)] = -0.3
sc = Scenario(u0, t_step=1.0, t_end=30.0, dt=1e-3, deadband_hz=0.036, nonlinear=True)

for name, c in (("GF-VI", gfvi), ("GF-FS", gffs)):
    traj = simulate(c, sc)
    m = compute_metrics(traj, c)
    w = coi_frequency(traj, c) * c.nominal_hz
    hz = c.nominal_hz
    print(f"{name}: nadir {m.nadir * hz:.4f} Hz, steady {m.ss_dev * hz:.4f} Hz, "
          f"RoCoF {m.rocof_peak * hz:.4f} Hz/s, overshoot ratio {m.overshoot_ratio:.3g}")
    # coarse text trace of the CoI frequency
    for t in (1.0, 2.0, 4.0, 8.0, 16.0, 30.0):
        k = int(round(t / sc.dt))
        print(f"    t={t:5.1f}s  {w[k]: .4f} Hz")

hz = case.nominal_hz
pred = steady_state_frequency(gffs, -0.3, sc.deadband_hz / hz)
print(f"predicted steady state with deadband: {pred * hz:.4f} Hz; RoCoF {0.3 / report.a * hz:.4f} Hz/s")
