"""Rational transfer functions and the bus models built on them."""

import numpy as np

from gffs.busmodels import FirstOrderG, GeneratorParams, GffsParams, generator_tf, gffs_tf
from gffs.ratfun import S, RatFun, is_hurwitz, reduce_turbines_first_order, rf_eval, rf_is_stable, simplify

# Coefficients are ascending in s and the denominator is kept monic.
f = 1 / (S + 1)
g = 1 / (S + 2)
print("1/(s+1) + 1/(s+2) =", f + g)
print("value at s = j:", rf_eval(f, 1j))

# Sums never cancel on their own; simplify() divides out matching roots.
print("f + f, raw:       ", f + f)
print("f + f, simplified:", simplify(f + f))

# Stability goes through Routh-Hurwitz on the denominator.
cubic = RatFun.from_coeffs([1, 1], [1, 3, 2, 1])
print("(s+1)/(s^3+2s^2+3s+1) stable:", rf_is_stable(cubic), "| roots", np.round(cubic.poles(), 3))
print("s^2 + 1 Hurwitz:", is_hurwitz((S * S + 1).num))

# A generator: swing equation closed by a first-order turbine governor.
gen = generator_tf(GeneratorParams(m=2.0, d=0.5, tau=4.0, rt=0.05))
print("generator h(s) =", gen, "| DC gain", gen(0.0), "= 1/(d + 1/rt)")

# A frequency-shaping inverter is stable exactly when d_inv > rho.
for d_inv in (2.0, 0.9):
    h = gffs_tf(GffsParams(1.0, d_inv, FirstOrderG(rho=1.0, sigma=1.0)))
    print(f"GF-FS d_inv={d_inv}: stable={rf_is_stable(h)}")

# Several turbines collapse to one lag with the same DC gain.
red = reduce_turbines_first_order([(10.0, 1.0), (30.0, 5.0)])
print("reduced turbine:", red)
