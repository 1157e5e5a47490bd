"""Decentralised stability certificate: each bus is checked on its own."""

from gffs.busmodels import FirstOrderG, GeneratorParams, GffsParams, generator_tf, gffs_tf
from gffs.netmodel import coupling_bounds, synthetic_case
from gffs.sim import assemble_linear, closed_loop_eigenvalues
from gffs.stability import (
    assembled_pr_function,
    build_pr_coeffs,
    certify_bus,
    certify_system,
    pr_numeric_oracle,
    product_inequality,
)
from gffs.synthesis import benchmark_controllers

# One bus: the certificate asks for a positive-real cubic ratio xi/eta.
h = gffs_tf(GffsParams(1.0, 2.0, FirstOrderG(1.0, 1.0)))
c = build_pr_coeffs(h, gamma=1.0, tau_alpha=1.0, epsilon=0.01)
print("xi =", c.xi)
print("eta =", c.eta)
print("verdict:", certify_bus(h, 1.0, 1.0, 0.01))

# The Hurwitz product inequality on xi + eta is necessary, not sufficient.
gen = generator_tf(GeneratorParams(1, 1, 1, 1))
c = build_pr_coeffs(gen, 10.0, 1.0, 1e-3)
f = assembled_pr_function(gen, 10.0, 1.0, 1e-3)
print("product inequality:", product_inequality(c), "| numeric PR sweep:", pr_numeric_oracle(f))
print("full test:", certify_bus(gen, 10.0, 1.0, 1e-3), "| with tau_alpha=10:", certify_bus(gen, 10.0, 10.0, 1e-3))

# Whole network: one shared (tau_alpha, epsilon) must certify every bus.
_, gffs, _ = benchmark_controllers(synthetic_case())
cert = certify_system(gffs)
print(f"overall={cert.overall} tau_alpha={cert.tau_alpha:.4g} epsilon={cert.epsilon} after {cert.attempts} attempts")
print("coupling bounds gamma:", coupling_bounds(gffs).round(1))

# The certificate is sufficient; eigenvalues of the closed loop agree here.
print("max Re(lambda):", closed_loop_eigenvalues(assemble_linear(gffs)).real.max())

# Violating d_inv > rho on one inverter breaks it at that bus.
inv = gffs.inverters[0]
p = inv.params
bad = gffs.with_controllers({inv.id: GffsParams(p.m_inv, 0.9 * p.rho, p.g)})
cert = certify_system(bad)
print("after flip:", cert.overall, [v for v in cert.per_bus if not v.certified])
