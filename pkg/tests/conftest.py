"""Shared fixtures and random-case builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from gffs.busmodels import GeneratorParams, GfviParams, LoadParams
from gffs.netmodel import Bus, BusKind, Case, Line, synthetic_case
from gffs.synthesis import SynthesisTarget, benchmark_controllers, synthesize


@pytest.fixture(scope="session")
def desk_case() -> Case:
    return synthetic_case()


@pytest.fixture(scope="session")
def benchmark_pair(desk_case):
    """``(gfvi_case, gffs_case, report)`` with matched tuning."""
    return benchmark_controllers(desk_case, delta_p=-0.3)


@pytest.fixture(scope="session")
def matched_case(desk_case):
    """Desk case with exact turbine matching; d_inv exceeds every rho."""
    gens = [b.params for b in desk_case.generators]
    k = len(desk_case.inverters)
    rho_max = max(p.rt_inv for p in gens)
    target = SynthesisTarget(
        sum(p.m for p in gens) + 2.5 * k,
        sum(p.d for p in gens) + 1.3 * rho_max * k,
    )
    return synthesize(desk_case, target, "match", delta_p=-0.3)


def random_topology(rng: np.random.Generator, n: int, extra: float = 0.3) -> list[tuple[int, int]]:
    """Random spanning tree plus a few chords, as unordered index pairs."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        j = order[rng.integers(k)]
        edges.add(tuple(sorted((int(order[k]), int(j)))))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra / max(n - 1, 1):
                edges.add((i, j))
    return sorted(edges)


def random_case(
    rng: np.random.Generator,
    n_gen: int,
    n_inv: int,
    n_load: int,
    b_range=(20.0, 100.0),
    angle_spread: float = 0.0,
    equal_tau: bool = False,
) -> Case:
    """Connected case with uncontrolled inverters and randomized physical data."""
    kinds = [BusKind.GENERATOR] * n_gen + [BusKind.INVERTER] * n_inv + [BusKind.LOAD] * n_load
    tau0 = rng.uniform(1.0, 8.0)
    buses = []
    for i, kind in enumerate(kinds):
        if kind == BusKind.GENERATOR:
            tau = tau0 if equal_tau else rng.uniform(1.0, 8.0)
            params = GeneratorParams(rng.uniform(1, 10), rng.uniform(0.5, 2), tau, rng.uniform(0.03, 0.2))
        elif kind == BusKind.LOAD:
            params = LoadParams(rng.uniform(0.05, 1.0))
        else:
            params = None
        buses.append(
            Bus(i, kind, rng.uniform(0.95, 1.05), rng.uniform(-angle_spread, angle_spread), params)
        )
    n = len(buses)
    lines = [Line(i, j, rng.uniform(*b_range)) for i, j in random_topology(rng, n)]
    return Case(tuple(buses), tuple(lines))


def random_synthesized_case(rng: np.random.Generator, n_max: int = 12):
    """Random case with GF-FS (some GF-VI) controllers satisfying d_inv > rho."""
    n_gen = int(rng.integers(1, 5))
    n_inv = int(rng.integers(n_gen, 5)) if rng.random() < 0.5 else int(rng.integers(1, 5))
    n_load = int(rng.integers(0, min(4, n_max - n_gen - n_inv) + 1))
    case = random_case(rng, n_gen, n_inv, n_load, angle_spread=0.3)
    gens = [b.params for b in case.generators]
    strategy = "match" if n_inv >= n_gen and rng.random() < 0.5 else "distribute"
    rho_max = max(p.rt_inv for p in gens)
    d_extra = rng.uniform(1.05, 2.0) * rho_max if strategy == "match" else rng.uniform(0.5, 5.0)
    target = SynthesisTarget(
        sum(p.m for p in gens) + n_inv * rng.uniform(0.5, 5.0),
        sum(p.d for p in gens) + n_inv * d_extra,
    )
    synth, _ = synthesize(case, target, strategy)
    if n_inv > 1 and rng.random() < 0.3:
        vi = case.inverters[0].id
        synth = synth.with_controllers({vi: GfviParams(rng.uniform(1, 5), rng.uniform(0.5, 3))})
    return synth


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
