"""Command-line front end.

Exit codes: 0 success, 1 output could not be written, 2 invalid input,
3 stability certificate inconclusive, 4 loss of synchronism in simulation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import GffsError, MatchedTuningError, NoInverters, ReportError
from .netmodel import Case, algebraic_connectivity, load_case, serialize_case, synthetic_case
from .sim import (
    LOSS_OF_SYNC,
    Scenario,
    compute_metrics,
    simulate,
    steady_state_frequency,
    trajectory_csv,
)
from .stability import certify_system
from .synthesis import (
    FrequencySpec,
    benchmark_controllers,
    coherent_gains,
    reduced_turbine,
    synthesize,
    target_gains,
)

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_DESYNC = 0, 1, 2, 3, 4

COMPARE_FILES = (
    "synthesis.json",
    "certificate.json",
    "metrics.json",
    "trajectory_gfvi.csv",
    "trajectory_gffs.csv",
    "summary.md",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    case_path: Optional[str]
    out_dir: str
    spec: Optional[FrequencySpec] = None
    v_max_factor: float = 1.1
    seed: int = 0
    step_pu: float = -0.3
    step_time: float = 1.0
    t_end: float = 30.0
    dt: float = 1e-3
    deadband_hz: float = 0.036
    nominal_hz: Optional[float] = None
    nonlinear: bool = False
    strategy: str = "match"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_report(out_dir, artifacts: dict) -> list[Path]:
    """Write ``{file name: text}`` into ``out_dir``, each file via temp-then-rename."""
    out = Path(out_dir)
    written = []
    for name, text in artifacts.items():
        path = out / name
        _write_atomic(path, text)
        written.append(path)
    return written


def _load(cfg: RunConfig) -> Case:
    case = synthetic_case() if cfg.case_path is None else load_case(cfg.case_path)
    if cfg.nominal_hz is not None:
        case = replace(case, nominal_hz=cfg.nominal_hz)
    return case


def _scenario(cfg: RunConfig, case: Case) -> tuple[Scenario, int]:
    rng = np.random.default_rng(cfg.seed)
    k = int(rng.integers(case.n))
    u0 = np.zeros(case.n)
    u0[k] = cfg.step_pu
    sc = Scenario(tuple(u0), cfg.step_time, cfg.t_end, cfg.dt, cfg.deadband_hz, cfg.nonlinear)
    return sc, case.buses[k].id


def run_synthesize(cfg: RunConfig) -> int:
    case = _load(cfg)
    if cfg.spec is None:
        raise GffsError("synthesize needs --max-rocof and --max-ss-dev")
    target = target_gains(cfg.spec)
    synth, report = synthesize(case, target, cfg.strategy, delta_p=cfg.spec.delta_p)
    emit_report(
        cfg.out_dir,
        {"synthesis.json": _dumps(report.to_dict()), "case_synthesized.json": serialize_case(synth)},
    )
    return EXIT_OK


def run_certify(cfg: RunConfig) -> int:
    case = _load(cfg)
    cert = certify_system(case, v_max_factor=cfg.v_max_factor)
    emit_report(cfg.out_dir, {"certificate.json": _dumps(cert.to_dict())})
    return EXIT_OK if cert.overall else EXIT_INCONCLUSIVE


def run_simulate(cfg: RunConfig) -> int:
    case = _load(cfg)
    sc, bus = _scenario(cfg, case)
    traj = simulate(case, sc)
    metrics = compute_metrics(traj, case)
    doc = metrics.to_dict()
    doc["disturbance_bus"] = bus
    emit_report(cfg.out_dir, {"trajectory.csv": trajectory_csv(traj, case), "metrics.json": _dumps(doc)})
    return EXIT_DESYNC if LOSS_OF_SYNC in traj.flags else EXIT_OK


def _check(name, value, threshold, ok):
    return f"| {name} | {value:.6g} | {threshold} | {'pass' if ok else 'FAIL'} |"


def run_compare(cfg: RunConfig) -> int:
    """GF-VI versus GF-FS on identical disturbances, with matched predicted RoCoF and steady state."""
    case = _load(cfg)
    if not case.inverters:
        raise NoInverters("compare needs at least one inverter bus")
    gfvi, gffs, report = benchmark_controllers(case, cfg.step_pu)
    a_vi, b_vi = coherent_gains(gfvi)
    a_fs, b_fs = coherent_gains(gffs)
    gap_ss = abs(cfg.step_pu / b_vi - cfg.step_pu / b_fs)
    gap_rocof = abs(cfg.step_pu / a_vi - cfg.step_pu / a_fs)
    if max(gap_ss, gap_rocof) > 1e-10:
        raise MatchedTuningError(f"legs are not matched: gaps {gap_ss:.3g}, {gap_rocof:.3g}")
    sc, bus = _scenario(cfg, case)
    with ThreadPoolExecutor(max_workers=2) as pool:
        futs = [pool.submit(simulate, c, sc) for c in (gfvi, gffs)]
        traj_vi, traj_fs = (f.result() for f in futs)
    cert = certify_system(gffs, v_max_factor=cfg.v_max_factor)
    m_vi = compute_metrics(traj_vi, gfvi, time_constant=a_fs / b_fs)
    m_fs = compute_metrics(traj_fs, gffs, time_constant=a_fs / b_fs)
    band_pu = sc.deadband_hz / case.nominal_hz if sc.nonlinear else 0.0
    ss_pred = steady_state_frequency(gffs, cfg.step_pu, band_pu)
    rocof_pred = abs(cfg.step_pu) / a_fs
    red = reduced_turbine(case)
    metrics_doc = {
        "algebraic_connectivity": algebraic_connectivity(case),
        "disturbance_bus": bus,
        "gffs": m_fs.to_dict(),
        "gfvi": m_vi.to_dict(),
        "matched_tuning_gap": {"omega_ss": gap_ss, "rocof": gap_rocof},
        "predicted": {
            "omega_ss_coherent": cfg.step_pu / b_fs,
            "omega_ss": ss_pred,
            "rocof": cfg.step_pu / a_fs,
        },
        "reduced_turbine": {"r_tilde_inv": red.r_tilde_inv, "tau_tilde": red.tau_tilde},
        "scenario": {
            "deadband_hz": sc.deadband_hz,
            "dt": sc.dt,
            "nominal_hz": case.nominal_hz,
            "nonlinear": sc.nonlinear,
            "seed": cfg.seed,
            "step_pu": cfg.step_pu,
            "t_end": sc.t_end,
            "t_step": sc.t_step,
        },
    }
    rocof_err = abs(m_fs.rocof_peak - rocof_pred) / rocof_pred
    ss_err = abs(m_fs.ss_dev - ss_pred) / abs(ss_pred)
    rows = [
        "| check | value | threshold | result |",
        "|---|---|---|---|",
        _check("GF-FS overshoot ratio", m_fs.overshoot_ratio, "< 0.02", m_fs.overshoot_ratio < 0.02),
        _check("GF-VI overshoot ratio", m_vi.overshoot_ratio, "> 0.10", m_vi.overshoot_ratio > 0.10),
        _check("GF-FS RoCoF relative error", rocof_err, "< 0.05", rocof_err < 0.05),
        _check("GF-FS steady-state relative error", ss_err, "< 0.02", ss_err < 0.02),
        _check("matched tuning gap", max(gap_ss, gap_rocof), "<= 1e-10", True),
        f"| stability certificate | tau_alpha={cert.tau_alpha}, eps={cert.epsilon} | overall | "
        f"{'pass' if cert.overall else 'inconclusive'} |",
    ]
    summary = "\n".join(
        [
            "# GF-VI vs GF-FS comparison",
            "",
            f"Step of {cfg.step_pu} p.u. at bus {bus} (seed {cfg.seed}), t = {sc.t_step} s, "
            f"{'nonlinear' if sc.nonlinear else 'linear'} model, deadband {sc.deadband_hz if sc.nonlinear else 0.0} Hz.",
            "",
            "| leg | nadir (p.u.) | RoCoF peak (p.u./s) | steady state (p.u.) | overshoot ratio |",
            "|---|---|---|---|---|",
            f"| GF-VI | {m_vi.nadir:.6g} | {m_vi.rocof_peak:.6g} | {m_vi.ss_dev:.6g} | {m_vi.overshoot_ratio:.4g} |",
            f"| GF-FS | {m_fs.nadir:.6g} | {m_fs.rocof_peak:.6g} | {m_fs.ss_dev:.6g} | {m_fs.overshoot_ratio:.4g} |",
            "",
            "## Checks",
            "",
            *rows,
            "",
        ]
    )
    emit_report(
        cfg.out_dir,
        {
            "synthesis.json": _dumps(report.to_dict()),
            "certificate.json": _dumps(cert.to_dict()),
            "metrics.json": _dumps(metrics_doc),
            "trajectory_gfvi.csv": trajectory_csv(traj_vi, gfvi),
            "trajectory_gffs.csv": trajectory_csv(traj_fs, gffs),
            "summary.md": summary,
        },
    )
    if LOSS_OF_SYNC in traj_vi.flags or LOSS_OF_SYNC in traj_fs.flags:
        return EXIT_DESYNC
    return EXIT_OK if cert.overall else EXIT_INCONCLUSIVE


def run_demo(cfg: RunConfig) -> int:
    return run_compare(replace(cfg, case_path=None, nonlinear=True))


COMMANDS = {
    "synthesize": run_synthesize,
    "certify": run_certify,
    "simulate": run_simulate,
    "compare": run_compare,
    "demo": run_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", dest="case_path", help="case JSON file (default: bundled desk case)")
    common.add_argument("--out", dest="out_dir", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for the disturbance-bus draw")
    common.add_argument("--step-pu", type=float, default=-0.3)
    common.add_argument("--step-time", type=float, default=1.0)
    common.add_argument("--t-end", type=float, default=30.0)
    common.add_argument("--dt", type=float, default=1e-3)
    common.add_argument("--deadband-hz", type=float, default=0.036)
    common.add_argument("--nominal-hz", type=float, default=None, help="override the case's nominal frequency")
    common.add_argument("--vmax-factor", dest="v_max_factor", type=float, default=1.1)
    common.add_argument("--nonlinear", action="store_true", help="sine power flows and turbine deadbands")
    common.add_argument("--max-rocof", type=float)
    common.add_argument("--max-ss-dev", type=float)
    common.add_argument("--strategy", choices=("match", "distribute"), default="match")
    parser = argparse.ArgumentParser(prog="gffs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    spec = None
    if args.max_rocof is not None and args.max_ss_dev is not None:
        spec = FrequencySpec(args.step_pu, args.max_ss_dev, args.max_rocof)
    return RunConfig(
        command=args.command,
        case_path=args.case_path,
        out_dir=args.out_dir,
        spec=spec,
        v_max_factor=args.v_max_factor,
        seed=args.seed,
        step_pu=args.step_pu,
        step_time=args.step_time,
        t_end=args.t_end,
        dt=args.dt,
        deadband_hz=args.deadband_hz,
        nominal_hz=args.nominal_hz,
        nonlinear=args.nonlinear,
        strategy=args.strategy,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        return COMMANDS[cfg.command](cfg)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GffsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
