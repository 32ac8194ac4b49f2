"""Command line entry point: ``splashwave {crapper,threshold,solve,continue,verify}``.

Exit status: 0 on success, 1 when ``verify`` finds a failing item or a
numerical error occurs, 2 when Newton does not converge, 3 on bad
configuration.
"""
from __future__ import annotations

import argparse
import platform
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, crapper, kernels, verify
from . import io as sio
from .errors import AdmissibilityLost, ConfigError, NoConvergence, SplashwaveError
from .geometry import WaveCurve
from .solver import (PhysicalParams, continue_branch, crapper_state, newton_solve)
from .spectral import PeriodicGrid

EXIT_OK, EXIT_FAIL, EXIT_NOCONV, EXIT_CONFIG = 0, 1, 2, 3
DEFAULT_A = 0.2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splashwave", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=sio.COMMANDS)
    ap.add_argument("--config", type=Path, help="key=value configuration file")
    ap.add_argument("--N", type=int, help="grid size (power of two)")
    ap.add_argument("--A", type=float, help="Crapper amplitude")
    ap.add_argument("--eps-max", type=float, help="final density parameter of the schedule")
    ap.add_argument("--g-max", type=float, help="final gravity of the schedule")
    ap.add_argument("--steps", type=int, help="number of schedule steps")
    ap.add_argument("--rhs", choices=("physical", "cos"), help="right side of the vorticity equation")
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--strict", action="store_true", help="treat warnings as errors")
    return ap


def config_from_args(args: argparse.Namespace) -> sio.RunConfig:
    """Merge a config file (if any) with command line overrides."""
    if args.config is not None:
        cfg = sio.load_config(args.config)
        if args.command is not None and args.command != cfg.command:
            cfg = replace(cfg, command=args.command)
    else:
        if args.command is None:
            raise ConfigError("no command given", None, "command")
        cfg = sio.RunConfig(command=args.command)
    if args.N is not None:
        cfg = replace(cfg, N=args.N)
    if args.A is not None:
        cfg = replace(cfg, A=args.A)
    if args.eps_max is not None or args.g_max is not None or args.steps is not None:
        cfg = replace(cfg, schedule=sio.ramp_schedule(args.eps_max or 0.0, args.g_max or 0.0,
                                                      args.steps or 10))
    if args.rhs is not None:
        cfg = replace(cfg, rhs=args.rhs)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    if args.strict:
        cfg = replace(cfg, strict=True)
    return cfg


# ---------------------------------------------------------------------------
# pipelines; each returns (exit status, summary dict, artifact paths)

def _crapper(cfg: sio.RunConfig, out: Path):
    A = DEFAULT_A if cfg.A is None else cfg.A
    grid = PeriodicGrid(cfg.N)
    c = WaveCurve.crapper(A, grid)
    path = sio.write_curve(out / "crapper_profile.csv", c)
    summary = {"A": A, "N": cfg.N, "q": crapper.q_of_A(A),
               "levi_civita_residual": crapper.levi_civita_residual(A, grid)}
    print(f"Crapper wave A={A:.17g}, q={summary['q']:.17g}: {path}")
    return EXIT_OK, summary, [path]


def _threshold(cfg: sio.RunConfig, out: Path):
    tol = cfg.tolerances.get("threshold", 1e-12)
    res = crapper.find_splash_threshold(tol=tol, N=cfg.N)
    doc = {"A0": res.A0, "N": cfg.N, "tol": tol,
           "history": [{"lo": lo, "hi": hi, "gap": gap} for lo, hi, gap in res.history]}
    path = sio.write_json(out / "threshold.json", doc)
    print(f"A0 = {res.A0:.17g}")
    return EXIT_OK, {"A0": res.A0}, [path]


def _start(cfg: sio.RunConfig):
    return crapper_state(cfg.N, rhs=cfg.rhs)


def _solve(cfg: sio.RunConfig, out: Path):
    start = _start(cfg)
    eg = cfg.schedule[-1] if cfg.schedule else (0.0, 0.0)
    tol = cfg.tolerances.get("newton", 1e-10)
    state = newton_solve(start, replace(start.params, epsilon=eg[0], g=eg[1]), tol=tol)
    paths = [sio.save_checkpoint(state, out / "checkpoints" / "state_000.json")]
    paths += sio.emit_report([state], out)
    print(f"converged in {state.newton_iters} iterations: kappa_b={state.params.kappa_b:.17g}, "
          f"q={state.params.q:.17g}")
    return EXIT_OK, {"epsilon": eg[0], "g": eg[1], "kappa_b": state.params.kappa_b,
                     "q": state.params.q, "newton_iters": state.newton_iters}, paths


def _continue(cfg: sio.RunConfig, out: Path):
    if not cfg.schedule:
        raise ConfigError("continuation needs a schedule (step= lines or --eps-max/--g-max)",
                          None, "step")
    start = _start(cfg)
    paths: list[Path] = []

    def persist(i, s):
        paths.append(sio.save_checkpoint(s, out / "checkpoints" / f"state_{i:03d}.json"))
        print(f"step {i}: eps={s.params.epsilon:.6g} g={s.params.g:.6g} "
              f"kappa_b={s.params.kappa_b:.12g} iters={s.newton_iters}", flush=True)

    branch = continue_branch(start, cfg.schedule, on_accept=persist)
    if branch.states:
        paths += sio.emit_report(branch.states, out)
    summary = {"accepted": len(branch.states), "requested": len(cfg.schedule),
               "failure": None if branch.failure is None else str(branch.failure)}
    if branch.failure is not None:
        print(f"continuation stopped: {branch.failure}", file=sys.stderr)
        return EXIT_NOCONV, summary, paths
    return EXIT_OK, summary, paths


def _verify(cfg: sio.RunConfig, out: Path):
    report = verify.run_all()
    path = sio.write_json(out / "verify.json", report)
    for k, v in report.items():
        if k != "pass":
            print(f"{k}: {'pass' if v['pass'] else 'FAIL'}")
    return (EXIT_OK if report["pass"] else EXIT_FAIL), {"pass": report["pass"]}, [path]


PIPELINES = {"crapper": _crapper, "threshold": _threshold, "solve": _solve,
             "continue": _continue, "verify": _verify}


def run(cfg: sio.RunConfig) -> int:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}", None, "out") from exc
    t0 = time.time()
    status, summary, paths = EXIT_FAIL, {}, []
    error = None
    try:
        with warnings.catch_warnings():
            if cfg.strict:
                warnings.simplefilter("error")
            status, summary, paths = PIPELINES[cfg.command](cfg, out)
    except (NoConvergence, AdmissibilityLost) as exc:
        status, error = EXIT_NOCONV, str(exc)
        print(f"error: {exc}", file=sys.stderr)
    except (SplashwaveError, Warning) as exc:
        if isinstance(exc, ConfigError):
            raise
        status, error = EXIT_FAIL, str(exc)
        print(f"error: {exc}", file=sys.stderr)
    write_manifest(cfg, out, status, summary, paths, time.time() - t0, error)
    return status


def write_manifest(cfg, out: Path, status: int, summary: dict, paths, wall: float,
                   error: str | None) -> Path:
    conf = crapper.levi_civita_residual(0.2, PeriodicGrid(512))
    doc = {
        "config": cfg.canonical(),
        "config_sha256": cfg.digest(),
        "versions": {"splashwave": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version(),
                     "kernels": kernels.BACKEND},
        "sign_convention": {"levi_civita_residual": conf, "pass": bool(conf <= 1e-10)},
        "exit_status": status,
        "summary": summary,
        "error": error,
        "artifacts": sorted(str(Path(p).relative_to(out)) for p in paths),
        "wall_time_s": wall,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    return sio.write_json(out / "run_manifest.json", doc)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
