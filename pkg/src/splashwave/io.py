"""Serialization: checkpoints, CSV tables, run manifests and key=value configs.

Everything written here is deterministic for identical inputs: keys are
sorted, floats are printed losslessly and files are replaced atomically.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, CorruptFile, SchemaMismatch
from .operators import VorticityDensity
from .solver import (AdmissibilityMargins, ConstraintChart, PhysicalParams,
                     SolverState)
from .spectral import PeriodicGrid

SCHEMA_VERSION = 1
COMMANDS = ("crapper", "threshold", "solve", "continue", "verify")


# ---------------------------------------------------------------------------
# atomic writes and number formatting

def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x) -> str:
    """17 significant digits; enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# checkpoints

def _floats(a) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def state_payload(state: SolverState) -> dict:
    p = state.params
    m = state.margins
    return {
        "N": state.grid.N,
        "mode": state.mode,
        "rhs": state.rhs,
        "params": {"epsilon": p.epsilon, "g": p.g, "q": p.q},
        "kappa_b": p.kappa_b,
        "alpha_star": state.alpha_star,
        "u_coeffs": _floats(state.chart.u_coeffs),
        "u_A": _floats(state.chart.u_A),
        "omega_values": _floats(state.omega.values),
        "omega_residual": float(state.omega.residual),
        "omega_condition": float(state.omega.condition),
        "residuals": {"G1_H1": state.residual_norms[0], "G2_W1p": state.residual_norms[1],
                      "max": state.residual_max},
        "newton_iters": state.newton_iters,
        "margins": None if m is None else m.as_dict(),
    }


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(state: SolverState, path) -> Path:
    payload = state_payload(state)
    doc = {"schema": SCHEMA_VERSION, "checksum": _checksum(payload), "state": payload}
    return write_json(path, doc)


def load_checkpoint(path) -> SolverState:
    """Inverse of :func:`save_checkpoint`; bit-exact for the same schema version."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        doc = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable checkpoint ({exc})") from exc
    if not isinstance(doc, dict) or "schema" not in doc or "state" not in doc:
        raise CorruptFile(f"{path}: not a checkpoint document")
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaMismatch(doc["schema"], SCHEMA_VERSION)
    payload = doc["state"]
    if _checksum(payload) != doc.get("checksum"):
        raise CorruptFile(f"{path}: checksum mismatch")
    try:
        grid = PeriodicGrid(int(payload["N"]))
        chart = ConstraintChart(grid, payload["alpha_star"], np.array(payload["u_coeffs"]),
                                np.array(payload["u_A"]))
        omega = VorticityDensity(grid, np.array(payload["omega_values"]),
                                 residual=payload["omega_residual"],
                                 condition=payload["omega_condition"])
        pp = payload["params"]
        params = PhysicalParams(pp["epsilon"], pp["g"], pp["q"], payload["kappa_b"])
        r = payload["residuals"]
        m = payload["margins"]
        margins = None if m is None else AdmissibilityMargins(
            m["arc_chord"], m["theta_prime"], m["z2_alpha"], m["radius"])
        return SolverState(chart, omega, params, (r["G1_H1"], r["G2_W1p"]), r["max"],
                           int(payload["newton_iters"]), margins, payload["rhs"], payload["mode"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: malformed state ({exc})") from exc


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    command: str
    N: int = 1024
    A: float | None = None
    schedule: list[tuple[float, float]] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: str = "splashwave-out"
    rhs: str = "physical"
    strict: bool = False

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", None, "command")
        N = self.N
        if not isinstance(N, int) or N < 8 or N & (N - 1):
            raise ConfigError(f"N must be a power of two >= 8, got {N!r}", None, "N")
        for k, v in self.tolerances.items():
            if not v > 0:
                raise ConfigError(f"tolerance {k} must be positive", None, f"tol.{k}")
        if self.rhs not in ("physical", "cos"):
            raise ConfigError(f"rhs must be 'physical' or 'cos', got {self.rhs!r}", None, "rhs")

    def canonical(self) -> dict:
        return {"command": self.command, "N": self.N, "A": self.A,
                "schedule": [list(s) for s in self.schedule],
                "tolerances": dict(sorted(self.tolerances.items())),
                "rhs": self.rhs, "strict": self.strict}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def ramp_schedule(eps_max: float, g_max: float, steps: int) -> list[tuple[float, float]]:
    if steps < 1:
        raise ConfigError("steps must be at least 1", None, "steps")
    return [(eps_max * i / steps, g_max * i / steps) for i in range(1, steps + 1)]


_KEYS = {"command", "N", "A", "step", "out", "rhs", "strict", "eps_max", "g_max", "steps"}


def _number(text: str, line: int, key: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__}", line, key) from None


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key=value`` text; ``step=eps,g`` may repeat; ``tol.name=value``."""
    values: dict = {}
    steps: list[tuple[float, float]] = []
    tols: dict[str, float] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", n, None)
        key, val = (s.strip() for s in line.split("=", 1))
        if key.startswith("tol."):
            tols[key[4:]] = _number(val, n, key)
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", n, key)
        if key == "step":
            parts = val.split(",")
            if len(parts) != 2:
                raise ConfigError("step expects 'epsilon,g'", n, key)
            steps.append((_number(parts[0], n, key), _number(parts[1], n, key)))
            continue
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", n, key)
        values[key] = (val, n)

    def get(key, kind, default):
        if key not in values:
            return default
        val, n = values[key]
        if kind is bool:
            if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"expected a boolean, got {val!r}", n, key)
            return val.lower() in ("true", "1", "yes")
        if kind is str:
            return val
        return _number(val, n, key, kind)

    if "command" not in values:
        raise ConfigError("missing required key 'command'", None, "command")
    if steps and ("eps_max" in values or "g_max" in values):
        line = values.get("eps_max", values.get("g_max"))[1]
        raise ConfigError("give either step= lines or eps_max/g_max, not both", line, "step")
    if not steps and ("eps_max" in values or "g_max" in values):
        steps = ramp_schedule(get("eps_max", float, 0.0), get("g_max", float, 0.0),
                              get("steps", int, 10))
    try:
        return RunConfig(command=get("command", str, None), N=get("N", int, 1024),
                         A=get("A", float, None), schedule=steps, tolerances=tols,
                         output_dir=get("out", str, "splashwave-out"), rhs=get("rhs", str, "physical"),
                         strict=get("strict", bool, False))
    except ConfigError as exc:
        if exc.line is None and exc.field in values:
            raise ConfigError(exc.message, values[exc.field][1], exc.field) from None
        raise


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, None) from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# reports

BRANCH_HEADER = ("index", "epsilon", "g", "q", "kappa_b", "alpha_star", "splash_gap",
                 "omega_sup", "omega_integral", "residual_G1_H1", "residual_G2_W1p",
                 "residual_max", "newton_iters", "margin_arc_chord", "margin_theta_prime",
                 "margin_z2_alpha")
PROFILE_HEADER = ("alpha", "re_z", "im_z", "theta", "omega")
CURVE_HEADER = ("alpha", "re_z", "im_z", "theta", "curvature")


def _gap(state: SolverState) -> float:
    from .geometry import splash_gap
    if state.alpha_star is None:
        return math.nan
    return splash_gap(state.curve())


def branch_rows(states: Sequence[SolverState]) -> list[list]:
    rows = []
    for i, s in enumerate(states):
        p, m = s.params, s.margins
        nan = math.nan
        rows.append([i, p.epsilon, p.g, p.q, p.kappa_b,
                     nan if s.alpha_star is None else float(s.alpha_star), _gap(s),
                     float(np.max(np.abs(s.omega.values))), s.omega.integral(),
                     float(s.residual_norms[0]), float(s.residual_norms[1]), float(s.residual_max),
                     s.newton_iters,
                     nan if m is None else m.arc_chord, nan if m is None else m.theta_prime,
                     nan if m is None else m.z2_alpha])
    return rows


def write_profile(path, alpha, z, theta, omega) -> Path:
    rows = zip(np.asarray(alpha, float), np.real(z), np.imag(z), np.asarray(theta, float),
               np.asarray(omega, float))
    return write_csv(path, PROFILE_HEADER, ([float(c) for c in r] for r in rows))


def write_curve(path, curve) -> Path:
    """Curve export: node, position, tangent angle and curvature."""
    from .geometry import curvature
    rows = zip(curve.grid.nodes, np.real(curve.z), np.imag(curve.z), curve.theta,
               curvature(curve).values)
    return write_csv(path, CURVE_HEADER, ([float(c) for c in r] for r in rows))


def emit_report(states, out_dir) -> list[Path]:
    """Branch table plus one profile series per state, in branch order."""
    from .solver import chart_to_theta
    states = list(getattr(states, "states", states))
    if not states:
        raise ValueError("cannot report an empty branch")
    out = Path(out_dir)
    paths = [write_csv(out / "branch.csv", BRANCH_HEADER, branch_rows(states))]
    for i, s in enumerate(states):
        c = s.curve()
        paths.append(write_profile(out / f"profile_{i:03d}.csv", s.grid.nodes, c.z,
                                   chart_to_theta(s.chart).values, s.omega.values))
    return paths
