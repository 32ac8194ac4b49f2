"""Property suites behind the ``verify`` command.

Each suite returns a JSON-ready dict whose items carry a ``pass`` flag;
items that are recorded without a verdict carry ``pass: null``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import analysis as an

STRIP_XI0 = (0.5, 1.0, 2.0)
STRIP_RTOL = 1e-6
STRIP_COMPARE = 10.0          # compare on |tau| <= this (the window acts near +/-L)
HARDY_BETA = 0.3
HARDY_P = 2.0
CUSP_SLOPE_RTOL = 0.02


def _relerr(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))


def multiplier_suite(n_max: int = 8) -> dict:
    items = []
    for kind in ("a1", "a2"):
        spec = an.MultiplierSpec(kind, n_max=n_max)
        for n in range(n_max + 1):
            r = an.multiplier_derivative_sup(spec, n)
            item = {"kind": kind, "n": n, "sup": r.sup, "bound": r.bound, "ratio": r.ratio,
                    "argmax": r.argmax if math.isfinite(r.argmax) else None,
                    "tail_bound": r.tail_bound, "K": r.K}
            item["pass"] = None if n == 0 else bool(r.certified)
            items.append(item)
    return {"items": items, "pass": all(i["pass"] is not False for i in items)}


def strip_suite() -> dict:
    items = []
    for xi0 in STRIP_XI0:
        for case in ("symmetric", "antisymmetric"):
            if case == "symmetric":
                fp = fm = lambda t, x=xi0: np.cos(x * t)
                prof = lambda nu, x=xi0: np.cosh(x * nu) / np.cosh(0.5 * np.pi * x)
                dn_plus = dn_minus = xi0 * np.tanh(0.5 * np.pi * xi0)
                shape = lambda t, x=xi0: np.cos(x * t)
            else:
                fp = lambda t, x=xi0: np.sin(x * t)
                fm = lambda t, x=xi0: -np.sin(x * t)
                prof = lambda nu, x=xi0: np.sinh(x * nu) / np.sinh(0.5 * np.pi * x)
                dn_plus = dn_minus = xi0 / np.tanh(0.5 * np.pi * xi0)
                shape = lambda t, x=xi0: np.sin(x * t)
            data = an.StripBoundaryData.from_functions(fp, fm, window=True)
            t = data.tau
            m = np.abs(t) <= STRIP_COMPARE
            err_d = 0.0
            for nu in (-1.2, -0.5, 0.0, 0.7, 1.5):
                phi = an.strip_dirichlet_extend(data, nu)
                err_d = max(err_d, _relerr(phi[m], (prof(nu) * shape(t))[m]))
            tr = an.strip_neumann_trace(data)
            sign_minus = 1.0 if case == "symmetric" else -1.0
            err_n = max(_relerr(tr.plus[m], (dn_plus * shape(t))[m]),
                        _relerr(tr.minus[m], (sign_minus * dn_minus * shape(t))[m]))
            items.append({"xi0": xi0, "case": case, "dirichlet_relerr": err_d,
                          "neumann_relerr": err_n,
                          "pass": bool(err_d <= STRIP_RTOL and err_n <= STRIP_RTOL)})
    return {"L": an.STRIP_L, "M": an.STRIP_M, "items": items,
            "pass": all(i["pass"] for i in items)}


def hardy_suite() -> dict:
    beta, p = HARDY_BETA, HARDY_P
    interior = an.hardy_compactness_probe(p, beta, beta - 0.5, "left")
    endpoint = an.hardy_compactness_probe(p, beta, beta - 1.0, "left")
    right_end = an.hardy_compactness_probe(p, beta, beta + 1.0, "right")
    fine = an.HardyGrid(panels_per_decade=6, uniform=64)
    interior_fine = an.hardy_compactness_probe(p, beta, beta - 0.5, "left", fine)
    endpoint_fine = an.hardy_compactness_probe(p, beta, beta - 1.0, "left", fine)
    c1 = an.hardy_inequality_constant(beta, p)
    c2 = an.hardy_inequality_constant(beta, p, grid=fine)
    items = {
        "interior": {"gamma": beta - 0.5, "ratio_20": interior.ratio(20), "norm": interior.norm,
                     "tail_index": interior.tail_index, "pass": bool(interior.ratio(20) <= 1e-2)},
        "endpoint": {"gamma": beta - 1.0, "ratio_20": endpoint.ratio(20), "norm": endpoint.norm,
                     "pass": bool(endpoint.ratio(20) >= 1e-1)},
        "endpoint_right": {"gamma": beta + 1.0, "ratio_20": right_end.ratio(20),
                           "norm": right_end.norm, "pass": bool(right_end.ratio(20) >= 1e-1)},
        "norm_stability": {"interior": [interior.norm, interior_fine.norm],
                           "endpoint": [endpoint.norm, endpoint_fine.norm],
                           "pass": bool(abs(interior.norm / interior_fine.norm - 1) < 0.05
                                        and abs(endpoint.norm / endpoint_fine.norm - 1) < 0.05)},
        "inequality_constant": {"beta": beta, "p": p, "C": c1, "C_refined": c2,
                                "pass": bool(math.isfinite(c1) and abs(c2 / c1 - 1) <= 0.1)},
    }
    return {"items": items, "pass": all(v["pass"] for v in items.values())}


def h_asymptotics_suite() -> dict:
    items = []
    for mu in (0.5, 1.0):
        c = an.cusp_variable_change(mu, 1.0, 0.5)
        s0 = c.loglog_slope()
        s1 = c.loglog_slope(derivative=True)
        e0 = abs(s0 / (-1.0 / mu) - 1.0)
        e1 = abs(s1 / (-1.0 - 1.0 / mu) - 1.0)
        u = np.geomspace(1e-6 * c.delta, c.delta, 200)
        inv = _relerr(c(c.inverse(u)), u)
        items.append({"mu": mu, "slope": s0, "slope_derivative": s1, "inverse_relerr": inv,
                      "pass": bool(e0 <= CUSP_SLOPE_RTOL and e1 <= CUSP_SLOPE_RTOL and inv <= 1e-9)})
    c = an.cusp_variable_change(1.0, 1.0, 0.5)
    tau = np.geomspace(1e-3, 1e5, 50)
    closed = _relerr(c(tau), c.delta / (1.0 + c.delta * tau))
    items.append({"mu": 1.0, "closed_form_relerr": closed, "pass": bool(closed <= 1e-9)})
    return {"items": items, "pass": all(i["pass"] for i in items)}


SUITES: dict[str, Callable[[], dict]] = {
    "multiplier_bounds": multiplier_suite,
    "hardy": hardy_suite,
    "strip": strip_suite,
    "h_asymptotics": h_asymptotics_suite,
}


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("SPLASHWAVE_THREADS", "1")))
    except ValueError:
        return 1


def run_all(threads: int | None = None) -> dict:
    """Run every suite (concurrently when allowed) and aggregate the verdict."""
    threads = threads or thread_cap()
    names = list(SUITES)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(names, pool.map(lambda k: SUITES[k](), names)))
    else:
        results = {k: SUITES[k]() for k in names}
    results["pass"] = all(results[k]["pass"] for k in names)
    return results
