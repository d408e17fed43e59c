"""Run a scenario end to end and write plot-ready CSV tables plus a JSON report."""
from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from .optim import pgd
from .scenario import scenario_to_dict

FLOAT_FMT = "%.17g"


@dataclass
class OutputBundle:
    """Tables written by :func:`run`.

    ``theta_field`` and ``adjoint_field`` are ``(Nz, Nt)`` arrays,
    ``control`` and ``mean_theta`` have one entry per time level.
    """

    theta_field: np.ndarray
    adjoint_field: np.ndarray
    control: np.ndarray
    mean_theta: np.ndarray
    cost_history: list
    metadata: dict
    z: np.ndarray
    t: np.ndarray


def depth_average(theta, grid):
    """Trapezoidal depth average of every column of ``theta``."""
    return grid.space_weights() @ theta / grid.Z


def _fmt(x):
    return FLOAT_FMT % x


def _write_field(path, values, z, t, wide):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if wide:
            w.writerow(["z"] + [_fmt(tn) for tn in t])
            for i, zi in enumerate(z):
                w.writerow([_fmt(zi)] + [_fmt(v) for v in values[i]])
        else:
            w.writerow(["z", "t", "value"])
            for n, tn in enumerate(t):
                for i, zi in enumerate(z):
                    w.writerow([_fmt(zi), _fmt(tn), _fmt(values[i, n])])


def _write_series(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else _fmt(v) for v in row])


def write_bundle(bundle, out_dir, wide=False):
    os.makedirs(out_dir, exist_ok=True)
    z, t = bundle.z, bundle.t
    _write_field(os.path.join(out_dir, "theta.csv"), bundle.theta_field, z, t, wide)
    _write_field(os.path.join(out_dir, "adjoint.csv"), bundle.adjoint_field, z, t, wide)
    _write_series(os.path.join(out_dir, "control.csv"), ["t", "u"], zip(t, bundle.control))
    _write_series(os.path.join(out_dir, "mean_theta.csv"), ["t", "mean_theta"],
                  zip(t, bundle.mean_theta))
    _write_series(os.path.join(out_dir, "cost_history.csv"), ["iteration", "cost"],
                  enumerate(bundle.cost_history))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(bundle.metadata, fh, indent=2, sort_keys=True)


def run(scenario, out_dir=None, *, wide=False):
    """Optimise ``scenario`` with projected gradient descent and write its outputs.

    Parameters
    ----------
    scenario : Scenario
    out_dir : path, optional
        Destination directory, created if needed; nothing is written when None.
    wide : bool
        Write fields as a z-by-t matrix instead of long-form rows.

    Returns
    -------
    OutputBundle
    """
    start = time.perf_counter()
    report = pgd(scenario)
    elapsed = time.perf_counter() - start
    grid = scenario.grid
    state = report.final_state
    adj = report.final_adjoint
    adj_values = adj.values if adj is not None else np.zeros_like(state.values)
    meta = {
        "scenario": scenario_to_dict(scenario),
        "iterations": report.iterations,
        "exit_reason": report.exit_reason,
        "cost_history": [float(c) for c in report.cost_history],
        "clamp_events": int(report.clamp_events),
        "wall_time_seconds": elapsed,
        "solver_settings": asdict(scenario.pgd),
        "saturation_breach": bool(state.saturation_breach),
        "max_picard_iterations": int(np.max(state.picard_iterations)),
        "step_sizes": [float(s) for s in report.step_sizes],
    }
    bundle = OutputBundle(
        theta_field=state.values, adjoint_field=adj_values,
        control=np.asarray(report.final_control, dtype=float),
        mean_theta=depth_average(state.values, grid),
        cost_history=list(report.cost_history), metadata=meta, z=grid.z, t=grid.t,
    )
    if out_dir is not None:
        write_bundle(bundle, out_dir, wide=wide)
    return bundle
