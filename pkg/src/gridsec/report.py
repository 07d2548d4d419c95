"""Render a simulation trace to files: CSVs, a JSON summary, and figures.

The delimited outputs are what acceptance checks and downstream tools
consume; the figures are the human view of the same arrays (angle and
speed trajectories, plus the channel-by-step attack matrices).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import IOFailure
from .sim import SimulationTrace

TRACE_CSV = "trace.csv"
ATTACK_TRUE_CSV = "attack_true.csv"
ATTACK_EST_CSV = "attack_estimated.csv"
ATTACK_ERR_CSV = "attack_error.csv"
SUMMARY_JSON = "summary.json"
ESTIMATES_JSONL = "estimates.jsonl"


def _chan(prefix, ch):
    return f"{prefix}_{ch[0] + 1}_{ch[1] + 1}"


def _fmt(x) -> str:
    return repr(float(x))


def emit_outputs(trace: SimulationTrace, outdir) -> dict:
    """Write all delimited outputs; returns {name: path}."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "trace": _write_trace(trace, outdir / TRACE_CSV),
            "attack_true": None,
            "attack_estimated": None,
            "attack_error": None,
            "summary": None,
            "estimates": _write_estimates(trace, outdir / ESTIMATES_JSONL),
        }
        true_m = trace.injected_e_matrix()
        est_m = trace.committed_e_matrix()
        err_m = est_m - true_m  # NaN where uncommitted
        labels = [_chan("ec", ch) for ch in trace.pair_channels]
        labels += [_chan("em", ch) for ch in trace.channels]
        paths["attack_true"] = _write_matrix_csv(outdir / ATTACK_TRUE_CSV, labels, true_m)
        paths["attack_estimated"] = _write_matrix_csv(outdir / ATTACK_EST_CSV, labels, est_m)
        paths["attack_error"] = _write_matrix_csv(outdir / ATTACK_ERR_CSV, labels, err_m)
        summary_path = outdir / SUMMARY_JSON
        summary_path.write_text(json.dumps(trace.summary(), indent=2, sort_keys=True) + "\n")
        paths["summary"] = summary_path
        return paths
    except OSError as exc:
        raise IOFailure(f"could not write outputs to {outdir}: {exc}") from exc


def _write_trace(trace: SimulationTrace, path: Path) -> Path:
    n = trace.n_gens
    header = ["step", "injected_type", "committed_type", "committed_at", "classification_ok"]
    header += [f"theta_{i + 1}_deg" for i in range(n)]
    header += [f"omega_{i + 1}_hz" for i in range(n)]
    header += [_chan("ec", ch) + "_deg" for ch in trace.pair_channels]
    header += [_chan("em", ch) + "_deg" for ch in trace.channels]
    header += [_chan("corr", ch) + "_deg" for ch in trace.pair_channels]
    header += [f"u_{i + 1}" for i in range(n)]
    theta_deg = np.degrees(trace.theta)
    omega_hz = trace.omega / (2.0 * np.pi)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(trace.horizon):
            committed = trace.committed.get(k)
            truth = trace.injected_type[k]
            row = [str(k), truth]
            if committed is None:
                row += ["", "", ""]
            else:
                ctype = trace.committed_type(k)
                ok = "" if truth == "none" else str(int(ctype == truth)).lower()
                row += [ctype, str(trace.arrival[k]), ok]
            row += [_fmt(v) for v in theta_deg[k]]
            row += [_fmt(v) for v in omega_hz[k]]
            row += [_fmt(np.degrees(v)) for v in trace.ec_true[k]]
            row += [_fmt(np.degrees(v)) for v in trace.em_true[k]]
            row += [_fmt(np.degrees(v)) for v in trace.corrections[k]]
            row += [_fmt(v) for v in trace.controls[k]]
            writer.writerow(row)
    return path


def _write_matrix_csv(path: Path, labels, matrix) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel"] + [f"step_{k}" for k in range(matrix.shape[1])])
        for label, row in zip(labels, matrix):
            writer.writerow([label] + ["" if np.isnan(v) else _fmt(np.degrees(v)) for v in row])
    return path


def _write_estimates(trace: SimulationTrace, path: Path) -> Path:
    with open(path, "w") as fh:
        meta = {
            "record": "attack-estimate-stream",
            "e_channels": [_chan("ec", ch) for ch in trace.pair_channels]
            + [_chan("em", ch) for ch in trace.channels],
        }
        fh.write(json.dumps(meta) + "\n")
        for step in sorted(trace.committed):
            fh.write(trace.committed[step].to_json() + "\n")
    return path


def render_figures(trace: SimulationTrace, outdir) -> dict:
    """Angle/speed trajectories and the attack matrices as PNGs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = np.arange(trace.horizon)
    seconds = steps * trace.config.ts
    paths = {}

    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(trace.n_gens):
        ax.plot(seconds, np.degrees(trace.theta[:, i]), label=f"gen {i + 1}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("phase angle [deg]")
    ax.set_title(f"{trace.plant_name}: rotor angles ({trace.summary()['protection']})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    paths["angles"] = outdir / "angles.png"
    fig.savefig(paths["angles"], dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(trace.n_gens):
        ax.plot(seconds, trace.omega[:, i] / (2.0 * np.pi), label=f"gen {i + 1}")
    ax.axhline(trace.omega_s / (2.0 * np.pi), color="k", lw=0.5, ls="--")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("rotor speed [Hz]")
    ax.set_title(f"{trace.plant_name}: rotor speeds")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    paths["speeds"] = outdir / "speeds.png"
    fig.savefig(paths["speeds"], dpi=150)
    plt.close(fig)

    true_m = np.degrees(trace.injected_e_matrix())
    est_m = np.degrees(trace.committed_e_matrix())
    err_m = est_m - true_m
    scale = max(1.0, np.nanmax(np.abs(true_m)), np.nanmax(np.abs(est_m)))
    fig, axes = plt.subplots(1, 3, figsize=(12, 4), sharey=True)
    for ax, (mat, title) in zip(
        axes,
        [(true_m, "true attack"), (est_m, "estimated attack"), (err_m, "estimation error")],
    ):
        im = ax.imshow(mat, aspect="auto", cmap="coolwarm", vmin=-scale, vmax=scale,
                       interpolation="nearest")
        ax.set_title(title)
        ax.set_xlabel("step")
    axes[0].set_ylabel("channel")
    fig.colorbar(im, ax=axes, shrink=0.85, label="deg")
    paths["attacks"] = outdir / "attacks.png"
    fig.savefig(paths["attacks"], dpi=150)
    plt.close(fig)
    return paths
