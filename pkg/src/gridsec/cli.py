"""Command line interface.

Subcommands:

* ``run``     closed-loop simulation from a config file; writes the trace
              CSVs, attack matrices, summary, and figures to --out.
* ``certify`` correctable-corruption bounds and annihilator check for a
              network and window.
* ``decode``  one-shot decode of a matrix/vector fixture pair.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import matio, report
from .decoder import certify_recoverability, decode
from .errors import GridsecError, TooLarge
from .netfile import prepare_plant, resolve_network_path
from .sim import SimulationConfig, run_simulation
from .wacs import assemble_wacs, correctable_bound, stack_and_annihilate, coupling_matrix


def _cmd_run(args) -> int:
    config = SimulationConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.protection is not None:
        config.protection = args.protection == "on"
    trace = run_simulation(config)
    paths = report.emit_outputs(trace, args.out)
    if not args.no_figures:
        paths.update(report.render_figures(trace, args.out))
    summary = trace.summary()
    for key in (
        "plant", "horizon", "protection", "seed", "max_theta_dev_deg",
        "omega_min_hz", "omega_max_hz", "classification_accuracy", "sync_trip_flag",
    ):
        print(f"{key}: {summary[key]}")
    print(f"outputs: {', '.join(str(p) for p in paths.values())}")
    return 0


def _cmd_certify(args) -> int:
    plant = prepare_plant(resolve_network_path(args.network))
    red = plant.reduced
    n, l = red.n_gens, red.edge_count
    bound = correctable_bound(n, l, args.window)
    print(f"network: {plant.name}")
    print(f"generators: {n}, reduced links: {l}, window: {args.window}")
    print(f"correctable_total_max: {bound.q_total_max}")
    print(f"correctable_per_step_avg: {bound.q_bar}")
    print(f"measurements_per_step: {bound.measurements_per_step}")
    print(f"max_average_measurements: {bound.max_average_measurements}")

    wacs = assemble_wacs(red, plant.params, args.ts)
    theta = plant.initial_state.theta
    snapshot = wacs.measurement_vector(
        {ch: theta[ch[1]] for ch in wacs.channels}
    )
    window = [snapshot] * args.window
    h = [coupling_matrix(wacs, snapshot)] * args.window
    stacked = stack_and_annihilate(wacs, window, h)
    defect = float(np.max(np.abs(stacked.omega @ stacked.phi)))
    print(f"annihilator_defect: {defect:.3e}")
    if args.sparsity is not None:
        try:
            ok = certify_recoverability(stacked.omega @ stacked.psi, args.sparsity)
            print(f"recoverability_s{args.sparsity}: {ok}")
        except TooLarge as exc:
            print(f"recoverability_s{args.sparsity}: not enumerable ({exc})")
    return 0


def _cmd_decode(args) -> int:
    phi = matio.read_matrix(args.matrix)
    y = matio.read_vector(args.measurements)
    x0, solution = decode(phi, y)
    print(f"x0: {' '.join(repr(float(v)) for v in x0)}")
    print(f"support: {' '.join(str(i) for i in solution.support) or '-'}")
    print(f"objective_l1: {solution.objective!r}")
    print(f"residual: {solution.residual_norm!r}")
    if args.out:
        from pathlib import Path

        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        matio.write_vector(outdir / "x0.txt", x0)
        matio.write_vector(outdir / "e_hat.txt", solution.error_vector)
        print(f"wrote: {outdir / 'x0.txt'}, {outdir / 'e_hat.txt'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsec",
        description="Secure state estimation for power networks under sparse sensor attacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a closed-loop attack simulation")
    p_run.add_argument("--config", required=True, help="simulation config JSON")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--protection", choices=("on", "off"), default=None)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_run.set_defaults(func=_cmd_run)

    p_cert = sub.add_parser("certify", help="print correctable-corruption bounds")
    p_cert.add_argument("--network", required=True, help="network file or builtin:<name>")
    p_cert.add_argument("--window", type=int, default=5)
    p_cert.add_argument("--ts", type=float, default=0.01)
    p_cert.add_argument("--sparsity", type=int, default=None,
                        help="also run the subset-rank certificate for this sparsity")
    p_cert.set_defaults(func=_cmd_certify)

    p_dec = sub.add_parser("decode", help="decode a matrix/vector fixture pair")
    p_dec.add_argument("--matrix", required=True, help="coding matrix file")
    p_dec.add_argument("--measurements", required=True, help="measurement vector file")
    p_dec.add_argument("--out", default=None, help="optional directory for x0/e_hat files")
    p_dec.set_defaults(func=_cmd_decode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GridsecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
