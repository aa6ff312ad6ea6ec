"""Command-line interface: model generation and the experiment pipeline.

Exit codes: 0 on success, 1 for configuration errors, 2 for stage failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, StageError
from .experiment import DEFAULT_CONFIG, ExperimentRun, eager_estimate
from .gibbs import generate_model, validate_conditions


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _run_for(args) -> ExperimentRun:
    cfg = _load_config(args.config)
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    return ExperimentRun(cfg, resume=not args.no_resume)


def cmd_gen_model(args) -> int:
    model = generate_model(
        topology=args.topology, n=args.qubits, r=args.range,
        min_interaction=args.min_interaction, max_interaction=args.max_interaction,
        seed=args.seed, degree=args.degree,
        hyperedges=json.loads(args.hyperedges) if args.hyperedges else None)
    report = validate_conditions(model, args.min_interaction, args.max_interaction)
    model.save(args.out)
    print(f"wrote {args.out}: n={model.n}, {len(model.hypergraph.hyperedges)} "
          f"hyperedges, conditions: {report.summary()}")
    return 0


def cmd_simulate(args) -> int:
    run = _run_for(args)
    bank = run.stage_simulate()
    print(f"simulated {bank.total_shots} shots over ks {bank.ks}")
    return 0


def cmd_estimate(args) -> int:
    run = _run_for(args)
    table = eager_estimate(run, args.weight_cap)
    print(f"estimated {len(table)} Pauli eigenvalues")
    return 0


def cmd_learn_structure(args) -> int:
    run = _run_for(args)
    structure = run.stage_structure()
    print(f"learned graph with edges {structure.edges()}")
    return 0


def cmd_learn_coeffs(args) -> int:
    run = _run_for(args)
    learned = run.stage_coefficients()
    peaks = {str(list(h)): round(v, 4) for h, v in learned.max_abs_entries().items()}
    print(f"learned potentials, peak entries: {peaks}")
    if learned.spurious:
        print(f"plausibly spurious candidates: {learned.spurious}")
    return 0


def cmd_evaluate(args) -> int:
    run = _run_for(args)
    report = run.run()
    print(report.text(), end="")
    return 2 if report.failures else 0


def cmd_pipeline(args) -> int:
    return cmd_evaluate(args)


def cmd_describe(_args) -> int:
    print(json.dumps(DEFAULT_CONFIG, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulilearn",
        description="Learn the structure and coefficients of correlated Pauli "
                    "noise from randomized single-qubit-Clifford circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-model", help="generate a ground-truth noise model")
    gen.add_argument("--topology", default="chain",
                     choices=["chain", "cycle", "random-bounded-degree", "explicit"])
    gen.add_argument("--qubits", type=int, required=True)
    gen.add_argument("--range", type=int, default=2)
    gen.add_argument("--min-interaction", type=float, default=0.4)
    gen.add_argument("--max-interaction", type=float, default=0.4)
    gen.add_argument("--degree", type=int, default=3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--hyperedges", help="JSON list of qubit lists (explicit topology)")
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=cmd_gen_model)

    for name, fn in [("simulate", cmd_simulate), ("estimate", cmd_estimate),
                     ("learn-structure", cmd_learn_structure),
                     ("learn-coeffs", cmd_learn_coeffs),
                     ("evaluate", cmd_evaluate), ("pipeline", cmd_pipeline)]:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--out-dir", help="override the config's output directory")
        cmd.add_argument("--no-resume", action="store_true",
                         help="recompute even when artifacts exist")
        if name == "estimate":
            cmd.add_argument("--weight-cap", type=int, default=None)
        cmd.set_defaults(fn=fn)

    describe = sub.add_parser("describe", help="print the default config")
    describe.set_defaults(fn=cmd_describe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
