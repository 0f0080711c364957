"""Command line front end: ``gtr <command> ...``.

Exit status is 0 on success, 2 for invalid input (including usage errors)
and 3 for failures while computing.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

from . import documents
from .effects import effects_report, empirical_effects_report
from .ensemble import EnsembleConfig, universal_average_probability
from .errors import ConstructionError, DomainError, GTRError, MissingContextError, StructuralError, ValidationError
from .fitting import fit, parse_problem
from .measurement import born_probabilities
from .montecarlo import RunConfig, simulate_sequence
from .sequential import SequenceSpec, sequence_distribution

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

INPUT_ERRORS = (ValidationError, ConstructionError, DomainError, StructuralError, MissingContextError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtr", description="Sequential dichotomic measurements with arbitrary break densities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="parse a scenario and print it in normalized form")
    p.add_argument("--scenario", required=True)
    p.add_argument("--output")

    p = sub.add_parser("compute", help="analytic outcome distribution of a sequence")
    p.add_argument("--scenario", required=True)
    p.add_argument("--sequence", required=True, help='comma-separated measurement ids, e.g. "A,B"')
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")

    p = sub.add_parser("simulate", help="Monte Carlo estimate of a sequence distribution")
    p.add_argument("--scenario", required=True)
    p.add_argument("--sequence", required=True)
    p.add_argument("--samples", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--chunk-size", type=_positive, default=1 << 16)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")

    p = sub.add_parser("effects", help="QQ value, order effects and replicability")
    p.add_argument("--scenario", required=True)
    p.add_argument("--pair", required=True, help='two measurement ids, e.g. "A,B"')
    p.add_argument("--samples", type=_positive)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--chunk-size", type=_positive, default=1 << 16)
    p.add_argument("--output")

    p = sub.add_parser("born-average", help="average yes-probability over random densities")
    p.add_argument("--cos-theta", type=float, required=True)
    p.add_argument("--trials", type=_positive, required=True)
    p.add_argument("--max-cells", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--output")

    p = sub.add_parser("fit", help="fit free parameters to target AB/BA tables")
    p.add_argument("--problem", required=True)
    p.add_argument("--restarts", type=_positive)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--output")
    return parser


def table_csv(entries: dict, stderr: dict | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["outcome", "probability"] + (["stderr"] if stderr is not None else []))
    for key, p in entries.items():
        writer.writerow([key, repr(p)] + ([repr(stderr[key])] if stderr is not None else []))
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_validate(args) -> str:
    scenario = documents.load_scenario(args.scenario)
    return documents.dumps(documents.scenario_to_doc(scenario))


def _sequence(text: str) -> SequenceSpec:
    try:
        return SequenceSpec.parse(text)
    except ConstructionError as exc:
        raise ValidationError("--sequence", str(exc)) from None


def _cmd_compute(args) -> str:
    scenario = documents.load_scenario(args.scenario)
    seq = _sequence(args.sequence)
    table = sequence_distribution(scenario, seq)
    if args.format == "csv":
        return table_csv(table.to_dict())
    return documents.dumps({"sequence": str(seq), "probabilities": table.to_dict()})


def _cmd_simulate(args) -> str:
    scenario = documents.load_scenario(args.scenario)
    seq = _sequence(args.sequence)
    config = RunConfig(args.samples, args.seed, args.chunk_size)
    result = simulate_sequence(scenario, seq, config)
    stderr = {k: e.stderr for k, e in result.estimates.items()}
    if args.format == "csv":
        return table_csv(result.table.to_dict(), stderr)
    return documents.dumps(
        {
            "sequence": str(seq),
            "samples": config.samples,
            "seed": config.seed,
            "chunk_size": config.chunk_size,
            "probabilities": result.table.to_dict(),
            "stderr": stderr,
            "counts": result.counts,
        }
    )


def _cmd_effects(args) -> str:
    scenario = documents.load_scenario(args.scenario)
    pair = [t.strip() for t in args.pair.split(",")]
    if len(pair) != 2 or not all(pair) or pair[0] == pair[1]:
        raise ValidationError("--pair", "expected two distinct measurement ids, e.g. A,B")
    if args.samples:
        report = empirical_effects_report(scenario, pair[0], pair[1], RunConfig(args.samples, args.seed, args.chunk_size))
    else:
        report = effects_report(scenario, pair[0], pair[1])
    return documents.dumps(report.to_dict())


def _cmd_born_average(args) -> str:
    if not -1.0 <= args.cos_theta <= 1.0:
        raise ValidationError("--cos-theta", "must lie in [-1, 1]")
    config = EnsembleConfig(args.trials, args.max_cells, args.seed)
    est = universal_average_probability(args.cos_theta, config)
    return documents.dumps(
        {
            "cos_theta": args.cos_theta,
            "trials": config.trials,
            "max_cells": config.max_cells,
            "seed": config.seed,
            "mean": est.mean,
            "stderr": est.stderr,
            "n": est.n,
            "born": born_probabilities(args.cos_theta)[0],
        }
    )


def _cmd_fit(args) -> str:
    spec, ab, ba, restarts, seed = parse_problem(documents.load_json(args.problem))
    if args.restarts is not None:
        restarts = args.restarts
    if args.seed is not None:
        seed = args.seed
    result = fit(spec, ab, ba, restarts=restarts, seed=seed)
    out = result.to_dict()
    out.update({"restarts": restarts, "seed": seed})
    return documents.dumps(out)


COMMANDS = {
    "validate": _cmd_validate,
    "compute": _cmd_compute,
    "simulate": _cmd_simulate,
    "effects": _cmd_effects,
    "born-average": _cmd_born_average,
    "fit": _cmd_fit,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        text = COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        where = f" at {exc.path}" if isinstance(exc, ValidationError) and exc.path else ""
        msg = exc.message if isinstance(exc, ValidationError) else str(exc)
        print(f"gtr {args.command}: invalid input{where}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (GTRError, ArithmeticError, OSError, MemoryError) as exc:
        print(f"gtr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _emit(text, getattr(args, "output", None))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
