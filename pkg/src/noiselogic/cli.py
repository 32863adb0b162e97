"""Command-line front end.

Subcommands: gen, detect, xor-circuit, verify, mc, analyze. Flags override
values from an optional ``--config`` JSON file; the effective parameters are
echoed into every output so any run can be reproduced.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import secrets
import sys

from . import __version__
from .coincidence import (
    DetectorConfig,
    DetectorMode,
    run_figure2_demo,
    undecided_probability,
)
from .neural_gates import Circuit, build_xor_fold, build_xor_pair, run_circuit_array, xor_block_depth
from .spike_core import (
    ClockConfig,
    InfeasibleSetError,
    dump_trains_json,
    dump_trains_text,
    generate_orthogonal_set,
    generate_random_train,
)
from .verification import (
    SWEEP_FIELDS,
    BitString,
    ChannelModel,
    error_bound,
    make_reference_bank,
    per_step_agreement_probability,
    sweep,
    verify,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CHECK_FAILED = 3
EXIT_IO = 4

SEED_ENV = "NOISE_LOGIC_SEED"


class ValidationError(Exception):
    pass


class CheckFailed(Exception):
    pass


# -- argument helpers -------------------------------------------------------

def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(float(x)) for x in str(text).split(",") if x.strip()]


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _count(text) -> int:
    # accepts 1e5 style counts
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer count: {text}")
    return int(value)


def _prob(x, name):
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"--{name} must lie in [0, 1], got {x}")


def _positive(x, name):
    if x < 1:
        raise ValidationError(f"--{name} must be >= 1, got {x}")


def resolve_seed(seed) -> int:
    if seed is None:
        env = os.environ.get(SEED_ENV)
        seed = int(env) if env else secrets.randbits(64)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _header(command: str, params: dict) -> list[str]:
    lines = [f"noiselogic {__version__} {command}"]
    lines += [f"{k}={_fmt(v)}" for k, v in sorted(params.items())]
    return lines


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _csv(rows: list[dict], fields, header_lines) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ------------------------------------------------------------

def cmd_gen(args) -> int:
    _positive(args.n_steps, "n-steps")
    _prob(args.p, "p")
    seed = resolve_seed(args.seed)
    clock = ClockConfig(args.n_steps, args.p, seed)
    if args.orthogonal:
        _positive(args.k, "k")
        if args.k * args.p > 1:
            raise ValidationError(f"k * p = {args.k * args.p:g} > 1: orthogonal set infeasible")
        trains = list(generate_orthogonal_set(clock, args.k).trains)
    else:
        _positive(args.count, "count")
        trains = [generate_random_train(clock, i) for i in range(args.count)]
    dump = dump_trains_json if args.format == "json" else dump_trains_text
    _emit(dump(trains, clock), args.output)
    return EXIT_OK


def cmd_detect(args) -> int:
    _positive(args.k, "k")
    _prob(args.p, "p")
    _positive(args.window, "window")
    n_steps = args.n_steps or args.window
    if args.window > n_steps:
        raise ValidationError(f"--window {args.window} exceeds --n-steps {n_steps}")
    if args.k * args.p > 1:
        raise ValidationError(f"k * p = {args.k * args.p:g} > 1: orthogonal set infeasible")
    a, b = _int_list(args.a), _int_list(args.b)
    for name, ids in (("a", a), ("b", b)):
        if any(not 0 <= i < args.k for i in ids):
            raise ValidationError(f"--{name} memberships must lie in 0..{args.k - 1}, got {ids}")
    seed = resolve_seed(args.seed)
    params = {"k": args.k, "a": a, "b": b, "mode": args.mode, "p": args.p,
              "window": args.window, "n_steps": n_steps, "seed": seed}
    report = run_figure2_demo(
        args.k, a, b, ClockConfig(n_steps, args.p, seed), DetectorConfig(args.window, args.mode)
    )
    table = io.StringIO()
    table.write(f"{'component':>9} {'sup':>3} {'verdict':>9} {'step':>5} {'evidence':>8} {'member':>6}\n")
    for r in report.rows:
        step = "-" if r.decision_step is None else r.decision_step
        table.write(f"{r.component_id:>9} {r.superposition:>3} {str(r.verdict):>9} {step:>5} "
                    f"{r.evidence_count:>8} {str(r.member):>6}\n")
    print(table.getvalue(), end="", file=sys.stdout if args.output else sys.stderr)
    if args.format == "json":
        text = report.to_json(params)
    else:
        text = report.to_csv(_header("detect", params))
    _emit(text, args.output)
    if report.errors():
        raise CheckFailed(f"{report.errors()} verdicts contradict membership")
    return EXIT_OK


def _truth_table(circuit: Circuit) -> tuple[int, int]:
    n = len(circuit.inputs)
    combos = list(itertools.product((0, 1), repeat=n))
    cols = [[c[i] for c in combos] for i in range(n)]
    out = run_circuit_array(circuit, cols)
    passed = sum(int(o) == sum(c) % 2 for o, c in zip(out, combos))
    return passed, len(combos)


def cmd_xor_circuit(args) -> int:
    if args.load:
        with open(args.load, encoding="utf-8") as fh:
            circuit = Circuit.from_json(fh.read())
    else:
        _positive(args.n, "n")
        circuit = build_xor_fold(args.n) if args.n != 2 else build_xor_pair()
    n = len(circuit.inputs)
    if n > args.limit:
        raise ValidationError(f"{n} inputs exceed the exhaustive-check limit {args.limit}")
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write(circuit.to_json())
    passed, total = _truth_table(circuit)
    stats = {
        "inputs": n,
        "combinations_passed": passed,
        "combinations": total,
        "xor_blocks": circuit.xor_blocks,
        "neurons": len(circuit.neurons),
        "depth_neurons": circuit.depth(),
        "depth_blocks": xor_block_depth(circuit),
    }
    if args.format == "json":
        text = json.dumps(stats, indent=2) + "\n"
    else:
        text = (f"{passed}/{total} combinations pass\n"
                f"xor_blocks={circuit.xor_blocks} neurons={len(circuit.neurons)} "
                f"depth_blocks={stats['depth_blocks']} depth_neurons={stats['depth_neurons']}\n")
    _emit(text, args.output)
    if passed != total:
        raise CheckFailed(f"{total - passed} truth-table rows disagree with parity")
    return EXIT_OK


def _read_bits(inline, path, name) -> BitString:
    if inline and path:
        raise ValidationError(f"give --{name} or --{name}-file, not both")
    if path:
        with open(path, encoding="utf-8") as fh:
            inline = fh.read()
    if not inline:
        raise ValidationError(f"missing --{name}")
    try:
        return BitString(inline)
    except ValueError as exc:
        raise ValidationError(f"--{name}: {exc}") from None


def cmd_verify(args) -> int:
    a = _read_bits(args.a, args.a_file, "a")
    b = _read_bits(args.b, args.b_file, "b")
    if len(a) != len(b):
        raise ValidationError(f"strings differ in length: {len(a)} vs {len(b)}")
    _positive(args.M, "M")
    _prob(args.p, "p")
    _prob(args.loss, "loss")
    n_steps = args.n_steps or args.M
    if args.M > n_steps:
        raise ValidationError(f"--M {args.M} exceeds --n-steps {n_steps}")
    seed = resolve_seed(args.seed)
    bank = make_reference_bank(len(a), ClockConfig(n_steps, args.p, seed))
    result = verify(a, b, bank, args.M, ChannelModel(args.loss), engine=args.engine)
    params = {"N": len(a), "M": args.M, "p": args.p, "loss": args.loss,
              "n_steps": n_steps, "engine": args.engine, "seed": seed}
    doc = {"params": params, "result": result.to_dict()}
    step = "-" if result.first_mismatch_step is None else result.first_mismatch_step
    line = (f"{result.verdict} first_mismatch_step={step} "
            f"false_accept_bound={result.analytic_false_accept_bound:.4g}\n")
    text = json.dumps(doc, indent=2) + "\n"
    sys.stdout.write(line)
    _emit(text, args.output)
    return EXIT_OK


def cmd_mc(args) -> int:
    Ns, Ms, ds = _int_list(args.N), _int_list(args.M), _int_list(args.d)
    ps, losses = _float_list(args.p), _float_list(args.loss)
    if not (Ns and Ms and ds and ps and losses):
        raise ValidationError("every grid axis needs at least one value")
    for x in Ns:
        _positive(x, "N")
    for x in Ms:
        _positive(x, "M")
    for x in ps:
        _prob(x, "p")
    for x in losses:
        _prob(x, "loss")
    for d in ds:
        if d < 0 or d > min(Ns):
            raise ValidationError(f"--d {d} must lie in 0..{min(Ns)} (smallest N)")
    _positive(args.trials, "trials")
    _positive(args.workers, "workers")
    seed = resolve_seed(args.seed)
    params = {"N": Ns, "M": Ms, "p": ps, "d": ds, "loss": losses,
              "trials": args.trials, "seed": seed}
    rows = [e.row() for e in sweep(Ns, Ms, ps, ds, losses, args.trials, seed, args.workers)]
    if args.format == "json":
        text = json.dumps({"params": params, "rows": rows}, indent=2) + "\n"
    else:
        text = _csv(rows, SWEEP_FIELDS, _header("mc", params))
    _emit(text, args.output)
    return EXIT_OK


def cmd_analyze(args) -> int:
    ps = _float_list(args.p)
    for x in ps:
        _prob(x, "p")
    for name in ("T_max", "M_max", "d_max"):
        _positive(getattr(args, name), name.replace("_", "-"))
    _positive(args.d, "d")
    curves = {"undecided", "error-bound", "agreement"} if args.curve == "all" else {args.curve}
    rows = []
    if "undecided" in curves:
        rows += [{"curve": "undecided", "p": p, "d": "", "x": T, "value": undecided_probability(p, T)}
                 for p in ps for T in range(1, args.T_max + 1)]
    if "error-bound" in curves:
        rows += [{"curve": "error_bound", "p": p, "d": args.d, "x": M, "value": error_bound(M, p, args.d)}
                 for p in ps for M in range(1, args.M_max + 1)]
    if "agreement" in curves:
        rows += [{"curve": "agreement", "p": p, "d": d, "x": d, "value": per_step_agreement_probability(p, d)}
                 for p in ps for d in range(0, args.d_max + 1)]
    params = {"curve": args.curve, "p": ps, "d": args.d, "T_max": args.T_max,
              "M_max": args.M_max, "d_max": args.d_max}
    if args.format == "json":
        text = json.dumps({"params": params, "rows": rows}, indent=2) + "\n"
    else:
        text = _csv(rows, ("curve", "p", "d", "x", "value"), _header("analyze", params))
    _emit(text, args.output)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="noiselogic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of default flag values, keyed by subcommand")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--output", "-o", help="write the report here instead of stdout")
        subs[name] = p
        return p

    p = add("gen", cmd_gen, "generate spike trains")
    p.add_argument("--n-steps", type=int, default=100)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--orthogonal", action="store_true")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = add("detect", cmd_detect, "coincidence detection on two superpositions")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--a", default="0,1", help="component ids in superposition A")
    p.add_argument("--b", default="1,2", help="component ids in superposition B")
    p.add_argument("--mode", choices=[m.value for m in DetectorMode], default="exact_orthogonal")
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--n-steps", type=int, help="train length (default: window)")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("xor-circuit", cmd_xor_circuit, "check neural XOR circuitry against parity")
    p.add_argument("--n", type=int, default=2, help="number of inputs")
    p.add_argument("--limit", type=int, default=6, help="largest N checked exhaustively")
    p.add_argument("--dump", help="write the circuit description JSON here")
    p.add_argument("--load", help="check a circuit description JSON instead of building one")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = add("verify", cmd_verify, "run one string verification")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--a-file")
    p.add_argument("--b-file")
    p.add_argument("--M", type=int, default=83)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--loss", type=float, default=0.0)
    p.add_argument("--n-steps", type=int, help="train length (default: M)")
    p.add_argument("--engine", choices=("direct", "neural_circuit"), default="direct")
    p.add_argument("--seed", type=int)

    p = add("mc", cmd_mc, "Monte Carlo sweep of acceptance rates")
    p.add_argument("--N", default="32")
    p.add_argument("--M", default="1,4,8")
    p.add_argument("--p", default="0.5")
    p.add_argument("--d", default="1")
    p.add_argument("--loss", default="0")
    p.add_argument("--trials", type=_count, default=100000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("analyze", cmd_analyze, "closed-form error and latency curves")
    p.add_argument("--curve", choices=("all", "undecided", "error-bound", "agreement"), default="all")
    p.add_argument("--p", default="0.1,0.25,0.5")
    p.add_argument("--d", type=int, default=1, help="Hamming distance for the error-bound curve")
    p.add_argument("--T-max", dest="T_max", type=int, default=50)
    p.add_argument("--M-max", dest="M_max", type=int, default=90)
    p.add_argument("--d-max", dest="d_max", type=int, default=10)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser, subs


def _apply_config(path: str, command: str, subs: dict):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    section = doc.get(command, {})
    if not isinstance(section, dict):
        raise ValidationError(f"config section {command!r} must be an object")
    subs[command].set_defaults(**{k.replace("-", "_"): v for k, v in section.items()})


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            try:
                _apply_config(args.config, args.command, subs)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, InfeasibleSetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
