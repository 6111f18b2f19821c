"""Command-line front end: ``holoqc {synth,sweep,ftcheck,catprep,schedule,codereport}``.

Times are given in units of ``T_d = pi/2``.  Exit codes: 0 success, 1 check
failed, 2 usage error, 3 numerical non-convergence, 4 fault-tolerance
violation or ambiguous verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Callable, Sequence

from . import ft
from .evolve import ConvergenceError
from .holonomy import GapClosed, analyze_plan
from .paths import T_D, GatePlan, path_cnot, path_rz, path_x_benchmark, path_xs
from .pauli import PauliString, SubsystemCode, bacon_shor_9, decode_single, syndrome
from .schedule import MODELS, best_transversal_schedule, gauge_candidates, transversal_schedule

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC, EXIT_FT = 0, 1, 2, 3, 4

GATES: dict[str, Callable[[float], GatePlan]] = {
    "rz": lambda t: path_rz(t),
    "xs": lambda t: path_xs(t),
    "x-bench": lambda t: path_x_benchmark(t),
    "cnot": lambda t: path_cnot(t),
}
CODES: dict[str, Callable[[], SubsystemCode]] = {"bs9": bacon_shor_9}
FT_GATES = ("rz-step", "cnot")
SWEEP_COLUMNS = ["th_factor", "delta_spectral", "delta_fidelity", "leakage", "steps_used", "oracle_distance"]


class UsageError(Exception):
    pass


def _num(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def _positive(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _tolerance(text: str) -> float:
    val = float(text)
    if not 0 < val < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return val


def _factor_list(text: str) -> list[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if any(not v > 0 for v in vals):
        raise UsageError("th factors must be positive")
    return vals


def _emit(path: str | None, text: str) -> None:
    if path and path != "-":
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _report(gate: str, th_factor: float) -> dict:
    plan = GATES[gate](th_factor * T_D)
    rep = analyze_plan(plan, max_leakage=1.0)
    out = rep.as_dict()
    out["gate"] = gate
    out["th_factor"] = th_factor
    return out


def cmd_synth(args) -> int:
    out = _report(args.gate, args.th_factor)
    _emit(args.output, _json(out))
    return EXIT_OK if out["delta_spectral"] <= args.tolerance else EXIT_FAIL


def cmd_sweep(args) -> int:
    factors = _factor_list(args.th_factors)
    if not factors:
        raise UsageError("empty th factor list")
    rows = [_report(args.gate, f) for f in factors]
    _emit(args.output, _csv(SWEEP_COLUMNS, [[_num(r[c]) for c in SWEEP_COLUMNS] for r in rows]))
    return EXIT_OK


def _when_grid(text: str | None) -> tuple[float, ...]:
    if text is None:
        return ft.WHEN_GRID
    vals = tuple(float(v) for v in text.split(",") if v.strip())
    if not vals or any(not 0 <= v <= 1 for v in vals):
        raise UsageError("--when values must lie in [0, 1]")
    return vals


def cmd_ftcheck(args) -> int:
    code = CODES[args.code]()
    t = args.th_factor * T_D
    when = _when_grid(args.when)
    if args.gate == "rz-step":
        plan = ft.transversal_rz(code, t)
        events = ft.exhaustive_events(plan, when)
        checkpoint = 1
    else:
        plan = ft.transversal_cnot(code, t)
        events = ft.sample_events(plan, args.events, args.seed, when)
        checkpoint = 4
    extra = PauliString.from_label(args.inject_extra) if args.inject_extra else None
    if extra is not None and extra.n_qubits != plan.n_qubits:
        raise UsageError(f"--inject-extra needs {plan.n_qubits} symbols")
    rows = ft.ft_sweep(plan, events, seed=args.seed, extra=extra, checkpoint_every=checkpoint)
    _emit(args.output, _csv(ft.CSV_HEADER, [r.csv_fields() for r in rows]))
    failed = any(not r.verdict.correctable or r.verdict.ambiguous for r in rows)
    return EXIT_FT if failed else EXIT_OK


def cmd_catprep(args) -> int:
    t = args.th_factor * T_D
    state, fid = ft.cat_prep(args.n, t)
    out = {"n": args.n, "th_factor": args.th_factor, "fidelity": fid, "infidelity": 1 - fid}
    if args.parity and args.n >= 2:
        p = ft.parity_gadget(state, t)
        out["parity_outcome_probabilities"] = [float(v) for v in p]
    _emit(args.output, _json(out))
    return EXIT_OK if 1 - fid <= args.tolerance else EXIT_FAIL


def cmd_schedule(args) -> int:
    code = CODES[args.code]()
    best = best_transversal_schedule(code, args.start, args.model, args.repetitions)
    cands = gauge_candidates(code, args.start)
    single = transversal_schedule(code, {q: c[0] for q, c in cands.items()}, args.model)
    out = {
        "code": args.code,
        "model": args.model,
        "single_gate_rounds": len(single.rounds),
        "best_slowdown": str(best.slowdown),
        "best_slowdown_value": float(best.slowdown),
        "repetitions": best.repetitions,
        "rounds": [[[q, g.label] for q, g in r] for r in best.rounds],
        "conflict_free": best.conflict_free(),
        "reference_slowdown": 1.5,
        "within_reference_band": Fraction(3, 2) <= best.slowdown <= 2,
    }
    _emit(args.output, _json(out))
    return EXIT_OK if out["conflict_free"] else EXIT_FAIL


def cmd_codereport(args) -> int:
    code = CODES[args.code]()
    code.validate()
    n = code.n_qubits
    corrected = 0
    for q in range(n):
        for p in "XYZ":
            e = PauliString.single(n, q, p)
            if code.in_gauge_group(decode_single(code, syndrome(code, e)) * e):
                corrected += 1
    out = {
        "code": args.code,
        "n_qubits": n,
        "n_logical": code.n_logical,
        "stabilizers": [s.label for s in code.stabilizer_gens],
        "gauge_generators": [g.label for g in code.gauge_gens],
        "logical_x": [p.label for p in code.logical_x],
        "logical_z": [p.label for p in code.logical_z],
        "single_errors_corrected": corrected,
        "single_errors_total": 3 * n,
    }
    _emit(args.output, _json(out))
    return EXIT_OK if corrected == 3 * n else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holoqc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, th_default: float):
        sp.add_argument("--th-factor", type=_positive, default=th_default, help="segment duration in units of T_d")
        sp.add_argument("--output", "-o", default=None, help="output file (default stdout)")

    s = sub.add_parser("synth", help="synthesize one gate and report its error")
    s.add_argument("gate", choices=sorted(GATES))
    common(s, 50.0)
    s.add_argument("--tolerance", type=_tolerance, default=1e-5)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("sweep", help="gate error over several durations (CSV)")
    s.add_argument("gate", choices=sorted(GATES))
    s.add_argument("th_factors", help="comma-separated durations in units of T_d")
    s.add_argument("--output", "-o", default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("ftcheck", help="single-error injection sweep on a code (CSV)")
    s.add_argument("--code", choices=sorted(CODES), default="bs9")
    s.add_argument("--gate", choices=FT_GATES, default="rz-step")
    common(s, 17.0)
    s.add_argument("--when", default=None, help="comma-separated injection fractions (default 0.1..0.9)")
    s.add_argument("--events", type=int, default=200, help="sampled events for the cnot plan")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-extra", default=None, help="Pauli label applied after the plan (detector test)")
    s.set_defaults(func=cmd_ftcheck)

    s = sub.add_parser("catprep", help="cat-state preparation and parity check")
    s.add_argument("--n", type=int, default=3, choices=(1, 2, 3, 4))
    common(s, 17.0)
    s.add_argument("--tolerance", type=_tolerance, default=1e-5)
    s.add_argument("--parity", action="store_true", help="also run the parity gadget on qubits 0 and 1")
    s.set_defaults(func=cmd_catprep)

    s = sub.add_parser("schedule", help="round schedule of a transversal step")
    s.add_argument("--code", choices=sorted(CODES), default="bs9")
    s.add_argument("--model", choices=MODELS, default="shared-passive")
    s.add_argument("--start", choices=("X", "Z"), default="Z")
    s.add_argument("--repetitions", type=int, default=2)
    s.add_argument("--output", "-o", default=None)
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("codereport", help="code generators and decoder coverage")
    s.add_argument("--code", choices=sorted(CODES), default="bs9")
    s.add_argument("--output", "-o", default=None)
    s.set_defaults(func=cmd_codereport)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"holoqc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, GapClosed) as exc:
        print(f"holoqc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
