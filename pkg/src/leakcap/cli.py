"""Command line entry point: ``leakcap {solve,check,info,examples}``.

Exit codes of ``solve``: 0 exact, 2 approximate (a strict constraint binds),
3 infeasible, 4 no valid stationary point, 1 for unreadable input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .channel import entropy
from .kkt import SolverOptions, Status, leakage_report, solve
from .oracle import blahut_arimoto, constrained_brute_force
from .problem import ProblemError, ProblemFile, load_problem

EXIT_CODES = {
    Status.EXACT: 0,
    Status.APPROXIMATE: 2,
    Status.INFEASIBLE: 3,
    Status.NO_VALID_STATIONARY_POINT: 4,
}
EXIT_BAD_INPUT = 1

BUNDLED = ("onion_ge.json", "onion_gt100.json", "threaded.json", "threaded_secure.json")

NAT_NOTE = ("note: capacities are in bits; the nat value is shown in parentheses. "
            "The figure 0.1069 sometimes quoted for this program is the nat value, not bits.")


@dataclass(frozen=True)
class SolveFlags:
    tol: float | None = None
    seed: int | None = None
    oracle: bool | None = None
    first_valid: bool = False


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _oracle(problem: ProblemFile, ch, seed: int) -> dict:
    cs = problem.constraint_set()
    ba = blahut_arimoto(ch, tol=1e-10)
    if len(cs) == 0:
        res, method = ba, "blahut-arimoto"
    else:
        mode = "auto" if ch.n_inputs <= 4 else "ascent"
        res = constrained_brute_force(ch, cs, mode=mode, seed=seed)
        method = f"constrained-{mode}"
    return {
        "method": method,
        "capacity_bits": _num(res.capacity_bits),
        "argmax": None if res.argmax is None else [float(x) for x in res.argmax],
        "iterations": int(res.iterations),
        "unconstrained_bits": ba.capacity_bits,
    }


def run_solve(problem: ProblemFile, flags: SolveFlags = SolveFlags()) -> tuple:
    """Solve a problem; returns ``(report_document, exit_code)``."""
    ch = problem.channel()
    cs = problem.constraint_set()
    seed = problem.options.seed if flags.seed is None else flags.seed
    tol = flags.tol if flags.tol is not None else problem.options.tol
    use_oracle = problem.options.oracle if flags.oracle is None else flags.oracle
    opts = SolverOptions(seed=seed, first_valid=flags.first_valid,
                         **({"residual_tol": tol} if tol is not None else {}))
    sol = solve(ch, cs, opts)
    labels = list(ch.input_labels)
    doc = {
        "tool": "leakcap",
        "version": __version__,
        "seed": seed,
        "problem": {
            "name": problem.name,
            "kind": problem.kind,
            "secrets": labels,
            "observations": list(ch.output_labels),
            "constraints": [
                {"name": c.name,
                 "coeffs": {lab: float(v) for lab, v in zip(labels, c.coeffs) if v != 0.0},
                 "relation": c.relation.value, "bound": c.bound}
                for c in cs
            ],
        },
        "status": sol.status.value,
    }
    if sol.ok:
        rep = leakage_report(ch, sol)
        doc.update({
            "capacity_bits": rep.capacity_bits,
            "capacity_nats": rep.capacity_nats,
            "prior_entropy_bits": rep.entropy_bits,
            "leakage_ratio_percent": rep.ratio_percent,
            "h_star": dict(zip(labels, rep.h_star)),
            "lambda0": _num(rep.lambda0),
            "lambdas": {c.name: _num(v) for c, v in zip(cs, rep.lambdas)},
            "active_set": [cs[k].name for k in rep.active_set],
        })
    doc["diagnostics"] = {
        "max_residual": _num(sol.diagnostics.max_residual),
        "iterations": sol.diagnostics.iterations,
        "restarts": sol.diagnostics.restarts,
        "zero_set": [labels[i] for i in sol.diagnostics.zero_set],
        "candidates_tried": sol.diagnostics.candidates_tried,
        "oracle_fallback": sol.diagnostics.oracle_fallback,
        "messages": list(sol.diagnostics.messages),
        "reason": sol.reason,
    }
    if use_oracle:
        orc = _oracle(problem, ch, seed)
        if sol.ok and orc["capacity_bits"] is not None:
            orc["abs_difference_bits"] = abs(orc["capacity_bits"] - sol.capacity_bits)
        doc["oracle"] = orc
    return doc, EXIT_CODES[sol.status]


def _fmt(x, digits=4):
    return "n/a" if x is None else f"{x:.{digits}f}"


def render_text(doc: dict, kind: str) -> str:
    p = doc["problem"]
    lines = [f"problem: {p['name'] or '(unnamed)'} [{p['kind']}], "
             f"{len(p['secrets'])} secrets, {len(p['observations'])} observations"]
    for c in p["constraints"]:
        terms = " ".join(f"{v:+g}*{k}" for k, v in c["coeffs"].items())
        lines.append(f"  constraint {c['name']}: {terms} {c['relation']} {c['bound']:g}")
    lines.append(f"status: {doc['status']}")
    if "capacity_bits" in doc:
        lines.append(f"capacity: {_fmt(doc['capacity_bits'])} bits "
                     f"({_fmt(doc['capacity_nats'])} nats)")
        lines.append(f"prior entropy H(h*): {_fmt(doc['prior_entropy_bits'])} bits")
        ratio = doc["leakage_ratio_percent"]
        lines.append("leakage ratio: " + ("undefined (H = 0)" if ratio is None else f"{ratio:.1f}%"))
        lines.append("h*: " + ", ".join(f"{k}={v:.4f}" for k, v in doc["h_star"].items()))
        mult = [f"lambda0={_fmt(doc['lambda0'])}"]
        mult += [f"{k}={_fmt(v)}" for k, v in doc["lambdas"].items()]
        lines.append("multipliers: " + ", ".join(mult))
        lines.append("active: " + (", ".join(doc["active_set"]) or "none"))
        if doc["status"] == Status.APPROXIMATE.value:
            lines.append("a strict constraint binds: the capacity is a supremum, "
                         "approached but not attained")
    else:
        lines.append(f"reason: {doc['diagnostics']['reason']}")
    d = doc["diagnostics"]
    lines.append(f"residual: {d['max_residual']!s}, newton iterations: {d['iterations']}, "
                 f"restarts: {d['restarts']}")
    if "oracle" in doc:
        o = doc["oracle"]
        line = f"oracle ({o['method']}): {_fmt(o['capacity_bits'])} bits"
        if "abs_difference_bits" in o:
            line += f", |difference| = {o['abs_difference_bits']:.2e}"
        lines.append(line)
        if o["method"] != "blahut-arimoto":
            lines.append(f"unconstrained capacity (blahut-arimoto): {_fmt(o['unconstrained_bits'])} bits")
    if kind == "program":
        lines.append(NAT_NOTE)
    return "\n".join(lines)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


def _load(path):
    try:
        return load_problem(path)
    except OSError as exc:
        raise ProblemError(f"{path}: {exc.strerror}") from None


def cmd_solve(args) -> int:
    problem = _load(args.file)
    flags = SolveFlags(tol=args.tol, seed=args.seed, oracle=args.oracle or None,
                       first_valid=args.first_valid)
    doc, code = run_solve(problem, flags)
    if args.format == "machine":
        print(_dump(doc))
    else:
        print(render_text(doc, problem.kind))
    if code:
        print(f"exit {code}: {doc['status']}", file=sys.stderr)
    return code


def cmd_check(args) -> int:
    problem = _load(args.file)
    ch = problem.channel()
    seed = problem.options.seed if args.seed is None else args.seed
    orc = _oracle(problem, ch, seed)
    if args.format == "machine":
        print(_dump({"tool": "leakcap", "version": __version__, "seed": seed, "oracle": orc}))
    else:
        print(f"oracle ({orc['method']}): {_fmt(orc['capacity_bits'])} bits")
        if orc["argmax"] is not None:
            print("argmax: " + ", ".join(f"{k}={v:.4f}" for k, v in zip(ch.input_labels, orc["argmax"])))
    return 0 if orc["capacity_bits"] is not None else EXIT_CODES[Status.INFEASIBLE]


def cmd_info(args) -> int:
    problem = _load(args.file)
    ch = problem.channel()
    sol = solve(ch)
    info = {
        "secrets": ch.n_inputs,
        "observations": ch.n_outputs,
        "deterministic": ch.is_deterministic(),
        "constraints": len(problem.constraints),
        "unconstrained_capacity_bits": _num(sol.capacity_bits),
        "uniform_prior_entropy_bits": entropy(np.full(ch.n_inputs, 1.0 / ch.n_inputs)),
    }
    if args.format == "machine":
        print(_dump(info))
    else:
        for k, v in info.items():
            print(f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}")
    return 0


def bundled_text(name: str) -> str:
    return resources.files("leakcap").joinpath("data", name).read_text(encoding="utf-8")


def cmd_examples(args) -> int:
    out = Path(args.directory)
    out.mkdir(parents=True, exist_ok=True)
    for name in BUNDLED:
        (out / name).write_text(bundled_text(name), encoding="utf-8")
        print(out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakcap",
                                     description="Maximum information leakage under prior constraints.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solver=True):
        p.add_argument("file", help="problem file (JSON)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("text", "machine"), default="text")
        if solver:
            p.add_argument("--tol", type=float, default=None, help="Newton residual tolerance")
            p.add_argument("--oracle", action="store_true", help="cross-check with a numerical oracle")
            p.add_argument("--first-valid", action="store_true",
                           help="stop at the first valid active set")

    p = sub.add_parser("solve", help="solve the KKT system and report the capacity")
    common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("check", help="run the numerical oracle only")
    common(p, solver=False)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("info", help="model statistics")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.set_defaults(func=cmd_info)
    p = sub.add_parser("examples", help="write the bundled problem files")
    p.add_argument("directory", nargs="?", default=".")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
