"""``coherence-kit`` command line.

Exit codes: 0 success, 1 invalid input (diagnostic on stderr), 2 a
requested check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, measures
from .classify import classify_channel, classify_povm, classify_unitary
from .errors import CoherenceKitError
from .quantum import (
    channel_from_json,
    matrix_from_json,
    matrix_to_json,
    povm_from_json,
    povm_to_json,
    state_from_json,
    state_to_json,
)
from .structure import StructureSpec, TranslationDistribution, mode_project, structure_from_json

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CHECK_FAILED = 2


class UsageError(Exception):
    """Bad flag or file; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(x: float) -> float:
    """Round to 12 significant digits for printing."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def _round_floats(obj):
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _load_json(path: str, flag: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"{flag}: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag}: {path} is not valid JSON: {exc}") from None


def _wrap(flag: str, path: str, fn, doc):
    try:
        return fn(doc)
    except (CoherenceKitError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{flag}: {path}: {exc}") from None


def _structure(args, flag: str = "--structure", path: str | None = None, fallback: dict | None = None) -> StructureSpec:
    path = path if path is not None else getattr(args, flag.lstrip("-").replace("-", "_"), None)
    if path:
        return _wrap(flag, path, structure_from_json, _load_json(path, flag))
    if fallback is not None:
        return _wrap("structure embedded in input", "<input>", structure_from_json, fallback)
    raise UsageError(f"{flag} is required")


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(args, doc):
    _emit(args, json.dumps(_round_floats(doc), indent=2) + "\n")


def _check_tol(args):
    if args.tol <= 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")


# --- subcommands ---------------------------------------------------------------


def cmd_classify(args) -> int:
    sources = [x for x in (args.channel, args.unitary, args.povm) if x]
    if len(sources) != 1:
        raise UsageError("classify needs exactly one of --channel, --unitary, --povm")
    if args.channel:
        doc = _load_json(args.channel, "--channel")
        channel = _wrap("--channel", args.channel, channel_from_json, doc)
        embedded = doc.get("structure") if isinstance(doc, dict) else None
        s_in = _structure(args, fallback=embedded)
        s_out = _structure(args, "--structure-out", args.structure_out) if args.structure_out else (
            _structure(args, fallback=doc.get("structure_out")) if isinstance(doc, dict) and "structure_out" in doc else s_in
        )
        report = _wrap("--channel", args.channel, lambda ch: classify_channel(ch, s_in, s_out, args.tol), channel)
    elif args.unitary:
        doc = _load_json(args.unitary, "--unitary")
        v = _wrap("--unitary", args.unitary, lambda d: matrix_from_json(d["matrix"]), doc)
        s = _structure(args, fallback=doc.get("structure"))
        report = _wrap("--unitary", args.unitary, lambda m: classify_unitary(m, s, args.tol), v)
    else:
        doc = _load_json(args.povm, "--povm")
        povm = _wrap("--povm", args.povm, povm_from_json, doc)
        s = _structure(args, fallback=doc.get("structure"))
        report = _wrap("--povm", args.povm, lambda p: classify_povm(p, s, args.tol), povm)
    _emit_json(args, report.to_json())
    if args.expect:
        wanted = [c.strip().lower() for c in args.expect.split(",") if c.strip()]
        unknown = [c for c in wanted if c not in report.verdicts]
        if unknown:
            raise UsageError(f"--expect: unknown class(es) {unknown}; known: {sorted(report.verdicts)}")
        failed = [c for c in wanted if not report.verdicts[c]]
        if failed:
            print(f"expected membership failed: {', '.join(failed)}", file=sys.stderr)
            return EXIT_CHECK_FAILED
    return EXIT_OK


def _load_dist(args) -> TranslationDistribution | None:
    if not args.dist:
        return None
    doc = _load_json(args.dist, "--dist")
    return _wrap("--dist", args.dist, lambda d: TranslationDistribution.from_atoms(d["atoms"]), doc)


def _measure_spec(ident: str, s: StructureSpec, dist) -> measures.MeasureSpec:
    if ident.startswith("linmode:"):
        path = ident.split(":", 1)[1]
        doc = _load_json(path, "--measure linmode")
        return _wrap("--measure", path, lambda d: measures.linmode_from_doc(d, s), doc)
    return _wrap("--measure", ident, lambda i: measures.parse_measure(i, s, dist), ident)


def cmd_measure(args) -> int:
    doc = _load_json(args.state, "--state")
    rho = _wrap("--state", args.state, state_from_json, doc)
    s = _structure(args, fallback=doc.get("structure"))
    if s.dim != rho.dim:
        raise UsageError(f"--structure has dim {s.dim} but --state has dim {rho.dim}")
    dist = _load_dist(args)
    results = []
    for ident in args.measure:
        spec = _measure_spec(ident, s, dist)
        if ident.startswith("nmr:"):
            k = measures._parse_mode(ident.split(":", 1)[1])
            lower, value, upper = measures.nmr_bounds(rho.matrix, k, s)
            results.append({"measure": ident, "value": value, "lower": lower, "upper": upper})
            continue
        value = _wrap("--measure", ident, lambda sp: sp(rho.matrix, s), spec)
        results.append({"measure": ident, "value": value, "monotone_classes": sorted(spec.monotone_classes)})
    _emit_json(args, results[0] if len(results) == 1 else results)
    return EXIT_OK


def modes_table(rho: np.ndarray, s: StructureSpec) -> list[dict]:
    """One row per mode: Frobenius norm, trace norm and sqrt(d) * Frobenius norm."""
    rows = []
    for omega in s.modes:
        lower, value, upper = measures.nmr_bounds(rho, omega, s)
        rows.append({"omega": omega, "frobenius": lower, "trace_norm": value, "sqrt_d_frobenius": upper})
    return rows


def cmd_modes(args) -> int:
    doc = _load_json(args.state, "--state")
    rho = _wrap("--state", args.state, state_from_json, doc)
    s = _structure(args, fallback=doc.get("structure"))
    if s.dim != rho.dim:
        raise UsageError(f"--structure has dim {s.dim} but --state has dim {rho.dim}")
    rows = modes_table(rho.matrix, s)
    if args.format == "json":
        _emit_json(args, rows)
        return EXIT_OK
    lines = ["omega,frobenius,trace_norm,sqrt_d_frobenius"]
    for r in rows:
        omega = r["omega"]
        label = ";".join(f"{x:.12g}" for x in omega) if isinstance(omega, tuple) else f"{omega:.12g}"
        lines.append(f"{label},{r['frobenius']:.12g},{r['trace_norm']:.12g},{r['sqrt_d_frobenius']:.12g}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    s = _structure(args) if args.structure else harness.ladder(args.dim)
    if args.structure and args.dim is not None and args.dim != s.dim:
        raise UsageError(f"--dim {args.dim} disagrees with --structure dim {s.dim}")
    if args.object == "channel":
        cls = args.cls.lower()
        if cls not in harness.CHANNEL_CLASSES:
            raise UsageError(f"--class must be one of {', '.join(harness.CHANNEL_CLASSES)}, got {args.cls!r}")
        ch = harness.sample_channel(cls, s, s, args.kraus, args.seed)
        doc = ch.to_json()
        doc["structure"] = s.to_json()
        doc["class"] = cls
    elif args.object == "state":
        doc = state_to_json(harness.sample_state(s.dim, args.seed).matrix)
        doc["structure"] = s.to_json()
    elif args.object == "incoherent-state":
        doc = state_to_json(harness.sample_incoherent_state(s, args.seed).matrix)
        doc["structure"] = s.to_json()
    elif args.object == "unitary":
        doc = {"dim": s.dim, "matrix": matrix_to_json(harness.sample_unitary(s.dim, args.seed))}
    else:
        doc = povm_to_json(harness.sample_povm(s.dim, 3, args.seed))
    _emit(args, json.dumps(doc) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    cls = args.cls.lower()
    if cls not in harness.CHANNEL_CLASSES:
        raise UsageError(f"--class must be one of {', '.join(harness.CHANNEL_CLASSES)}, got {args.cls!r}")
    s = _structure(args) if args.structure else harness.ladder(args.dim)
    dist = _load_dist(args)
    spec = _measure_spec(args.measure, s, dist)
    report = harness.monotonicity_sweep(
        spec, cls, args.trials, s.dim, args.seed, structure=s, n_kraus=args.kraus,
        tol=args.monotone_tol, inject_witness=not args.no_witness,
    )
    _emit(args, report.to_csv())
    if args.report:
        Path(args.report).write_text(json.dumps(_round_floats(report.to_json()), indent=2) + "\n", encoding="utf-8")
    if args.expect == "monotone" and report.violated:
        print(f"{args.measure}: monotonicity violated under {cls} (max {report.max_violation:.3e})", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if args.expect == "violated" and not report.violated:
        print(f"{args.measure}: no violation found under {cls}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.which != "inclusions":
        raise UsageError(f"unknown demo {args.which!r}; available: inclusions")
    checks = harness.canonical_counterexamples(args.tol)
    width = max(len(c.name) for c in checks)
    lines = [f"{'check'.ljust(width)}  {'expected':<28} {'observed':<28} result"]
    for c in checks:
        lines.append(f"{c.name.ljust(width)}  {str(c.expected):<28} {str(c.observed):<28} {'PASS' if c.passed else 'FAIL'}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="classifier tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", help="write result here instead of stdout")

    parser = _Parser(prog="coherence-kit", description="Coherence resource-theory toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common], help="TC/DC/IP verdicts for a channel, unitary or POVM")
    p.add_argument("--channel")
    p.add_argument("--unitary")
    p.add_argument("--povm")
    p.add_argument("--structure")
    p.add_argument("--structure-out")
    p.add_argument("--expect", help="comma-separated classes that must hold, e.g. tc,dc")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("measure", parents=[common], help="evaluate coherence measures on a state")
    p.add_argument("--state", required=True)
    p.add_argument("--structure")
    p.add_argument("--measure", action="append", required=True, help="e.g. gamma, gamma_q:0.5, wyd:0.5, mode:1")
    p.add_argument("--dist", help="translation distribution JSON for gamma_p / rp")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("modes", parents=[common], help="per-mode norm table of a state")
    p.add_argument("--state", required=True)
    p.add_argument("--structure")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("sample", parents=[common], help="draw a random channel, state, unitary or POVM")
    p.add_argument("--object", choices=("channel", "state", "incoherent-state", "unitary", "povm"), default="channel")
    p.add_argument("--class", dest="cls", default="tc")
    p.add_argument("--dim", type=int)
    p.add_argument("--structure")
    p.add_argument("--kraus", type=int, default=2)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", parents=[common], help="monotonicity sweep, CSV rows on stdout")
    p.add_argument("--measure", required=True)
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--structure")
    p.add_argument("--kraus", type=int, default=2)
    p.add_argument("--dist")
    p.add_argument("--monotone-tol", type=float, default=harness.MONOTONE_TOL)
    p.add_argument("--no-witness", action="store_true", help="do not inject the hand witness as trial 0")
    p.add_argument("--report", help="also write the JSON SweepReport here")
    p.add_argument("--expect", choices=("monotone", "violated"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo", parents=[common], help="canonical counterexample table")
    p.add_argument("which", nargs="?", default="inclusions")
    p.set_defaults(func=cmd_demo)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required: classify, measure, modes, sample, sweep, demo")
        _check_tol(args)
        if getattr(args, "dim", None) is not None and args.dim < 1:
            raise UsageError(f"--dim must be >= 1, got {args.dim}")
        if args.command in ("sample", "sweep") and getattr(args, "dim", None) is None and not getattr(args, "structure", None):
            raise UsageError("--dim or --structure is required")
        return args.func(args)
    except UsageError as exc:
        print(f"coherence-kit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoherenceKitError as exc:
        print(f"coherence-kit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
