"""Command-line front end.

Every invocation prints one JSON report on stdout::

    {"command": ..., "inputs_digest": ..., "payload": {...}, "status": ...}

and a one-line summary on stderr.  Exit codes: 0 ok, 2 violated (a
certified bound failed), 1 error (bad input, I/O, engine failure).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import acceptance
from .engine import verify as verify_sides
from .engine import compute_sides
from .errors import ESVerifyError
from .flows import decompose_cycles, is_circulation, min_max_cycle_length, refined_constant
from .harmonic import rho_bound_check, rotation_ratio
from .model import build_builtin, build_function, parse_function, parse_model
from .sampler import (
    SignFlipConfig,
    estimate_rotation_sides,
    estimate_sign_flip_sides,
)
from .spectral import BOUND_TOL, assemble_forms, certify, max_generalized_eigenvalue

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise UsageError(message)


# ---------------------------------------------------------------------------
# JSON output


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj: Any) -> str:
    """JSON text with floats written to 17 significant digits."""
    obj = _plain(obj)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        if not any(c in text for c in ".eEn"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {dumps(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _digest(command: str, args: dict, files: dict[str, str]) -> str:
    blob = json.dumps({"command": command, "args": args, "files": files}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ESVerifyError(f"cannot read {path}: {exc.strerror or exc}") from None


# ---------------------------------------------------------------------------
# Commands. Each returns (payload, violated, summary, files_read).


def cmd_verify(args):
    model_text, fn_text = _read(args.model), _read(args.function)
    model = parse_model(model_text)
    f = parse_function(fn_text, model)
    report = verify_sides(model, f)
    payload = report.to_dict()
    payload.update(
        n=model.n,
        bound_kind=report.bound_kind,
        cauchy_schwarz_holds=report.cauchy_schwarz_holds,
    )
    summary = f"lhs={report.lhs:.6g} rhs_sum={report.rhs_sum:.6g} ratio={report.ratio} bound={report.bound:.6g}"
    return payload, not report.satisfied, summary, {"model": model_text, "function": fn_text}


def cmd_worst_case(args):
    text = _read(args.model)
    model = parse_model(text)
    cert = certify(model, solver=args.solver)
    summary = f"lambda_max={cert.worst.lambda_max:.10g} tightest bound={cert.tightest:.10g}"
    return cert.to_dict(), not cert.passed, summary, {"model": text}


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def cmd_rho(args):
    ok, diag = rho_bound_check(_int_list(args.k))
    summary = f"rho={diag['rho']:.10g} <= {diag['kappa_half_bound']:.10g}: {ok}"
    return diag, not ok, summary, {}


def cmd_decompose(args):
    text = _read(args.model)
    model = parse_model(text)
    pairs = []
    for i, pair in enumerate(model.pairs):
        entry = {"index": i, "is_circulation": is_circulation(pair)}
        if entry["is_circulation"]:
            dec = decompose_cycles(pair)
            entry.update(dec.to_dict())
            err = float(np.abs(dec.reconstruct() - pair.joint).max())
            entry["reconstruction_error"] = err
            if args.seed is not None:
                entry["min_max_cycle_length"] = min_max_cycle_length(pair, 100, args.seed)
        pairs.append(entry)
    payload = {"pairs": pairs}
    if model.all_identically_distributed:
        payload["refined_constant"] = refined_constant(model)
    bad = any(p.get("reconstruction_error", 0.0) > 1e-12 for p in pairs)
    summary = f"{len(pairs)} pair(s), refined constant {payload.get('refined_constant')}"
    return payload, bad, summary, {"model": text}


def cmd_counterexample(args):
    if args.kind == "rotation":
        ratio = rotation_ratio(args.n, args.eps)
        payload = {
            "n": args.n,
            "eps": args.eps,
            "lhs": 2 * math.sin(args.n * args.eps) ** 2,
            "rhs_term": 2 * math.sin(args.eps) ** 2,
            "ratio": ratio,
            "limit": args.n,
        }
        return payload, ratio > args.n + BOUND_TOL, f"ratio={ratio:.10g} limit={args.n}", {}
    model = build_builtin("three_point_different_law", args.n)
    sides = compute_sides(model, build_function("product_sign", model))
    lam = max_generalized_eigenvalue(assemble_forms(model)).lambda_max
    payload = sides.to_dict()
    payload.update(n=args.n, lambda_max=lam, limit=args.n)
    bad = not (sides.lhs == args.n**2 and sides.rhs_sum == args.n and abs(lam - args.n) <= BOUND_TOL)
    return payload, bad, f"lhs={sides.lhs:g} rhs_sum={sides.rhs_sum:g} lambda_max={lam:.10g}", {}


def _function_spec(args) -> tuple[str, list[float], dict]:
    if args.function:
        text = _read(args.function)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ESVerifyError(f"malformed function file: {exc}") from None
        if not isinstance(doc, dict) or "builtin" not in doc:
            raise ESVerifyError('sampler function file needs a "builtin" entry')
        return doc["builtin"], list(doc.get("params", [])), {"function": text}
    params = [float(x) for x in args.params.split(",")] if args.params else []
    return args.builtin, params, {}


def cmd_sample(args):
    if args.kind == "poincare":
        name, params, files = _function_spec(args)
        cfg = SignFlipConfig(args.n, args.p, args.samples, args.seed, name, tuple(params))
        res = estimate_sign_flip_sides(cfg)
        payload = {
            "function": name,
            "params": list(cfg.params),
            "n": cfg.n,
            "p": cfg.p,
            "lhs": res.lhs.to_dict(),
            "rhs": res.poincare_rhs.to_dict(),
            "rhs_terms": [t.to_dict() for t in res.rhs_terms],
            "flip_terms": [t.to_dict() for t in res.flip_terms],
            "bound_holds": res.bound_holds,
            "seed": cfg.seed,
            "samples": cfg.samples,
        }
        summary = f"lhs={res.lhs.mean:.6g}+-{res.lhs.std_error:.2g} rhs={res.poincare_rhs.mean:.6g}"
        return payload, not res.bound_holds, summary, files
    res = estimate_rotation_sides(args.n, args.eps, args.samples, args.seed)
    payload = {
        "n": args.n,
        "eps": args.eps,
        "lhs": res.lhs.to_dict(),
        "lhs_closed_form": 2 * math.sin(args.n * args.eps) ** 2,
        "rhs_terms": [t.to_dict() for t in res.rhs_terms],
        "rhs_term_closed_form": 2 * math.sin(args.eps) ** 2,
        "rhs": res.rhs_sum.to_dict(),
        "ratio": res.ratio,
        "ratio_stderr": res.ratio_se,
        "bound_holds": res.ratio is None or res.ratio <= args.n + 3 * (res.ratio_se or 0.0),
        "seed": args.seed,
        "samples": args.samples,
    }
    summary = f"lhs={res.lhs.mean:.6g}+-{res.lhs.std_error:.2g} closed form {payload['lhs_closed_form']:.6g}"
    return payload, not payload["bound_holds"], summary, {}


def cmd_reproduce(args):
    only = None
    if args.only:
        only = [k for item in args.only for k in item.split(",") if k]
    try:
        results = acceptance.run_checks(only, seed=args.seed, inject_fault=args.inject_fault)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    table = {r.key: r.to_dict() for r in results}
    failed = [r.key for r in results if not r.passed]
    summary = "; ".join(f"{r.key}: {'pass' if r.passed else 'FAIL'}" for r in results)
    return {"results": table, "failed": failed}, bool(failed), summary, {}


COMMANDS = {
    "verify": cmd_verify,
    "worst-case": cmd_worst_case,
    "rho": cmd_rho,
    "decompose": cmd_decompose,
    "counterexample": cmd_counterexample,
    "sample": cmd_sample,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="esverify", description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="also write the report to this file")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("verify", help="exact sides of the inequality for one function")
    p.add_argument("--model", required=True)
    p.add_argument("--function", required=True)

    p = sub.add_parser("worst-case", help="worst-case ratio over all functions")
    p.add_argument("--model", required=True)
    p.add_argument("--solver", choices=("lapack", "jacobi"), default="lapack")

    p = sub.add_parser("rho", help="the constant rho(k) and its bound")
    p.add_argument("--k", required=True, help="comma-separated support sizes")

    p = sub.add_parser("decompose", help="cycle decomposition of each pair")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, help="enables the randomized peeling diagnostic")

    p = sub.add_parser("counterexample", help="closed-form counterexamples")
    p.add_argument("kind", choices=("rotation", "threepoint"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=1e-3)

    p = sub.add_parser("sample", help="Monte Carlo checks")
    p.add_argument("kind", choices=("poincare", "rotation"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--function", help="JSON file with a builtin name and params")
    p.add_argument("--builtin", default="linear")
    p.add_argument("--params", help="comma-separated builtin parameters")

    p = sub.add_parser("reproduce", help="run every consolidated check")
    p.add_argument("--only", action="append", help="check key(s) to run")
    p.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED)
    p.add_argument("--inject-fault", choices=("thm2",), help="negative control")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = next((a for a in argv if a in COMMANDS), "")
    args_record: dict = {"argv": argv}
    files: dict = {}
    out_path = None
    try:
        args = build_parser().parse_args(argv)
        out_path = args.out
        if not args.command:
            raise UsageError(f"missing subcommand; choose from {', '.join(COMMANDS)}")
        command = args.command
        args_record = {k: v for k, v in vars(args).items() if k != "out"}
        payload, violated, summary, files = COMMANDS[command](args)
        status = "violated" if violated else "ok"
    except (UsageError, ESVerifyError, ValueError, KeyError) as exc:
        payload, status = {"error": str(exc), "type": type(exc).__name__}, "error"
        summary = f"error: {exc}"
    report = {
        "command": command,
        "inputs_digest": _digest(command, args_record, files),
        "payload": payload,
        "status": status,
    }
    text = dumps(report)
    print(text)
    if out_path:
        try:
            Path(out_path).write_text(text + "\n")
        except OSError as exc:
            print(f"esverify: cannot write {out_path}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    print(f"esverify {command or '?'} [{status}] {summary}", file=sys.stderr)
    return {"ok": EXIT_OK, "violated": EXIT_VIOLATED}.get(status, EXIT_ERROR)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
