"""Command-line front end: ``ss-skeleton <command> [--input PATH|-] [--output PATH|-] ...``.

Inputs are JSON payloads, either bare or wrapped in a request envelope
``{"command", "version", "payload"[, "seed"]}``.  Outputs are response
envelopes, except ``cover`` which writes a bare certificate.

Exit codes: 0 success / valid, 1 negative verdict, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from . import __version__
from .covering import DEFAULT_MAX_SIMPLICES, AnnuliModel, CoveringCertificate, certify, verify_covering
from .errors import CoefficientDivisionError, InvariantError
from .monomial_algebra import (
    ModelAlgebra,
    SpecialMonomial,
    SpecialPoly,
    divides_witness,
    dominates_criterion,
    dominating_monomial,
    evaluate,
    factor_generic_unit,
    is_unit_R,
    is_unit_R_eta,
    recompose,
)
from .pl_engine import PLFunction, pl_geq
from .value_group import DenominatorCapError, Value, cmp, in_r_power_class, max_denominator

log = logging.getLogger("ss_skeleton")

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Unusable input; reported on stderr with exit code 2."""


@dataclass(frozen=True)
class Envelope:
    command: str
    payload: Any
    version: str = __version__
    seed: int | None = None

    def to_json(self) -> dict:
        out = {"command": self.command, "version": self.version, "payload": self.payload}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Envelope":
        return cls(obj["command"], obj["payload"], obj.get("version", __version__), obj.get("seed"))

    @staticmethod
    def is_envelope(obj: Any) -> bool:
        return isinstance(obj, dict) and "command" in obj and "payload" in obj


# ---------------------------------------------------------------- I/O


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def parse_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {source} at line {exc.lineno}, column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from exc


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def dump_json(obj: Any, width: int = 88) -> str:
    """Indented JSON that keeps short containers (values, simplices) on one line."""

    def fmt(x: Any, indent: int) -> str:
        flat = json.dumps(x, separators=(", ", ": "))
        if not isinstance(x, (dict, list)) or len(flat) + indent <= width:
            return flat
        pad = " " * (indent + 2)
        if isinstance(x, list):
            body = ",\n".join(pad + fmt(v, indent + 2) for v in x)
            return "[\n" + body + "\n" + " " * indent + "]"
        body = ",\n".join(f"{pad}{json.dumps(k)}: {fmt(v, indent + 2)}" for k, v in x.items())
        return "{\n" + body + "\n" + " " * indent + "}"

    return fmt(obj, 0) + "\n"


def _unwrap(obj: Any, command: str) -> tuple[Any, int | None]:
    if Envelope.is_envelope(obj):
        env = Envelope.from_json(obj)
        if env.command != command:
            raise InputError(f"envelope is for command {env.command!r}, not {command!r}")
        return env.payload, env.seed
    return obj, None


def _need(payload: Any, key: str) -> Any:
    if not isinstance(payload, dict) or key not in payload:
        raise InvariantError("payload-shape", f"payload needs a {key!r} field")
    return payload[key]


# ---------------------------------------------------------------- payload parsing


def _poly(obj: Any, model: ModelAlgebra | None) -> SpecialPoly:
    return SpecialPoly.from_json(obj, model)


def _model_of(payload: dict) -> ModelAlgebra | None:
    return ModelAlgebra.from_json(payload["model"]) if isinstance(payload, dict) and "model" in payload else None


def _poly_payload(payload: Any) -> SpecialPoly:
    """A polynomial given inline (``model`` + ``terms``/``raw_terms``) or under ``poly``."""
    if isinstance(payload, dict) and "poly" in payload:
        return _poly(payload["poly"], _model_of(payload))
    return _poly(payload, None)


def _monomial(obj: Any, model: ModelAlgebra) -> SpecialMonomial:
    p = _poly(obj, model)
    if len(p) != 1:
        raise InvariantError("single-monomial", f"expected one special monomial, got {len(p)} terms in {p}")
    (mono,) = p.monomials()
    return mono


def _frac(q: Fraction | None) -> str | None:
    return None if q is None else str(q)


# ---------------------------------------------------------------- commands

Handler = Callable[[Any, argparse.Namespace], tuple[Any, int]]


def cmd_value_cmp(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    v = Value.from_json(_need(payload, "v"))
    w = Value.from_json(_need(payload, "w"))
    out: dict = {"ordering": cmp(v, w), "v": str(v), "w": str(w)}
    if "r" in payload:
        r = Value.from_json(payload["r"])
        out["r_class"] = {
            "v": _frac(in_r_power_class(v, r)) if not v.is_zero else None,
            "w": _frac(in_r_power_class(w, r)) if not w.is_zero else None,
        }
    return out, EXIT_OK


def cmd_special(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    a = _poly_payload(payload)
    return {"special": a.to_json(), "text": str(a)}, EXIT_OK


def cmd_eval(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    a = _poly_payload(payload)
    point = [Value.from_json(x) for x in _need(payload, "point")]
    val = evaluate(a, point)
    return {"value": val.to_json(), "text": str(val)}, EXIT_OK


def cmd_dominates(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    model = _model_of(payload)
    if model is None:
        raise InvariantError("payload-shape", "payload needs a 'model' field")
    a = _monomial(_need(payload, "a"), model)
    b = _monomial(_need(payload, "b"), model)
    crit = dominates_criterion(a, b)
    wit = divides_witness(a, b)
    pl = pl_geq(PLFunction.of(a.as_poly()), PLFunction.of(b.as_poly()))
    out = {
        "dominates": crit,
        "witness": None if wit is None else str(wit),
        "witness_monomial": None if wit is None else wit.to_json(),
        "pl_geq": pl.value,
    }
    return out, EXIT_OK if crit else EXIT_NEGATIVE


def cmd_units(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    a = _poly_payload(payload)
    d = dominating_monomial(a)
    out = {
        "unit_R": is_unit_R(a),
        "unit_R_eta": is_unit_R_eta(a),
        "dominating_exponent": None if d is None else list(d),
    }
    return out, EXIT_OK if out["unit_R_eta"] else EXIT_NEGATIVE


def cmd_factor(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    a = _poly_payload(payload)
    if not is_unit_R_eta(a):
        return {"generic_unit": False}, EXIT_NEGATIVE
    try:
        u, pi_prime, n = factor_generic_unit(a)
    except CoefficientDivisionError as exc:
        return {"generic_unit": True, "factored": False, "reason": str(exc)}, EXIT_NEGATIVE
    if recompose(a.model, u, pi_prime, n) != a:  # pragma: no cover - guarded by tests
        raise AssertionError("factorization does not recompose")
    out = {
        "generic_unit": True,
        "factored": True,
        "u": u.to_json(),
        "u_text": str(u),
        "pi_prime": pi_prime.to_json(),
        "pi_prime_text": str(pi_prime),
        "n": list(n),
        "recomposes": True,
    }
    return out, EXIT_OK


def _emit_artifacts(cert: CoveringCertificate, args: argparse.Namespace) -> None:
    from .render import certificate_csv, certificate_svg

    if args.emit_svg:
        _write_text(args.emit_svg, certificate_svg(cert))
    if args.emit_csv:
        _write_text(args.emit_csv, certificate_csv(cert))


def cmd_cover(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    model = AnnuliModel.from_json(payload)
    cert = certify(model, max_simplices=args.max_simplices or None)
    for line in cert.verdict.lines():
        log.info("%s", line)
    _emit_artifacts(cert, args)
    return cert.to_json(), EXIT_OK if cert.verdict.valid else EXIT_NEGATIVE


def cmd_verify(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    cert = CoveringCertificate.from_json(payload)
    report = verify_covering(cert)
    cert.verdict = report
    for line in report.lines():
        print(line, file=sys.stderr)
    _emit_artifacts(cert, args)
    out = {"valid": report.valid, "triangles": cert.triangle_count, **report.to_json()}
    return out, EXIT_OK if report.valid else EXIT_NEGATIVE


def cmd_selftest(payload: Any, args: argparse.Namespace) -> tuple[Any, int]:
    from .invariants import run_suite

    scale = args.scale
    if isinstance(payload, dict) and "scale" in payload:
        scale = float(payload["scale"])
    results = run_suite(seed=args.seed, scale=scale)
    for r in results:
        log.info("%-24s %6d trials  %s  %.2fs", r.name, r.trials, "ok" if r.passed else "FAIL", r.seconds)
    ok = all(r.passed for r in results)
    return {"passed": ok, "seed": args.seed, "scale": scale, "checks": [r.to_json() for r in results]}, (
        EXIT_OK if ok else EXIT_NEGATIVE
    )


COMMANDS: dict[str, tuple[Handler, str]] = {
    "value-cmp": (cmd_value_cmp, "compare two values exactly"),
    "special": (cmd_special, "special representation of a polynomial"),
    "eval": (cmd_eval, "evaluate |a|_r at a skeleton point"),
    "dominates": (cmd_dominates, "domination test between special monomials"),
    "units": (cmd_units, "unit tests in R and R_eta"),
    "factor": (cmd_factor, "generic-unit factorization"),
    "cover": (cmd_cover, "build and certify a semistable covering"),
    "verify": (cmd_verify, "check a covering certificate"),
    "selftest": (cmd_selftest, "run the invariant suite"),
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ss-skeleton",
        description="Exact monomial semivaluations, domination tests and semistable covering certificates.",
        epilog="Exit codes: 0 success or valid, 1 negative verdict, 2 input error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", "-i", default="-" if name != "selftest" else None, help="input JSON path or - for stdin")
        p.add_argument("--output", "-o", default="-", help="output path or - for stdout")
        p.add_argument("--emit-svg", metavar="PATH", help="write an SVG rendering (cover/verify)")
        p.add_argument("--emit-csv", metavar="PATH", help="write triangle vertices as CSV (cover/verify)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        p.add_argument("--max-denominator", type=int, default=64, help="cap on exponent denominators")
        if name == "cover":
            p.add_argument(
                "--max-simplices",
                type=int,
                default=DEFAULT_MAX_SIMPLICES,
                help="refuse certificates with more simplices than this (0 disables)",
            )
        if name == "selftest":
            p.add_argument("--scale", type=float, default=1.0, help="multiplier for trial counts")
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("SS_SKELETON_LOG", "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.max_denominator < 1:
        print("input error: --max-denominator must be positive", file=sys.stderr)
        return EXIT_INPUT
    handler, _ = COMMANDS[args.command]
    try:
        with max_denominator(args.max_denominator):
            if args.input is None:
                payload, seed = None, None
            else:
                src = "<stdin>" if args.input == "-" else args.input
                payload, seed = _unwrap(parse_json(_read_text(args.input), src), args.command)
            if seed is not None:
                args.seed = int(seed)
            result, code = handler(payload, args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"input error: invariant '{exc.invariant}' violated: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DenominatorCapError as exc:
        print(f"input error: invariant 'max-denominator' violated: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "cover":
        text = dump_json(result)
    else:
        text = dump_json(Envelope(args.command, result, seed=args.seed if args.command == "selftest" else None).to_json())
    _write_text(args.output, text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
