from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, TextIO

import config
from analysis import Verdict, existence_verdict, sample_subqmf_csv
from catalog import CatalogError, get as get_mask, list_entries
from isotypical import Mask, MaskError, PartitionOfUnityError
from laurent import DimensionMismatchError
from lattice import SingularMatrixError
from sdp_frame import (
    EigenSolverError,
    GramProblemError,
    SolveOptions,
    StalledError,
    SupportSet,
    construct_frame_sdp,
)
from serialization import (
    FormatError,
    certificate_from_json,
    frame_from_json,
    frame_to_json,
    mask_from_json,
    mask_to_json,
    read_json,
    write_json,
)
from sos_frame import CertificateError, builtin_certificate, builtin_names, construct_from_sos
from verify import FrameConstructionError, check_subqmf_grid, sum_rules_order, verify_frame

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3


def _parse_params(pairs: Optional[Sequence[str]]) -> Dict[str, float]:
    """``["lambda=1/32", "c=0.3"]`` -> ``{"lambda": 0.03125, "c": 0.3}``."""
    params: Dict[str, float] = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep or not key.strip():
            raise FormatError(f"parameter '{pair}' is not of the form name=value")
        try:
            params[key.strip()] = float(Fraction(raw.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"parameter '{pair}' has a non-numeric value") from exc
    return params


def _parse_support(spec: Optional[str], mask: Mask) -> SupportSet:
    """``mask`` (default) or ``box:lo_1,...,lo_d,hi_1,...,hi_d``."""
    if spec is None or spec == "mask":
        return SupportSet.from_mask(mask)
    kind, sep, body = spec.partition(":")
    if kind != "box" or not sep:
        raise FormatError(f"support '{spec}' must be 'mask' or 'box:lo...,hi...'")
    try:
        values = [int(v) for v in body.split(",")]
    except ValueError as exc:
        raise FormatError(f"support '{spec}' has non-integer corners") from exc
    if len(values) != 2 * mask.dim:
        raise FormatError(f"support box needs {2 * mask.dim} integers for a {mask.dim}-variate mask")
    return SupportSet.box(values[:mask.dim], values[mask.dim:])


def _mask_params(document: Dict[str, Any]) -> Dict[str, float]:
    meta = document.get("meta") or {}
    return {k: float(v) for k, v in (meta.get("params") or {}).items()}


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def _cmd_catalog(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    if args.catalog_command == "list":
        write_json([e.describe() for e in list_entries()], out)
        return EXIT_OK
    params = _parse_params(args.param)
    mask = get_mask(args.name, params)
    meta: Dict[str, Any] = {"name": args.name}
    if params:
        meta["params"] = params
    write_json(mask_to_json(mask, meta), out)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    frame = frame_from_json(read_json(args.frame, stdin))
    report = verify_frame(frame, args.tol)
    write_json({"generators": len(frame), "report": report.to_dict()}, out)
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_subqmf(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    mask = mask_from_json(read_json(args.mask, stdin))
    if args.grid is not None and args.grid < 2:
        raise FormatError("--grid needs at least 2 points per axis")
    result = check_subqmf_grid(mask, args.grid)
    passed = result.min_value >= -args.tol
    write_json({**result.to_dict(), "passed": passed}, out)
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_sumrules(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    mask = mask_from_json(read_json(args.mask, stdin))
    if args.max_order < 1:
        raise FormatError("--max-order must be at least 1")
    order = sum_rules_order(mask, args.max_order)
    write_json({"order": order, "maxOrder": args.max_order}, out)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    mask = mask_from_json(read_json(args.mask, stdin))
    report = existence_verdict(mask, args.grid, args.tol)
    document = report.to_dict()
    if args.plot:
        document["plot"] = str(sample_subqmf_csv(mask, args.grid, args.plot))
    write_json(document, out)
    return EXIT_FAILED if report.verdict is Verdict.NECESSARY_VIOLATED else EXIT_OK


def _load_certificate(source: str, params: Dict[str, float], stdin: Optional[TextIO]):
    if source in builtin_names():
        return builtin_certificate(source, params)
    if not Path(source).exists():
        raise CertificateError(f"'{source}' is neither a built-in certificate nor a file")
    return certificate_from_json(read_json(source, stdin))


def _emit_frame(frame, tol: float, out: TextIO, meta: Dict[str, Any]) -> int:
    frame = frame.with_canonical_generators()
    report = verify_frame(frame, tol)
    write_json(frame_to_json(frame, report, meta), out)
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_construct(args: argparse.Namespace, out: TextIO, stdin: Optional[TextIO]) -> int:
    document = read_json(args.mask, stdin)
    mask = mask_from_json(document)
    meta = dict(document.get("meta") or {})
    if args.method == "sos":
        params = {**_mask_params(document), **_parse_params(args.param)}
        cert = _load_certificate(args.cert, params, stdin)
        frame = construct_from_sos(mask, cert)
        meta["construction"] = {"method": "sos", "certificate": cert.name or args.cert, "terms": len(cert)}
        return _emit_frame(frame, config.UEP_TOLERANCE, out, meta)

    opts = SolveOptions(
        max_iterations=args.max_iter or config.SDP_MAX_ITERATIONS,
        residual_tol=args.tol or config.SDP_RESIDUAL_TOL,
        polish=config.SDP_POLISH_ENABLED and not args.no_polish,
    )
    support = _parse_support(args.support, mask)
    frame = construct_frame_sdp(mask, support, opts)
    meta["construction"] = {"method": "sdp", "supportPoints": len(support)}
    return _emit_frame(frame, config.SDP_VERIFY_TOLERANCE, out, meta)


# ----------------------------------------------------------------------
# Parser and dispatch
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uepframe",
        description="Tight wavelet frames from the unitary extension principle.",
    )
    parser.add_argument("--version", action="version", version=config.FORMAT_VERSION)
    level = parser.add_mutually_exclusive_group()
    level.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    level.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    catalog = sub.add_parser("catalog", help="built-in masks")
    catalog_sub = catalog.add_subparsers(dest="catalog_command", required=True)
    catalog_sub.add_parser("list", help="list the built-in masks")
    show = catalog_sub.add_parser("show", help="print a built-in mask as JSON")
    show.add_argument("name")
    show.add_argument("--param", action="append", metavar="NAME=VALUE")
    catalog.set_defaults(handler=_cmd_catalog)

    verify = sub.add_parser("verify", help="check the UEP identities of a frame file")
    verify.add_argument("frame", help="frame JSON file or - for stdin")
    verify.add_argument("--tol", type=float, default=config.UEP_TOLERANCE)
    verify.set_defaults(handler=_cmd_verify)

    subqmf = sub.add_parser("subqmf", help="grid check of the sub-QMF condition")
    subqmf.add_argument("mask", help="mask JSON file or - for stdin")
    subqmf.add_argument("--grid", type=int, default=None, help="grid points per axis")
    subqmf.add_argument("--tol", type=float, default=config.UEP_TOLERANCE)
    subqmf.set_defaults(handler=_cmd_subqmf)

    sumrules = sub.add_parser("sumrules", help="order of the zero conditions")
    sumrules.add_argument("mask", help="mask JSON file or - for stdin")
    sumrules.add_argument("--max-order", type=int, default=config.SUM_RULES_MAX_ORDER)
    sumrules.set_defaults(handler=_cmd_sumrules)

    analyze = sub.add_parser("analyze", help="zeros of f and the Hessian verdict")
    analyze.add_argument("mask", help="mask JSON file or - for stdin")
    analyze.add_argument("--grid", type=int, default=None, help="grid points per axis")
    analyze.add_argument("--tol", type=float, default=config.UEP_TOLERANCE)
    analyze.add_argument("--plot", metavar="CSV", help="write f sampled on the grid to this file")
    analyze.set_defaults(handler=_cmd_analyze)

    construct = sub.add_parser("construct", help="build frame generators")
    construct_sub = construct.add_subparsers(dest="method", required=True)
    sos = construct_sub.add_parser("sos", help="from a sum-of-squares certificate")
    sos.add_argument("mask", help="mask JSON file or - for stdin")
    sos.add_argument("--cert", required=True,
                     help=f"certificate JSON file or one of: {', '.join(builtin_names())}")
    sos.add_argument("--param", action="append", metavar="NAME=VALUE")
    sdp = construct_sub.add_parser("sdp", help="from a semidefinite feasibility search")
    sdp.add_argument("mask", help="mask JSON file or - for stdin")
    sdp.add_argument("--support", help="'mask' or box:lo_1,...,lo_d,hi_1,...,hi_d")
    sdp.add_argument("--max-iter", type=int, default=None)
    sdp.add_argument("--tol", type=float, default=None, help="feasibility residual")
    sdp.add_argument("--no-polish", action="store_true",
                     help="report a stall instead of refining the last iterate by Gauss-Newton")
    construct.set_defaults(handler=_cmd_construct)
    return parser


# Most specific first: PartitionOfUnityError is a MaskError
_EXIT_CODES = (
    (PartitionOfUnityError, EXIT_INFEASIBLE),
    (StalledError, EXIT_INFEASIBLE),
    (EigenSolverError, EXIT_INFEASIBLE),
    (FrameConstructionError, EXIT_FAILED),
    (FormatError, EXIT_INPUT),
    (CatalogError, EXIT_INPUT),
    (CertificateError, EXIT_INPUT),
    (GramProblemError, EXIT_INPUT),
    (MaskError, EXIT_INPUT),
    (SingularMatrixError, EXIT_INPUT),
    (DimensionMismatchError, EXIT_INPUT),
    (ValueError, EXIT_INPUT),
)


def exit_code_for(exc: BaseException) -> Optional[int]:
    for kind, code in _EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return None


def run(argv: Optional[Sequence[str]] = None, *, stdout: Optional[TextIO] = None,
        stdin: Optional[TextIO] = None, configure_logging: bool = False) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    out = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are input errors here
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT

    if configure_logging:
        from logging_config import setup_logging
        setup_logging("DEBUG" if args.verbose else "WARNING" if args.quiet else None)

    handler: Callable[[argparse.Namespace, TextIO, Optional[TextIO]], int] = args.handler
    try:
        return handler(args, out, stdin)
    except Exception as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        write_json({"error": str(exc), "kind": type(exc).__name__}, out)
        return code


def main() -> None:
    sys.exit(run(sys.argv[1:], configure_logging=True))


if __name__ == '__main__':
    main()
