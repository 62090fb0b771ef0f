"""JSON codecs for masks, frames, certificates and reports.

A Laurent polynomial is an array of ``{"exp": [a1, ..., ad], "re": x, "im": y}``
objects in the stored (lexicographic) order. The number of variables lives on
the enclosing mask or certificate document. Floats are written with ``repr``
precision, so a decode after an encode gives back identical coefficients.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, TextIO, Tuple, Union

from config import FORMAT_VERSION, JSON_INDENT
from isotypical import Mask
from laurent import LaurentPoly
from sos_frame import SosCertificate
from verify import FrameSystem, VerificationReport


class FormatError(ValueError):
    """Raised for malformed or mismatched JSON input."""


def _require(data: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(data, Mapping):
        raise FormatError(f"{where}: expected an object, got {type(data).__name__}")
    if key not in data:
        raise FormatError(f"{where}: missing field '{key}'")
    return data[key]


def _check_header(data: Mapping[str, Any], kind: str) -> None:
    version = _require(data, "version", kind)
    if version != FORMAT_VERSION:
        raise FormatError(f"{kind}: unsupported version '{version}' (expected '{FORMAT_VERSION}')")
    found = data.get("kind", kind)
    if found != kind:
        raise FormatError(f"expected a {kind} document, got '{found}'")


def poly_to_json(p: LaurentPoly) -> List[Dict[str, Any]]:
    return [{"exp": list(alpha), "re": coef.real, "im": coef.imag} for alpha, coef in p.terms()]


def poly_from_json(data: Any, dim: int) -> LaurentPoly:
    if not isinstance(data, list):
        raise FormatError(f"polynomial: expected an array of terms, got {type(data).__name__}")
    exps: List[Tuple[int, ...]] = []
    coefs: List[complex] = []
    for term in data:
        alpha = _require(term, "exp", "polynomial term")
        try:
            if len(alpha) != dim:
                raise FormatError(f"exponent {alpha} does not have {dim} entries")
            exps.append(tuple(int(a) for a in alpha))
            coefs.append(complex(float(_require(term, "re", "polynomial term")),
                                 float(term.get("im", 0.0))))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed polynomial term: {exc}") from exc
    return LaurentPoly(dim, exps, coefs)


def mask_to_json(mask: Mask, meta: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "version": FORMAT_VERSION,
        "kind": "mask",
        "dim": mask.dim,
        "M": mask.ctx.matrix.tolist(),
        "coefficients": poly_to_json(mask.p),
    }
    if mask.unnormalized:
        out["unnormalized"] = True
    meta = dict(meta or {})
    if mask.name and "name" not in meta:
        meta["name"] = mask.name
    if meta:
        out["meta"] = meta
    return out


def mask_from_json(data: Mapping[str, Any]) -> Mask:
    _check_header(data, "mask")
    dim = int(_require(data, "dim", "mask"))
    matrix = _require(data, "M", "mask")
    p = poly_from_json(_require(data, "coefficients", "mask"), dim)
    meta = data.get("meta") or {}
    try:
        return Mask.from_matrix(matrix, p, unnormalized=bool(data.get("unnormalized", False)),
                                name=meta.get("name"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid mask: {exc}") from exc


def frame_to_json(frame: FrameSystem, report: Optional[VerificationReport] = None,
                  meta: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "version": FORMAT_VERSION,
        "kind": "frame",
        "mask": mask_to_json(frame.mask, meta),
        "generators": [poly_to_json(q) for q in frame.generators],
    }
    if report is not None:
        out["report"] = report.to_dict()
    return out


def frame_from_json(data: Mapping[str, Any]) -> FrameSystem:
    _check_header(data, "frame")
    mask = mask_from_json(_require(data, "mask", "frame"))
    generators = [poly_from_json(q, mask.dim) for q in _require(data, "generators", "frame")]
    try:
        return FrameSystem(mask, tuple(generators))
    except ValueError as exc:
        raise FormatError(f"invalid frame: {exc}") from exc


def certificate_to_json(cert: SosCertificate, dim: int) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "version": FORMAT_VERSION,
        "kind": "certificate",
        "dim": dim,
        "hs": [poly_to_json(h) for h in cert.hs],
    }
    if cert.name:
        out["name"] = cert.name
    return out


def certificate_from_json(data: Mapping[str, Any]) -> SosCertificate:
    _check_header(data, "certificate")
    dim = int(_require(data, "dim", "certificate"))
    hs = [poly_from_json(h, dim) for h in _require(data, "hs", "certificate")]
    return SosCertificate(tuple(hs), data.get("name"))


def read_json(source: Union[str, Path], stdin: Optional[TextIO] = None) -> Any:
    """Parse a document from a path, or from stdin when ``source`` is ``-``."""
    try:
        if str(source) == "-":
            return json.load(stdin or sys.stdin)
        with open(source, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def dumps(document: Any) -> str:
    return json.dumps(document, indent=JSON_INDENT or None)


def write_json(document: Any, stream: Optional[TextIO] = None) -> None:
    out = stream or sys.stdout
    out.write(dumps(document))
    out.write("\n")
    out.flush()
