"""Built-in masks.

Each entry knows its dilation matrix, an optional scalar parameter with its
admissible range, and how to expand the mask polynomial. Built masks are
checked at load (``p(1) = 1`` and a hermitian ``f``) and cached.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from isotypical import Mask, subqmf_poly
from laurent import LaurentPoly, cos_poly, is_hermitian, sin_poly, substitute_monomial
from lattice import shift_action
from verify import sum_rules_order

logger = logging.getLogger(__name__)


class CatalogError(ValueError):
    """Raised for an unknown catalog name, a bad parameter or a failed load check."""


# Monomial substitutions carrying p_(1,0,0) to the other one-odd-coordinate classes
INTERP3D_FACE_IMAGES: Tuple[np.ndarray, ...] = (
    np.eye(3, dtype=np.int64),
    np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=np.int64),
    np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=np.int64),
    np.array([[1, -1, 0], [1, 0, -1], [1, 0, 0]], dtype=np.int64),
)

# ... and p_(1,1,0) to the classes (1,0,1) and (0,1,1)
INTERP3D_EDGE_IMAGES: Tuple[np.ndarray, ...] = (
    np.eye(3, dtype=np.int64),
    np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=np.int64),
    np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=np.int64),
)

# Orthonormal lowpass with eight vanishing moments, in the usual sqrt(2) normalization
M8_COEFFICIENTS = (
    0.05441584224308161,
    0.3128715909144659,
    0.6756307362980128,
    0.5853546836548691,
    -0.015829105256023893,
    -0.2840155429624281,
    0.00047248457399797254,
    0.128747426620186,
    -0.01736930100202211,
    -0.04408825393106472,
    0.013981027917015516,
    0.008746094047015655,
    -0.00487035299301066,
    -0.0003917403729959771,
    0.0006754494059985568,
    -0.00011747678400228192,
)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    low: float
    high: float
    default: float
    low_open: bool = False

    def validate(self, value: float) -> float:
        value = float(value)
        below = value <= self.low if self.low_open else value < self.low
        if below or value > self.high or not np.isfinite(value):
            bracket = "(" if self.low_open else "["
            raise CatalogError(f"{self.name}={value} outside {bracket}{self.low}, {self.high}]")
        return value

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "low": self.low, "high": self.high, "default": self.default,
                "lowOpen": self.low_open}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    dim: int
    matrix: Tuple[Tuple[int, ...], ...]
    build: Callable[[Optional[float]], LaurentPoly]
    origin: str
    param_spec: Optional[ParamSpec] = None

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "dim": self.dim,
            "M": [list(row) for row in self.matrix],
            "param": None if self.param_spec is None else self.param_spec.describe(),
            "origin": self.origin,
        }


# ----------------------------------------------------------------------
# Mask constructors
# ----------------------------------------------------------------------

def _binomial_factor(direction: Tuple[int, ...], power: int = 1) -> LaurentPoly:
    """``((1 + z^direction) / 2)^power``."""
    base = LaurentPoly(len(direction), [(0,) * len(direction), direction], [0.5, 0.5])
    return base ** power


def daubechies4(_: Optional[float] = None) -> LaurentPoly:
    s = np.sqrt(3.0)
    coefs = np.array([1 + s, 3 + s, 3 - s, 1 - s]) / 8.0
    return LaurentPoly(1, [[0], [1], [2], [3]], coefs)


def boxspline111(_: Optional[float] = None) -> LaurentPoly:
    return _binomial_factor((1, 0)) * _binomial_factor((0, 1)) * _binomial_factor((1, 1))


def butterfly(_: Optional[float] = None) -> LaurentPoly:
    terms: Dict[Tuple[int, int], float] = {(0, 0): 1.0 / 4.0}
    for alpha in [(1, 0), (0, 1), (1, 1)]:
        terms[alpha] = terms[(-alpha[0], -alpha[1])] = 1.0 / 8.0
    for alpha in [(2, 1), (1, 2), (1, -1), (-1, 1), (-2, -1), (-1, -2)]:
        terms[alpha] = 1.0 / 32.0
    for alpha in [(3, 1), (3, 2), (2, 3), (1, 3), (2, -1), (1, -2), (-1, 2), (-2, 1),
                  (-3, -1), (-3, -2), (-2, -3), (-1, -3)]:
        terms[alpha] = -1.0 / 64.0
    return LaurentPoly.from_terms(2, terms)


def interp3d_face_component(lam: float) -> LaurentPoly:
    """``p_(1,0,0)`` of the three-dimensional interpolatory family."""
    plus = cos_poly((1, 2, 0)) + cos_poly((1, 0, 2)) + cos_poly((1, 2, 2))
    minus = cos_poly((1, -2, 0)) + cos_poly((1, 0, -2)) + cos_poly((3, 2, 2))
    return cos_poly((1, 0, 0)).scale(1.0 / 8.0) + (plus - minus).scale(lam / 4.0)


def interp3d_edge_component(lam: float) -> LaurentPoly:
    """``p_(1,1,0)`` of the three-dimensional interpolatory family."""
    far = (cos_poly((1, -1, 2)) + cos_poly((1, -1, -2))
           + cos_poly((3, 1, 2)) + cos_poly((1, 3, 2)))
    return (cos_poly((1, 1, 0)).scale(1.0 / 8.0 - lam)
            + (cos_poly((1, -1, 0)) + cos_poly((1, 1, 2))).scale(lam)
            - far.scale(lam / 4.0))


def interp3d(lam: Optional[float]) -> LaurentPoly:
    face = interp3d_face_component(lam)
    edge = interp3d_edge_component(lam)
    total = LaurentPoly.constant(3, 1.0 / 8.0)
    for image in INTERP3D_FACE_IMAGES:
        total = total + substitute_monomial(face, image)
    for image in INTERP3D_EDGE_IMAGES:
        total = total + substitute_monomial(edge, image)
    return total


def sqrt3_component() -> LaurentPoly:
    """``p_(0,1)`` of the three-scheme mask."""
    return LaurentPoly.from_terms(2, {
        (0, 1): 4.0 / 27.0, (-1, 0): 4.0 / 27.0, (1, -1): 4.0 / 27.0,
        (-2, 2): -1.0 / 27.0, (2, 0): -1.0 / 27.0, (0, -2): -1.0 / 27.0,
    })


def sqrt3(_: Optional[float] = None) -> LaurentPoly:
    component = sqrt3_component()
    swapped = substitute_monomial(component, [[0, 1], [1, 0]])
    return LaurentPoly.constant(2, 1.0 / 3.0) + component + swapped


def m8_symbol() -> LaurentPoly:
    """The eight-moment lowpass scaled to sum 1."""
    coefs = np.asarray(M8_COEFFICIENTS) / np.sqrt(2.0)
    return LaurentPoly(1, [[k] for k in range(coefs.size)], coefs)


def motzkin_form() -> LaurentPoly:
    """``y1^4 y2^2 + y1^2 y2^4 + y3^6 - 3 y1^2 y2^2 y3^2`` with ``y_k = sin(omega_k)``."""
    y1 = sin_poly((1, 0, 0)) ** 2
    y2 = sin_poly((0, 1, 0)) ** 2
    y3 = sin_poly((0, 0, 1)) ** 2
    return y1 * y1 * y2 + y1 * y2 * y2 + y3 ** 3 - (y1 * y2 * y3).scale(3.0)


def motzkin_tensor_symbol() -> LaurentPoly:
    m8 = m8_symbol()
    factors = [substitute_monomial(m8, column) for column in np.eye(3, dtype=np.int64)[:, :, None]]
    return factors[0] * factors[1] * factors[2]


def motzkin(c: Optional[float]) -> LaurentPoly:
    return (LaurentPoly.constant(3, 1.0) - motzkin_form().scale(c)) * motzkin_tensor_symbol()


def nosubqmf3d(_: Optional[float] = None) -> LaurentPoly:
    h = {
        1: lambda k: _binomial_factor((1, 0, 0), k),
        2: lambda k: _binomial_factor((0, 1, 0), k),
        3: lambda k: _binomial_factor((0, 0, 1), k),
        4: lambda k: _binomial_factor((1, 1, 1), k),
    }

    def block(powers: Tuple[int, int, int, int]) -> LaurentPoly:
        return h[1](powers[0]) * h[2](powers[1]) * h[3](powers[2]) * h[4](powers[3])

    return (block((2, 2, 2, 2)).shift((1, 1, 1)).scale(6.0)
            - (block((1, 3, 3, 3)).shift((1, 0, 0))
               + block((3, 1, 3, 3)).shift((0, 1, 0))
               + block((3, 3, 1, 3)).shift((0, 0, 1))
               + block((3, 3, 3, 1)).shift((1, 1, 1))).scale(5.0 / 4.0))


_EYE2 = ((2, 0), (0, 2))
_EYE3 = ((2, 0, 0), (0, 2, 0), (0, 0, 2))

_ENTRIES: Dict[str, CatalogEntry] = {
    entry.name: entry for entry in [
        CatalogEntry("daubechies4", 1, ((2,),), daubechies4,
                     "orthonormal Daubechies symbol with two vanishing moments"),
        CatalogEntry("boxspline111", 2, _EYE2, boxspline111,
                     "three-directional piecewise linear box spline"),
        CatalogEntry("butterfly", 2, _EYE2, butterfly,
                     "interpolatory butterfly subdivision"),
        CatalogEntry("interp3d", 3, _EYE3, interp3d,
                     "three-dimensional interpolatory subdivision with tension parameter",
                     ParamSpec("lambda", 0.0, 1.0 / 16.0, 1.0 / 32.0)),
        CatalogEntry("sqrt3", 2, ((1, 2), (-2, -1)), sqrt3,
                     "interpolatory sqrt(3) subdivision"),
        CatalogEntry("motzkin", 3, _EYE3, motzkin,
                     "Motzkin form times an orthonormal tensor symbol",
                     ParamSpec("c", 0.0, 1.0 / 3.0, 1.0 / 3.0, low_open=True)),
        CatalogEntry("nosubqmf3d", 3, _EYE3, nosubqmf3d,
                     "trivariate mask violating the sub-QMF condition"),
    ]
}

_cache: Dict[Tuple[str, Optional[float]], Mask] = {}
_cache_lock = threading.Lock()


def list_entries() -> List[CatalogEntry]:
    return [_ENTRIES[name] for name in sorted(_ENTRIES)]


def entry(name: str) -> CatalogEntry:
    try:
        return _ENTRIES[name]
    except KeyError:
        raise CatalogError(f"unknown mask '{name}' (known: {', '.join(sorted(_ENTRIES))})") from None


def resolve_param(spec: CatalogEntry, params: Optional[Mapping[str, float]]) -> Optional[float]:
    params = dict(params or {})
    if spec.param_spec is None:
        if params:
            raise CatalogError(f"{spec.name} takes no parameters, got {sorted(params)}")
        return None
    unknown = set(params) - {spec.param_spec.name}
    if unknown:
        raise CatalogError(f"{spec.name} has no parameter(s) {sorted(unknown)}")
    return spec.param_spec.validate(params.get(spec.param_spec.name, spec.param_spec.default))


def _check_m8() -> None:
    m8 = m8_symbol()
    total = complex(m8.coefs.sum())
    if abs(total - 1.0) > 1e-10:
        raise CatalogError(f"m8 symbol sums to {total}, expected 1")
    mirrored = m8.rephase((-1.0) ** m8.exps[:, 0])
    qmf = m8.involution() * m8 + mirrored.involution() * mirrored
    residual = (qmf - 1.0).max_abs_coefficient()
    if residual > 1e-8:
        raise CatalogError(f"m8 symbol fails the QMF identity (residual {residual:.3e})")


def _check_tensor_symbol(mask: Mask) -> None:
    """Zero conditions of the tensor factor at the nonzero points of G; values at 0 are only reported."""
    symbol = Mask(mask.ctx, motzkin_tensor_symbol(), name="m8 tensor")
    order = sum_rules_order(symbol, max_order=8)
    if order < 8:
        logger.warning("m8 tensor symbol has zero conditions of order %d only", order)
    origin = np.zeros(3)
    worst = max(abs(symbol.p.derivative_eval(mu, origin))
                for mu in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (1, 1, 0)])
    logger.debug("m8 tensor symbol: zero conditions of order %d, low-order derivatives at 0 up to %.3e",
                 order, worst)
    shifted = sum(shift_action(mask.ctx, symbol.p, s).involution() * shift_action(mask.ctx, symbol.p, s)
                  for s in range(mask.ctx.m))
    residual = (shifted - 1.0).max_abs_coefficient()
    if residual > 1e-8:
        raise CatalogError(f"m8 tensor symbol is not orthonormal (residual {residual:.3e})")


def get(name: str, params: Optional[Mapping[str, float]] = None) -> Mask:
    """The named mask, built on first use and then served from the cache."""
    spec = entry(name)
    value = resolve_param(spec, params)
    key = (name, value)
    with _cache_lock:
        cached = _cache.get(key)
    if cached is not None:
        return cached

    if name == "motzkin":
        _check_m8()
    label = name if value is None else f"{name}({spec.param_spec.name}={value:g})"
    try:
        mask = Mask.from_matrix(spec.matrix, spec.build(value), name=label)
    except ValueError as exc:
        raise CatalogError(f"{label} failed to load: {exc}") from exc
    if name == "motzkin":
        _check_tensor_symbol(mask)
    f = subqmf_poly(mask)
    if not is_hermitian(f, 1e-10):
        raise CatalogError(f"{label}: sub-QMF polynomial is not hermitian")
    logger.debug("Loaded catalog mask %s: %d terms", label, len(mask.p))

    with _cache_lock:
        _cache.setdefault(key, mask)
        return _cache[key]
