"""Sparse Laurent polynomials on the complexified torus.

A polynomial is stored as an ``(n, d)`` integer exponent array and a matching
complex coefficient vector, kept in lexicographic exponent order with every
coefficient below ``LAURENT_DROP_TOLERANCE`` swept away. Values are immutable.

Conventions: ``z = exp(-i omega)``, so ``p(omega) = sum_alpha p(alpha) exp(-i alpha.omega)``,
and the involution sends ``z^alpha`` to ``z^-alpha`` while conjugating coefficients.

Products with many term pairs relative to the size of the result are computed by
FFT convolution on the result's bounding box; all other products aggregate the
outer sum of exponents directly.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import DENSE_PRODUCT_MAX_VOLUME, DENSE_PRODUCT_RATIO, LAURENT_DROP_TOLERANCE

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]
TorusPoint = Sequence[float]
Scalar = Union[int, float, complex]

_KEY_LIMIT = float(2 ** 62)


class DimensionMismatchError(ValueError):
    """Raised when operands live on tori of different dimensions."""


def _as_exponent_array(dim: int, exps) -> np.ndarray:
    arr = np.asarray(exps, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, dim), dtype=np.int64)
    arr = arr.reshape(-1, dim) if arr.ndim != 2 else arr
    if arr.shape[1] != dim:
        raise DimensionMismatchError(f"exponent vectors have length {arr.shape[1]}, expected {dim}")
    return arr


def _collect(dim: int, exps: np.ndarray, coefs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Merge repeated exponents, drop small coefficients and sort lexicographically."""
    if exps.shape[0] == 0:
        return np.zeros((0, dim), dtype=np.int64), np.zeros(0, dtype=np.complex128)

    lo = exps.min(axis=0)
    span = exps.max(axis=0) - lo + 1
    if float(np.prod(span.astype(np.float64))) < _KEY_LIMIT:
        # Mixed-radix keys with the first axis most significant sort lexicographically
        strides = np.ones(dim, dtype=np.int64)
        for k in range(dim - 2, -1, -1):
            strides[k] = strides[k + 1] * span[k + 1]
        keys = (exps - lo) @ strides
        uniq, inverse = np.unique(keys, return_inverse=True)
        out = np.empty((uniq.shape[0], dim), dtype=np.int64)
        rem = uniq.copy()
        for k in range(dim):
            out[:, k] = rem // strides[k] + lo[k]
            rem = rem % strides[k]
    else:
        out, inverse = np.unique(exps, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)

    n = out.shape[0]
    summed = (np.bincount(inverse, weights=coefs.real, minlength=n)
              + 1j * np.bincount(inverse, weights=coefs.imag, minlength=n))
    keep = (np.abs(summed) >= LAURENT_DROP_TOLERANCE) & (summed != 0)
    return out[keep], summed[keep].astype(np.complex128)


class LaurentPoly:
    """Immutable sparse Laurent polynomial in ``dim`` variables."""

    __slots__ = ("_dim", "_exps", "_coefs")

    def __init__(self, dim: int, exps=None, coefs=None) -> None:
        if int(dim) < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        dim = int(dim)
        exp_arr = _as_exponent_array(dim, [] if exps is None else exps)
        coef_arr = np.asarray([] if coefs is None else coefs, dtype=np.complex128).reshape(-1)
        if exp_arr.shape[0] != coef_arr.shape[0]:
            raise ValueError(
                f"{exp_arr.shape[0]} exponents but {coef_arr.shape[0]} coefficients")
        exp_arr, coef_arr = _collect(dim, exp_arr, coef_arr)
        self._set(dim, exp_arr, coef_arr)

    def _set(self, dim: int, exps: np.ndarray, coefs: np.ndarray) -> None:
        exps.setflags(write=False)
        coefs.setflags(write=False)
        self._dim = dim
        self._exps = exps
        self._coefs = coefs

    @classmethod
    def _canonical(cls, dim: int, exps: np.ndarray, coefs: np.ndarray) -> "LaurentPoly":
        # Arrays already sorted, merged and swept
        poly = cls.__new__(cls)
        poly._set(dim, np.array(exps, dtype=np.int64), np.array(coefs, dtype=np.complex128))
        return poly

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "LaurentPoly":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: Scalar) -> "LaurentPoly":
        return cls(dim, [[0] * dim], [value])

    @classmethod
    def monomial(cls, alpha: Sequence[int], coef: Scalar = 1.0) -> "LaurentPoly":
        alpha = tuple(int(a) for a in alpha)
        return cls(len(alpha), [alpha], [coef])

    @classmethod
    def from_terms(cls, dim: int,
                   terms: Union[Mapping[Sequence[int], Scalar], Iterable[Tuple[Sequence[int], Scalar]]]
                   ) -> "LaurentPoly":
        """Build from ``{alpha: coef}`` or an iterable of ``(alpha, coef)``; repeats are summed."""
        items = list(terms.items()) if isinstance(terms, Mapping) else list(terms)
        if not items:
            return cls(dim)
        exps = [tuple(alpha) for alpha, _ in items]
        coefs = [c for _, c in items]
        return cls(dim, exps, coefs)

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def exps(self) -> np.ndarray:
        return self._exps

    @property
    def coefs(self) -> np.ndarray:
        return self._coefs

    def __len__(self) -> int:
        return self._exps.shape[0]

    @property
    def is_zero(self) -> bool:
        return self._exps.shape[0] == 0

    def terms(self) -> Iterator[Tuple[MultiIndex, complex]]:
        for row, coef in zip(self._exps, self._coefs):
            yield tuple(int(a) for a in row), complex(coef)

    def as_dict(self) -> Dict[MultiIndex, complex]:
        return dict(self.terms())

    def support(self) -> List[MultiIndex]:
        return [tuple(int(a) for a in row) for row in self._exps]

    def coefficient(self, alpha: Sequence[int]) -> complex:
        key = np.asarray(alpha, dtype=np.int64)
        if key.shape != (self._dim,):
            raise DimensionMismatchError(f"exponent {tuple(alpha)} is not of length {self._dim}")
        hit = np.flatnonzero(np.all(self._exps == key, axis=1))
        return complex(self._coefs[hit[0]]) if hit.size else 0j

    def max_abs_coefficient(self) -> float:
        return float(np.abs(self._coefs).max()) if len(self) else 0.0

    def bounding_box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Componentwise (min, max) exponents, or None for the zero polynomial."""
        if self.is_zero:
            return None
        return self._exps.min(axis=0), self._exps.max(axis=0)

    def spread(self) -> int:
        """Largest per-axis exponent range; 0 for constants and the zero polynomial."""
        box = self.bounding_box()
        return 0 if box is None else int((box[1] - box[0]).max())

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self._coefs.imag) <= tol))

    # ------------------------------------------------------------------
    # Ring operations
    # ------------------------------------------------------------------

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.dim != self._dim:
                raise DimensionMismatchError(f"dimension mismatch: {self._dim} vs {other.dim}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return LaurentPoly.constant(self._dim, other)
        return NotImplemented

    def __add__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return LaurentPoly(self._dim,
                           np.concatenate([self._exps, other._exps]),
                           np.concatenate([self._coefs, other._coefs]))

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._canonical(self._dim, self._exps, -self._coefs)

    def __sub__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, value: Scalar) -> "LaurentPoly":
        return LaurentPoly(self._dim, self._exps, self._coefs * complex(value))

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, value: Scalar) -> "LaurentPoly":
        return self.scale(1.0 / complex(value))

    def __pow__(self, exponent: int) -> "LaurentPoly":
        if int(exponent) != exponent or exponent < 0:
            raise ValueError("only nonnegative integer powers are defined")
        result = LaurentPoly.constant(self._dim, 1.0)
        base = self
        n = int(exponent)
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return (self._dim == other._dim
                and self._exps.shape == other._exps.shape
                and bool(np.array_equal(self._exps, other._exps))
                and bool(np.array_equal(self._coefs, other._coefs)))

    __hash__ = None

    def __repr__(self) -> str:
        return f"LaurentPoly(dim={self._dim}, terms={len(self)})"

    def allclose(self, other: "LaurentPoly", tol: float = 1e-12) -> bool:
        return distance(self, other) <= tol

    # ------------------------------------------------------------------
    # Structural maps
    # ------------------------------------------------------------------

    def involution(self) -> "LaurentPoly":
        return LaurentPoly(self._dim, -self._exps, np.conj(self._coefs))

    def shift(self, alpha: Sequence[int]) -> "LaurentPoly":
        """Multiply by the monomial ``z^alpha``."""
        offset = np.asarray(alpha, dtype=np.int64)
        if offset.shape != (self._dim,):
            raise DimensionMismatchError(f"shift {tuple(alpha)} is not of length {self._dim}")
        return LaurentPoly._canonical(self._dim, self._exps + offset, self._coefs)

    def select(self, rows: np.ndarray) -> "LaurentPoly":
        """Sub-polynomial made of the terms picked by a boolean row mask."""
        return LaurentPoly._canonical(self._dim, self._exps[rows], self._coefs[rows])

    def with_coefficients(self, coefs: np.ndarray) -> "LaurentPoly":
        """Same support, new coefficients (swept again)."""
        return LaurentPoly(self._dim, self._exps, coefs)

    def rephase(self, phases: np.ndarray) -> "LaurentPoly":
        """Multiply each coefficient by a unit-modulus factor; the support is unchanged."""
        return LaurentPoly._canonical(self._dim, self._exps, self._coefs * np.asarray(phases))

    def substitute_monomial(self, matrix) -> "LaurentPoly":
        return substitute_monomial(self, matrix)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, omega: TorusPoint) -> complex:
        return evaluate(self, omega)

    def evaluate_many(self, omegas) -> np.ndarray:
        return evaluate_many(self, omegas)

    def derivative_eval(self, mu: Sequence[int], omega: TorusPoint) -> complex:
        return derivative_eval(self, mu, omega)


# ----------------------------------------------------------------------
# Module-level operations
# ----------------------------------------------------------------------

def _check_same_dim(a: LaurentPoly, b: LaurentPoly) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    _check_same_dim(a, b)
    return a + b


def mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    _check_same_dim(a, b)
    return sum_of_products([(a, b)])


def involution(p: LaurentPoly) -> LaurentPoly:
    return p.involution()


def distance(a: LaurentPoly, b: LaurentPoly) -> float:
    """Largest coefficient difference between two polynomials."""
    _check_same_dim(a, b)
    return (a - b).max_abs_coefficient()


def is_hermitian(p: LaurentPoly, tol: float = 1e-12) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    return distance(p, p.involution()) <= tol


def _as_point(p: LaurentPoly, omega: TorusPoint) -> np.ndarray:
    point = np.asarray(omega, dtype=np.float64).reshape(-1)
    if point.shape[0] != p.dim:
        raise DimensionMismatchError(f"point of length {point.shape[0]} for a {p.dim}-variate polynomial")
    return point


def evaluate(p: LaurentPoly, omega: TorusPoint) -> complex:
    point = _as_point(p, omega)
    if p.is_zero:
        return 0j
    return complex(np.exp(-1j * (p.exps @ point)) @ p.coefs)


def evaluate_many(p: LaurentPoly, omegas) -> np.ndarray:
    """Values at the rows of a ``(k, d)`` array of torus points."""
    points = np.asarray(omegas, dtype=np.float64).reshape(-1, p.dim)
    if p.is_zero:
        return np.zeros(points.shape[0], dtype=np.complex128)
    return np.exp(-1j * (points @ p.exps.T)) @ p.coefs


def derivative_eval(p: LaurentPoly, mu: Sequence[int], omega: TorusPoint) -> complex:
    """Partial derivative ``D^mu`` of ``omega -> p(exp(-i omega))`` at ``omega``."""
    order = np.asarray(mu, dtype=np.int64)
    if order.shape != (p.dim,):
        raise DimensionMismatchError(f"derivative order {tuple(mu)} is not of length {p.dim}")
    if np.any(order < 0):
        raise ValueError("derivative orders must be nonnegative")
    point = _as_point(p, omega)
    if p.is_zero:
        return 0j
    weights = np.prod(p.exps.astype(np.float64) ** order, axis=1)
    factor = (-1j) ** int(order.sum())
    return complex(factor * (np.exp(-1j * (p.exps @ point)) @ (p.coefs * weights)))


def substitute_monomial(p: LaurentPoly, matrix) -> LaurentPoly:
    """Apply the monomial map whose columns are the images of the input variables.

    A term ``c w^alpha`` becomes ``c z^(B alpha)``; ``B`` has shape ``(d', p.dim)``.
    """
    b = np.asarray(matrix, dtype=np.int64)
    if b.ndim != 2 or b.shape[1] != p.dim:
        raise DimensionMismatchError(
            f"substitution matrix of shape {b.shape} does not act on {p.dim} variables")
    return LaurentPoly(b.shape[0], p.exps @ b.T, p.coefs)


def sin_poly(l: Sequence[int]) -> LaurentPoly:
    """``sin(l.omega)`` as ``(z^-l - z^l) / 2i``."""
    l = tuple(int(a) for a in l)
    neg = tuple(-a for a in l)
    return LaurentPoly(len(l), [neg, l], [-0.5j, 0.5j])


def cos_poly(l: Sequence[int]) -> LaurentPoly:
    """``cos(l.omega)`` as ``(z^-l + z^l) / 2``."""
    l = tuple(int(a) for a in l)
    neg = tuple(-a for a in l)
    return LaurentPoly(len(l), [neg, l], [0.5, 0.5])


def sample_on_grid(p: LaurentPoly, shape: Sequence[int]) -> np.ndarray:
    """Values of ``p`` at ``omega_k = 2 pi k / shape`` for every grid index ``k``.

    Exponents are folded modulo the grid, which is exact at grid points.
    """
    shape = tuple(int(n) for n in shape)
    if len(shape) != p.dim:
        raise DimensionMismatchError(f"grid of rank {len(shape)} for a {p.dim}-variate polynomial")
    folded = np.zeros(shape, dtype=np.complex128)
    if not p.is_zero:
        index = np.mod(p.exps, np.asarray(shape, dtype=np.int64))
        np.add.at(folded, tuple(index.T), p.coefs)
    return np.fft.fftn(folded)


def _sparse_sum(dim: int, pairs: List[Tuple[LaurentPoly, LaurentPoly]]) -> LaurentPoly:
    exps = []
    coefs = []
    for a, b in pairs:
        exps.append((a.exps[:, None, :] + b.exps[None, :, :]).reshape(-1, dim))
        coefs.append((a.coefs[:, None] * b.coefs[None, :]).reshape(-1))
    return LaurentPoly(dim, np.concatenate(exps), np.concatenate(coefs))


def _dense_sum(dim: int, pairs: List[Tuple[LaurentPoly, LaurentPoly]],
               lo: np.ndarray, shape: Tuple[int, ...]) -> LaurentPoly:
    spectra: Dict[int, np.ndarray] = {}

    def spectrum(poly: LaurentPoly) -> np.ndarray:
        key = id(poly)
        if key not in spectra:
            spectra[key] = sample_on_grid(poly, shape)
        return spectra[key]

    acc = np.zeros(shape, dtype=np.complex128)
    for a, b in pairs:
        acc += spectrum(a) * spectrum(b)
    grid = np.fft.ifftn(acc)
    index = np.argwhere(np.abs(grid) >= LAURENT_DROP_TOLERANCE)
    if index.shape[0] == 0:
        return LaurentPoly.zero(dim)
    extent = np.asarray(shape, dtype=np.int64)
    # The true exponent is the representative of the grid index inside [lo, lo + shape)
    exps = lo + np.mod(index - lo, extent)
    return LaurentPoly(dim, exps, grid[tuple(index.T)])


def sum_of_products(pairs: Iterable[Tuple[LaurentPoly, LaurentPoly]]) -> LaurentPoly:
    """``sum_k a_k * b_k`` computed in one pass.

    Large products run as FFT convolutions on the common bounding box of all
    results, reusing the transform of any operand that appears more than once.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("sum_of_products needs at least one pair")
    dim = pairs[0][0].dim
    for a, b in pairs:
        _check_same_dim(a, b)
        if a.dim != dim:
            raise DimensionMismatchError(f"dimension mismatch: {dim} vs {a.dim}")

    live = [(a, b) for a, b in pairs if not a.is_zero and not b.is_zero]
    if not live:
        return LaurentPoly.zero(dim)

    lows = np.stack([a.exps.min(axis=0) + b.exps.min(axis=0) for a, b in live])
    highs = np.stack([a.exps.max(axis=0) + b.exps.max(axis=0) for a, b in live])
    lo = lows.min(axis=0)
    shape = tuple(int(n) for n in highs.max(axis=0) - lo + 1)
    volume = 1
    for n in shape:
        volume *= n
    work = sum(len(a) * len(b) for a, b in live)

    if volume <= DENSE_PRODUCT_MAX_VOLUME and work > DENSE_PRODUCT_RATIO * volume:
        logger.debug("FFT product: %d pairs, %d term products, box %s", len(live), work, shape)
        return _dense_sum(dim, live, lo, shape)
    return _sparse_sum(dim, live)
