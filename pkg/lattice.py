"""Dilation matrix machinery.

For an integer matrix ``M`` with ``m = |det M|`` this module enumerates

* the finite group ``G = 2 pi M^-T Z^d / 2 pi Z^d`` of torus points,
* one representative per class of ``Z^d / M Z^d`` (the characters of ``G``),
* the pairing ``<sigma, chi> = exp(i sigma.chi)``,

and implements the shift action ``p -> p^sigma`` on Laurent polynomials.

Everything is exact integer bookkeeping: with ``A = m M^-1`` (an integer
matrix) two exponents share a class iff ``A alpha = A beta (mod m)``, and
``alpha.sigma = 2 pi r / m`` with ``r = k^T A alpha (mod m)`` where
``sigma = 2 pi M^-T k``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from config import LATTICE_ANGLE_TOLERANCE
from laurent import DimensionMismatchError, LaurentPoly, MultiIndex

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class SingularMatrixError(ValueError):
    """Raised for a dilation matrix with zero determinant."""


def _as_square_matrix(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1 and arr.shape[0] == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"dilation matrix must be square, got shape {arr.shape}")
    if not np.array_equal(arr, np.asarray(matrix, dtype=np.float64).reshape(arr.shape)):
        raise ValueError("dilation matrix must have integer entries")
    return arr.copy()


def is_expansive(matrix) -> bool:
    """True when every eigenvalue of ``M`` lies outside the closed unit disc."""
    eig = np.linalg.eigvals(np.asarray(matrix, dtype=np.float64))
    return bool(np.all(np.abs(eig) > 1.0))


def _unit_roots(m: int) -> np.ndarray:
    """``exp(-2 pi i r / m)`` for ``r = 0..m-1`` with exact zeros and ones snapped."""
    roots = np.exp(-2j * np.pi * np.arange(m) / m)
    re = roots.real.copy()
    im = roots.imag.copy()
    for part in (re, im):
        part[np.abs(part) < 1e-15] = 0.0
        part[np.abs(part - 1.0) < 1e-15] = 1.0
        part[np.abs(part + 1.0) < 1e-15] = -1.0
    return re + 1j * im


def _scan_classes(key_matrix: np.ndarray, m: int, bound: int) -> List[MultiIndex]:
    """Lexicographically smallest nonnegative vector of each class, scanning ``[0, bound)^d``."""
    dim = key_matrix.shape[0]
    found: Dict[Tuple[int, ...], MultiIndex] = {}
    for alpha in itertools.product(range(bound), repeat=dim):
        key = tuple(int(x) for x in np.mod(key_matrix @ np.asarray(alpha, dtype=np.int64), m))
        if key not in found:
            found[key] = tuple(alpha)
            if len(found) == m:
                break
    if len(found) != m:
        raise RuntimeError(f"found {len(found)} classes in the scan box, expected {m}")
    return list(found.values())


@dataclass(frozen=True, eq=False)
class DilationContext:
    """Immutable group data for one dilation matrix.

    ``points[s]`` is ``sigma_s`` reduced to ``[0, 2 pi)``, ``coset_reps[c]`` is the
    representative of class ``c`` and ``pairing_table[s, c] = <sigma_s, chi_c>``.
    Index 0 is always the neutral element on both sides.
    """

    matrix: np.ndarray
    m: int
    points: np.ndarray
    coset_reps: np.ndarray
    pairing_table: np.ndarray
    dual_reps: np.ndarray
    key_matrix: np.ndarray
    roots: np.ndarray = field(repr=False)
    _class_lookup: Dict[Tuple[int, ...], int] = field(repr=False)
    _point_lookup: Dict[Tuple[int, ...], int] = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def _exponent_rows(self, exps) -> np.ndarray:
        arr = np.asarray(exps, dtype=np.int64)
        if arr.size == 0:
            return np.zeros((0, self.dim), dtype=np.int64)
        return arr.reshape(-1, self.dim)

    def class_indices(self, exps) -> np.ndarray:
        """Class index (position in ``coset_reps``) of every row of ``exps``."""
        arr = self._exponent_rows(exps)
        keys = np.mod(arr @ self.key_matrix.T, self.m)
        # Encode each key vector as one base-m integer, then look up the distinct codes once
        codes = keys @ (self.m ** np.arange(self.dim, dtype=np.int64))
        uniq, inverse = np.unique(codes, return_inverse=True)
        digits = np.mod(uniq[:, None] // (self.m ** np.arange(self.dim, dtype=np.int64)), self.m)
        classes = np.array([self._class_lookup[tuple(int(x) for x in row)] for row in digits],
                           dtype=np.int64)
        return classes[np.asarray(inverse).reshape(-1)]

    def class_index(self, alpha: Sequence[int]) -> int:
        if len(alpha) != self.dim:
            raise DimensionMismatchError(f"exponent {tuple(alpha)} is not of length {self.dim}")
        return int(self.class_indices([tuple(alpha)])[0])

    def phase_indices(self, sigma_index: int, exps) -> np.ndarray:
        """``r`` with ``alpha.sigma = 2 pi r / m (mod 2 pi)`` for each row of ``exps``."""
        arr = self._exponent_rows(exps)
        weights = self.dual_reps[sigma_index] @ self.key_matrix
        return np.mod(arr @ weights, self.m)

    def add_points(self, s: int, t: int) -> int:
        """Index of ``sigma_s + sigma_t`` in ``points``."""
        key = tuple(int(x) for x in np.mod((self.dual_reps[s] + self.dual_reps[t]) @ self.key_matrix, self.m))
        return self._point_lookup[key]

    def point_index(self, omega: Sequence[float]) -> int:
        """Index of the group element equal to ``omega`` mod 2 pi; ValueError when none is."""
        target = np.mod(np.asarray(omega, dtype=np.float64), TWO_PI)
        diff = np.abs(self.points - target)
        diff = np.minimum(diff, TWO_PI - diff)
        hit = np.flatnonzero(np.all(diff <= LATTICE_ANGLE_TOLERANCE, axis=1))
        if hit.size == 0:
            raise ValueError(f"{tuple(omega)} is not a point of G")
        return int(hit[0])


def build_context(matrix) -> DilationContext:
    M = _as_square_matrix(matrix)
    dim = M.shape[0]
    det = int(round(np.linalg.det(M.astype(np.float64))))
    if det == 0:
        raise SingularMatrixError(f"dilation matrix {M.tolist()} is singular")
    m = abs(det)

    key_matrix = np.rint(m * np.linalg.inv(M.astype(np.float64))).astype(np.int64)
    if not np.array_equal(M @ key_matrix, m * np.eye(dim, dtype=np.int64)):
        raise SingularMatrixError(f"could not form the integer adjugate of {M.tolist()}")
    if not is_expansive(M):
        logger.warning("Dilation matrix %s is not expansive; only symbol-level algebra is meaningful",
                       M.tolist())

    bound = max(1, m * int(np.abs(M).max()))
    reps = np.asarray(_scan_classes(key_matrix, m, bound), dtype=np.int64).reshape(m, dim)
    duals = np.asarray(_scan_classes(key_matrix.T, m, bound), dtype=np.int64).reshape(m, dim)

    point_keys = np.mod(duals @ key_matrix, m)
    points = (TWO_PI / m) * point_keys.astype(np.float64)
    phase = np.mod(point_keys @ reps.T, m)
    roots = _unit_roots(m)
    # <sigma, chi> = exp(+i sigma.chi) is the conjugate of the shift phase
    pairing_table = np.conj(roots[phase])

    class_lookup = {tuple(int(x) for x in np.mod(key_matrix @ rep, m)): c for c, rep in enumerate(reps)}
    point_lookup = {tuple(int(x) for x in key): s for s, key in enumerate(point_keys)}

    for arr in (M, points, reps, pairing_table, duals, key_matrix, roots):
        arr.setflags(write=False)

    ctx = DilationContext(
        matrix=M,
        m=m,
        points=points,
        coset_reps=reps,
        pairing_table=pairing_table,
        dual_reps=duals,
        key_matrix=key_matrix,
        roots=roots,
        _class_lookup=class_lookup,
        _point_lookup=point_lookup,
    )
    logger.debug("Built dilation context for M=%s: m=%d, reps=%s", M.tolist(), m, reps.tolist())
    return ctx


def pairing(ctx: DilationContext, sigma_index: int, chi_index: int) -> complex:
    return complex(ctx.pairing_table[sigma_index, chi_index])


def shift_action(ctx: DilationContext, p: LaurentPoly, sigma_index: int) -> LaurentPoly:
    """``p^sigma``: coefficients ``p(alpha) exp(-i alpha.sigma)``."""
    if p.dim != ctx.dim:
        raise DimensionMismatchError(f"{p.dim}-variate polynomial in a {ctx.dim}-dimensional context")
    if sigma_index == 0 or p.is_zero:
        return p
    return p.rephase(ctx.roots[ctx.phase_indices(sigma_index, p.exps)])


def is_g_invariant(ctx: DilationContext, p: LaurentPoly, tol: float = 1e-12) -> bool:
    if p.dim != ctx.dim:
        raise DimensionMismatchError(f"{p.dim}-variate polynomial in a {ctx.dim}-dimensional context")
    if p.is_zero:
        return True
    magnitudes = np.abs(p.coefs)
    for s in range(1, ctx.m):
        moved = np.abs(ctx.roots[ctx.phase_indices(s, p.exps)] - 1.0) * magnitudes
        if moved.max() > tol:
            return False
    return True
