"""UEP checkers, the sub-QMF grid check and zero conditions.

Identities are checked coefficientwise on Laurent polynomials; grids are only
used for the nonnegativity check of ``f``. Checkers never raise on failure:
the returned report carries the residuals and the ``passed`` flag.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import (
    SUBQMF_GRID_POINTS_3D,
    SUBQMF_GRID_POINTS_HIGH_DIM,
    SUBQMF_GRID_POINTS_LOW_DIM,
    SUBQMF_IMAG_TOLERANCE,
    SUM_RULES_MAX_ORDER,
    SUM_RULES_TOLERANCE,
    UEP_TOLERANCE,
)
from isotypical import Mask, split_poly, subqmf_poly
from laurent import DimensionMismatchError, LaurentPoly, sample_on_grid, sum_of_products
from lattice import TWO_PI, shift_action

logger = logging.getLogger(__name__)


class FrameConstructionError(RuntimeError):
    """Raised when a constructor cannot produce a frame that passes verification."""


def canonicalize_generator(q: LaurentPoly) -> LaurentPoly:
    """Scale by a unimodular factor so the first (lexicographic) coefficient is nonnegative real."""
    if q.is_zero:
        return q
    lead = q.coefs[0]
    return q.rephase(np.full(len(q), np.conj(lead) / abs(lead)))


@dataclass(frozen=True, eq=False)
class FrameSystem:
    mask: Mask
    generators: Tuple[LaurentPoly, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise ValueError("a frame system needs at least one generator")
        for j, q in enumerate(self.generators):
            if q.dim != self.mask.dim:
                raise DimensionMismatchError(
                    f"generator {j} has {q.dim} variables, mask has {self.mask.dim}")

    def __len__(self) -> int:
        return len(self.generators)

    def with_canonical_generators(self) -> "FrameSystem":
        return FrameSystem(self.mask, tuple(canonicalize_generator(q) for q in self.generators))


@dataclass(frozen=True)
class VerificationReport:
    tolerance: float
    vanishing_moment_max: float
    max_residual_uep: Optional[float] = None
    max_residual_polyphase: Optional[float] = None
    max_residual_matrix: Optional[float] = None
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        residuals = [r for r in self.residuals().values() if r is not None]
        object.__setattr__(self, "passed", all(r <= self.tolerance for r in residuals))

    def residuals(self) -> Dict[str, Optional[float]]:
        return {
            "uep": self.max_residual_uep,
            "polyphase": self.max_residual_polyphase,
            "matrix": self.max_residual_matrix,
        }

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        """Combine the residuals of two reports taken at the same tolerance."""
        def pick(a, b):
            return a if b is None else b if a is None else max(a, b)

        return VerificationReport(
            tolerance=self.tolerance,
            vanishing_moment_max=max(self.vanishing_moment_max, other.vanishing_moment_max),
            max_residual_uep=pick(self.max_residual_uep, other.max_residual_uep),
            max_residual_polyphase=pick(self.max_residual_polyphase, other.max_residual_polyphase),
            max_residual_matrix=pick(self.max_residual_matrix, other.max_residual_matrix),
        )

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _vanishing_moment_max(frame: FrameSystem) -> float:
    return max(abs(complex(q.coefs.sum())) if len(q) else 0.0 for q in frame.generators)


def _row_residual(pairs: List[Tuple[LaurentPoly, LaurentPoly]], constant: float, dim: int) -> float:
    total = sum_of_products(pairs)
    if constant:
        total = total - LaurentPoly.constant(dim, constant)
    return total.max_abs_coefficient()


def _report(frame: FrameSystem, tol: float, **residuals) -> VerificationReport:
    report = VerificationReport(tolerance=tol, vanishing_moment_max=_vanishing_moment_max(frame),
                                **residuals)
    logger.debug("%s: residuals %s, passed=%s", frame.mask.label(), report.residuals(), report.passed)
    return report


def check_uep(frame: FrameSystem, tol: float = UEP_TOLERANCE) -> VerificationReport:
    """``p^sigma* p + sum_j q_j^sigma* q_j = delta_(sigma,0)`` for every sigma in G (tau = 0)."""
    mask = frame.mask
    ctx = mask.ctx
    rows = (mask.p,) + frame.generators
    worst = 0.0
    for s in range(ctx.m):
        pairs = [(shift_action(ctx, r, s).involution(), r) for r in rows]
        worst = max(worst, _row_residual(pairs, 1.0 if s == 0 else 0.0, mask.dim))
    return _report(frame, tol, max_residual_uep=worst)


def check_uep_polyphase(frame: FrameSystem, tol: float = UEP_TOLERANCE) -> VerificationReport:
    """``p_chi* p_eta + sum_j q_(j,chi)* q_(j,eta) = delta_(chi,eta) / m`` for every pair of classes."""
    mask = frame.mask
    ctx = mask.ctx
    parts = [split_poly(ctx, r) for r in (mask.p,) + frame.generators]
    adjoints = [[c.involution() for c in comps] for comps in parts]
    worst = 0.0
    for chi in range(ctx.m):
        for eta in range(ctx.m):
            pairs = [(adj[chi], comps[eta]) for adj, comps in zip(adjoints, parts)]
            constant = 1.0 / ctx.m if chi == eta else 0.0
            worst = max(worst, _row_residual(pairs, constant, mask.dim))
    return _report(frame, tol, max_residual_polyphase=worst)


def check_uep_matrix(frame: FrameSystem, tol: float = UEP_TOLERANCE) -> VerificationReport:
    """Every entry of ``U* U - I_m`` where column ``sigma`` of ``U`` is ``(p^sigma, q_1^sigma, ...)``."""
    mask = frame.mask
    ctx = mask.ctx
    rows = (mask.p,) + frame.generators
    columns = [[shift_action(ctx, r, s) for r in rows] for s in range(ctx.m)]
    adjoints = [[c.involution() for c in col] for col in columns]
    worst = 0.0
    for s in range(ctx.m):
        for t in range(ctx.m):
            pairs = list(zip(adjoints[s], columns[t]))
            worst = max(worst, _row_residual(pairs, 1.0 if s == t else 0.0, mask.dim))
    return _report(frame, tol, max_residual_matrix=worst)


def verify_frame(frame: FrameSystem, tol: float = UEP_TOLERANCE) -> VerificationReport:
    """All three checkers merged into one report."""
    report = check_uep(frame, tol)
    report = report.merge(check_uep_polyphase(frame, tol))
    report = report.merge(check_uep_matrix(frame, tol))
    if report.passed:
        logger.info("%s: frame with %d generators verified (max residual %.3e)", frame.mask.label(),
                    len(frame), max(r for r in report.residuals().values() if r is not None))
    else:
        logger.warning("%s: frame verification failed: %s", frame.mask.label(), report.residuals())
    return report


# ----------------------------------------------------------------------
# Sub-QMF condition
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SubQmfGridResult:
    min_value: float
    argmin: Tuple[float, ...]
    max_imag: float
    grid_points: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "minValue": self.min_value,
            "argmin": list(self.argmin),
            "maxImag": self.max_imag,
            "gridPointsPerAxis": self.grid_points,
        }


def default_grid_points(dim: int) -> int:
    if dim <= 2:
        return SUBQMF_GRID_POINTS_LOW_DIM
    if dim == 3:
        return SUBQMF_GRID_POINTS_3D
    return SUBQMF_GRID_POINTS_HIGH_DIM


def subqmf_grid_values(mask: Mask, grid_points: Optional[int] = None,
                       f: Optional[LaurentPoly] = None) -> np.ndarray:
    """Complex values of ``f`` at ``2 pi k / n`` for every grid index ``k``."""
    n = grid_points or default_grid_points(mask.dim)
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    f = subqmf_poly(mask) if f is None else f
    return sample_on_grid(f, (n,) * mask.dim)


def check_subqmf_grid(mask: Mask, grid_points: Optional[int] = None,
                      f: Optional[LaurentPoly] = None) -> SubQmfGridResult:
    n = grid_points or default_grid_points(mask.dim)
    values = subqmf_grid_values(mask, n, f)
    max_imag = float(np.abs(values.imag).max())
    if max_imag >= SUBQMF_IMAG_TOLERANCE:
        logger.warning("%s: f has imaginary part %.3e on the grid", mask.label(), max_imag)
    real = values.real
    flat = int(np.argmin(real))
    index = np.unravel_index(flat, real.shape)
    argmin = tuple(TWO_PI * float(k) / n for k in index)
    result = SubQmfGridResult(min_value=float(real.reshape(-1)[flat]), argmin=argmin,
                              max_imag=max_imag, grid_points=n)
    logger.info("%s: sub-QMF grid %d^%d minimum %.3e at %s", mask.label(), n, mask.dim,
                result.min_value, argmin)
    return result


# ----------------------------------------------------------------------
# Zero conditions
# ----------------------------------------------------------------------

def _multi_indices(dim: int, order: int) -> List[Tuple[int, ...]]:
    out = []
    for combo in itertools.combinations_with_replacement(range(dim), order):
        mu = [0] * dim
        for k in combo:
            mu[k] += 1
        out.append(tuple(mu))
    return out


def sum_rules_order(mask: Mask, max_order: int = SUM_RULES_MAX_ORDER,
                    tol: float = SUM_RULES_TOLERANCE) -> int:
    """Largest ``k <= max_order`` with ``D^mu p(sigma) = 0`` for ``|mu| < k`` and ``sigma != 0``.

    The test for each ``mu`` is relative: ``|D^mu p(sigma)| <= tol * max(1, sum |p(alpha)| |alpha^mu|)``.
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    ctx = mask.ctx
    p = mask.p
    if ctx.m == 1 or p.is_zero:
        return max_order if ctx.m == 1 else 0

    exps = p.exps.astype(np.float64)
    # Column s-1 holds exp(-i alpha.sigma_s)
    phases = np.stack([ctx.roots[ctx.phase_indices(s, p.exps)] for s in range(1, ctx.m)], axis=1)
    for order in range(max_order):
        for mu in _multi_indices(mask.dim, order):
            weights = np.prod(exps ** np.asarray(mu, dtype=np.float64), axis=1)
            weighted = p.coefs * weights
            scale = max(1.0, float(np.abs(weighted).sum()))
            values = np.abs(weighted @ phases)
            if values.max() > tol * scale:
                logger.debug("%s: zero condition fails at mu=%s (|D^mu p| = %.3e)", mask.label(), mu,
                             values.max())
                return order
    return max_order
