"""Zeros of the sub-QMF polynomial and the Hessian test for frame existence.

A mask admits UEP generators when ``f = 1 - sum_sigma |p^sigma|^2`` is
nonnegative and its Hessian is positive definite at every zero of ``f``.
This module locates the zeros (grid scan, then damped Newton on the
gradient) and classifies the mask.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import (
    HESSIAN_POSITIVE_THRESHOLD,
    UEP_TOLERANCE,
    ZERO_CANDIDATE_FACTOR,
    ZERO_DEDUP_RADIUS,
    ZERO_LOCAL_MIN_THRESHOLD,
    ZERO_NEWTON_MAX_STEPS,
)
from isotypical import Mask, MaskError, subqmf_poly
from laurent import LaurentPoly, TorusPoint
from lattice import TWO_PI
from verify import check_subqmf_grid, default_grid_points, subqmf_grid_values, sum_rules_order

logger = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    SUFFICIENT_HOLDS = "SUFFICIENT_HOLDS"
    NECESSARY_VIOLATED = "NECESSARY_VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


class SubQmfViolation(Exception):
    """A point where ``f`` is negative beyond tolerance."""

    def __init__(self, point: np.ndarray, value: float) -> None:
        super().__init__(f"f({tuple(point)}) = {value:.3e} < 0")
        self.point = point
        self.value = value


@dataclass
class ZeroReport:
    zeros: List[Tuple[float, ...]]
    hessians: List[np.ndarray]
    min_eigenvalues: List[float]
    verdict: Verdict
    grid_min: float
    grid_argmin: Tuple[float, ...]
    violation: Optional[Tuple[float, ...]] = field(default=None)

    def to_dict(self) -> Dict[str, object]:
        return {
            "zeros": [list(z) for z in self.zeros],
            "hessians": [h.tolist() for h in self.hessians],
            "minEigenvalues": list(self.min_eigenvalues),
            "verdict": self.verdict.value,
            "gridMin": self.grid_min,
            "gridArgmin": list(self.grid_argmin),
            "violation": None if self.violation is None else list(self.violation),
        }


# ----------------------------------------------------------------------
# Derivatives
# ----------------------------------------------------------------------

def gradient_at(q: LaurentPoly, w: TorusPoint) -> np.ndarray:
    """``(D_k q)(w)`` for every coordinate ``k``."""
    eye = np.eye(q.dim, dtype=np.int64)
    return np.array([q.derivative_eval(eye[k], w) for k in range(q.dim)], dtype=np.complex128)


def hessian_at(q: LaurentPoly, w: TorusPoint) -> np.ndarray:
    """Matrix of second partials ``(D_k D_l q)(w)``."""
    d = q.dim
    out = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        for l in range(k, d):
            mu = np.zeros(d, dtype=np.int64)
            mu[k] += 1
            mu[l] += 1
            out[k, l] = out[l, k] = q.derivative_eval(mu, w)
    return out


def hessian_f_via_lemma(mask: Mask) -> np.ndarray:
    """``-2 Hess p(0) - 2 grad p(0)* grad p(0)``, the Hessian of ``f`` at 0 for real masks with sum rules >= 2."""
    p = mask.p
    if not p.is_real(1e-12):
        raise MaskError(f"{mask.label()}: the Hessian shortcut needs real coefficients")
    if sum_rules_order(mask, max_order=2) < 2:
        raise MaskError(f"{mask.label()}: the Hessian shortcut needs sum rules of order 2")
    origin = np.zeros(mask.dim)
    grad = gradient_at(p, origin)
    result = -2.0 * hessian_at(p, origin) - 2.0 * np.outer(np.conj(grad), grad)
    imag = float(np.abs(result.imag).max())
    if imag > 1e-10:
        raise MaskError(f"{mask.label()}: Hessian shortcut has imaginary residue {imag:.3e}")
    return result.real


def _local_model(f: LaurentPoly, w: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Real value, gradient and Hessian of ``f`` at ``w`` in one pass over the terms."""
    exps = f.exps.astype(np.float64)
    weighted = f.coefs * np.exp(-1j * (exps @ w))
    value = weighted.sum().real
    grad = (-1j * (exps.T @ weighted)).real
    hess = -((exps.T * weighted) @ exps).real
    return float(value), grad, hess


# ----------------------------------------------------------------------
# Zero finding
# ----------------------------------------------------------------------

def _torus_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.mod(np.abs(a - b), TWO_PI)
    return float(np.minimum(diff, TWO_PI - diff).max())


def _reduce(point: np.ndarray) -> np.ndarray:
    out = np.mod(point, TWO_PI)
    out[np.abs(out - TWO_PI) < ZERO_DEDUP_RADIUS] = 0.0
    return out


def _candidates(values: np.ndarray, tol: float) -> np.ndarray:
    """Grid indices below the candidate threshold or at low local minima."""
    low = values < ZERO_CANDIDATE_FACTOR * tol
    local = values < ZERO_LOCAL_MIN_THRESHOLD
    for axis in range(values.ndim):
        local &= values <= np.roll(values, 1, axis=axis)
        local &= values <= np.roll(values, -1, axis=axis)
    return np.argwhere(low | local)


def _newton(f: LaurentPoly, start: np.ndarray, tol: float) -> Optional[Tuple[np.ndarray, float]]:
    """Damped Newton on the gradient; the point where it settles with its value, or None."""
    w = start.astype(np.float64)
    value, grad, hess = _local_model(f, w)
    for _ in range(ZERO_NEWTON_MAX_STEPS):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 1e-14:
            break
        step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        t = 1.0
        while t > 1e-8:
            trial = w + t * step
            t_value, t_grad, t_hess = _local_model(f, trial)
            if np.linalg.norm(t_grad) < gnorm or t_value < value:
                break
            t *= 0.5
        else:
            break
        w, value, grad, hess = trial, t_value, t_grad, t_hess
    if not np.all(np.isfinite(w)):
        return None
    if value < -tol:
        raise SubQmfViolation(_reduce(w), value)
    if value <= tol and np.linalg.norm(grad) <= np.sqrt(tol):
        return _reduce(w), float(value)
    logger.debug("Dropping zero candidate at %s: f=%.3e, |grad|=%.3e", tuple(start), value,
                 float(np.linalg.norm(grad)))
    return None


def find_zeros_f(mask: Mask, grid_points: Optional[int] = None, tol: float = UEP_TOLERANCE,
                 f: Optional[LaurentPoly] = None) -> List[Tuple[float, ...]]:
    """Zeros of ``f`` in ``[0, 2 pi)^d``, each with ``f <= tol`` and ``|grad f| <= sqrt(tol)``.

    Raises SubQmfViolation when a value below ``-tol`` turns up.
    """
    n = grid_points or default_grid_points(mask.dim)
    f = subqmf_poly(mask) if f is None else f
    values = subqmf_grid_values(mask, n, f).real
    lowest = np.unravel_index(int(np.argmin(values)), values.shape)
    if values[lowest] < -tol:
        raise SubQmfViolation(TWO_PI * np.asarray(lowest, dtype=np.float64) / n, float(values[lowest]))

    # Newton stalls short of zeros of order four and up, where f <= tol already holds at
    # distance tol^(1/4); accepted points that close belong to one zero
    radius = max(ZERO_DEDUP_RADIUS, tol ** 0.25)
    found: List[Tuple[np.ndarray, float]] = []
    candidates = _candidates(values, tol)
    logger.debug("%s: %d zero candidates on the %d^%d grid", mask.label(), len(candidates), n, mask.dim)
    for index in candidates:
        start = TWO_PI * index.astype(np.float64) / n
        try:
            settled = _newton(f, start, tol)
        except np.linalg.LinAlgError:
            logger.warning("%s: Newton failed from %s; candidate dropped", mask.label(), tuple(start))
            continue
        if settled is None:
            continue
        zero, value = settled
        near = [k for k, (other, _) in enumerate(found) if _torus_distance(zero, other) <= radius]
        if not near:
            found.append(settled)
        elif value < found[near[0]][1]:
            found[near[0]] = settled
    zeros = sorted(tuple(float(x) for x in z) for z, _ in found)
    logger.info("%s: %d zeros of f", mask.label(), len(zeros))
    return zeros


def existence_verdict(mask: Mask, grid_points: Optional[int] = None,
                      tol: float = UEP_TOLERANCE) -> ZeroReport:
    f = subqmf_poly(mask)
    grid = check_subqmf_grid(mask, grid_points, f)

    def violated(point: Sequence[float]) -> ZeroReport:
        logger.info("%s: sub-QMF condition violated at %s", mask.label(), tuple(point))
        return ZeroReport([], [], [], Verdict.NECESSARY_VIOLATED, grid.min_value, grid.argmin,
                          tuple(float(x) for x in point))

    if grid.min_value < -tol:
        return violated(grid.argmin)
    try:
        zeros = find_zeros_f(mask, grid.grid_points, tol, f)
    except SubQmfViolation as exc:
        return violated(exc.point)

    hessians = [hessian_at(f, z).real for z in zeros]
    min_eigs = [float(np.linalg.eigvalsh(h)[0]) for h in hessians]
    if all(e > HESSIAN_POSITIVE_THRESHOLD for e in min_eigs):
        verdict = Verdict.SUFFICIENT_HOLDS
    else:
        verdict = Verdict.INCONCLUSIVE
    logger.info("%s: verdict %s (%d zeros)", mask.label(), verdict.value, len(zeros))
    return ZeroReport(zeros, hessians, min_eigs, verdict, grid.min_value, grid.argmin)


def sample_subqmf_csv(mask: Mask, grid_points: Optional[int], path: Union[str, Path]) -> Path:
    """Write ``omega_1..omega_d, f`` on the uniform grid as CSV."""
    import pandas as pd

    n = grid_points or default_grid_points(mask.dim)
    values = subqmf_grid_values(mask, n).real
    axes = np.meshgrid(*[TWO_PI * np.arange(n) / n] * mask.dim, indexing="ij")
    frame = pd.DataFrame({f"omega_{k + 1}": axis.ravel() for k, axis in enumerate(axes)})
    frame["f"] = values.ravel()
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info("Wrote %d samples of f to %s", len(frame), path)
    return path
