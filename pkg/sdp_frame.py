"""Frame construction as a semidefinite feasibility problem.

Over an ordered support set ``N`` the mask becomes the coefficient row ``p``
and the seed ``R = diag(Re p) - p* p``. A frame with generator supports in
``N`` exists iff some hermitian ``S = R + O`` is positive semidefinite, where
``O`` has zero sum over every group of entries ``(alpha, alpha + tau)`` with
``alpha`` in a fixed coset class. Any factorization ``S = sum_j q_j* q_j``
then gives the generators ``q_j(z) = sum_alpha q_j[alpha] z^alpha``.

The feasibility search is Dykstra's alternating projection between the PSD
cone and the affine set of admissible ``S``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import (
    GENERATOR_PRUNE_TOLERANCE,
    SDP_MAX_ITERATIONS,
    SDP_POLISH_ENABLED,
    SDP_POLISH_MAX_STEPS,
    SDP_POLISH_MAX_UNKNOWNS,
    SDP_RANK_TOL,
    SDP_RESIDUAL_TOL,
    SDP_STALL_WINDOW,
    SDP_SUPPORT_DILATION,
    SDP_VERIFY_TOLERANCE,
)
from isotypical import Mask, require_partition_of_unity
from laurent import DimensionMismatchError, LaurentPoly, MultiIndex, is_hermitian
from sos_frame import SosCertificate
from verify import FrameConstructionError, FrameSystem, check_uep

logger = logging.getLogger(__name__)

FEASIBLE = "feasible"
STALLED = "stalled"


class GramProblemError(ValueError):
    """Raised when a Gram problem cannot be set up over the given support."""


class EigenSolverError(RuntimeError):
    """Raised when the hermitian eigensolver fails."""


class StalledError(RuntimeError):
    """Raised when the feasibility search stalls on every support tried."""


@dataclass(frozen=True)
class SupportSet:
    """Lexicographically ordered exponent set ``N``."""

    points: Tuple[MultiIndex, ...]

    def __post_init__(self) -> None:
        pts = [tuple(int(a) for a in alpha) for alpha in self.points]
        if not pts:
            raise ValueError("support set is empty")
        if len({len(alpha) for alpha in pts}) != 1:
            raise DimensionMismatchError("support points have different lengths")
        if len(set(pts)) != len(pts):
            raise ValueError("support set contains duplicate points")
        object.__setattr__(self, "points", tuple(sorted(pts)))

    @classmethod
    def from_mask(cls, mask: Mask) -> "SupportSet":
        return cls(tuple(mask.p.support()))

    @classmethod
    def box(cls, lo: Sequence[int], hi: Sequence[int]) -> "SupportSet":
        """Every integer point of ``[lo, hi]`` (inclusive)."""
        if len(lo) != len(hi):
            raise DimensionMismatchError(f"box corners {tuple(lo)} and {tuple(hi)} differ in length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box [{tuple(lo)}, {tuple(hi)}]")
        axes = [range(int(a), int(b) + 1) for a, b in zip(lo, hi)]
        return cls(tuple(itertools.product(*axes)))

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.int64).reshape(len(self), self.dim)

    def dilated(self, k: int = SDP_SUPPORT_DILATION) -> "SupportSet":
        """The bounding box grown by ``k`` in every coordinate."""
        arr = self.as_array()
        return SupportSet.box(arr.min(axis=0) - k, arr.max(axis=0) + k)

    def index_of(self, alpha: Sequence[int]) -> int:
        try:
            return self.points.index(tuple(int(a) for a in alpha))
        except ValueError:
            raise KeyError(tuple(alpha)) from None

    def coefficient_row(self, p: LaurentPoly) -> np.ndarray:
        """Coefficients of ``p`` ordered like the support; GramProblemError when ``p`` leaks out."""
        if p.dim != self.dim:
            raise DimensionMismatchError(f"{p.dim}-variate polynomial on a {self.dim}-dimensional support")
        lookup = {alpha: k for k, alpha in enumerate(self.points)}
        row = np.zeros(len(self), dtype=np.complex128)
        for alpha, coef in p.terms():
            if alpha not in lookup:
                raise GramProblemError(f"support is missing exponent {alpha}")
            row[lookup[alpha]] = coef
        return row


@dataclass(frozen=True, eq=False)
class GramProblem:
    """Seed matrix plus the partition of its entries into constraint groups.

    Feasible points are the hermitian ``S`` whose sum over group ``g`` equals
    ``group_targets[g]``.
    """

    support: SupportSet
    seed: np.ndarray
    group_ids: np.ndarray
    group_counts: np.ndarray
    group_targets: np.ndarray
    group_keys: Tuple[Tuple[int, ...], ...] = field(repr=False)

    @property
    def R(self) -> np.ndarray:
        return self.seed

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.seed)

    def groups(self) -> List[np.ndarray]:
        """``(row, col)`` index pairs of each group, in ``group_keys`` order."""
        rows, cols = np.indices(self.group_ids.shape)
        flat = self.group_ids.ravel()
        pairs = np.stack([rows.ravel(), cols.ravel()], axis=1)
        return [pairs[flat == g] for g in range(len(self.group_keys))]

    def group_sums(self, S: np.ndarray) -> np.ndarray:
        ids = self.group_ids.ravel()
        n = len(self.group_keys)
        if np.iscomplexobj(S):
            return (np.bincount(ids, weights=S.real.ravel(), minlength=n)
                    + 1j * np.bincount(ids, weights=S.imag.ravel(), minlength=n))
        return np.bincount(ids, weights=S.ravel(), minlength=n)

    def deviation(self, S: np.ndarray) -> float:
        """Largest group-sum violation of ``S``."""
        return float(np.abs(self.group_sums(S) - self.group_targets).max())


def _group_partition(keys: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Tuple[Tuple[int, ...], ...]]:
    n = keys.shape[0]
    flat = keys.reshape(n * n, -1)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    ids = np.asarray(inverse).reshape(n, n)
    counts = np.bincount(ids.ravel(), minlength=uniq.shape[0])
    return ids, counts, tuple(tuple(int(x) for x in row) for row in uniq)


def _lags(support: SupportSet) -> np.ndarray:
    pts = support.as_array()
    # lag[a, b] = beta - alpha
    return pts[None, :, :] - pts[:, None, :]


def build_gram_seed(mask: Mask, support: Optional[SupportSet] = None) -> GramProblem:
    """``R[alpha, beta] = delta Re p(alpha) - conj(p(alpha)) p(beta)``, groups by (class of alpha, lag)."""
    require_partition_of_unity(mask)
    support = support or SupportSet.from_mask(mask)
    if support.dim != mask.dim:
        raise DimensionMismatchError(f"support of dimension {support.dim} for a {mask.dim}-variate mask")
    row = support.coefficient_row(mask.p)
    seed = np.diag(row.real).astype(np.complex128) - np.outer(np.conj(row), row)

    classes = mask.ctx.class_indices(support.as_array())
    n = len(support)
    keys = np.concatenate([np.broadcast_to(classes[:, None, None], (n, n, 1)), _lags(support)], axis=2)
    ids, counts, group_keys = _group_partition(keys)

    if mask.p.is_real():
        seed = seed.real.copy()
    problem = GramProblem(support=support, seed=seed, group_ids=ids, group_counts=counts,
                          group_targets=np.zeros(len(group_keys)), group_keys=group_keys)
    targets = problem.group_sums(seed)
    object.__setattr__(problem, "group_targets", targets)
    logger.debug("%s: Gram seed over %d points, %d constraint groups", mask.label(), n, len(group_keys))
    return problem


def build_sos_gram(target: LaurentPoly, support: SupportSet) -> GramProblem:
    """Plain Gram problem ``sum_(beta - alpha = tau) S[alpha, beta] = g(tau)`` for a hermitian ``g``."""
    if target.dim != support.dim:
        raise DimensionMismatchError(f"{target.dim}-variate target on a {support.dim}-dimensional support")
    scale = max(1.0, target.max_abs_coefficient())
    if not is_hermitian(target, 1e-12 * scale):
        raise GramProblemError("Gram target is not hermitian")
    ids, counts, group_keys = _group_partition(_lags(support))
    lookup = {key: g for g, key in enumerate(group_keys)}
    targets = np.zeros(len(group_keys), dtype=np.complex128)
    for tau, coef in target.terms():
        if tau not in lookup:
            raise GramProblemError(f"lag {tau} of the target is not a difference of support points")
        targets[lookup[tau]] = coef
    seed = (targets / counts)[ids]
    if target.is_real():
        seed = seed.real.copy()
        targets = targets.real.copy()
    return GramProblem(support=support, seed=seed, group_ids=ids, group_counts=counts,
                       group_targets=targets, group_keys=group_keys)


# ----------------------------------------------------------------------
# Projections
# ----------------------------------------------------------------------

def _hermitize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.conj().T)


def project_affine(S: np.ndarray, prob: GramProblem) -> np.ndarray:
    """Orthogonal projection onto the hermitian matrices meeting every group sum."""
    if S.shape != prob.seed.shape:
        raise DimensionMismatchError(f"matrix of shape {S.shape} for a problem of size {prob.size}")
    excess = (prob.group_sums(S) - prob.group_targets) / prob.group_counts
    if not np.iscomplexobj(S):
        excess = excess.real
    return S - excess[prob.group_ids]


def _eigh(S: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    try:
        w, V = np.linalg.eigh(_hermitize(S))
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"hermitian eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise EigenSolverError("hermitian eigensolver returned non-finite eigenvalues")
    return w, V


def project_psd(S: np.ndarray) -> np.ndarray:
    """Nearest positive semidefinite matrix in the Frobenius norm (negative eigenvalues clipped)."""
    w, V = _eigh(S)
    clipped = np.clip(w, 0.0, None)
    return (V * clipped) @ V.conj().T


def min_eigenvalue(S: np.ndarray) -> float:
    return float(_eigh(S)[0][0])


# ----------------------------------------------------------------------
# Solver
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = SDP_MAX_ITERATIONS
    residual_tol: float = SDP_RESIDUAL_TOL
    rank_tol: float = SDP_RANK_TOL
    stall_window: int = SDP_STALL_WINDOW
    polish: bool = SDP_POLISH_ENABLED

    def __post_init__(self) -> None:
        for name in ("max_iterations", "residual_tol", "rank_tol", "stall_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class SolveResult:
    status: str
    S: np.ndarray
    iterations: int
    residual: float
    residual_trace: List[float] = field(default_factory=list)
    distance_trace: List[float] = field(default_factory=list)
    polished: bool = False

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def solve_feasibility(prob: GramProblem, opts: Optional[SolveOptions] = None,
                      reference: Optional[np.ndarray] = None) -> SolveResult:
    """Dykstra iterations from the seed.

    ``residual_trace`` holds the group deviation of every PSD iterate; with a
    ``reference`` point, ``distance_trace`` holds the Frobenius distance of
    every affine iterate to it.
    """
    opts = opts or SolveOptions()
    x = prob.seed.copy()
    correction = np.zeros_like(x)
    residuals: List[float] = []
    distances: List[float] = []
    if reference is not None:
        distances.append(float(np.linalg.norm(x - reference)))

    best = np.inf
    window_best = np.inf
    y = x
    for iteration in range(1, opts.max_iterations + 1):
        y = project_psd(x + correction)
        correction = x + correction - y
        x = project_affine(y, prob)
        residual = prob.deviation(y)
        residuals.append(residual)
        if reference is not None:
            distances.append(float(np.linalg.norm(x - reference)))
        best = min(best, residual)

        if residual <= opts.residual_tol:
            logger.info("Gram problem of size %d feasible after %d iterations (residual %.3e)",
                        prob.size, iteration, residual)
            return SolveResult(FEASIBLE, y, iteration, residual, residuals, distances)

        if iteration % opts.stall_window == 0:
            logger.debug("Dykstra iteration %d: residual %.3e", iteration, residual)
            polished = _try_polish(prob, y, opts)
            if polished is not None:
                return SolveResult(FEASIBLE, polished, iteration, prob.deviation(polished),
                                   residuals, distances, polished=True)
            if window_best - best < opts.residual_tol / 100.0:
                logger.warning("Gram problem of size %d stalled at iteration %d (residual %.3e)",
                               prob.size, iteration, best)
                return SolveResult(STALLED, y, iteration, residual, residuals, distances)
            window_best = best

    if opts.max_iterations % opts.stall_window:
        polished = _try_polish(prob, y, opts)
        if polished is not None:
            return SolveResult(FEASIBLE, polished, opts.max_iterations, prob.deviation(polished),
                               residuals, distances, polished=True)
    logger.warning("Gram problem of size %d not solved in %d iterations (residual %.3e)",
                   prob.size, opts.max_iterations, best)
    return SolveResult(STALLED, y, opts.max_iterations, residuals[-1] if residuals else np.inf,
                       residuals, distances)


# ----------------------------------------------------------------------
# Low-rank refinement
# ----------------------------------------------------------------------

def _gram_jacobian(Q: np.ndarray, prob: GramProblem) -> Tuple[np.ndarray, np.ndarray]:
    """Derivatives of the group sums of ``Q* Q`` along ``Re Q`` and ``Im Q``, shaped (groups, r * n)."""
    r, n = Q.shape
    count = len(prob.group_keys)
    a, b = (idx.ravel() for idx in np.indices((n, n)))
    g = prob.group_ids.ravel()[:, None]
    j = np.arange(r)[None, :]
    # S[a, b] = sum_j conj(Q[j, a]) Q[j, b]
    via_col = np.zeros((count, r, n), dtype=np.complex128)
    via_row = np.zeros((count, r, n), dtype=np.complex128)
    np.add.at(via_col, (g, j, b[:, None]), np.conj(Q[:, a]).T)
    np.add.at(via_row, (g, j, a[:, None]), Q[:, b].T)
    d_real = (via_col + via_row).reshape(count, r * n)
    d_imag = (1j * via_col - 1j * via_row).reshape(count, r * n)
    return d_real, d_imag


def _gauss_newton(prob: GramProblem, Q: np.ndarray, tol: float) -> Optional[np.ndarray]:
    real = prob.is_real
    for _ in range(SDP_POLISH_MAX_STEPS):
        F = prob.group_sums(Q.conj().T @ Q) - prob.group_targets
        current = float(np.abs(F).max())
        if current <= tol:
            return Q
        d_real, d_imag = _gram_jacobian(Q, prob)
        if real:
            J, rhs = d_real.real, -np.real(F)
        else:
            J = np.block([[d_real.real, d_imag.real], [d_real.imag, d_imag.imag]])
            rhs = -np.concatenate([F.real, F.imag])
        delta = np.linalg.lstsq(J, rhs, rcond=None)[0]
        if real:
            move = delta.reshape(Q.shape)
        else:
            half = delta.size // 2
            move = (delta[:half] + 1j * delta[half:]).reshape(Q.shape)
        t = 1.0
        while t > 1e-4:
            trial = Q + t * move
            if prob.deviation(trial.conj().T @ trial) < current:
                break
            t *= 0.5
        else:
            return None
        Q = trial
    if prob.deviation(Q.conj().T @ Q) <= tol:
        return Q
    return None


def polish_low_rank(prob: GramProblem, S: np.ndarray, opts: Optional[SolveOptions] = None) -> Optional[np.ndarray]:
    """Gauss-Newton on the leading factor rows of ``S``.

    Ranks 1, 2, ... are tried in turn; the first factor ``Q`` whose ``Q* Q``
    meets every group sum within ``residual_tol`` gives the returned matrix,
    PSD by construction. None when no rank gets there.
    """
    opts = opts or SolveOptions()
    rows = factor_psd(S, opts.rank_tol)
    if not rows:
        return None
    factor = np.array(rows)
    if prob.is_real:
        factor = factor.real
    width = 1 if prob.is_real else 2
    for rank in range(1, len(rows) + 1):
        if rank * prob.size * width > SDP_POLISH_MAX_UNKNOWNS:
            logger.debug("Polish stopped at rank %d: too many unknowns", rank)
            break
        try:
            Q = _gauss_newton(prob, factor[:rank].copy(), opts.residual_tol)
        except np.linalg.LinAlgError as exc:
            logger.debug("Polish at rank %d failed: %s", rank, exc)
            continue
        if Q is not None:
            logger.info("Gram problem of size %d met by a rank-%d factor after refinement", prob.size, rank)
            return Q.conj().T @ Q
    return None


def _try_polish(prob: GramProblem, S: np.ndarray, opts: SolveOptions) -> Optional[np.ndarray]:
    if not opts.polish:
        return None
    try:
        return polish_low_rank(prob, S, opts)
    except EigenSolverError as exc:
        logger.debug("Polish skipped: %s", exc)
        return None


def factor_psd(S: np.ndarray, rank_tol: float = SDP_RANK_TOL) -> List[np.ndarray]:
    """Rows ``r_j`` with ``S ~ sum_j r_j* r_j``, largest eigenvalue first."""
    if S.size == 0:
        return []
    w, V = _eigh(S)
    top = w[-1]
    if top <= 0.0:
        return []
    rows = []
    for k in range(len(w) - 1, -1, -1):
        if w[k] <= rank_tol * top:
            break
        rows.append(np.sqrt(w[k]) * np.conj(V[:, k]))
    return rows


def _rows_to_polys(support: SupportSet, rows: Sequence[np.ndarray]) -> List[LaurentPoly]:
    exps = support.as_array()
    return [LaurentPoly(support.dim, exps, row) for row in rows]


def _solve_with_retry(build, support: SupportSet, opts: SolveOptions,
                      label: str) -> Tuple[GramProblem, SolveResult]:
    attempts = [support, support.dilated(SDP_SUPPORT_DILATION)]
    for attempt, candidate in enumerate(attempts):
        problem = build(candidate)
        result = solve_feasibility(problem, opts)
        if result.feasible:
            return problem, result
        if attempt + 1 < len(attempts):
            logger.warning("%s: retrying with the support dilated to %d points", label, len(attempts[attempt + 1]))
    raise StalledError(f"{label}: feasibility search stalled (residual {result.residual:.3e})")


def construct_frame_sdp(mask: Mask, support: Optional[SupportSet] = None,
                        opts: Optional[SolveOptions] = None) -> FrameSystem:
    """Seed, solve, factor and verify; the frame passes ``check_uep`` at ``SDP_VERIFY_TOLERANCE``."""
    require_partition_of_unity(mask)
    opts = opts or SolveOptions()
    support = support or SupportSet.from_mask(mask)
    problem, result = _solve_with_retry(lambda sup: build_gram_seed(mask, sup), support, opts, mask.label())

    rows = factor_psd(result.S, opts.rank_tol)
    generators = [q for q in _rows_to_polys(problem.support, rows)
                  if q.max_abs_coefficient() > GENERATOR_PRUNE_TOLERANCE]
    if not generators:
        generators = [LaurentPoly.zero(mask.dim)]
    frame = FrameSystem(mask, tuple(generators))
    report = check_uep(frame, SDP_VERIFY_TOLERANCE)
    if not report.passed:
        raise FrameConstructionError(
            f"{mask.label()}: factored generators fail the UEP (residual {report.max_residual_uep:.3e}); "
            f"retry with a smaller rank tolerance than {opts.rank_tol}")
    logger.info("%s: %d generators from a rank-%d Gram matrix over %d points", mask.label(),
                len(generators), len(rows), len(problem.support))
    return frame


def gram_sos_certificate(target: LaurentPoly, support: SupportSet,
                         opts: Optional[SolveOptions] = None) -> SosCertificate:
    """Hermitian squares ``h_j`` with ``sum_j h_j* h_j = target``, ``h_j`` supported in ``support``."""
    opts = opts or SolveOptions()
    problem, result = _solve_with_retry(lambda sup: build_sos_gram(target, sup), support, opts,
                                        "Gram SOS")
    hs = [h for h in _rows_to_polys(problem.support, factor_psd(result.S, opts.rank_tol))
          if h.max_abs_coefficient() > GENERATOR_PRUNE_TOLERANCE]
    return SosCertificate(tuple(hs))
