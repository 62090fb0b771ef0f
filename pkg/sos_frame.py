"""Frames from sum-of-squares certificates of the sub-QMF polynomial.

Given a mask ``p`` whose isotypical components each sum to ``1/m`` and a
certificate ``f = sum_j h_j* h_j``, the generators

    q_k          = m^(-1/2) z^(alpha_k) (1 - m p p_k*)      k = 1..m
    q_(m j + k)  = p h~_(j,k)*                              per lifted term

satisfy the UEP. ``alpha_k`` are the coset representatives, ``p_k`` the
isotypical components and ``h~`` the G-invariant lifts of the certificate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import GENERATOR_PRUNE_TOLERANCE, SOS_TOLERANCE, UEP_TOLERANCE
from isotypical import Mask, require_partition_of_unity, split, split_poly, subqmf_poly
from laurent import (
    DimensionMismatchError,
    LaurentPoly,
    cos_poly,
    sin_poly,
    substitute_monomial,
    sum_of_products,
)
from verify import FrameConstructionError, FrameSystem, check_uep

logger = logging.getLogger(__name__)


class CertificateError(ValueError):
    """Raised for an unknown, malformed or non-verifying SOS certificate."""


@dataclass(frozen=True, eq=False)
class SosCertificate:
    """Hermitian-square terms ``h_j`` of a certificate ``f = sum_j h_j* h_j``."""

    hs: Tuple[LaurentPoly, ...]
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hs", tuple(self.hs))
        dims = {h.dim for h in self.hs}
        if len(dims) > 1:
            raise DimensionMismatchError(f"certificate terms mix dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.hs)

    def scaled(self, factor: float) -> "SosCertificate":
        """Certificate of ``factor**2`` times the original target."""
        return SosCertificate(tuple(h.scale(factor) for h in self.hs), self.name)

    def sum_of_squares(self, dim: int) -> LaurentPoly:
        if not self.hs:
            return LaurentPoly.zero(dim)
        return sum_of_products((h.involution(), h) for h in self.hs)


def verify_sos(mask: Mask, cert: SosCertificate, tol: float = SOS_TOLERANCE,
               f: Optional[LaurentPoly] = None) -> float:
    """Largest coefficient of ``f - sum_j h_j* h_j``."""
    for h in cert.hs:
        if h.dim != mask.dim:
            raise DimensionMismatchError(f"certificate term has {h.dim} variables, mask has {mask.dim}")
    f = subqmf_poly(mask) if f is None else f
    residual = (f - cert.sum_of_squares(mask.dim)).max_abs_coefficient()
    if residual > tol:
        logger.warning("%s: certificate %s leaves residual %.3e", mask.label(), cert.name or "", residual)
    else:
        logger.debug("%s: certificate %s verified (residual %.3e)", mask.label(), cert.name or "", residual)
    return residual


def polyphase_lift_cert(mask: Mask, cert: SosCertificate, tol: float = SOS_TOLERANCE) -> SosCertificate:
    """Replace every ``h_j`` by its nonzero lifted polyphase components ``z^(-alpha_chi) h_(j,chi)``."""
    residual = verify_sos(mask, cert, tol)
    if residual > tol:
        raise CertificateError(f"certificate does not reproduce f (residual {residual:.3e})")
    reps = mask.ctx.coset_reps
    lifted: List[LaurentPoly] = []
    for h in cert.hs:
        for k, component in enumerate(split_poly(mask.ctx, h)):
            if component.max_abs_coefficient() > GENERATOR_PRUNE_TOLERANCE:
                lifted.append(component.shift([-int(a) for a in reps[k]]))
    logger.debug("%s: lifted %d certificate terms to %d", mask.label(), len(cert), len(lifted))
    return SosCertificate(tuple(lifted), cert.name)


def construct_from_sos(mask: Mask, cert: SosCertificate, tol: float = UEP_TOLERANCE) -> FrameSystem:
    """Frame generators from a certificate; the result has passed ``check_uep`` at ``tol``."""
    require_partition_of_unity(mask)
    lifted = polyphase_lift_cert(mask, cert)

    ctx = mask.ctx
    p = mask.p
    one = LaurentPoly.constant(mask.dim, 1.0)
    scale = 1.0 / np.sqrt(ctx.m)
    candidates: List[LaurentPoly] = []
    for k, component in enumerate(split(mask).components):
        q = (one - (p * component.involution()).scale(ctx.m)).shift([int(a) for a in ctx.coset_reps[k]])
        candidates.append(q.scale(scale))
    for h in lifted.hs:
        candidates.append(p * h.involution())

    generators = [q for q in candidates if q.max_abs_coefficient() > GENERATOR_PRUNE_TOLERANCE]
    pruned = len(candidates) - len(generators)
    if not generators:
        raise FrameConstructionError(f"{mask.label()}: every generator vanished")
    logger.info("%s: %d generators from %d certificate terms (%d pruned)", mask.label(),
                len(generators), len(lifted), pruned)

    frame = FrameSystem(mask, tuple(generators))
    report = check_uep(frame, tol)
    if not report.passed:
        raise FrameConstructionError(
            f"{mask.label()}: constructed frame fails the UEP (residual {report.max_residual_uep:.3e})")
    return frame


# ----------------------------------------------------------------------
# Built-in certificates
# ----------------------------------------------------------------------

def fejer_riesz_cos_squared(lam: float, direction: Sequence[int]) -> LaurentPoly:
    """``g`` with ``g* g = 1/16 - lam cos^2(direction.omega)``, for ``0 <= lam <= 1/16``."""
    if not 0.0 <= lam <= 1.0 / 16.0:
        raise CertificateError(f"lambda={lam} outside [0, 1/16]")
    root = np.sqrt(max(1.0 / 16.0 - lam, 0.0))
    c0 = (0.25 + root) / 2.0
    c1 = (root - 0.25) / 2.0
    double = tuple(2 * int(a) for a in direction)
    return LaurentPoly(len(double), [(0,) * len(double), double], [c0, c1])


def _boxspline_terms() -> List[LaurentPoly]:
    return [sin_poly((1, 0)).scale(0.5), sin_poly((0, 1)).scale(0.5), sin_poly((1, 1)).scale(0.5)]


def _butterfly_terms() -> List[LaurentPoly]:
    u1, u2 = sin_poly((1, 0)), sin_poly((0, 1))
    v, v2 = sin_poly((1, 1)), sin_poly((1, -1))
    w, w2 = sin_poly((1, 2)), sin_poly((2, 1))
    return [
        (u1 * u2).scale(0.5),
        (u1 * v).scale(0.5),
        (u2 * v).scale(0.5),
        (u1 * w).scale(0.25),
        (u2 * w2).scale(0.25),
        (v * v2).scale(0.25),
        (u1 * (u2 * u2 + v * v)).scale(0.25),
        (u2 * (u1 * u1 + v * v)).scale(0.25),
        (v * (u1 * u1 + u2 * u2)).scale(0.25),
    ]


def _interp3d_edge_terms(lam: float) -> List[LaurentPoly]:
    """Squares of ``1/64 - |p_(1,1,0)|^2``."""
    u = cos_poly((1, 1, 0))
    v = cos_poly((1, 0, 1))
    w = cos_poly((0, 1, 1))
    u_sin = sin_poly((1, 1, 0))
    root = np.sqrt(lam)
    terms = [(v * v - w * w).scale(lam)]
    for g in (fejer_riesz_cos_squared(lam, (1, 0, 1)), fejer_riesz_cos_squared(lam, (0, 1, 1))):
        terms.append((g * u_sin).scale(1.0 / np.sqrt(8.0)))
        terms.append((g * (v - u * w)).scale(root))
        terms.append((g * (w - u * v)).scale(root))
    return terms


def _interp3d_face_terms(lam: float) -> List[LaurentPoly]:
    """Squares of ``1/64 - |p_(1,0,0)|^2``."""
    s1 = sin_poly((1, 0, 0))
    c1 = cos_poly((1, 0, 0))
    skew = sin_poly((2, 2, 2)) - sin_poly((0, 2, 0)) - sin_poly((0, 0, 2))
    a = np.sqrt(max(1.0 - 16.0 * lam, 0.0))
    b = np.sqrt(max(1.0 - 4.0 * lam, 0.0))
    factor = LaurentPoly(3, [(0, 0, 0), (2, 0, 0)], [(a + b) / 16.0, (a - b) / 16.0])
    return [
        s1 * factor,
        (s1.scale(2.0) - skew * c1).scale(np.sqrt(lam) / 8.0),
        (s1 * skew).scale(np.sqrt(max((1.0 - 16.0 * lam) * lam, 0.0)) / 8.0),
    ]


def _interp3d_terms(lam: float) -> List[LaurentPoly]:
    from catalog import INTERP3D_EDGE_IMAGES, INTERP3D_FACE_IMAGES

    edge = _interp3d_edge_terms(lam)
    face = _interp3d_face_terms(lam)
    terms = [substitute_monomial(h, image) for image in INTERP3D_EDGE_IMAGES for h in edge]
    terms += [substitute_monomial(h, image) for image in INTERP3D_FACE_IMAGES for h in face]
    # f = 8 (sum of the seven 1/64 - |p_chi|^2)
    return [h.scale(np.sqrt(8.0)) for h in terms]


def _sqrt3_terms() -> List[LaurentPoly]:
    from catalog import get
    from sdp_frame import GramProblemError, StalledError, SupportSet, gram_sos_certificate

    mask = get("sqrt3")
    component = split_poly(mask.ctx, mask.p)[mask.ctx.class_index((0, 1))]
    target = LaurentPoly.constant(2, 1.0 / 9.0) - component.involution() * component
    support = SupportSet(component.support())
    try:
        cert = gram_sos_certificate(target, support)
    except (GramProblemError, StalledError) as exc:
        raise CertificateError(f"no Gram certificate for the three-scheme component: {exc}") from exc
    # f = 6 (1/9 - p_(0,1)* p_(0,1))
    return [h.scale(np.sqrt(6.0)) for h in cert.hs]


def _lambda_param(params: Mapping[str, float]) -> float:
    lam = float(params.get("lambda", 1.0 / 32.0))
    if not 0.0 <= lam <= 1.0 / 16.0:
        raise CertificateError(f"lambda={lam} outside [0, 1/16]")
    return lam


_BUILTINS: Dict[str, Callable[[Mapping[str, float]], List[LaurentPoly]]] = {
    "boxspline111": lambda params: _boxspline_terms(),
    "butterfly": lambda params: _butterfly_terms(),
    "interp3d": lambda params: _interp3d_terms(_lambda_param(params)),
    "sqrt3-partial": lambda params: _sqrt3_terms(),
}


def builtin_names() -> List[str]:
    return sorted(_BUILTINS)


def builtin_certificate(name: str, params: Optional[Mapping[str, float]] = None) -> SosCertificate:
    try:
        build = _BUILTINS[name]
    except KeyError:
        raise CertificateError(f"unknown certificate '{name}' (known: {', '.join(builtin_names())})") from None
    terms = build(dict(params or {}))
    kept = [h for h in terms if not h.is_zero]
    logger.debug("Built-in certificate %s: %d terms (%d zero)", name, len(kept), len(terms) - len(kept))
    return SosCertificate(tuple(kept), name)
