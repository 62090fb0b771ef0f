"""Masks, their isotypical/polyphase components and the sub-QMF polynomial ``f``."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import MASK_NORMALIZATION_TOLERANCE
from laurent import DimensionMismatchError, LaurentPoly, MultiIndex, sum_of_products
from lattice import DilationContext, build_context, shift_action

logger = logging.getLogger(__name__)


class MaskError(ValueError):
    """Raised for a mask that violates its invariants."""


class PartitionOfUnityError(MaskError):
    """Raised when the isotypical components of a mask do not each sum to 1/m."""


@dataclass(frozen=True, eq=False)
class Mask:
    ctx: DilationContext
    p: LaurentPoly
    unnormalized: bool = False
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.p.dim != self.ctx.dim:
            raise DimensionMismatchError(
                f"mask polynomial has {self.p.dim} variables, dilation matrix is {self.ctx.dim}x{self.ctx.dim}")
        if not self.unnormalized:
            value = self.p.evaluate(np.zeros(self.ctx.dim))
            if abs(value - 1.0) > MASK_NORMALIZATION_TOLERANCE:
                raise MaskError(f"mask is not normalized: p(1) = {value}")

    @classmethod
    def from_matrix(cls, matrix, p: LaurentPoly, *, unnormalized: bool = False,
                    name: Optional[str] = None) -> "Mask":
        return cls(build_context(matrix), p, unnormalized=unnormalized, name=name)

    @property
    def dim(self) -> int:
        return self.ctx.dim

    @property
    def m(self) -> int:
        return self.ctx.m

    def label(self) -> str:
        return self.name or f"mask(d={self.dim}, m={self.m}, terms={len(self.p)})"


@dataclass(frozen=True)
class IsotypicalSplit:
    """Components ``p_chi`` indexed like ``ctx.coset_reps``, with their lifts ``alpha_chi``."""

    components: Tuple[LaurentPoly, ...]
    lift_exponents: Tuple[MultiIndex, ...]

    def __len__(self) -> int:
        return len(self.components)

    def polyphase(self, k: int) -> LaurentPoly:
        """The G-invariant lift ``z^(-alpha_chi) p_chi``."""
        return self.components[k].shift([-a for a in self.lift_exponents[k]])


def split_poly(ctx: DilationContext, p: LaurentPoly) -> Tuple[LaurentPoly, ...]:
    """Partition the terms of ``p`` by the class of their exponent."""
    if p.dim != ctx.dim:
        raise DimensionMismatchError(f"{p.dim}-variate polynomial in a {ctx.dim}-dimensional context")
    if p.is_zero:
        return tuple(LaurentPoly.zero(ctx.dim) for _ in range(ctx.m))
    classes = ctx.class_indices(p.exps)
    return tuple(p.select(classes == k) for k in range(ctx.m))


def split(mask: Mask) -> IsotypicalSplit:
    components = split_poly(mask.ctx, mask.p)
    lifts = tuple(tuple(int(a) for a in rep) for rep in mask.ctx.coset_reps)
    return IsotypicalSplit(components=components, lift_exponents=lifts)


def check_partition_of_unity(mask: Mask, tol: float = MASK_NORMALIZATION_TOLERANCE) -> bool:
    target = 1.0 / mask.m
    for k, component in enumerate(split(mask).components):
        value = complex(component.coefs.sum()) if len(component) else 0j
        if abs(value - target) > tol:
            logger.debug("Component %d of %s sums to %s, expected %s", k, mask.label(), value, target)
            return False
    return True


def require_partition_of_unity(mask: Mask, tol: float = MASK_NORMALIZATION_TOLERANCE) -> None:
    if not check_partition_of_unity(mask, tol):
        raise PartitionOfUnityError(
            f"{mask.label()}: isotypical components do not each sum to 1/{mask.m}")


def subqmf_poly(mask: Mask) -> LaurentPoly:
    """``f = 1 - m sum_chi p_chi* p_chi``."""
    components = split(mask).components
    gram = sum_of_products((c.involution(), c) for c in components)
    return LaurentPoly.constant(mask.dim, 1.0) - gram.scale(mask.m)


def subqmf_poly_by_shifts(mask: Mask) -> LaurentPoly:
    """``f = 1 - sum_sigma p^sigma* p^sigma``, computed from the shifted masks."""
    shifted = [shift_action(mask.ctx, mask.p, s) for s in range(mask.m)]
    gram = sum_of_products((q.involution(), q) for q in shifted)
    return LaurentPoly.constant(mask.dim, 1.0) - gram


def isotypical_by_characters(mask: Mask, chi_index: int) -> LaurentPoly:
    """``p_chi = (1/m) sum_sigma <sigma, chi> p^sigma``."""
    ctx = mask.ctx
    total = LaurentPoly.zero(mask.dim)
    for s in range(ctx.m):
        total = total + shift_action(ctx, mask.p, s).scale(ctx.pairing_table[s, chi_index])
    return total.scale(1.0 / ctx.m)
