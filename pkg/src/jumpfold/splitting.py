"""Splitting type of the normal bundle from point-evaluation ranks.

``h(k) = dim H^0(N(-k))`` equals the dimension of tangent vectors whose
normal field vanishes at ``k`` generic fiber points.  The degrees are then
recovered from ``h(k) = sum_i max(k_i - k + 1, 0)`` by double differencing.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GenericityError, InvalidInput
from .families import Point, SectionFamily
from .numerics import DEFAULT_TOL_REL, RankDecision, rank_decision

DEFAULT_K = 3
MAX_ROUNDS = 5


@dataclass(frozen=True)
class HSequence:
    values: tuple[int, ...]
    witnesses: tuple[tuple[complex, ...], ...] = ()
    gaps: tuple[float, ...] = ()

    @property
    def K(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class SplittingType:
    degrees: tuple[int, ...]
    multiplicity: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_degrees(cls, degrees: Sequence[int]) -> "SplittingType":
        d = tuple(sorted((int(k) for k in degrees), reverse=True))
        return cls(d, dict(sorted(Counter(d).items())))

    def h(self, k: int) -> int:
        return sum(max(d - k + 1, 0) for d in self.degrees)

    def __str__(self):
        return " + ".join(f"O({d})" for d in self.degrees) or "0"


class PointClass(str, enum.Enum):
    GENERIC = "Generic"
    SMOOTH_JUMP = "SmoothJump"
    OUT_OF_SCOPE_JUMP = "OutOfScopeJump"


def _evaluation_matrix(family: SectionFamily, m: Point, zetas: Sequence[complex]) -> np.ndarray:
    return np.vstack([family.jacobian(m, z) for z in zetas])


def _immersion_rank(family: SectionFamily, m: Point) -> RankDecision:
    zs = family.transfer_zetas(m, 2 * family.dim_m + 4)
    return rank_decision(_evaluation_matrix(family, m, zs))


def h_dimension(family: SectionFamily, m: Point, k: int, trials: int = 3,
                rng: np.random.Generator | None = None,
                tol_rel: float = DEFAULT_TOL_REL) -> tuple[int, tuple[complex, ...], float]:
    """``dim H^0(N(-k))`` at ``m`` with the witnessing fiber points and singular-value gap.

    Each trial stacks the Jacobian at ``k`` random fiber points; the minimum
    nullity over trials is accepted once at least two trials agree on it.
    """
    if k < 0:
        raise InvalidInput("twist must be nonnegative", k=k)
    if trials < 3:
        raise InvalidInput("need at least three trials", trials=trials)
    rng = rng if rng is not None else np.random.default_rng(0)
    base = _immersion_rank(family, m)
    if k == 0:
        return base.rank, (), base.gap
    kernel0 = family.dim_m - base.rank
    history = []
    for _ in range(MAX_ROUNDS):
        results = []
        for _ in range(trials):
            zs = tuple(family.sample_zetas(m, k, rng))
            dec = rank_decision(_evaluation_matrix(family, m, zs), tol_rel)
            results.append((family.dim_m - dec.rank - kernel0, zs, dec))
        best = min(r[0] for r in results)
        agreeing = [r for r in results if r[0] == best]
        if len(agreeing) >= 2:
            gap = min(r[2].gap for r in agreeing)
            return best, agreeing[0][1], gap
        history.append([r[2].singular_values for r in results])
    raise GenericityError("h-dimension trials disagree", k=k, singular_values=history)


def h_sequence(family: SectionFamily, m: Point, K: int = DEFAULT_K, trials: int = 3,
               seed: int = 0, tol_rel: float = DEFAULT_TOL_REL) -> HSequence:
    rng = np.random.default_rng(seed)
    vals, wit, gaps = [], [], []
    for k in range(K + 1):
        h, zs, gap = h_dimension(family, m, k, trials, rng, tol_rel)
        vals.append(h)
        wit.append(zs)
        gaps.append(gap)
    return HSequence(tuple(vals), tuple(wit), tuple(gaps))


def splitting_from_h(h: HSequence | Sequence[int]) -> SplittingType:
    vals = list(h.values if isinstance(h, HSequence) else h)
    if not vals or any(v < 0 for v in vals):
        raise InvalidInput("h-sequence must be a nonempty list of nonnegative integers", h=vals)
    if vals[-1] != 0:
        raise InvalidInput("h-sequence must end in 0 (increase K)", h=vals)
    d = [vals[k] - vals[k + 1] for k in range(len(vals) - 1)] + [0]
    if any(x < 0 for x in d):
        raise InvalidInput("h-sequence must be non-increasing", h=vals)
    counts = [d[k] - d[k + 1] for k in range(len(d) - 1)]
    if any(c < 0 for c in counts):
        raise InvalidInput("h-sequence differences must be non-increasing", h=vals)
    st = SplittingType.from_degrees([k for k, c in enumerate(counts) for _ in range(c)])
    if any(st.h(k) != v for k, v in enumerate(vals)):
        raise InvalidInput("h-sequence is not realized by any splitting", h=vals)
    return st


def classify_splitting(st: SplittingType) -> PointClass:
    degs = sorted(st.degrees)
    if all(d == 1 for d in degs):
        return PointClass.GENERIC
    if degs.count(2) == 1 and degs.count(0) == 1 and all(d in (0, 1, 2) for d in degs):
        return PointClass.SMOOTH_JUMP
    return PointClass.OUT_OF_SCOPE_JUMP


@dataclass(frozen=True)
class Classification:
    point_class: PointClass
    splitting: SplittingType
    h: HSequence

    @property
    def confidence(self) -> float:
        """Smallest singular-value gap (log10) behind the rank decisions."""
        finite = [g for g in self.h.gaps if np.isfinite(g)]
        return float(np.log10(min(finite))) if finite else float("inf")


def classify_point(family: SectionFamily, m: Point, seed: int = 0, K: int = DEFAULT_K) -> Classification:
    h = h_sequence(family, m, K=K, seed=seed)
    st = splitting_from_h(h)
    return Classification(classify_splitting(st), st, h)
