"""Dense complex linear algebra with explicit rank decisions, plus fitting helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; polynomials are
ascending coefficient sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import BranchError, InvalidInput

DEFAULT_TOL_REL = 1e-8
ABS_FLOOR = 1e-300


@dataclass(frozen=True)
class RankDecision:
    rank: int
    singular_values: tuple[float, ...]
    tol_used: float

    @property
    def gap(self) -> float:
        """Ratio of the smallest kept to the largest discarded singular value (inf if nothing discarded)."""
        s = self.singular_values
        if self.rank == 0 or self.rank >= len(s):
            return float("inf")
        return s[self.rank - 1] / max(s[self.rank], ABS_FLOOR)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or 0 in arr.shape:
        raise InvalidInput(f"{name} must be a non-empty 2-D array", shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def rank_decision(A, tol_rel: float = DEFAULT_TOL_REL) -> RankDecision:
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    tol = tol_rel * s[0] if s[0] > 0 else ABS_FLOOR
    return RankDecision(int(np.sum(s > tol)), tuple(float(x) for x in s), float(tol))


def nullspace(A, tol_rel: float = DEFAULT_TOL_REL) -> tuple[np.ndarray, RankDecision]:
    """Orthonormal basis (as columns) of the kernel of ``A``."""
    if tol_rel <= 0:
        raise InvalidInput("tol_rel must be positive", tol_rel=tol_rel)
    A = as_matrix(A)
    _, s, vh = np.linalg.svd(A)
    tol = tol_rel * s[0] if s.size and s[0] > 0 else ABS_FLOOR
    rank = int(np.sum(s > tol))
    # pad to cols: full_matrices svd gives all right singular vectors
    sv = np.zeros(A.shape[1])
    sv[: s.size] = s
    basis = vh[rank:].conj().T
    return basis, RankDecision(rank, tuple(float(x) for x in sv), float(tol))


def least_squares(A, b) -> tuple[np.ndarray, float]:
    A = as_matrix(A)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != A.shape[0]:
        raise InvalidInput("dimension mismatch", rows=A.shape[0], rhs=list(b.shape))
    if not np.all(np.isfinite(b)):
        raise InvalidInput("right-hand side has non-finite entries")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x, float(np.linalg.norm(A @ x - b))


def adjugate(A) -> np.ndarray:
    """Classical adjoint, stable for singular input.

    Uses ``adj(U S V^H) = adj(V^H) adj(S) adj(U)`` with the adjugate of a
    diagonal matrix formed from products of the other singular values.
    """
    A = as_matrix(A)
    n, m = A.shape
    if n != m:
        raise InvalidInput("adjugate needs a square matrix", shape=[n, m])
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    u, s, vh = np.linalg.svd(A)
    others = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    phase = np.linalg.det(u) * np.linalg.det(vh)
    return phase * (vh.conj().T * others) @ u.conj().T


def loglog_slope(samples: Iterable[Sequence[float]]) -> tuple[float, float]:
    """OLS slope of log y against log x and its standard error."""
    pts = np.asarray(list(samples), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InvalidInput("need at least three (x, y) samples")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise InvalidInput("samples must be finite and positive")
    if np.unique(pts[:, 0]).size != pts.shape[0]:
        raise InvalidInput("sample abscissae must be distinct")
    fit = stats.linregress(np.log(pts[:, 0]), np.log(pts[:, 1]))
    return float(fit.slope), float(fit.stderr)


def poly_roots(coeffs: Sequence[complex]) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial (companion-matrix eigenvalues)."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if c.size == 0:
        raise InvalidInput("zero polynomial has no well-defined roots")
    return np.roots(c[::-1])


def poly_degree(coeffs: Sequence[complex]) -> int:
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    return c.size - 1


def match_roots(roots: Sequence[complex], prev: Sequence[complex]) -> np.ndarray:
    """Reorder ``roots`` so that each lines up with the nearest entry of ``prev``.

    Greedy on the globally closest remaining pair; raises if two roots are
    equally close to the same reference (ambiguous continuation).
    """
    roots = np.asarray(roots, dtype=complex)
    prev = np.asarray(prev, dtype=complex)
    if roots.shape != prev.shape:
        raise InvalidInput("root lists differ in length")
    d = np.abs(roots[:, None] - prev[None, :])
    out = np.empty_like(prev)
    free_r, free_p = set(range(len(roots))), set(range(len(prev)))
    while free_p:
        i, j = min(((i, j) for i in free_r for j in free_p), key=lambda ij: d[ij])
        out[j] = roots[i]
        free_r.discard(i)
        free_p.discard(j)
    return out


def quadratic_roots(c0: complex, c1: complex, c2: complex, min_disc: float = 1e-10) -> np.ndarray:
    """Both roots of ``c2 z^2 + c1 z + c0``; BranchError on a (near) double root."""
    if c2 == 0:
        raise BranchError("leading coefficient vanishes", coefficients=[c0, c1, c2])
    disc = c1 * c1 - 4 * c2 * c0
    if abs(disc) < min_disc * max(1.0, abs(c1) ** 2):
        raise BranchError("root collision", discriminant=[disc.real, disc.imag])
    return poly_roots([c0, c1, c2])


def central_jacobian(fn, x: np.ndarray, h: float) -> np.ndarray:
    """Stack of central differences ``(fn(x + h e_i) - fn(x - h e_i)) / 2h`` along axis 0.

    ``fn`` is treated as holomorphic in ``x``, so real steps give complex derivatives.
    """
    x = np.asarray(x, dtype=complex)
    out = []
    for i in range(x.size):
        d = np.zeros_like(x)
        d[i] = h
        out.append((np.asarray(fn(x + d)) - np.asarray(fn(x - d))) / (2 * h))
    return np.array(out)
