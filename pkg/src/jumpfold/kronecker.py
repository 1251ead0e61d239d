"""The Kronecker map ``alpha: E (x) C^2 -> TM`` and what it detects.

``E_m = H^0(N(-1))`` is realized inside ``T_m M`` as the tangent vectors whose
normal field vanishes at a reference point ``zeta0``; multiplying such a
field by ``(zeta - zeta1)/(zeta - zeta0)`` gives the image of the second
basis vector of ``H^0(O(1))``.  Columns of ``alpha`` are ordered with the
``C^2`` index major: ``e_1..e_n`` (``e_j (x) l0``) then ``w_1..w_n``
(``e_j (x) l1``), so ``1 (x) A`` acts as ``kron(A, I_n)``.

The basis of ``E`` is normalized against a fixed reference ``R`` by
``R^H e = I``.  This gauge is holomorphic in ``m``, which is what finite
differences, determinant gradients and pole fits need.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (BundleRankError, DegenerateDivisor, DomainError, InvalidInput,
                     NoJumpOnPath, PreconditionError, SingularAlpha, TransferError)
from .families import Point, SectionFamily
from .numerics import DEFAULT_TOL_REL, central_jacobian, least_squares, nullspace
from .splitting import Classification, PointClass, classify_point

ZETA0 = 0.31 + 0.17j
ZETA1 = -0.42 + 0.56j
TRANSFER_TOL = 1e-7
FD_STEP = 1e-4
GRAD_STEP = 1e-5
LOG_TOL = 1e-5
JUMP_TOL = 1e-8

# quaternion units acting on H^0(O(1)) in the basis (l0, l1)
QI = np.array([[1j, 0], [0, -1j]])
QJ = np.array([[0, 1], [-1, 0]], dtype=complex)
QK = QI @ QJ
GENERATORS = {"I": QI, "J": QJ, "K": QK}


@dataclass(frozen=True, eq=False)
class Gauge:
    zeta0: complex = ZETA0
    zeta1: complex = ZETA1
    reference: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"zeta0": [self.zeta0.real, self.zeta0.imag], "zeta1": [self.zeta1.real, self.zeta1.imag]}


@dataclass(frozen=True, eq=False)
class KroneckerFrame:
    m: Point
    zeta0: complex
    zeta1: complex
    e_basis: np.ndarray
    transfer: np.ndarray
    alpha: np.ndarray
    det_alpha: complex
    transfer_residual: float
    reference: np.ndarray

    @property
    def n(self) -> int:
        return self.e_basis.shape[1]

    @property
    def det_normalized(self) -> float:
        """``|det alpha|`` divided by the product of column norms (Hadamard ratio, in [0, 1])."""
        norms = np.linalg.norm(self.alpha, axis=0)
        return float(abs(self.det_alpha) / max(np.prod(norms), 1e-300))

    @property
    def gauge(self) -> Gauge:
        return Gauge(self.zeta0, self.zeta1, self.reference)

    def rank(self, tol_rel: float = DEFAULT_TOL_REL) -> int:
        s = np.linalg.svd(self.alpha, compute_uv=False)
        return int(np.sum(s > tol_rel * s[0]))


def build_frame(family: SectionFamily, m: Point, zeta0: complex = ZETA0, zeta1: complex = ZETA1,
                prev: KroneckerFrame | None = None, reference: np.ndarray | None = None) -> KroneckerFrame:
    """Kronecker frame at ``m``; ``prev`` (or an explicit ``reference``) fixes the E-gauge."""
    zeta0, zeta1 = complex(zeta0), complex(zeta1)
    if abs(zeta0 - zeta1) < 1e-12:
        raise InvalidInput("reference points must be distinct")
    n = family.n
    P, dec = nullspace(family.jacobian(m, zeta0))
    if P.shape[1] != n:
        raise BundleRankError("dim E differs from n", expected=n, got=int(P.shape[1]),
                              singular_values=list(dec.singular_values))
    if reference is None and prev is not None:
        reference = prev.reference
    if reference is None:
        reference = P
    gram = reference.conj().T @ P
    if np.linalg.cond(gram) > 1e8:
        raise DomainError("E-gauge reference is degenerate here; re-anchor the path")
    E = P @ np.linalg.inv(gram)

    zs = family.transfer_zetas(m, 2 * family.dim_m + 4, avoid=(zeta0, zeta1))
    M = np.vstack([family.jacobian(m, z) for z in zs])
    ratios = np.repeat([(z - zeta1) / (z - zeta0) for z in zs], family.fiber_dim)
    rhs = (M @ E) * ratios[:, None]
    W = np.empty_like(E)
    worst = 0.0
    for j in range(n):
        W[:, j], res = least_squares(M, rhs[:, j])
        worst = max(worst, res / max(np.linalg.norm(rhs[:, j]), 1e-300))
    if worst > TRANSFER_TOL:
        raise TransferError("transfer solve residual too large", residual=worst)
    alpha = np.hstack([E, W])
    return KroneckerFrame(m, zeta0, zeta1, E, W, alpha, complex(np.linalg.det(alpha)), worst, reference)


def frame_field(family: SectionFamily, center: KroneckerFrame):
    """``delta -> alpha(center.m + delta)`` in the center's holomorphic gauge."""
    def fn(delta):
        m = family.continue_point(center.m.shifted(delta), center.m)
        return build_frame(family, m, center.zeta0, center.zeta1, reference=center.reference).alpha
    return fn


def det_gradient(family: SectionFamily, frame: KroneckerFrame, h: float = GRAD_STEP) -> np.ndarray:
    field_ = frame_field(family, frame)
    return central_jacobian(lambda d: np.linalg.det(field_(d)), np.zeros(family.dim_m), h)


# ------------------------------------------------------------------ paths


@dataclass
class PathState:
    waypoints: list[Point] = field(default_factory=list)
    frames: list[KroneckerFrame] = field(default_factory=list)

    def push(self, family: SectionFamily, m: Point, zeta0=ZETA0, zeta1=ZETA1) -> KroneckerFrame:
        prev = self.frames[-1] if self.frames else None
        if prev is not None:
            m = family.continue_point(m, prev.m)
        fr = build_frame(family, m, zeta0, zeta1, prev=prev)
        self.waypoints.append(m)
        self.frames.append(fr)
        return fr

    def max_basis_jump(self) -> float:
        out = 0.0
        for a, b in zip(self.frames, self.frames[1:]):
            out = max(out, float(np.max(np.linalg.norm(a.e_basis - b.e_basis, axis=0))))
        return out


@dataclass(frozen=True, eq=False)
class JumpResult:
    point: Point
    s: complex
    frame: KroneckerFrame
    trace: tuple[tuple[float, float], ...]
    classification: Classification | None


def _path_point(family, start: Point, end: Point, s: complex, anchor: Point) -> Point:
    coords = start.coords + s * (end.coords - start.coords)
    return family.continue_point(Point(coords, anchor.branch), anchor)


def find_jump(family: SectionFamily, start: Point, end: Point, tol: float = JUMP_TOL,
              samples: int = 33, zeta0=ZETA0, zeta1=ZETA1, classify: bool = True,
              seed: int = 0) -> JumpResult:
    """Locate a zero of ``det alpha`` on the segment ``start -> end``.

    The determinant is tracked in one holomorphic gauge along the segment;
    the best local minimum of its normalized modulus seeds a complex secant
    iteration in the path parameter.
    """
    start = family.continue_point(start)
    path = PathState()
    ss = np.linspace(0.0, 1.0, samples)
    dets, trace, anchors = [], [], []
    for s in ss:
        m = start if not path.frames else _path_point(family, start, end, s, path.frames[-1].m)
        fr = path.push(family, m, zeta0, zeta1)
        dets.append(fr.det_alpha)
        anchors.append(fr)
        trace.append((float(s), fr.det_normalized))
    ref = path.frames[0].reference
    norm = np.array([t[1] for t in trace])
    order = [i for i in np.argsort(norm)
             if (i == 0 or norm[i] <= norm[i - 1]) and (i == samples - 1 or norm[i] <= norm[i + 1])]

    def det_at(s, anchor):
        m = _path_point(family, start, end, s, anchor.m)
        fr = build_frame(family, m, zeta0, zeta1, reference=ref)
        return fr.det_alpha, fr

    ds = ss[1] - ss[0]
    for i in order[:3]:
        s0 = complex(ss[max(i - 1, 0)])
        s1 = complex(ss[min(i + 1, samples - 1)])
        anchor = anchors[i]
        f0, _ = det_at(s0, anchor)
        f1, fr = det_at(s1, anchor)
        for _ in range(60):
            if f1 == f0:
                break
            s2 = s1 - f1 * (s1 - s0) / (f1 - f0)
            if abs(s2 - ss[i]) > 3 * ds:
                break
            s0, f0 = s1, f1
            s1 = s2
            f1, fr = det_at(s1, anchor)
            if fr.det_normalized < 1e-3 * tol or abs(s1 - s0) < 1e-15:
                break
        if fr.det_normalized < tol and -1e-9 <= s1.real <= 1 + 1e-9:
            cls = classify_point(family, fr.m, seed=seed) if classify else None
            return JumpResult(fr.m, s1, fr, tuple(trace), cls)
    raise NoJumpOnPath("det alpha has no zero on the path", min_det_normalized=float(norm.min()))


# ------------------------------------------------------- logarithmic test


@dataclass(frozen=True, eq=False)
class LogTestResult:
    passed: bool
    score: float
    gradient: np.ndarray
    det_normalized: float


def logarithmic_test(family: SectionFamily, m: Point, h: float = GRAD_STEP, seed: int = 0,
                     zeta0=ZETA0, zeta1=ZETA1, classification: Classification | None = None) -> LogTestResult:
    """Is the image of ``alpha`` the tangent space of the divisor at ``m``?

    Score is the largest normalized pairing of ``d(det alpha)`` with the
    ``2n - 1`` leading left singular vectors of ``alpha``; the criterion holds
    when it is below 1e-5.
    """
    cls = classification or classify_point(family, m, seed=seed)
    if cls.point_class is not PointClass.SMOOTH_JUMP:
        raise PreconditionError("logarithmic test needs a smooth jump point", point_class=cls.point_class.value)
    fr = build_frame(family, m, zeta0, zeta1)
    if fr.det_normalized >= JUMP_TOL:
        raise PreconditionError("point is not on the divisor", det_normalized=fr.det_normalized)
    g = det_gradient(family, fr, h)
    gn = np.linalg.norm(g)
    if gn < 1e-10:
        raise DegenerateDivisor("det alpha has vanishing gradient", gradient_norm=float(gn))
    U, _, _ = np.linalg.svd(fr.alpha)
    image = U[:, : family.dim_m - 1]
    score = float(np.max(np.abs(g @ image)) / gn)
    return LogTestResult(score < LOG_TOL, score, g, fr.det_normalized)


# ------------------------------------------------------ quaternionic action


def _check_unit(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (2, 2):
        raise InvalidInput("A must be 2x2")
    if np.max(np.abs(A @ A + np.eye(2))) > 1e-12 * max(1.0, np.max(np.abs(A)) ** 2):
        raise InvalidInput("A must satisfy A^2 = -1 (trace 0, det 1)")
    return A


def complex_structure(frame: KroneckerFrame, A, tol: float = JUMP_TOL) -> np.ndarray:
    """``I_A = alpha (1 (x) A) alpha^{-1}``; independent of the E-gauge."""
    A = _check_unit(A)
    if frame.det_normalized < tol:
        raise SingularAlpha("alpha is singular at this point", det_normalized=frame.det_normalized)
    n = frame.n
    return np.linalg.solve(frame.alpha.T, (frame.alpha @ np.kron(A, np.eye(n))).T).T


def structure_field(family: SectionFamily, center: KroneckerFrame, A):
    fn = frame_field(family, center)
    A = _check_unit(A)
    n = center.n

    def I_at(delta):
        al = fn(delta)
        return np.linalg.solve(al.T, (al @ np.kron(A, np.eye(n))).T).T
    return I_at


def structure_derivatives(family: SectionFamily, frame: KroneckerFrame, A, h: float = FD_STEP):
    """``(I, dI)`` with ``dI[i, k, j] = d_i I^k_j``."""
    I = complex_structure(frame, A)
    dI = central_jacobian(structure_field(family, frame, A), np.zeros(family.dim_m), h)
    return I, dI


def nijenhuis_tensor(I: np.ndarray, dI: np.ndarray) -> np.ndarray:
    """``N[k, a, b]`` of the coordinate fields ``d_a, d_b``."""
    t1 = np.einsum("la,lkb->kab", I, dI)
    t3 = np.einsum("kl,bla->kab", I, dI) - np.einsum("kl,alb->kab", I, dI)
    return t1 - t1.transpose(0, 2, 1) + t3


def nijenhuis_norm(family: SectionFamily, m: Point, A, h: float = FD_STEP,
                   zeta0=ZETA0, zeta1=ZETA1) -> float:
    frame = build_frame(family, m, zeta0, zeta1)
    I, dI = structure_derivatives(family, frame, A, h)
    N = nijenhuis_tensor(I, dI)
    scale = np.max(np.abs(I)) * (np.max(np.abs(I)) + np.max(np.abs(dI)))
    return float(np.max(np.abs(N)) / scale)


def distribution_integrability(family: SectionFamily, m: Point, v: Sequence[complex],
                               h: float = FD_STEP, zeta0=ZETA0, zeta1=ZETA1) -> float:
    """Normalized size of the Lie brackets of ``D_v = alpha(E (x) v)`` transverse to ``D_v``."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (2,) or not np.any(v):
        raise InvalidInput("v must be a nonzero vector in C^2")
    frame = build_frame(family, m, zeta0, zeta1)
    if frame.det_normalized < JUMP_TOL:
        raise SingularAlpha("alpha is singular at this point")
    n = frame.n
    fn = frame_field(family, frame)

    def fields(delta):
        al = fn(delta)
        return v[0] * al[:, :n] + v[1] * al[:, n:]

    X = fields(np.zeros(family.dim_m))
    dX = central_jacobian(fields, np.zeros(family.dim_m), h)  # dX[l, k, j] = d_l X_j^k
    Q, _ = np.linalg.qr(X)
    proj = np.eye(family.dim_m) - Q @ Q.conj().T
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            br = dX[:, :, j].T @ X[:, i] - dX[:, :, i].T @ X[:, j]
            worst = max(worst, float(np.linalg.norm(proj @ br)))
    scale = np.max(np.abs(X)) * (np.max(np.abs(X)) + np.max(np.abs(dX)))
    return worst / scale
