"""Meromorphic Obata connection: Christoffel solve, pole orders, residue, symbol identity."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (FitError, IllConditioned, InvalidInput, PreconditionError,
                     ResidueUnstable, SingularAlpha)
from .families import Point, SectionFamily
from .kronecker import (FD_STEP, GENERATORS, QI, QJ, ZETA0, ZETA1, KroneckerFrame,
                        build_frame, det_gradient, frame_field, logarithmic_test,
                        structure_derivatives)
from .numerics import adjugate, central_jacobian, loglog_slope
from .splitting import PointClass, classify_point

OFF_DIVISOR = 1e-6
MAX_COND = 1e10
DEFAULT_GRID = tuple(np.geomspace(1e-3, 10**-1.5, 12))
# derivative step relative to the distance from the divisor
STEP_FRACTION = 0.02


class Target(str, enum.Enum):
    OBATA_TM = "ObataTM"
    CONJUGATED_E = "ConjugatedE"


@dataclass(frozen=True, eq=False)
class ChristoffelData:
    gamma: np.ndarray  # gamma[k, i, j] = Gamma^k_ij
    solve_residual: float
    condition: float
    frame: KroneckerFrame

    def covariant_derivative(self, I: np.ndarray, dI: np.ndarray) -> np.ndarray:
        """``(nabla_i I)^k_j`` for the endomorphism field ``I``."""
        g = self.gamma
        return dI + np.einsum("kil,lj->ikj", g, I) - np.einsum("lij,kl->ikj", g, I)


def _symmetric_basis(d: int):
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    return [(k, i, j) for k in range(d) for i, j in pairs]


def _parallel_system(I: np.ndarray, dI: np.ndarray, unknowns) -> tuple[np.ndarray, np.ndarray]:
    d = I.shape[0]
    cols = []
    for k, i, j in unknowns:
        g = np.zeros((d, d, d), dtype=complex)
        g[k, i, j] = g[k, j, i] = 1
        cols.append((np.einsum("kil,lj->ikj", g, I) - np.einsum("lij,kl->ikj", g, I)).ravel())
    return np.array(cols).T, -dI.ravel()


def obata_christoffel(family: SectionFamily, m: Point, h: float = FD_STEP,
                      zeta0=ZETA0, zeta1=ZETA1, frame: KroneckerFrame | None = None) -> ChristoffelData:
    """Torsion-free connection with ``nabla I = nabla J = 0`` by linear least squares."""
    frame = frame or build_frame(family, m, zeta0, zeta1)
    if frame.det_normalized < OFF_DIVISOR:
        raise SingularAlpha("too close to the divisor for a Christoffel solve",
                            det_normalized=frame.det_normalized)
    d = family.dim_m
    unknowns = _symmetric_basis(d)
    blocks, rhs, dmax = [], [], 0.0
    for A in (QI, QJ):
        I, dI = structure_derivatives(family, frame, A, h)
        M, b = _parallel_system(I, dI, unknowns)
        blocks.append(M)
        rhs.append(b)
        dmax = max(dmax, float(np.max(np.abs(dI))))
    M, b = np.vstack(blocks), np.concatenate(rhs)
    x, *_, sv = np.linalg.lstsq(M, b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > MAX_COND:
        raise IllConditioned("Christoffel system is ill-conditioned", condition=cond)
    gamma = np.zeros((d, d, d), dtype=complex)
    for val, (k, i, j) in zip(x, unknowns):
        gamma[k, i, j] = gamma[k, j, i] = val
    resid = float(np.max(np.abs(M @ x - b)) / max(dmax, 1.0))
    return ChristoffelData(gamma, resid, cond, frame)


@dataclass(frozen=True, eq=False)
class ConjugatedConnection:
    """Connection one-form on ``E (x) C^2``: ``omega[i]`` is the coefficient of ``dm_i``."""

    omega: np.ndarray
    decomposition_defect: float
    christoffel: ChristoffelData


def _decomposition_defect(mats: np.ndarray, n: int) -> float:
    worst = 0.0
    for A in GENERATORS.values():
        K = np.kron(A, np.eye(n))
        for w in mats:
            worst = max(worst, float(np.max(np.abs(w @ K - K @ w))))
    return worst / max(float(np.max(np.abs(mats))), 1.0)


def conjugated_connection(family: SectionFamily, m: Point, h: float = FD_STEP,
                          zeta0=ZETA0, zeta1=ZETA1) -> ConjugatedConnection:
    """``alpha^{-1} (Gamma_i alpha + d_i alpha)`` in the frame's holomorphic gauge."""
    chris = obata_christoffel(family, m, h, zeta0, zeta1)
    frame = chris.frame
    dal = central_jacobian(frame_field(family, frame), np.zeros(family.dim_m), h)
    al = frame.alpha
    omega = np.array([np.linalg.solve(al, chris.gamma[:, i, :] @ al + dal[i]) for i in range(family.dim_m)])
    return ConjugatedConnection(omega, _decomposition_defect(omega, frame.n), chris)


# ----------------------------------------------------------------- poles


@dataclass(frozen=True, eq=False)
class PoleFitReport:
    target: Target
    point: Point
    transversal: np.ndarray
    epsilons: tuple[float, ...]
    magnitudes: tuple[float, ...]
    slope: float
    stderr: float
    partial: bool = False

    @property
    def pole_order(self) -> float:
        return -self.slope

    def csv_rows(self) -> list[str]:
        return ["epsilon,magnitude"] + [f"{e:.17g},{g:.17g}" for e, g in zip(self.epsilons, self.magnitudes)]


def _normalize(t) -> np.ndarray:
    t = np.asarray(t, dtype=complex)
    nt = np.linalg.norm(t)
    if nt == 0:
        raise InvalidInput("transversal must be nonzero")
    return t / nt


def default_transversal(family: SectionFamily, m: Point, zeta0=ZETA0, zeta1=ZETA1) -> np.ndarray:
    """Unit vector maximizing ``|d(det alpha)(t)|``."""
    g = det_gradient(family, build_frame(family, m, zeta0, zeta1))
    return _normalize(g.conj())


def _magnitude(target: Target, family, m, h, zeta0, zeta1) -> tuple[float, object]:
    if target is Target.OBATA_TM:
        ch = obata_christoffel(family, m, h, zeta0, zeta1)
        return float(np.max(np.abs(ch.gamma))), ch
    cc = conjugated_connection(family, m, h, zeta0, zeta1)
    return float(np.max(np.abs(cc.omega))), cc


def pole_order_fit(family: SectionFamily, m: Point, t=None, grid: Sequence[float] = DEFAULT_GRID,
                   target: Target | str = Target.OBATA_TM, h: float = FD_STEP, seed: int = 0,
                   zeta0=ZETA0, zeta1=ZETA1, check_point: bool = True) -> PoleFitReport:
    """Fit ``log |connection|`` against ``log eps`` along ``m + eps t``.

    Samples are taken from the far end of the grid inward so the branch data
    of the family is continued along the transversal.
    """
    target = Target(target)
    if check_point:
        cls = classify_point(family, m, seed=seed)
        if cls.point_class is not PointClass.SMOOTH_JUMP:
            raise PreconditionError("pole fits need a smooth jump point", point_class=cls.point_class.value)
    g = det_gradient(family, build_frame(family, m, zeta0, zeta1))
    t = _normalize(g.conj()) if t is None else _normalize(t)
    if abs(g @ t) <= 0.1 * np.linalg.norm(g):
        raise PreconditionError("transversal is (nearly) tangent to the divisor", pairing=float(abs(g @ t)))
    eps = sorted((float(e) for e in grid), reverse=True)
    if any(e <= 0 for e in eps):
        raise InvalidInput("grid must be positive")
    used, mags, prev, partial = [], [], m, False
    for e in eps:
        pt = family.continue_point(m.shifted(e * t), prev)
        try:
            mag, _ = _magnitude(target, family, pt, min(h, STEP_FRACTION * e), zeta0, zeta1)
        except (IllConditioned, SingularAlpha):
            partial = True
            break
        used.append(e)
        mags.append(mag)
        prev = pt
    if len(used) < 5:
        raise FitError("fewer than five valid samples", valid=len(used))
    slope, stderr = loglog_slope(zip(used, mags))
    order = np.argsort(used)
    return PoleFitReport(target, m, t, tuple(used[i] for i in order), tuple(mags[i] for i in order),
                         slope, stderr, partial)


# --------------------------------------------------------------- residue


@dataclass(frozen=True, eq=False)
class ResidueReport:
    residue: np.ndarray
    one_form: np.ndarray
    kernel_defect: float
    decomposition_defect: float
    extrapolation_gap: float
    epsilons: tuple[float, float]

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.residue)))


def residue_estimate(family: SectionFamily, m: Point, t=None, grid: Sequence[float] = DEFAULT_GRID,
                     h: float = FD_STEP, seed: int = 0, zeta0=ZETA0, zeta1=ZETA1) -> ResidueReport:
    """Polar part of the conjugated connection along the divisor.

    ``eps * omega(m + eps t)`` is extrapolated to ``eps -> 0`` from the two
    smallest grid values; the limit one-form must vanish on ``im alpha``.
    """
    lt = logarithmic_test(family, m, seed=seed, zeta0=zeta0, zeta1=zeta1)
    if not lt.passed:
        raise PreconditionError("residues are defined only where the criterion holds", score=lt.score)
    t = _normalize(lt.gradient.conj()) if t is None else _normalize(t)
    e1, e2 = sorted(float(e) for e in grid)[:2]
    scaled = {}
    prev = m
    for e in (e2, e1):
        pt = family.continue_point(m.shifted(e * t), prev)
        cc = conjugated_connection(family, pt, min(h, STEP_FRACTION * e), zeta0, zeta1)
        scaled[e] = e * cc.omega
        prev = pt
    rho = (e2 * scaled[e1] - e1 * scaled[e2]) / (e2 - e1)
    gap = float(np.linalg.norm(rho - scaled[e1]) / max(np.linalg.norm(rho), 1e-300))
    if gap > 0.2:
        raise ResidueUnstable("Richardson extrapolation disagrees", relative_gap=gap)
    residue = np.einsum("i,ikl->kl", t, rho)
    frame = build_frame(family, m, zeta0, zeta1)
    U, _, _ = np.linalg.svd(frame.alpha)
    image = U[:, : family.dim_m - 1]
    total = max(float(np.linalg.norm(rho)), 1e-300)
    kernel = max(float(np.linalg.norm(np.einsum("i,ikl->kl", u, rho))) for u in image.T) / total
    decomp = max(float(np.max(np.abs(residue @ K - K @ residue)))
                 for K in (np.kron(A, np.eye(frame.n)) for A in GENERATORS.values()))
    decomp /= max(float(np.max(np.abs(residue))), 1e-300)
    return ResidueReport(residue, rho, kernel, decomp, gap, (e1, e2))


# --------------------------------------------------------- symbol identity


EPS2 = np.array([[0, 1], [-1, 0]], dtype=complex)


def principal_symbol(alpha: np.ndarray) -> np.ndarray:
    """``sigma = (1 (x) alpha)(alpha^* (x) 1)`` as a map ``T*M (x) E -> E* (x) TM``.

    Rows are indexed ``(k, nu)`` (E*, TM), columns ``(mu, j)`` (T*M, E);
    ``C^2`` and its dual are identified by the standard symplectic form.
    """
    alpha = np.asarray(alpha, dtype=complex)
    d = alpha.shape[0]
    n = d // 2
    al = alpha.reshape(d, 2, n)  # al[mu, a, k]
    s = np.einsum("vbj,ba,uak->kvuj", al, EPS2, al)
    return s.reshape(n * d, d * n)


def adjugate_composite(alpha: np.ndarray) -> np.ndarray:
    """``((alpha^*)_adj (x) 1)(1 (x) alpha_adj)`` as a map ``E* (x) TM -> T*M (x) E``."""
    alpha = np.asarray(alpha, dtype=complex)
    d = alpha.shape[0]
    n = d // 2
    adj = adjugate(alpha).reshape(2, n, d)  # adj[(a, k), mu]
    einv = np.linalg.inv(EPS2)
    s = np.einsum("bjv,ab,akt->tjkv", adj, einv, adj)
    return s.reshape(d * n, n * d)


def symbol_identity_check(frame_or_alpha) -> float:
    """Relative defect of ``sigma o adj-composite = (det alpha)^2 Id``."""
    alpha = frame_or_alpha.alpha if isinstance(frame_or_alpha, KroneckerFrame) else np.asarray(frame_or_alpha, complex)
    d = alpha.shape[0]
    if alpha.shape != (d, d) or d % 2:
        raise InvalidInput("alpha must be square of even size", shape=list(alpha.shape))
    det = np.linalg.det(alpha)
    lhs = principal_symbol(alpha) @ adjugate_composite(alpha)
    defect = float(np.max(np.abs(lhs - det**2 * np.eye(lhs.shape[0]))))
    scale = max(1 + abs(det) ** 2, np.linalg.norm(alpha, 2) ** (2 * d))
    return defect / scale
