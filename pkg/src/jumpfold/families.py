"""Explicit charts of Kodaira moduli spaces of sections of ``Z -> P^1``.

A family maps a parameter point ``m`` (complex coordinates of a chart of M)
to a section ``zeta -> s_m(zeta)`` written in fiber coordinates over the
affine chart of ``P^1``.  The Jacobian with respect to ``m`` gives the normal
fields of coordinate tangent vectors, i.e. the identification of ``T_m M``
with ``H^0(N)``.

Built-ins:

* ``FlatFamily`` -- ``Z = O(1)^n``, sections ``a_i zeta + b_i``.
* ``CehFamily`` -- the Eguchi-Hanson threefold ``xy = (z - p1)(z - p2)``.
* ``ProjFamily`` -- sections of ``P(O(1) + O(1) + O)``, an open subset of ``CP^4``.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .errors import ChartError, DomainError, InvalidInput
from .numerics import quadratic_roots

# sampling annulus for fiber points
R_MIN, R_MAX = 0.2, 1.0
MIN_SEPARATION = 0.1


@dataclass(frozen=True, eq=False)
class Point:
    """A point of M: chart coordinates plus optional branch data.

    ``branch`` is family specific (for the Eguchi-Hanson family, reference
    roots used to continue the root pairing).
    """

    coords: np.ndarray
    branch: tuple | None = None

    def __post_init__(self):
        c = np.array(self.coords, dtype=complex).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def shifted(self, delta) -> "Point":
        return replace(self, coords=self.coords + np.asarray(delta, dtype=complex))

    def __len__(self):
        return self.coords.size


@dataclass(frozen=True)
class FiberValue:
    chart_id: str
    values: np.ndarray


def _cx(v: Any) -> complex:
    """Decode a complex number from JSON (number, ``[re, im]`` or string)."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InvalidInput("complex values are encoded as [re, im]", value=list(v))
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    if isinstance(v, (int, float, complex)):
        return complex(v)
    raise InvalidInput("cannot decode complex value", value=repr(v))


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


class SectionFamily(abc.ABC):
    name: str = ""
    coord_names: tuple[str, ...] = ()

    @property
    def dim_m(self) -> int:
        return len(self.coord_names)

    @property
    def n(self) -> int:
        return self.dim_m // 2

    @property
    @abc.abstractmethod
    def fiber_dim(self) -> int:
        """Number of fiber coordinates returned by ``evaluate`` (ambient for embedded fibers)."""

    @abc.abstractmethod
    def validate(self, m: Point) -> None:
        """Raise DomainError unless ``m`` is admissible."""

    @abc.abstractmethod
    def _eval(self, m: Point, zeta: complex, chart: str) -> np.ndarray: ...

    @abc.abstractmethod
    def _jac(self, m: Point, zeta: complex, chart: str) -> np.ndarray: ...

    def chart(self, m: Point) -> str:
        return "affine"

    def chart_ok(self, m: Point, zeta: complex, chart: str | None = None) -> bool:
        return True

    def constraint_residual(self, m: Point, zeta: complex) -> float:
        return 0.0

    def continue_point(self, m: Point, prev: Point | None = None) -> Point:
        """Re-anchor branch data of ``m`` by continuity from ``prev`` (identity for unbranched families)."""
        return m

    def make_point(self, coords, branch=None) -> Point:
        coords = np.asarray(coords, dtype=complex)
        if coords.size != self.dim_m:
            raise InvalidInput(f"{self.name} points have {self.dim_m} coordinates", got=int(coords.size))
        return Point(coords, branch)

    def evaluate(self, m: Point, zeta: complex, chart: str | None = None) -> FiberValue:
        self.validate(m)
        chart = chart or self.chart(m)
        if not self.chart_ok(m, zeta, chart):
            raise ChartError("fiber chart breaks down", zeta=encode_complex(zeta), chart=chart)
        return FiberValue(chart, self._eval(m, complex(zeta), chart))

    def jacobian(self, m: Point, zeta: complex, chart: str | None = None) -> np.ndarray:
        self.validate(m)
        chart = chart or self.chart(m)
        if not self.chart_ok(m, zeta, chart):
            raise ChartError("fiber chart breaks down", zeta=encode_complex(zeta), chart=chart)
        return self._jac(m, complex(zeta), chart)

    def sample_zetas(self, m: Point, k: int, rng: np.random.Generator,
                     avoid: Sequence[complex] = ()) -> list[complex]:
        """``k`` fiber points in the annulus, pairwise separated, away from chart breakdown."""
        chart = self.chart(m)
        out: list[complex] = []
        for _ in range(10000):
            if len(out) == k:
                return out
            r = np.sqrt(rng.uniform(R_MIN**2, R_MAX**2))
            z = complex(r * np.exp(2j * np.pi * rng.uniform()))
            if any(abs(z - w) < MIN_SEPARATION for w in list(out) + list(avoid)):
                continue
            if self.chart_ok(m, z, chart):
                out.append(z)
        raise DomainError("could not sample generic fiber points", wanted=k)

    def transfer_zetas(self, m: Point, count: int, avoid: Sequence[complex] = ()) -> list[complex]:
        """Deterministic fiber points for the transfer solve (two rings, rotated)."""
        chart = self.chart(m)
        out: list[complex] = []
        k = 0
        while len(out) < count:
            if k > 50 * count:
                raise DomainError("no admissible transfer points", wanted=count)
            r = 0.65 if k % 2 == 0 else 0.95
            z = complex(r * np.exp(1j * (0.37 + 2 * np.pi * k * 0.61803398875)))
            k += 1
            if any(abs(z - w) < MIN_SEPARATION for w in list(out) + list(avoid)):
                continue
            if self.chart_ok(m, z, chart):
                out.append(z)
        return out

    @abc.abstractmethod
    def random_point(self, rng: np.random.Generator) -> Point:
        """A random admissible point at O(1) scale."""

    @abc.abstractmethod
    def to_spec(self, m: Point | None = None) -> dict[str, Any]:
        """Family specification document (the CLI input format)."""

    def point_dict(self, m: Point) -> dict[str, Any]:
        return {k: encode_complex(v) for k, v in zip(self.coord_names, m.coords)}


# --------------------------------------------------------------------- flat


class FlatFamily(SectionFamily):
    """Sections of ``O(1)^n``: coordinates ``(a_1..a_n, b_1..b_n)``."""

    name = "flat"

    def __init__(self, n: int = 2):
        if n < 1:
            raise InvalidInput("n must be positive", n=n)
        self._n = int(n)
        self.coord_names = tuple(f"a{i + 1}" for i in range(n)) + tuple(f"b{i + 1}" for i in range(n))

    @property
    def fiber_dim(self) -> int:
        return self._n

    def validate(self, m: Point) -> None:
        if m.coords.size != self.dim_m or not np.all(np.isfinite(m.coords)):
            raise DomainError("flat point must have 2n finite coordinates")

    def _eval(self, m, zeta, chart):
        n = self._n
        return m.coords[:n] * zeta + m.coords[n:]

    def _jac(self, m, zeta, chart):
        n = self._n
        return np.hstack([zeta * np.eye(n), np.eye(n)]).astype(complex)

    def random_point(self, rng):
        z = rng.normal(size=self.dim_m) + 1j * rng.normal(size=self.dim_m)
        return Point(0.5 * z)

    def to_spec(self, m=None):
        spec: dict[str, Any] = {"family": "flat", "n": self._n}
        if m is not None:
            spec["point"] = self.point_dict(m)
        return spec


# ------------------------------------------------------------ Eguchi-Hanson


class CehFamily(SectionFamily):
    """Sections of ``xy = (z - p1)(z - p2)`` over ``O(2)^3``.

    Chart ``(a, b, c, A)``: ``z = a zeta^2 + 2 b zeta + c``,
    ``x = A (zeta - alpha1)(zeta - alpha2)``, ``y = B (zeta - beta1)(zeta - beta2)``
    with ``B = (a - a1)(a - a2) / A``; ``alpha_i, beta_i`` are the roots of
    ``z - p_i``.  Which root of ``z - p_i`` goes to ``x`` is carried in the
    point's ``branch`` as a pair of reference roots, matched by nearest
    distance.  Fiber values are the ambient coordinates ``(x, y, z)``.
    """

    name = "ceh"
    coord_names = ("a", "b", "c", "A")

    def __init__(self, p1: Sequence[complex] = (0, 1, 0), p2: Sequence[complex] = (0, -1, 0)):
        # ascending coefficients of quadratic sections of O(2)
        self.p1 = self._quadratic(p1)
        self.p2 = self._quadratic(p2)

    @staticmethod
    def _quadratic(p) -> np.ndarray:
        c = np.zeros(3, dtype=complex)
        p = [_cx(v) for v in p]
        if len(p) > 3:
            raise InvalidInput("p_i must have degree at most 2", coefficients=len(p))
        c[: len(p)] = p
        return c

    @property
    def is_default_normalization(self) -> bool:
        return np.allclose(self.p1, [0, 1, 0]) and np.allclose(self.p2, [0, -1, 0])

    @property
    def fiber_dim(self) -> int:
        return 3

    def _quads(self, m: Point) -> list[np.ndarray]:
        a, b, c, _ = m.coords
        z = np.array([c, 2 * b, a])
        return [z - self.p1, z - self.p2]

    def all_roots(self, m: Point) -> tuple[np.ndarray, np.ndarray]:
        q1, q2 = self._quads(m)
        return quadratic_roots(*q1), quadratic_roots(*q2)

    def roots(self, m: Point, prev: Sequence[complex] | None = None) -> tuple[complex, complex, complex, complex]:
        """``(alpha1, alpha2, beta1, beta2)`` with the x-roots continued from ``prev`` (or ``m.branch``)."""
        r1, r2 = self.all_roots(m)
        ref = prev if prev is not None else m.branch
        if ref is None:
            ref = (r1[np.argmax(r1.real)], r2[np.argmax(r2.real)])
        i1 = int(np.argmin(np.abs(r1 - ref[0])))
        i2 = int(np.argmin(np.abs(r2 - ref[1])))
        return complex(r1[i1]), complex(r2[i2]), complex(r1[1 - i1]), complex(r2[1 - i2])

    def B(self, m: Point) -> complex:
        a, _, _, A = m.coords
        return (a - self.p1[2]) * (a - self.p2[2]) / A

    def validate(self, m: Point) -> None:
        if m.coords.size != 4 or not np.all(np.isfinite(m.coords)):
            raise DomainError("ceh point must have four finite coordinates")
        a, _, _, A = m.coords
        if abs(A) < 1e-12:
            raise DomainError("A must be nonzero", A=encode_complex(A))
        if abs(a - self.p1[2]) < 1e-10 or abs(a - self.p2[2]) < 1e-10:
            raise DomainError("degenerate section (a = a_i) meets the resolved locus", a=encode_complex(a))
        if abs(a) < 1e-12:
            raise DomainError("a must be nonzero", a=encode_complex(a))
        self.all_roots(m)  # BranchError on collisions

    def _eval(self, m, zeta, chart):
        a, b, c, A = m.coords
        al1, al2, be1, be2 = self.roots(m)
        x = A * (zeta - al1) * (zeta - al2)
        y = self.B(m) * (zeta - be1) * (zeta - be2)
        z = a * zeta**2 + 2 * b * zeta + c
        return np.array([x, y, z])

    def _root_grad(self, m: Point, r: complex, q: np.ndarray) -> np.ndarray:
        # implicit differentiation of q(r) = 0 w.r.t. (a, b, c, A)
        dq = 2 * q[2] * r + q[1]
        return -np.array([r * r, 2 * r, 1, 0]) / dq

    def _jac(self, m, zeta, chart):
        a, b, c, A = m.coords
        q1, q2 = self._quads(m)
        al1, al2, be1, be2 = self.roots(m)
        B = self.B(m)
        dal1, dbe1 = self._root_grad(m, al1, q1), self._root_grad(m, be1, q1)
        dal2, dbe2 = self._root_grad(m, al2, q2), self._root_grad(m, be2, q2)
        dB = np.array([((a - self.p1[2]) + (a - self.p2[2])) / A, 0, 0, -B / A])
        dA = np.array([0, 0, 0, 1])
        px = (zeta - al1) * (zeta - al2)
        py = (zeta - be1) * (zeta - be2)
        dx = dA * px - A * ((zeta - al2) * dal1 + (zeta - al1) * dal2)
        dy = dB * py - B * ((zeta - be2) * dbe1 + (zeta - be1) * dbe2)
        dz = np.array([zeta**2, 2 * zeta, 1, 0])
        return np.array([dx, dy, dz], dtype=complex)

    def constraint_residual(self, m, zeta):
        x, y, z = self._eval(m, complex(zeta), "affine")
        p1 = np.polyval(self.p1[::-1], zeta)
        p2 = np.polyval(self.p2[::-1], zeta)
        return float(abs(x * y - (z - p1) * (z - p2)))

    def continue_point(self, m, prev=None):
        ref = None
        if prev is not None:
            al1, al2, _, _ = self.roots(prev)
            ref = (al1, al2)
        al1, al2, _, _ = self.roots(m, ref)
        return Point(m.coords, (al1, al2))

    def random_point(self, rng):
        def disk(r):
            return r * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())

        for _ in range(1000):
            coords = np.array([1 + disk(0.3), disk(0.2), 0.09 + disk(0.05), 1 + disk(0.3)])
            m = Point(coords)
            try:
                self.validate(m)
            except DomainError:
                continue
            return self.continue_point(m)
        raise DomainError("failed to draw an admissible point")

    def to_spec(self, m=None):
        spec: dict[str, Any] = {
            "family": "ceh",
            "p1": [encode_complex(v) for v in self.p1],
            "p2": [encode_complex(v) for v in self.p2],
        }
        if m is not None:
            spec["point"] = self.point_dict(m)
            if m.branch is not None:
                spec["branch"] = [encode_complex(v) for v in m.branch]
        return spec

    def invariance_residual(self, m: Point, zetas: Sequence[complex] = (0.3 + 0.4j, -0.55 + 0.2j, 0.8j)) -> float:
        """Defect of ``s_m`` being fixed by ``(zeta, x, y, z) -> (-zeta, x, y, z)``.

        With ``p1 = zeta``, ``p2 = -zeta`` this map preserves ``xy = z^2 - zeta^2``.
        """
        out = 0.0
        for zt in zetas:
            out = max(out, float(np.max(np.abs(self._eval(m, -zt, "affine") - self._eval(m, zt, "affine")))))
        return out


def tau_invariant_point(family: CehFamily, a: complex, c: complex, A: complex | None = None) -> Point:
    """Locate the section with ``z = a zeta^2 + c`` fixed by ``zeta -> -zeta``.

    Enumerates the four root pairings at ``b = 0`` and keeps the one whose
    section solves the fixed-point equations.  Only the default
    normalization ``p1 = zeta, p2 = -zeta`` is supported.
    """
    if not family.is_default_normalization:
        raise DomainError("tau-invariant points are only located for p1 = zeta, p2 = -zeta")
    a, c = complex(a), complex(c)
    A = complex(a if A is None else A)
    base = Point(np.array([a, 0, c, A]))
    family.validate(base)
    r1, r2 = family.all_roots(base)
    best, best_res = None, np.inf
    for x1 in r1:
        for x2 in r2:
            cand = Point(base.coords, (complex(x1), complex(x2)))
            res = family.invariance_residual(cand)
            if res < best_res:
                best, best_res = cand, res
    scale = max(1.0, abs(a), abs(c), abs(A))
    if best is None or best_res > 1e-9 * scale**3:
        raise DomainError("no invariant root pairing", residual=best_res)
    return best


# ---------------------------------------------------------------- projective


class ProjFamily(SectionFamily):
    """Sections ``zeta -> [a1 zeta + b1, a2 zeta + b2, c]`` of ``P(O(1) + O(1) + O)``.

    ``gauge`` names the homogeneous coordinate of ``CP^4`` fixed to 1:
    ``"a1"`` (chart ``b1, a2, b2, c``; default, covers the jump locus ``c = 0``),
    ``"a2"`` (chart ``a1, b1, b2, c``) or ``"c"`` (chart ``a1, b1, a2, b2``; the
    flat twistor space of ``C^4``, misses the jump locus).
    Fiber charts divide by the homogeneous fiber coordinate whose minimum
    modulus over the sampling annulus is largest.
    """

    name = "proj"
    _GAUGES = {
        "a1": ("b1", "a2", "b2", "c"),
        "a2": ("a1", "b1", "b2", "c"),
        "c": ("a1", "b1", "a2", "b2"),
    }
    _PROBE = [r * np.exp(2j * np.pi * k / 16) for r in (R_MIN, 0.6, R_MAX) for k in range(16)]

    def __init__(self, gauge: str = "a1"):
        if gauge not in self._GAUGES:
            raise InvalidInput("unknown gauge", gauge=gauge, allowed=list(self._GAUGES))
        self.gauge = gauge
        self.coord_names = self._GAUGES[gauge]

    @property
    def fiber_dim(self) -> int:
        return 2

    def homogeneous(self, m: Point) -> dict[str, complex]:
        full = {"a1": 1.0, "b1": 0.0, "a2": 1.0, "b2": 0.0, "c": 1.0}
        full.update(zip(self.coord_names, m.coords))
        full[self.gauge] = 1.0
        return {k: complex(v) for k, v in full.items()}

    def _X(self, m: Point, zeta: complex) -> np.ndarray:
        h = self.homogeneous(m)
        return np.array([h["a1"] * zeta + h["b1"], h["a2"] * zeta + h["b2"], h["c"]])

    def _dX(self, zeta: complex) -> np.ndarray:
        # columns: derivative of X w.r.t. each chart coordinate
        d = {"a1": [zeta, 0, 0], "b1": [1, 0, 0], "a2": [0, zeta, 0], "b2": [0, 1, 0], "c": [0, 0, 1]}
        return np.array([d[k] for k in self.coord_names], dtype=complex).T

    def det(self, m: Point) -> complex:
        h = self.homogeneous(m)
        return h["a1"] * h["b2"] - h["a2"] * h["b1"]

    def validate(self, m: Point) -> None:
        if m.coords.size != 4 or not np.all(np.isfinite(m.coords)):
            raise DomainError("proj point must have four finite coordinates")
        if abs(self.det(m)) < 1e-12:
            raise DomainError("admissibility requires det[[a1, b1], [a2, b2]] != 0", det=encode_complex(self.det(m)))

    def chart(self, m: Point) -> str:
        mins = np.min(np.abs(np.array([self._X(m, z) for z in self._PROBE])), axis=0)
        return "X" + str(int(np.argmax(mins)))

    def chart_ok(self, m, zeta, chart=None):
        chart = chart or self.chart(m)
        X = self._X(m, complex(zeta))
        i = int(chart[1:])
        return abs(X[i]) > 0.05 * max(np.max(np.abs(X)), 1e-300)

    def _eval(self, m, zeta, chart):
        X = self._X(m, zeta)
        i = int(chart[1:])
        return np.delete(X, i) / X[i]

    def _jac(self, m, zeta, chart):
        X = self._X(m, zeta)
        dX = self._dX(zeta)
        i = int(chart[1:])
        F = X / X[i]
        J = (dX - np.outer(F, dX[i])) / X[i]
        return np.delete(J, i, axis=0)

    def random_point(self, rng):
        for _ in range(1000):
            z = 0.6 * (rng.normal(size=4) + 1j * rng.normal(size=4))
            m = Point(z)
            if abs(self.det(m)) > 0.1:
                return m
        raise DomainError("failed to draw an admissible point")

    def jump_point(self, rng: np.random.Generator) -> Point:
        """Random admissible point on the jump locus ``c = 0`` (gauges a1/a2)."""
        if self.gauge == "c":
            raise DomainError("the c = 1 gauge does not meet the jump locus")
        m = self.random_point(rng)
        coords = np.array(m.coords)
        coords[self.coord_names.index("c")] = 0
        m = Point(coords)
        self.validate(m)
        return m

    def to_spec(self, m=None):
        spec: dict[str, Any] = {"family": "proj", "gauge": self.gauge}
        if m is not None:
            spec["point"] = self.point_dict(m)
        return spec


# ----------------------------------------------------------------- helpers


def section_eval(family: SectionFamily, m: Point, zeta: complex) -> FiberValue:
    return family.evaluate(m, zeta)


def section_jacobian(family: SectionFamily, m: Point, zeta: complex) -> np.ndarray:
    return family.jacobian(m, zeta)


def ceh_roots(family: CehFamily, m: Point, prev: Sequence[complex] | None = None):
    """``(alpha1, alpha2, beta1, beta2)``; ``prev`` continues the x-root assignment by nearest match."""
    if prev is not None and len(prev) == 4:
        prev = prev[:2]
    return family.roots(m, prev)


def family_from_spec(spec: dict[str, Any]) -> tuple[SectionFamily, Point | None]:
    """Build ``(family, point)`` from a family specification document.

    ``point`` is a mapping of chart coordinate names to complex values, the
    string ``"random"`` (uses ``seed``), or for ``ceh`` a mapping
    ``{"tau_invariant": {"a": .., "c": .., "A": ..}}``; for ``proj`` the
    string ``"jump"`` draws a random point with ``c = 0``.
    """
    if not isinstance(spec, dict):
        raise InvalidInput("family spec must be an object")
    kind = spec.get("family")
    if kind == "flat":
        fam: SectionFamily = FlatFamily(int(spec.get("n", 2)))
    elif kind == "ceh":
        fam = CehFamily(spec.get("p1", (0, 1, 0)), spec.get("p2", (0, -1, 0)))
    elif kind == "proj":
        fam = ProjFamily(spec.get("gauge", "a1"))
    else:
        raise InvalidInput("family must be one of flat, ceh, proj", family=kind)
    pt = spec.get("point")
    if pt is None:
        return fam, None
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    if pt == "random":
        return fam, fam.random_point(rng)
    if pt == "jump" and isinstance(fam, ProjFamily):
        return fam, fam.jump_point(rng)
    if not isinstance(pt, dict):
        raise InvalidInput("point must be an object, 'random' or 'jump'", point=repr(pt))
    if "tau_invariant" in pt:
        if not isinstance(fam, CehFamily):
            raise InvalidInput("tau_invariant points exist only for the ceh family")
        t = pt["tau_invariant"]
        A = _cx(t["A"]) if "A" in t else None
        return fam, tau_invariant_point(fam, _cx(t["a"]), _cx(t["c"]), A)
    missing = [k for k in fam.coord_names if k not in pt]
    if missing:
        raise InvalidInput("point is missing coordinates", missing=missing)
    coords = np.array([_cx(pt[k]) for k in fam.coord_names])
    branch = spec.get("branch")
    m = Point(coords, tuple(_cx(v) for v in branch) if branch is not None else None)
    fam.validate(m)
    return fam, fam.continue_point(m) if branch is None else m
