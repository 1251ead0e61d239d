import numpy as np
import pytest

from jumpfold.errors import ChartError, DomainError, InvalidInput
from jumpfold.families import (CehFamily, FlatFamily, Point, ProjFamily, ceh_roots, family_from_spec,
                               section_eval, section_jacobian, tau_invariant_point)
from jumpfold.splitting import h_sequence

from conftest import random_complex


def fd_directional(fam, m, zeta, v, h=1e-6):
    chart = fam.chart(m)
    plus = fam.continue_point(m.shifted(h * v), m)
    minus = fam.continue_point(m.shifted(-h * v), m)
    return (fam.evaluate(plus, zeta, chart).values - fam.evaluate(minus, zeta, chart).values) / (2 * h)


def test_flat_eval_and_jacobian(rng):
    fam = FlatFamily(3)
    m = fam.random_point(rng)
    zeta = 0.4 - 0.3j
    np.testing.assert_allclose(section_eval(fam, m, zeta).values, m.coords[:3] * zeta + m.coords[3:])
    np.testing.assert_allclose(section_jacobian(fam, m, zeta), np.hstack([zeta * np.eye(3), np.eye(3)]))


def test_ceh_constraint_at_fixed_zeta(ceh, rng):
    m = ceh.random_point(rng)
    assert ceh.constraint_residual(m, 0.37) <= 1e-10


@pytest.mark.parametrize("name", ["flat", "ceh", "proj"])
def test_constraint_residual_random_zetas(name, rng):
    fam = {"flat": FlatFamily(2), "ceh": CehFamily(), "proj": ProjFamily()}[name]
    for _ in range(5):
        m = fam.random_point(rng)
        for z in fam.sample_zetas(m, 20, rng):
            assert fam.constraint_residual(m, z) <= 1e-10


def test_ceh_general_quadratics_satisfy_constraint(rng):
    fam = CehFamily(p1=[0.1, 0.5, 0.2], p2=[-0.2j, -0.7, 0.3])
    m = fam.continue_point(fam.make_point([1.0, 0.1, 0.2, 0.8]))
    for z in (0.37, 0.5j, -0.8 + 0.1j):
        assert fam.constraint_residual(m, z) <= 1e-10


def test_proj_affine_chart_example():
    fam = ProjFamily()
    # gauge a1 = 1: [zeta + b1, a2 zeta + b2, c]; b2 = 0 would violate det != 0
    m = fam.make_point([0, 0, 0.5, 1])
    fv = section_eval(fam, m, 2)
    assert fv.chart_id == "X2"
    np.testing.assert_allclose(fv.values, [2, 0.5])


def test_proj_chart_breakdown_raises(proj, proj_jump):
    b1 = proj_jump.coords[0]
    with pytest.raises(ChartError):
        proj.evaluate(proj_jump, -b1, chart="X0")


@pytest.mark.parametrize("name", ["flat", "ceh", "proj", "proj_a2", "proj_c"])
def test_jacobian_matches_finite_differences(name, rng):
    fam = {"flat": FlatFamily(2), "ceh": CehFamily(), "proj": ProjFamily(),
           "proj_a2": ProjFamily("a2"), "proj_c": ProjFamily("c")}[name]
    for _ in range(4):
        m = fam.random_point(rng)
        v = random_complex(rng, fam.dim_m)
        for z in fam.sample_zetas(m, 3, rng):
            J = fam.jacobian(m, z)
            exact = J @ v
            approx = fd_directional(fam, m, z, v)
            assert np.linalg.norm(exact - approx) <= 1e-6 * max(np.linalg.norm(exact), 1.0)


def test_jacobian_at_jump_point(ceh_fold, ceh):
    v = np.array([0.3, 1.0, -0.2j, 0.5])
    exact = ceh.jacobian(ceh_fold, 0.45 + 0.1j) @ v
    approx = fd_directional(ceh, ceh_fold, 0.45 + 0.1j, v)
    assert np.linalg.norm(exact - approx) <= 1e-6 * np.linalg.norm(exact)


def test_proj_c_column_nonzero_on_jump_locus(proj, proj_jump):
    J = proj.jacobian(proj_jump, 0.5 + 0.2j)
    assert np.linalg.norm(J[:, 3]) > 1e-3


def test_ceh_roots_factorization(ceh):
    m = ceh.continue_point(Point([1, 0, 0, 1]))
    a1, a2, b1, b2 = ceh_roots(ceh, m)
    assert sorted([round(a1.real, 12), round(b1.real, 12)]) == [0, 1]
    assert sorted([round(a2.real, 12), round(b2.real, 12)]) == [-1, 0]


def test_ceh_roots_reconstruct_section(ceh):
    m = ceh.continue_point(Point([1, 0.02, 0.1, 1.3]))
    a1, a2, b1, b2 = ceh_roots(ceh, m)
    A = m.coords[3]
    B = 1 / A  # a = 1 and a_i = 0, so AB = a^2
    for z in (0.3, -0.6j, 0.9 + 0.2j):
        x = A * (z - a1) * (z - a2)
        y = B * (z - b1) * (z - b2)
        zz = z**2 + 0.04 * z + 0.1
        assert abs(x * y - (zz - z) * (zz + z)) <= 1e-10


def test_ceh_root_continuity_along_path(ceh):
    m = ceh.continue_point(Point([1, 0.0, 0.09, 1]))
    prev = ceh_roots(ceh, m)
    for s in np.arange(0.01, 0.3, 0.01):
        cur = ceh.continue_point(Point([1, 0.1 * s, 0.09 + 0.3 * s * 1j, 1]), m)
        roots = ceh_roots(ceh, cur, prev)
        assert max(abs(np.array(roots) - np.array(prev))) < 0.1
        prev, m = roots, cur


def test_ceh_domain_errors(ceh):
    with pytest.raises(DomainError):
        ceh.validate(Point([1, 0, 0.09, 0]))
    with pytest.raises(DomainError):
        ceh.validate(Point([0, 0, 0.09, 1]))
    with pytest.raises(DomainError):
        ceh.validate(Point([1, 0, 0.25, 1]))  # 1 - 4ac = 0: double root


def test_proj_domain_error():
    fam = ProjFamily()
    with pytest.raises(DomainError):
        fam.validate(fam.make_point([1, 1, 1, 1]))  # det = b2 - a2 b1 = 0


def test_tau_invariant_point_h_sequences(ceh):
    m = tau_invariant_point(ceh, 1, 0.09)
    assert h_sequence(ceh, m).values == (4, 2, 1, 0)
    off = ceh.continue_point(m.shifted([0, 1e-2, 0, 0]), m)
    assert h_sequence(ceh, off).values == (4, 2, 0, 0)


def test_tau_invariant_section_is_fixed(ceh):
    m = tau_invariant_point(ceh, 1.1 + 0.1j, 0.07, 0.9)
    for z in (0.3, 0.2 + 0.5j, -0.7j):
        np.testing.assert_allclose(ceh.evaluate(m, -z).values, ceh.evaluate(m, z).values, atol=1e-9)


def test_tau_invariant_requires_default_normalization():
    with pytest.raises(DomainError):
        tau_invariant_point(CehFamily(p1=[0, 2, 0]), 1, 0.09)


def test_flat_family_h_sequence(rng):
    for n in (1, 2, 3):
        fam = FlatFamily(n)
        assert h_sequence(fam, fam.random_point(rng)).values == (2 * n, n, 0, 0)


def test_family_spec_roundtrip(ceh_fold, ceh, rng):
    spec = ceh.to_spec(ceh_fold)
    fam, m = family_from_spec(spec)
    np.testing.assert_allclose(m.coords, ceh_fold.coords)
    np.testing.assert_allclose(m.branch, ceh_fold.branch)
    fam, m = family_from_spec({"family": "proj", "gauge": "c", "point": "random"})
    assert fam.coord_names == ("a1", "b1", "a2", "b2")
    with pytest.raises(InvalidInput):
        family_from_spec({"family": "nope"})
    with pytest.raises(InvalidInput):
        family_from_spec({"family": "flat", "n": 2, "point": {"a1": 1}})
