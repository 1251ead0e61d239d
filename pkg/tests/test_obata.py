import numpy as np
import pytest

from jumpfold.errors import FitError, InvalidInput, PreconditionError, SingularAlpha
from jumpfold.families import CehFamily, FlatFamily, ProjFamily
from jumpfold.kronecker import QI, QJ, QK, build_frame, det_gradient, structure_derivatives
from jumpfold.obata import (Target, adjugate_composite, conjugated_connection, default_transversal,
                            obata_christoffel, pole_order_fit, principal_symbol, residue_estimate,
                            symbol_identity_check)

from conftest import random_complex


def flat_pullback_gamma(b1, a2, b2, c):
    """Christoffel symbols of the flat connection in coordinates (b1, a2, b2, c).

    The chart change to the flat chart is phi = (1/c, b1/c, a2/c, b2/c).
    """
    D = np.zeros((4, 4), dtype=complex)
    D[0, 3] = -1 / c**2
    for row, (var, num) in enumerate(((0, b1), (1, a2), (2, b2)), start=1):
        D[row, var] = 1 / c
        D[row, 3] = -num / c**2
    H = np.zeros((4, 4, 4), dtype=complex)  # H[out, i, j]
    H[0, 3, 3] = 2 / c**3
    for row, (var, num) in enumerate(((0, b1), (1, a2), (2, b2)), start=1):
        H[row, var, 3] = H[row, 3, var] = -1 / c**2
        H[row, 3, 3] = 2 * num / c**3
    return np.einsum("ko,oij->kij", np.linalg.inv(D), H)


def test_flat_gamma_vanishes(flat, rng):
    ch = obata_christoffel(flat, flat.random_point(rng))
    assert np.max(np.abs(ch.gamma)) <= 1e-8


def test_proj_c_gauge_gamma_vanishes(rng):
    fam = ProjFamily("c")
    for _ in range(3):
        assert np.max(np.abs(obata_christoffel(fam, fam.random_point(rng)).gamma)) <= 1e-6


def test_proj_gamma_matches_chart_change(proj, rng):
    for _ in range(3):
        m = proj.random_point(rng)
        ch = obata_christoffel(proj, m)
        want = flat_pullback_gamma(*m.coords)
        assert np.max(np.abs(ch.gamma - want)) <= 1e-5 * max(1, np.max(np.abs(want)))


def test_gamma_symmetric_and_parallel(ceh, rng):
    m = ceh.random_point(rng)
    ch = obata_christoffel(ceh, m)
    np.testing.assert_allclose(ch.gamma, ch.gamma.transpose(0, 2, 1), atol=1e-14)
    assert ch.solve_residual <= 1e-5
    for A in (QI, QJ, QK):  # K was not part of the solve
        I, dI = structure_derivatives(ceh, ch.frame, A)
        assert np.max(np.abs(ch.covariant_derivative(I, dI))) <= 1e-5 * max(1, np.max(np.abs(dI)))


def test_christoffel_refuses_divisor(proj, proj_jump):
    with pytest.raises(SingularAlpha):
        obata_christoffel(proj, proj_jump)


@pytest.mark.parametrize("name", ["ceh", "proj"])
def test_conjugated_connection_commutes_with_quaternions(name, rng):
    fam = {"ceh": CehFamily(), "proj": ProjFamily()}[name]
    cc = conjugated_connection(fam, fam.random_point(rng))
    assert cc.decomposition_defect <= 1e-4


def test_pole_order_proj(proj, proj_jump):
    rep = pole_order_fit(proj, proj_jump, target=Target.OBATA_TM)
    assert abs(rep.slope + 1) <= 0.25
    assert rep.pole_order == pytest.approx(-rep.slope)
    assert not rep.partial and len(rep.epsilons) == 12
    assert list(rep.epsilons) == sorted(rep.epsilons)


def test_pole_order_ceh(ceh, ceh_fold):
    ob = pole_order_fit(ceh, ceh_fold, target="ObataTM")
    assert abs(ob.slope + 3) <= 0.3
    ce = pole_order_fit(ceh, ceh_fold, target="ConjugatedE")
    assert abs(ce.slope + 2) <= 0.3


def test_pole_order_gauge_covariant():
    base = {"b1": 0.3, "a2": 0.2 - 0.1j, "b2": 1.1, "c": 0}
    slopes = []
    for gauge in ("a1", "a2"):
        fam = ProjFamily(gauge)
        # same section, rescaled so the gauge coordinate is 1
        full = {"a1": 1.0, **base}
        scale = full[gauge]
        coords = [full[k] / scale for k in fam.coord_names]
        slopes.append(pole_order_fit(fam, fam.make_point(coords)).slope)
    assert abs(slopes[0] - slopes[1]) <= 0.1


def test_pole_fit_rejects_tangent_direction(proj, proj_jump):
    g = det_gradient(proj, build_frame(proj, proj_jump))
    tangent = np.array([1, 0, 0, 0], dtype=complex)
    assert abs(g @ tangent) < 1e-8
    with pytest.raises(PreconditionError):
        pole_order_fit(proj, proj_jump, t=tangent)


def test_pole_fit_input_errors(proj, proj_jump, flat, rng):
    with pytest.raises(InvalidInput):
        pole_order_fit(proj, proj_jump, t=[0, 0, 0, 0])
    with pytest.raises(PreconditionError):
        pole_order_fit(flat, flat.random_point(rng))
    with pytest.raises(FitError):
        pole_order_fit(proj, proj_jump, grid=[1e-2, 2e-2, 3e-2])


def test_pole_fit_csv_rows(proj, proj_jump):
    rep = pole_order_fit(proj, proj_jump, grid=np.geomspace(1e-3, 1e-2, 5))
    rows = rep.csv_rows()
    assert rows[0] == "epsilon,magnitude"
    assert len(rows) == 6
    e, g = rows[1].split(",")
    assert float(e) == rep.epsilons[0] and float(g) == rep.magnitudes[0]


def test_default_transversal_is_unit_and_normal(proj, proj_jump):
    t = default_transversal(proj, proj_jump)
    assert np.linalg.norm(t) == pytest.approx(1)
    assert abs(t[3]) == pytest.approx(1)


def test_tangential_part_bounded(proj, proj_jump):
    t = default_transversal(proj, proj_jump)
    u = np.array([1, 0.5j, -0.3, 0])
    tang, norm = [], []
    for e in (1e-1, 1e-2, 1e-3):
        om = conjugated_connection(proj, proj_jump.shifted(e * t), min(1e-4, 0.02 * e)).omega
        tang.append(np.max(np.abs(np.einsum("i,ikl->kl", u, om))))
        norm.append(np.max(np.abs(np.einsum("i,ikl->kl", t, om))))
    assert max(tang) < 2 * min(tang)
    assert norm[-1] > 50 * norm[0]


def test_residue_proj(proj, proj_jump):
    rep = residue_estimate(proj, proj_jump)
    assert rep.kernel_defect <= 1e-3
    assert rep.norm > 1e-3
    assert rep.decomposition_defect <= 1e-3
    assert rep.extrapolation_gap <= 0.2


def test_residue_requires_log_criterion(flat, ceh, ceh_fold, rng):
    with pytest.raises(PreconditionError):
        residue_estimate(flat, flat.random_point(rng))
    with pytest.raises(PreconditionError):
        residue_estimate(ceh, ceh_fold)


def test_symbol_identity_on_identity():
    assert symbol_identity_check(np.eye(4)) <= 1e-14


def test_symbol_identity_random(rng):
    for d in (2, 4, 6):
        for _ in range(5):
            assert symbol_identity_check(random_complex(rng, d, d)) <= 1e-10


def test_symbol_identity_singular(proj, ceh, ceh_fold, rng):
    assert symbol_identity_check(build_frame(proj, proj.jump_point(rng))) <= 1e-10
    assert symbol_identity_check(build_frame(ceh, ceh_fold)) <= 1e-10
    A = random_complex(rng, 4, 4)
    A[:, 0] = 0
    A[:, 1] = 0
    assert symbol_identity_check(A) <= 1e-10


def test_symbol_identity_detects_sign_error(rng):
    A = random_complex(rng, 4, 4)
    det = np.linalg.det(A)
    wrong = principal_symbol(A) @ (-adjugate_composite(A))
    assert np.max(np.abs(wrong - det**2 * np.eye(8))) > abs(det) ** 2
    swapped = principal_symbol(A.T) @ adjugate_composite(A)
    assert np.max(np.abs(swapped - det**2 * np.eye(8))) > 1e-3 * abs(det) ** 2


def test_symbol_identity_shape_errors():
    with pytest.raises(InvalidInput):
        symbol_identity_check(np.eye(3))
    with pytest.raises(InvalidInput):
        symbol_identity_check(np.ones((2, 4)))
