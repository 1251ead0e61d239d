"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line, shown in the terminal summary.
"""

from itertools import combinations_with_replacement

from jumpfold import cli
from jumpfold.suite import (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                            criterion_7)

from conftest import ACCEPTANCE_LINES

SEED = 0


def record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_splitting_types():
    r = criterion_1(SEED)
    ok = all(r["checks"].values())
    record(1, "splitting types", ok, ", ".join(f"{k}={v}" for k, v in r["checks"].items()))
    assert r["checks"] == {k: True for k in r["checks"]}
    assert r["ceh_fold_h"] == [4, 2, 1, 0]


def test_criterion_2_jump_divisor():
    r = criterion_2(SEED)
    floor = min(r["min_det_normalized_generic"].values())
    ok = r["abs_c_star"] <= 1e-8 and floor > 1e-4
    record(2, "jump divisor", ok, f"|c*|={r['abs_c_star']:.2e} (<=1e-8), min generic det={floor:.3g} (>1e-4)")
    assert r["abs_c_star"] <= 1e-8
    assert floor > 1e-4


def test_criterion_3_logarithmic_criterion():
    r = criterion_3(SEED)
    ok = max(r["proj_scores"]) < 1e-5 and min(r["ceh_scores"]) > 1e-2
    record(3, "logarithmic criterion", ok,
           f"proj max score={max(r['proj_scores']):.2e} (<1e-5), ceh min score={min(r['ceh_scores']):.3g} (>1e-2)")
    assert len(r["proj_scores"]) == 5 and len(r["ceh_scores"]) == 5
    assert max(r["proj_scores"]) < 1e-5
    assert min(r["ceh_scores"]) > 1e-2


def test_criterion_4_pole_orders():
    r = criterion_4(SEED)
    parts = {k: r[k] for k in ("ceh_obata", "proj_obata", "ceh_conjugated")}
    ok = all(abs(v["slope"] - v["expected"]) <= v["tolerance"] for v in parts.values())
    record(4, "pole orders", ok,
           ", ".join(f"{k}={v['slope']:.3f} ({v['expected']:+.0f}+-{v['tolerance']})" for k, v in parts.items()))
    assert abs(parts["ceh_obata"]["slope"] + 3) <= 0.3
    assert abs(parts["proj_obata"]["slope"] + 1) <= 0.25
    assert abs(parts["ceh_conjugated"]["slope"] + 2) <= 0.3


def test_criterion_5_residue_structure():
    r = criterion_5(SEED)
    ok = r["kernel_defect"] <= 1e-3 and r["residue_norm"] > 1e-3
    record(5, "residue structure", ok,
           f"kernel defect={r['kernel_defect']:.2e} (<=1e-3), |residue|={r['residue_norm']:.3g} (>1e-3)")
    assert r["kernel_defect"] <= 1e-3
    assert r["residue_norm"] > 1e-3


def test_criterion_6_algebraic_identities():
    r = criterion_6(SEED)
    ok = (r["symbol_invertible_max"] <= 1e-8 and r["symbol_singular_max"] <= 1e-8
          and r["adjugate_max"] <= 1e-9 and r["splitting_roundtrip"])
    record(6, "algebraic identities", ok,
           f"symbol invertible={r['symbol_invertible_max']:.2e}, singular={r['symbol_singular_max']:.2e} (<=1e-8), "
           f"adjugate={r['adjugate_max']:.2e} (<=1e-9), round-trip {r['splitting_roundtrip_cases']} cases")
    assert r["symbol_invertible_max"] <= 1e-8
    assert r["symbol_singular_max"] <= 1e-8
    assert r["adjugate_max"] <= 1e-9
    assert r["splitting_roundtrip"]
    assert r["splitting_roundtrip_cases"] == sum(len(list(combinations_with_replacement(range(4), n)))
                                                  for n in range(1, 7))


def test_criterion_7_integrability():
    r = criterion_7(SEED)
    worst = {k: max(r["ceh"][k], r["proj"][k]) for k in ("nijenhuis", "frobenius", "obata_residual")}
    flat = r["flat"]
    ok = (worst["nijenhuis"] <= 1e-4 and worst["frobenius"] <= 1e-4 and worst["obata_residual"] <= 1e-5
          and flat["nijenhuis"] <= 1e-10 and flat["frobenius"] <= 1e-10
          and flat["gamma_max"] <= 1e-6 and r["proj_flat_chart_gamma_max"] <= 1e-6)
    record(7, "integrability", ok,
           f"nijenhuis={worst['nijenhuis']:.2e}, frobenius={worst['frobenius']:.2e} (<=1e-4), "
           f"obata residual={worst['obata_residual']:.2e} (<=1e-5), flat={max(flat['nijenhuis'], flat['frobenius']):.1e} "
           f"(<=1e-10), flat Christoffels={max(flat['gamma_max'], r['proj_flat_chart_gamma_max']):.1e} (<=1e-6)")
    assert worst["nijenhuis"] <= 1e-4 and worst["frobenius"] <= 1e-4
    assert worst["obata_residual"] <= 1e-5
    assert flat["nijenhuis"] <= 1e-10 and flat["frobenius"] <= 1e-10
    assert flat["gamma_max"] <= 1e-6 and r["proj_flat_chart_gamma_max"] <= 1e-6


def test_criterion_8_determinism(tmp_path):
    outs = []
    for i in range(2):
        out, csv = tmp_path / f"report{i}.json", tmp_path / f"report{i}.csv"
        code = cli.main(["report", "--seed", "7", "--out", str(out), "--csv", str(csv)])
        assert code == 0
        outs.append((out.read_bytes(), csv.read_bytes()))
    ok = outs[0] == outs[1]
    record(8, "determinism", ok, f"report bytes identical={outs[0][0] == outs[1][0]}, csv identical={outs[0][1] == outs[1][1]}")
    assert ok
