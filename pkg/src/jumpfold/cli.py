"""Batch command-line front end.

Every invocation is turned into a request document and passed to ``run``;
the report echoes the request, so ``jumpfold replay report.json`` re-runs
it.  Exit codes: 0 success, 2 validation error, 3 domain or numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import InvalidInput, JumpfoldError
from .families import Point, SectionFamily, _cx, encode_complex, family_from_spec
from .kronecker import JUMP_TOL, ZETA0, ZETA1, Gauge, build_frame, find_jump, logarithmic_test
from .obata import DEFAULT_GRID, pole_order_fit, residue_estimate
from .splitting import classify_splitting, h_sequence, splitting_from_h
from .suite import run_suite

COMMANDS = ("splitting", "jump-locus", "log-test", "obata-pole", "residue", "report")
POINT_COMMANDS = COMMANDS[:-1]


def _load_json(value: str) -> Any:
    path = Path(value)
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise InvalidInput("argument is neither a file nor JSON", value=value) from exc


def _cvec(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.ravel(v)]


def _cmat(a) -> list[list[list[float]]]:
    return [_cvec(row) for row in np.asarray(a)]


def _point_record(fam: SectionFamily, m: Point) -> dict[str, Any]:
    rec: dict[str, Any] = {"coords": fam.point_dict(m)}
    if m.branch is not None:
        rec["branch"] = _cvec(m.branch)
    return rec


def _classification_record(cls) -> dict[str, Any]:
    return {"h": list(cls.h.values), "splitting": list(cls.splitting.degrees),
            "class": cls.point_class.value, "confidence_log10_gap": cls.confidence}


def validate_request(req: Any) -> dict[str, Any]:
    if not isinstance(req, dict):
        raise InvalidInput("request must be an object")
    cmd = req.get("command")
    if cmd not in COMMANDS:
        raise InvalidInput("unknown command", command=cmd, allowed=list(COMMANDS))
    seed = req.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise InvalidInput("seed must be an integer", seed=seed)
    tol = req.get("tol", JUMP_TOL)
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise InvalidInput("tol must be a positive number", tol=tol)
    params = req.get("params", {})
    if not isinstance(params, dict):
        raise InvalidInput("params must be an object")
    if cmd in POINT_COMMANDS:
        fam = req.get("family")
        if not isinstance(fam, dict) or "point" not in fam:
            raise InvalidInput(f"{cmd} needs a family spec with a point")
    return {"command": cmd, "family": req.get("family"), "params": params, "seed": seed, "tol": float(tol)}


def _resolve_point(fam: SectionFamily, m: Point, params: dict, tol: float, seed: int):
    """Optionally walk to the divisor first (``params.end`` overrides some coordinates)."""
    if "end" not in params:
        return m, None
    end = params["end"]
    if not isinstance(end, dict):
        raise InvalidInput("params.end must map coordinate names to values")
    coords = np.array(m.coords)
    for k, v in end.items():
        if k not in fam.coord_names:
            raise InvalidInput("unknown coordinate in params.end", coordinate=k)
        coords[fam.coord_names.index(k)] = _cx(v)
    res = find_jump(fam, m, Point(coords, m.branch), tol=tol, samples=int(params.get("samples", 33)), seed=seed)
    return res.point, res


def _jump_record(fam, res) -> dict[str, Any]:
    rec = {"point": _point_record(fam, res.point), "s": encode_complex(res.s),
           "det_normalized": res.frame.det_normalized,
           "trace": [{"s": s, "det_normalized": d} for s, d in res.trace]}
    if res.classification is not None:
        rec["classification"] = _classification_record(res.classification)
    return rec


def _grid(params) -> tuple[float, ...]:
    grid = params.get("grid")
    if grid is None:
        return DEFAULT_GRID
    if not isinstance(grid, list) or len(grid) < 5:
        raise InvalidInput("grid must be a list of at least five positive numbers")
    return tuple(float(g) for g in grid)


def _transversal(params):
    t = params.get("transversal")
    return None if t is None else np.array([_cx(v) for v in t])


def run(request: dict[str, Any], csv_rows: dict[str, list[str]] | None = None) -> dict[str, Any]:
    """Execute a request document; raises JumpfoldError on failure."""
    req = validate_request(request)
    cmd, params, seed, tol = req["command"], req["params"], req["seed"], req["tol"]
    results: dict[str, Any] = {}
    if cmd == "report":
        def sink(name, rows):
            if csv_rows is not None:
                csv_rows[name] = rows
        results = run_suite(seed, sink)
    else:
        spec = dict(req["family"])
        spec.setdefault("seed", seed)
        fam, m = family_from_spec(spec)
        results["family"] = fam.name
        results["start_point"] = _point_record(fam, m)
        if cmd == "splitting":
            h = h_sequence(fam, m, K=int(params.get("K", 3)), trials=int(params.get("trials", 3)),
                           seed=seed, tol_rel=tol)
            st = splitting_from_h(h)
            gaps = [g for g in h.gaps if np.isfinite(g)]
            results.update({"h": list(h.values), "splitting": list(st.degrees),
                            "class": classify_splitting(st).value,
                            "confidence_log10_gap": float(np.log10(min(gaps))) if gaps else None,
                            "witnesses": [_cvec(w) for w in h.witnesses]})
        elif cmd == "jump-locus":
            if "end" not in params:
                raise InvalidInput("jump-locus needs params.end")
            _, res = _resolve_point(fam, m, params, tol, seed)
            results["jump"] = _jump_record(fam, res)
        else:
            m, res = _resolve_point(fam, m, params, tol, seed)
            if res is not None:
                results["jump"] = _jump_record(fam, res)
            results["point"] = _point_record(fam, m)
            if cmd == "log-test":
                lt = logarithmic_test(fam, m, seed=seed)
                results.update({"passed": lt.passed, "score": lt.score, "threshold": 1e-5,
                                "det_normalized": lt.det_normalized, "gradient": _cvec(lt.gradient)})
            elif cmd == "obata-pole":
                rep = pole_order_fit(fam, m, _transversal(params), _grid(params),
                                     params.get("target", "ObataTM"), seed=seed)
                results.update({"target": rep.target.value, "slope": rep.slope, "stderr": rep.stderr,
                                "pole_order": rep.pole_order, "partial": rep.partial,
                                "transversal": _cvec(rep.transversal),
                                "samples": [{"epsilon": e, "magnitude": g}
                                            for e, g in zip(rep.epsilons, rep.magnitudes)]})
                if csv_rows is not None:
                    csv_rows["pole_fit"] = rep.csv_rows()
            elif cmd == "residue":
                rep = residue_estimate(fam, m, _transversal(params), _grid(params), seed=seed)
                results.update({"residue": _cmat(rep.residue), "residue_norm": rep.norm,
                                "kernel_defect": rep.kernel_defect,
                                "decomposition_defect": rep.decomposition_defect,
                                "extrapolation_gap": rep.extrapolation_gap,
                                "epsilons": list(rep.epsilons)})
            results["det_normalized_at_point"] = build_frame(fam, m).det_normalized
    return {
        "request": req,
        "results": results,
        "gauge": Gauge(ZETA0, ZETA1).to_dict(),
        "seed": seed,
        "tolerances": {"rank_rel": tol, "jump": tol, "transfer": 1e-7, "logarithmic": 1e-5,
                       "fd_step": 1e-4, "gradient_step": 1e-5},
        "version": __version__,
    }


def _write_csv(path: Path, tables: dict[str, list[str]]) -> None:
    lines: list[str] = []
    if len(tables) == 1:
        lines = next(iter(tables.values()))
    else:
        for name, rows in tables.items():
            lines += ["# " + name] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumpfold", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, family=True):
        if family:
            sp.add_argument("--family", required=True, help="family spec (JSON file or inline JSON)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=JUMP_TOL)
        sp.add_argument("--out", type=Path, help="write the JSON report here (default stdout)")
        sp.add_argument("--csv", type=Path, help="pole-fit sample table (epsilon,magnitude)")

    def endpoint(sp, required=False):
        sp.add_argument("--end", required=required,
                        help="JSON object overriding coordinates of the point; walk to the divisor along the segment")
        sp.add_argument("--samples", type=int, default=33)

    sp = sub.add_parser("splitting", help="h-sequence and splitting type at a point")
    common(sp)
    sp.add_argument("--K", type=int, default=3)
    sp.add_argument("--trials", type=int, default=3)

    sp = sub.add_parser("jump-locus", help="locate the divisor on a segment")
    common(sp)
    endpoint(sp, required=True)

    sp = sub.add_parser("log-test", help="check im(alpha) = T(Delta) at a jump point")
    common(sp)
    endpoint(sp)

    for name, helptext in (("obata-pole", "fit the pole order of a connection along a transversal"),
                           ("residue", "residue of the conjugated connection at a logarithmic point")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        endpoint(sp)
        sp.add_argument("--transversal", help="JSON list of complex components")
        sp.add_argument("--grid", help="comma-separated epsilons")
        if name == "obata-pole":
            sp.add_argument("--target", choices=("ObataTM", "ConjugatedE"), default="ObataTM")

    sp = sub.add_parser("report", help="run the full reproduction suite")
    common(sp, family=False)

    sp = sub.add_parser("replay", help="re-run the request echoed in a report")
    sp.add_argument("report", type=Path)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--csv", type=Path)
    return p


def request_from_args(args) -> dict[str, Any]:
    if args.command == "replay":
        doc = _load_json(str(args.report))
        if not isinstance(doc, dict) or "request" not in doc:
            raise InvalidInput("replay needs a report with an echoed request")
        return doc["request"]
    req: dict[str, Any] = {"command": args.command, "seed": args.seed, "tol": args.tol, "params": {}}
    if getattr(args, "family", None) is not None:
        req["family"] = _load_json(args.family)
    params = req["params"]
    for key in ("K", "trials", "samples", "target"):
        if getattr(args, key, None) is not None:
            params[key] = getattr(args, key)
    if getattr(args, "end", None):
        params["end"] = _load_json(args.end)
    if getattr(args, "transversal", None):
        params["transversal"] = _load_json(args.transversal)
    if getattr(args, "grid", None):
        try:
            params["grid"] = [float(x) for x in args.grid.split(",")]
        except ValueError as exc:
            raise InvalidInput("grid must be comma-separated numbers", grid=args.grid) from exc
    return req


def _emit(doc: dict, out: Path | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    req: Any = None
    try:
        req = request_from_args(args)
        tables: dict[str, list[str]] = {}
        doc = run(req, tables)
    except JumpfoldError as exc:
        _emit({"error": exc.to_record(), "request": req, "version": __version__}, args.out)
        return exc.exit_code
    except (KeyError, TypeError, ValueError) as exc:
        _emit({"error": {"type": "InvalidInput", "message": str(exc), "payload": {}},
               "request": req, "version": __version__}, args.out)
        return 2
    _emit(doc, args.out)
    if args.csv is not None and tables:
        _write_csv(args.csv, tables)
    failed_suite = doc["request"]["command"] == "report" and not doc["results"].get("passed", True)
    return 3 if failed_suite else 0
