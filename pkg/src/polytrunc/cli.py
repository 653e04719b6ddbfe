"""Batch front-end: scenario files in, reports and CSV data out.

Scenario files are YAML with a mandatory ``format: polytrunc-scenario v1``
header.  Unknown fields are rejected.  Every task writes one human-readable
text report and one machine-readable JSON file (plus CSV for grid data);
identical scenario and seed give byte-identical machine outputs.

Exit codes: 0 all tasks pass, 1 task failure (reports still written),
2 parse error, 3 validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from . import __version__
from .chains import Chain, brianchon_gram, chains_equal, lawrence_varchenko
from .errors import (
    NoCertificate,
    NotAcute,
    NotInPOfSigma,
    PolytruncError,
    ScenarioError,
)
from .geometry import (
    Fan,
    Polytope,
    Space,
    SupportVector,
    build_fan,
    realize_polytope,
)
from .incidence import verify_langlands
from .kexpr import KExpr, parse_kexpr as _parse_kexpr_raw
from .linalg import vec
from .polynomiality import (
    discrete_identity_probe,
    fit_polynomial,
    polynomiality_identity_check,
    tensor_support_grid,
)
from .truncation import (
    KFamily,
    absolute_integral_probe,
    check_convergence_hypotheses,
    j_integral,
    k_delta,
    s_lattice_sum,
    verify_double_partition,
)

FORMAT_HEADER = "polytrunc-scenario v1"

TASK_KINDS = (
    "validate",
    "decompose",
    "truncate",
    "integrate",
    "lattice-sum",
    "fit",
    "langlands",
    "partition-check",
    "identity-check",
)


def parse_kexpr(text: str, dim: int) -> KExpr:
    """Parse a K-expression in the scenario grammar."""
    return _parse_kexpr_raw(text, dim)


# ---------------------------------------------------------------------------
# Scenario parsing


@dataclass
class Scenario:
    space: Space
    fan: Fan
    supports: dict[str, SupportVector]
    kfamily: KFamily | None
    tasks: list[dict]
    source: str = ""


def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) {sorted(unknown)} in {where}")


def _rat(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int,)):
        return Fraction(x)
    if isinstance(x, float):
        raise ScenarioError(
            f"write rationals as strings or integers, not floats: {x!r}"
        )
    raise ScenarioError(f"cannot read rational from {x!r}")


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"YAML parse error{loc}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a mapping")
    if raw.get("format") != FORMAT_HEADER:
        raise ScenarioError(
            f"missing or wrong format header; expected {FORMAT_HEADER!r}"
        )
    _require_keys(
        raw, {"format", "space", "fan", "supports", "kfamily", "tasks"}, "scenario"
    )
    space_raw = raw.get("space") or {}
    _require_keys(space_raw, {"dim", "inner_product"}, "space")
    dim = space_raw.get("dim")
    if not isinstance(dim, int) or dim < 0:
        raise ScenarioError("space.dim must be a nonnegative integer")
    ip = space_raw.get("inner_product")
    if ip is not None:
        ip = [[_rat(x) for x in row] for row in ip]
    space = Space(dim, ip)
    fan_raw = raw.get("fan") or {}
    _require_keys(fan_raw, {"maximal_cones"}, "fan")
    cones = fan_raw.get("maximal_cones")
    if not cones:
        raise ScenarioError("fan.maximal_cones must be a nonempty list")
    fan = build_fan([[vec(r) for r in c] for c in cones], space)
    supports: dict[str, SupportVector] = {}
    for name, entries in (raw.get("supports") or {}).items():
        values = {}
        for e in entries:
            _require_keys(e, {"ray", "value"}, f"supports.{name}")
            values[tuple(e["ray"])] = _rat(e["value"])
        supports[name] = SupportVector.from_map(fan, values)
    kfam = None
    if "kfamily" in raw and raw["kfamily"] is not None:
        kraw = raw["kfamily"]
        _require_keys(kraw, {"default", "rules"}, "kfamily")
        mapping = {}
        for rule in kraw.get("rules") or []:
            _require_keys(rule, {"cone", "expr"}, "kfamily.rules")
            key = frozenset(vec(r) for r in rule["cone"])
            mapping[key] = parse_kexpr(rule["expr"], dim)
        default = kraw.get("default")
        kfam = KFamily.from_map(fan, mapping, default=default)
    tasks = raw.get("tasks") or []
    known_params = {
        "kind",
        "support",
        "tol",
        "seed",
        "samples",
        "grid",
        "holdout",
        "degree",
        "shift",
        "radii",
        "cone",
        "mode",
        "dilations",
        "counter",
        "expect_failure",
    }
    for i, t in enumerate(tasks):
        _require_keys(t, known_params, f"tasks[{i}]")
        if t.get("kind") not in TASK_KINDS:
            raise ScenarioError(
                f"tasks[{i}].kind must be one of {TASK_KINDS}, got {t.get('kind')!r}"
            )
        name = t.get("support")
        if name is not None and name not in supports:
            raise ScenarioError(f"tasks[{i}] references unknown support {name!r}")
    return Scenario(space, fan, supports, kfam, tasks, str(path))


# ---------------------------------------------------------------------------
# Output helpers


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(
            x.numerator
        )
    if isinstance(x, float):
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if hasattr(x, "__dict__"):
        return {k: _jsonable(v) for k, v in vars(x).items()}
    return x


def _write_json(path: Path, data) -> None:
    path.write_text(
        json.dumps(_jsonable(data), sort_keys=True, indent=1, default=str) + "\n"
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        for row in rows:
            w.writerow(
                [
                    f"{x:.12e}"
                    if isinstance(x, float)
                    else (
                        f"{x.numerator}/{x.denominator}"
                        if isinstance(x, Fraction) and x.denominator != 1
                        else str(x)
                    )
                    for x in row
                ]
            )


# ---------------------------------------------------------------------------
# Task runners


def _get_polytope(sc: Scenario, task: dict) -> Polytope:
    name = task.get("support")
    if name is None:
        if len(sc.supports) == 1:
            name = next(iter(sc.supports))
        else:
            raise ScenarioError("task needs an explicit 'support' name")
    return realize_polytope(sc.supports[name])


def _task_validate(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    fan = sc.fan
    result = {
        "fan": {
            "complete": fan.complete,
            "simplicial": fan.simplicial,
            "acute": fan.acute,
            "rational": fan.rational,
            "n_cones": len(fan.cones),
            "n_rays": len(fan.rays()),
        },
        "supports": {},
        "ok": True,
    }
    for name, s in sc.supports.items():
        try:
            realize_polytope(s)
            result["supports"][name] = "polytope"
        except NotInPOfSigma:
            result["supports"][name] = "virtual"
    if sc.kfamily is not None:
        cert = check_convergence_hypotheses(sc.kfamily)
        result["certificate"] = {
            "ok": cert.ok,
            "summary": cert.summary(),
            "pairs_checked": cert.checked_pairs,
        }
    if not (fan.complete and fan.simplicial):
        result["ok"] = False
    return result


def _task_decompose(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    p = _get_polytope(sc, task)
    ind = Chain.indicator(p.hrep())
    result = {"ok": True, "checks": []}
    for version in ("inward", "outward"):
        bg = brianchon_gram(p, version)
        eq, witness = chains_equal(bg, ind)
        result["checks"].append(
            {
                "decomposition": f"brianchon-gram {version}",
                "terms": len(bg.terms),
                "equal_to_indicator": eq,
                "witness": witness,
            }
        )
        result["ok"] = result["ok"] and eq
    xi = vec([Fraction(2 * i + 1, 2 * i + 3) for i in range(sc.space.dim)])
    lv = lawrence_varchenko(p, xi)
    eq, witness = chains_equal(lv, ind)
    result["checks"].append(
        {
            "decomposition": "lawrence-varchenko",
            "direction": list(xi),
            "terms": len(lv.terms),
            "equal_to_indicator": eq,
            "witness": witness,
        }
    )
    result["ok"] = result["ok"] and eq
    return result


def _task_truncate(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    if sc.kfamily is None:
        raise ScenarioError("truncate task needs a kfamily")
    p = _get_polytope(sc, task)
    tf = k_delta(sc.kfamily, p)
    cert = check_convergence_hypotheses(sc.kfamily, p)
    rows = []
    rng_vals = [Fraction(i, 2) for i in range(-8, 9)]
    if sc.space.dim == 1:
        pts = [(v,) for v in rng_vals]
    elif sc.space.dim == 2:
        pts = [(a, b) for a in rng_vals[::4] for b in rng_vals[::4]]
    else:
        pts = []
    for x in pts:
        rows.append([*x, float(tf.evaluate(x))])
    _write_csv(
        out / f"{idx:02d}_truncate.csv",
        [f"x{i+1}" for i in range(sc.space.dim)] + ["k_delta"],
        rows,
    )
    return {
        "ok": True,
        "certificate_ok": cert.ok,
        "certificate": cert.summary(),
        "skeleton_terms": len(tf.skeleton),
    }


def _task_integrate(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    if sc.kfamily is None:
        raise ScenarioError("integrate task needs a kfamily")
    tol = float(task.get("tol", 1e-9))
    p = _get_polytope(sc, task)
    cert = check_convergence_hypotheses(sc.kfamily, p)
    result: dict[str, Any] = {"certificate_ok": cert.ok, "certificate": cert.summary()}
    if not cert.ok:
        radii = task.get("radii") or [8, 16, 32, 64]
        probe = absolute_integral_probe(sc.kfamily, p, radii)
        result["divergence_probe"] = {
            "radii": list(radii),
            "abs_integrals": probe,
            "increments": [b - a for a, b in zip(probe, probe[1:])],
        }
        _write_csv(
            out / f"{idx:02d}_integrate.csv",
            ["box_radius", "abs_integral"],
            [[r, v] for r, v in zip(radii, probe)],
        )
        result["ok"] = False
        return result
    value, err = j_integral(sc.kfamily, p, tol=tol, certificate=cert)
    result.update({"value": value, "error_estimate": err, "tol": tol, "ok": True})
    dil = task.get("dilations")
    if dil:
        rows = []
        name = task.get("support") or next(iter(sc.supports))
        base = sc.supports[name]
        for t in dil:
            t = _rat(t)
            pt = realize_polytope(base.scale(t))
            v, e = j_integral(sc.kfamily, pt, tol=tol, certificate=cert)
            rows.append([t, v, e])
        _write_csv(
            out / f"{idx:02d}_integrate.csv",
            ["dilation", "integral", "error_estimate"],
            rows,
        )
        result["dilations"] = [str(t) for t in dil]
    return result


def _task_lattice_sum(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    if sc.kfamily is None:
        raise ScenarioError("lattice-sum task needs a kfamily")
    tol = float(task.get("tol", 1e-9))
    p = _get_polytope(sc, task)
    shift = task.get("shift")
    shift_v = vec([_rat(x) for x in shift]) if shift else None
    value, err = s_lattice_sum(sc.kfamily, p, shift=shift_v, tol=tol)
    result = {"value": value, "error_estimate": err, "tol": tol, "ok": True}
    dil = task.get("dilations")
    if dil:
        rows = []
        name = task.get("support") or next(iter(sc.supports))
        base = sc.supports[name]
        for t in dil:
            t = _rat(t)
            pt = realize_polytope(base.scale(t))
            v, e = s_lattice_sum(sc.kfamily, pt, shift=shift_v, tol=tol)
            rows.append([t, v, e])
        _write_csv(
            out / f"{idx:02d}_lattice-sum.csv",
            ["dilation", "lattice_sum", "error_estimate"],
            rows,
        )
        result["dilations"] = [str(t) for t in dil]
    return result


def _task_fit(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    if sc.kfamily is None:
        raise ScenarioError("fit task needs a kfamily")
    tol = float(task.get("tol", 1e-8))
    counter = task.get("counter", "integrate")
    grid_spec = task.get("grid")
    if not grid_spec:
        raise ScenarioError("fit task needs a grid: {ray: [values...]}")
    ranges = {tuple(map(int, k.split(","))): v for k, v in grid_spec.items()}
    grid = tensor_support_grid(sc.fan, ranges)
    if not grid:
        raise ScenarioError("fit grid contains no feasible support vectors")
    holdout_n = max(1, len(grid) // 5)
    rng_grid = grid[:-holdout_n]
    holdout = grid[-holdout_n:]
    cert = check_convergence_hypotheses(sc.kfamily)
    allow = bool(task.get("expect_failure"))
    cache: dict[tuple, float] = {}

    def ev(s: SupportVector) -> float:
        key = s.a
        if key not in cache:
            p = realize_polytope(s)
            if counter == "lattice-sum":
                cache[key] = s_lattice_sum(sc.kfamily, p, tol=tol)[0]
            else:
                cache[key] = j_integral(
                    sc.kfamily, p, tol=tol, certificate=cert, allow_uncertified=allow
                )[0]
        return cache[key]

    degree = task.get("degree", sc.space.dim)
    report, poly = fit_polynomial(
        ev, sc.fan, degree_bound=degree, grid=rng_grid, holdout=holdout
    )
    rays = sc.fan.rays()
    value_rows = []
    for s in rng_grid + holdout:
        d = s.as_dict()
        value_rows.append([d[r] for r in rays] + [float(ev(s))])
    _write_csv(
        out / f"{idx:02d}_fit.csv",
        [f"a({','.join(str(int(x)) for x in r)})" for r in rays] + ["value"],
        value_rows,
    )
    rows = [
        [",".join(str(e) for e in m), c]
        for m, c in poly.coefficients
        if abs(c) > 1e-12
    ]
    _write_csv(
        out / f"{idx:02d}_fit_coefficients.csv", ["monomial", "coefficient"], rows
    )
    ok = report.holdout_residual < 100 * tol
    return {
        "ok": ok,
        "certificate_ok": cert.ok,
        "degree": degree,
        "n_grid": report.n_samples,
        "n_holdout": report.n_holdout,
        "max_residual": report.max_residual,
        "holdout_residual": report.holdout_residual,
        "condition": report.condition,
        "coefficients": {m: c for m, c in rows},
    }


def _task_langlands(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    samples = int(task.get("samples", 10_000))
    mode = task.get("mode") or ("exact" if sc.space.dim <= 3 else "sampled")
    results = []
    ok = True
    for key in sc.fan.maximal:
        cone = sc.fan.cone(key)
        rep = verify_langlands(cone, sc.space, mode=mode, samples=samples, seed=seed)
        results.append(
            {
                "cone": sorted(map(list, key)),
                "ok": rep["ok"],
                "intervals": len(rep["intervals"]),
            }
        )
        ok = ok and rep["ok"]
    return {"ok": ok, "mode": mode, "cones": results}


def _task_partition_check(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    samples = int(task.get("samples", 200))
    p = _get_polytope(sc, task)
    results = []
    ok = True
    keys = [task["cone"]] if task.get("cone") is not None else [
        c.key for c in sc.fan.cones
    ]
    for key in keys:
        rep = verify_double_partition(p, key, samples=samples, seed=seed)
        results.append(
            {
                "cone": rep["cone"],
                "ok": rep["ok"],
                "points": rep["points_checked"],
                "violations": len(rep["violations"]),
                "witness": rep["violations"][0]["point"] if rep["violations"] else None,
            }
        )
        ok = ok and rep["ok"]
    return {"ok": ok, "per_cone": results}


def _task_identity_check(sc: Scenario, task: dict, out: Path, idx: int, seed: int) -> dict:
    if sc.kfamily is None:
        raise ScenarioError("identity-check task needs a kfamily")
    tol = float(task.get("tol", 1e-7))
    p = _get_polytope(sc, task)
    rep = polynomiality_identity_check(sc.kfamily, p, tol=tol)
    return {
        "ok": rep.ok,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "discrepancy": rep.discrepancy,
        "terms": rep.terms,
    }


_RUNNERS = {
    "validate": _task_validate,
    "decompose": _task_decompose,
    "truncate": _task_truncate,
    "integrate": _task_integrate,
    "lattice-sum": _task_lattice_sum,
    "fit": _task_fit,
    "langlands": _task_langlands,
    "partition-check": _task_partition_check,
    "identity-check": _task_identity_check,
}


def _human_report(kind: str, result: dict) -> str:
    lines = [f"task: {kind}", f"status: {'PASS' if result.get('ok') else 'FAIL'}"]
    for k in sorted(result):
        if k == "ok":
            continue
        v = result[k]
        if isinstance(v, (dict, list)):
            lines.append(f"{k}:")
            lines.append(
                "\n".join(
                    "  " + line
                    for line in json.dumps(_jsonable(v), sort_keys=True, indent=1).splitlines()
                )
            )
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def _run_one_task(scenario_path: str, out_dir: str, idx: int, seed: int) -> dict:
    """Run a single task by index (top level so worker processes can call it)."""
    sc = load_scenario(scenario_path)
    task = sc.tasks[idx]
    kind = task["kind"]
    task_seed = int(task.get("seed", seed))
    out = Path(out_dir)
    try:
        result = _RUNNERS[kind](sc, task, out, idx, task_seed)
    except (PolytruncError, ValueError) as exc:
        result = {"ok": False, "error": type(exc).__name__, "message": str(exc)}
    expected_failure = bool(task.get("expect_failure"))
    result["expected_failure"] = expected_failure
    result["effective_ok"] = (
        (not result.get("ok")) if expected_failure else bool(result.get("ok"))
    )
    _write_json(out / f"{idx:02d}_{kind}.json", result)
    (out / f"{idx:02d}_{kind}.txt").write_text(_human_report(kind, result))
    return result


def run(
    scenario_path: str | Path,
    out_dir: str | Path,
    seed: int = 20240801,
    jobs: int = 1,
) -> int:
    """Run every task of a scenario; returns the process exit code."""
    try:
        sc = load_scenario(scenario_path)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if "parse" in str(exc).lower() or "yaml" in str(exc).lower() else 3
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: dict[int, dict] = {}
    if jobs > 1 and len(sc.tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                idx: pool.submit(_run_one_task, str(scenario_path), str(out), idx, seed)
                for idx in range(len(sc.tasks))
            }
            for idx, fut in futures.items():
                results[idx] = fut.result()
    else:
        for idx in range(len(sc.tasks)):
            results[idx] = _run_one_task(str(scenario_path), str(out), idx, seed)
    all_ok = True
    for idx in sorted(results):
        result = results[idx]
        kind = sc.tasks[idx]["kind"]
        if not result.get("ok"):
            all_ok = False
        expected = result.get("expected_failure")
        print(
            f"[{idx:02d}] {kind}: {'PASS' if result.get('ok') else 'FAIL'}"
            + (" (expected)" if expected and not result.get("ok") else "")
        )
    return 0 if all_ok else 1


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="polytrunc",
        description="Exact polyhedral truncation engine: scenarios in, reports out.",
    )
    ap.add_argument("--version", action="version", version=f"polytrunc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run all tasks of a scenario")
    runp.add_argument("scenario")
    runp.add_argument("--out", required=True)
    runp.add_argument("--seed", type=int, default=20240801)
    runp.add_argument("--jobs", type=int, default=1)
    valp = sub.add_parser("validate", help="parse and validate a scenario")
    valp.add_argument("scenario")
    args = ap.parse_args(argv)
    if args.command == "validate":
        try:
            load_scenario(args.scenario)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2 if "yaml" in str(exc).lower() else 3
        print("scenario ok")
        return 0
    if args.command == "run":
        return run(args.scenario, args.out, seed=args.seed, jobs=args.jobs)
    return 2


if __name__ == "__main__":
    sys.exit(main())
