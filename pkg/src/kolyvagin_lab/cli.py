"""Command-line front end: ``validate``, ``verify`` and ``explain``."""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

from . import cohomology, complex as kcomplex, distribution, eulermock, recursion
from .scenario import Scenario, ScenarioError, submasks

SCHEMA = 1


@dataclass(frozen=True)
class CheckInfo:
    anchor: str
    statement: str
    witness: str


CHECKS: dict[str, CheckInfo] = {
    "resolution": CheckInfo(
        "Anderson resolution: acyclicity and augmentation",
        "d∘d = 0 on L_z; H^n(L_z) = 0 for every negative n (exact integer ranks plus saturation of "
        "images); H^0(L_z) has the rank of U_z and the augmentation identifies the degree -1 image "
        "with the relation lattice.",
        "the degree at which a rank or saturation test fails, or a symbol on which d∘d is nonzero",
    ),
    "anticommute": CheckInfo(
        "double complex: anticommuting differentials",
        "every pair of distinct operators among the d_x and δ_x anticommutes and each squares to zero "
        "on every basis symbol of the window; the bar-complex relations are δ-stable; the induced "
        "differentials on the quotient Q_z vanish mod M.",
        "a K-symbol and the offending pair of differentials",
    ),
    "h0-crosscheck": CheckInfo(
        "fixed points of U_z/MU_z, two ways",
        "|H^0(G_z, U_z/MU_z)| computed as a kernel of the stacked σ-1 maps equals |H^0| of the "
        "windowed total complex K_z/M, equals M^(2^k |H|), and the 𝐮-images of the K-cocycles span "
        "the same submodule.",
        "the three sizes and the span comparison flag",
    ),
    "canonical-basis": CheckInfo(
        "canonical basis of H^0",
        "each generator [1,y,y] of Q_z lifts to a 0-cocycle of K_z/M; the resulting classes c̄_y are "
        "G-fixed, independent over T/MT, span H^0, do not depend on the solver's pivot order, give "
        "c̄_1 = [1], and are compatible with inclusions of stalk levels.",
        "the failing flag and the class vectors",
    ),
    "exactness": CheckInfo(
        "I_x exact sequence",
        "γ_x is injective on U_{z/z(x)}; 0 -> U_{z/z(x)} -γ-> U_{z/z(x)} -> U_z/I_x -> 0 is exact, "
        "checked by Hermite-form membership over Z for every prime x.",
        "a vector outside the image, a γ-image outside I_x, or a kernel vector outside im γ",
    ),
    "delta-agreement": CheckInfo(
        "Δ_x: diagonal shift versus characterization",
        "on every canonical basis vector (with its H-translates) the diagonal-shift Δ_x agrees with "
        "the Δ_x characterized through I_x; the latter is independent of the decomposition chosen; "
        "Δ's at distinct primes commute; the shift commutes with d_x', δ_x' and kills against d_x.",
        "basis vector index, prime and the two differing vectors",
    ),
    "universal-recursion": CheckInfo(
        "universal Kolyvagin recursion",
        "for the canonical family, the Kolyvagin family c̄'_y = D_y[z(y)] and any supplied family: "
        "Δ_x c_y = c_{y/x} whenever x | y, and c_y comes from level z(y).",
        "(family, y, x) with the computed and expected vectors",
    ),
    "basis-theorem": CheckInfo(
        "basis theorem for recursive families",
        "the change of basis from {c̄_y} to a recursive family normalized at y = 1 is unitriangular "
        "in divisibility order and invertible over T/MT.",
        "the change-of-basis matrix and a kernel vector when singular",
    ),
    "euler-mock": CheckInfo(
        "Kolyvagin recursion on a mock Euler system",
        "the mock passes its axiom checks (annihilation of W, decomposition-group commutation, norm "
        "relation, relation lattice into W^Γ, locality) and Q_x(F̂r^-1) κ(c_{y/x})(F̂r_x) = "
        "κ(c_y)(σ̂_x) holds in W for the canonical and Kolyvagin families.",
        "the failing axiom check, or (family, y, x) with both sides",
    ),
}


def digest(scn: Scenario) -> str:
    canon = json.dumps(scn.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------------------
# individual checks: each returns (status, details, witness)


Result = tuple[str, dict, Any]


def _pf(ok: bool) -> str:
    return "pass" if ok else "fail"


def run_resolution(scn: Scenario, opts: dict) -> Result:
    rep = kcomplex.verify_resolution(scn)
    rep["degrees"] = {str(k): v for k, v in rep["degrees"].items()}
    return _pf(rep["passed"]), rep, rep.get("counterexample", {"u_induces_iso": rep["u_induces_iso"]})


def run_anticommute(scn: Scenario, opts: dict) -> Result:
    window = opts.get("window") or (-scn.k - 1, 2)
    rep = kcomplex.verify_anticommute(scn, window)
    bar = kcomplex.verify_bar_relations(scn)
    q = kcomplex.verify_Q_differentials_vanish(scn, [n for n in (-1, 0, 1) if window[0] <= n <= window[1]])
    details = {**rep, "bar_relations_stable": bar, "q_differentials_vanish": q}
    ok = rep["passed"] and bar and q
    return _pf(ok), details, rep.get("counterexample", {"bar_relations_stable": bar, "q_differentials_vanish": q})


def _require_window(opts: dict, degrees: tuple[int, ...]) -> None:
    window = opts.get("window")
    if window and not all(window[0] <= n <= window[1] for n in degrees):
        raise kcomplex.WindowExceeded(f"window {list(window)} does not contain degrees {list(degrees)}")


def run_h0(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (-1, 0, 1))
    rep = cohomology.h0_crosscheck(scn)
    return _pf(rep["passed"]), rep, rep


def run_canonical(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (0, 1))
    rep = cohomology.verify_canonical_basis(scn)
    subs = [m for m in submasks(scn.full_mask) if m != scn.full_mask]
    rep["inclusion_compatible"] = all(cohomology.inclusion_compatible(scn, m) for m in subs)
    ok = rep["passed"] and rep["inclusion_compatible"]
    return _pf(ok), rep, {k: v for k, v in rep.items() if k != "classes"}


def run_exactness(scn: Scenario, opts: dict) -> Result:
    reps = [distribution.check_exact(scn, i, scn.full_mask) for i in range(scn.k)]
    bad = next((r for r in reps if not r["passed"]), None)
    return _pf(bad is None), {"primes": reps}, bad


def run_delta(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (-1, 0, 1))
    agree = recursion.verify_delta_agreement(scn)
    shift = recursion.verify_shift_relations(scn)
    ok = agree["passed"] and shift["passed"]
    witness = agree["failures"][0] if agree["failures"] else shift.get("counterexample")
    return _pf(ok), {"agreement": agree, "shift_relations": shift}, witness


def _families(scn: Scenario, opts: dict) -> list[recursion.RecursiveFamily]:
    fams = [recursion.canonical_family(scn), recursion.kolyvagin_family(scn)]
    if opts.get("family"):
        fams.append(recursion.load_family(scn, opts["family"]))
    return fams


def run_universal(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (0, 1))
    reps = [recursion.verify_universal_recursion(f) for f in _families(scn, opts)]
    ok = all(r["passed"] for r in reps)
    witness = next((dict(r["failures"][0], family=r["family"]) for r in reps if r["failures"]), None)
    return _pf(ok), {"families": reps}, witness


def run_basis(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (0, 1))
    reps = []
    for fam in _families(scn, opts):
        if fam.name == "canonical":
            continue
        reps.append(recursion.verify_basis_theorem(fam))
    ok = all(r["passed"] for r in reps)
    witness = next((r for r in reps if not r["passed"]), None)
    return _pf(ok), {"families": reps}, witness


def _mock(scn: Scenario, opts: dict) -> eulermock.MockModel | None:
    if opts.get("mock"):
        return eulermock.MockModel.load(opts["mock"])
    sibling = opts.get("scenario_path")
    if sibling:
        cand = Path(sibling).with_name(Path(sibling).stem + "_mock.json")
        if cand.exists():
            return eulermock.MockModel.load(cand)
    return eulermock.generate_mock(scn, opts.get("seed", 0))


def run_mock(scn: Scenario, opts: dict) -> Result:
    _require_window(opts, (0, 1))
    model = _mock(scn, opts)
    if model is None:
        return "skip", {"reason": "no mock model found for this seed"}, None
    val = eulermock.validate(model, scn)
    if not val["passed"]:
        return "fail", {"validation": val}, {"validation_errors": val["errors"][:5]}
    reps = [eulermock.verify_kolyvagin_recursion(f, model) for f in _families(scn, opts)]
    ok = all(r["passed"] for r in reps)
    witness = next((dict(r["failures"][0], family=r["family"]) for r in reps if r.get("failures")), None)
    return _pf(ok), {"validation": val, "families": reps}, witness


RUNNERS: dict[str, Callable[[Scenario, dict], Result]] = {
    "resolution": run_resolution,
    "anticommute": run_anticommute,
    "h0-crosscheck": run_h0,
    "canonical-basis": run_canonical,
    "exactness": run_exactness,
    "delta-agreement": run_delta,
    "universal-recursion": run_universal,
    "basis-theorem": run_basis,
    "euler-mock": run_mock,
}


def run_check(check: str, scenario_dict: dict, opts: dict) -> dict:
    scn = Scenario.from_dict(scenario_dict)
    start = time.perf_counter()
    try:
        status, details, witness = RUNNERS[check](scn, opts)
    except kcomplex.WindowExceeded as exc:
        status, details, witness = "skip", {"reason": f"window exceeded: {exc}"}, None
    except (distribution.KolyvaginConditionError, distribution.FreenessError, cohomology.LiftError,
            cohomology.DependenceError, recursion.FamilyError, eulermock.MockError) as exc:
        status, details, witness = "fail", {"error": str(exc)}, {"error": str(exc)}
    record = {
        "id": check,
        "anchor": CHECKS[check].anchor,
        "status": status,
        "details": details,
        "wall_time": round(time.perf_counter() - start, 6),
    }
    if status == "fail":
        record["witness"] = witness if witness is not None else {"details": "see details"}
    return record


def build_report(scn: Scenario, checks: list[str], opts: dict, jobs: int = 1) -> dict:
    payload = scn.to_dict()
    if jobs > 1 and len(checks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_check, checks, [payload] * len(checks), [opts] * len(checks)))
    else:
        records = [run_check(c, payload, opts) for c in checks]
    counts = {s: sum(r["status"] == s for r in records) for s in ("pass", "fail", "skip")}
    return {
        "schema": SCHEMA,
        "tool": {"name": "kolyvagin-lab", "version": _version(), "python": platform.python_version()},
        "scenario": {"digest": digest(scn), "primes": list(scn.ids), "modulus": scn.modulus},
        "options": {
            "checks": checks,
            "window": list(opts["window"]) if opts.get("window") else None,
            "seed": opts.get("seed", 0),
            "family": Path(opts["family"]).name if opts.get("family") else None,
            "mock": Path(opts["mock"]).name if opts.get("mock") else None,
        },
        "checks": records,
        "summary": counts,
    }


# ---------------------------------------------------------------------------
# argument handling


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like lo:hi") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("window lower bound exceeds upper bound")
    return lo, hi


def _parse_checks(text: str) -> list[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    unknown = [c for c in names if c not in CHECKS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown checks {unknown}; valid: {', '.join(CHECKS)}")
    return names


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolyvagin-lab", description="Verify Kolyvagin-recursion structures on finite scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a scenario and check the Kolyvagin conditions")
    p.add_argument("file")

    p = sub.add_parser("verify", help="run verification checks and emit a JSON report")
    p.add_argument("file")
    p.add_argument("--checks", type=_parse_checks, default=list(CHECKS))
    p.add_argument("--window", type=_parse_window)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="treat skipped checks as failures")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--family", help="JSON family: divisor label -> canonical coordinates")
    p.add_argument("--mock", help="mock Euler-system model (default: <scenario>_mock.json or generated)")

    p = sub.add_parser("explain", help="describe a check")
    p.add_argument("check")
    return parser


def cmd_validate(path: str) -> int:
    try:
        scn = Scenario.load(path)
        distribution.build_U(scn, scn.full_mask)
        distribution.check_gamma_injective(scn)
    except FileNotFoundError:
        print(f"error: cannot read {path}", file=sys.stderr)
        return 2
    except (ScenarioError, distribution.KolyvaginConditionError, distribution.FreenessError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    U = distribution.build_U(scn, scn.full_mask)
    print(f"ok: {scn.k} prime(s) {', '.join(scn.ids)}; M = {scn.modulus}; |H| = {scn.h_order}; rank U_z = {U.rank}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        scn = Scenario.load(args.file)
    except FileNotFoundError:
        print(f"error: cannot read {args.file}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    opts = {
        "window": args.window,
        "seed": args.seed,
        "family": args.family,
        "mock": args.mock,
        "scenario_path": args.file,
    }
    report = build_report(scn, args.checks, opts, max(1, args.jobs))
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for rec in report["checks"]:
        print(f"{rec['status']:>4}  {rec['id']}  ({rec['wall_time']:.2f}s)", file=sys.stderr)
    failed = report["summary"]["fail"] > 0 or (args.strict and report["summary"]["skip"] > 0)
    return 1 if failed else 0


def cmd_explain(check: str) -> int:
    info = CHECKS.get(check)
    if info is None:
        print(f"unknown check {check!r}; valid checks: {', '.join(CHECKS)}", file=sys.stderr)
        return 2
    print(f"{check}: {info.anchor}\n\nverifies: {info.statement}\n\nwitness on failure: {info.witness}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.file)
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_explain(args.check)


if __name__ == "__main__":
    raise SystemExit(main())
