"""Command-line front end.

Exit codes: 0 when every requested check passes, 1 when one fails (named on
stderr), 2 for usage or configuration errors.  Options come from an optional
JSON config file; flags given on the command line override it.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import jsonschema
import numpy as np

from . import corpus as corpus_mod
from . import estimates, inequalities, io, levelgeom, psolve, symmetrize
from ._accel import max_threads
from .fields import CartesianField, RadialField
from .reports import REPORT_SCHEMA, Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

MARGIN_COLUMNS = ("name", "lhs", "rhs", "margin", "pass")

INEQ = ("morrey", "sobolev", "mt", "isoperimetric", "ms", "thm11")
ESTIMATES = ("thm14a", "thm14b", "thm16", "bootstrap", "boundary")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: Dict[str, Any] = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.options.get(key)
        return default if v is None else v

    def path(self, key, must_exist=True) -> Optional[Path]:
        v = self.options.get(key)
        if v is None:
            return None
        p = Path(v)
        if must_exist and not p.exists():
            raise UsageError(f"{key}: no such file {p}")
        return p

    def positive(self, key, default):
        v = self.get(key, default)
        if not (isinstance(v, (int, float)) and v > 0):
            raise UsageError(f"{key} must be positive, got {v!r}")
        return v


def load_config(args: argparse.Namespace) -> RunConfig:
    opts: Dict[str, Any] = {}
    if getattr(args, "config", None):
        p = Path(args.config)
        if not p.exists():
            raise UsageError(f"config: no such file {p}")
        try:
            opts.update(json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(opts, dict):
            raise UsageError("config must be a JSON object")
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        opts[k] = v
    return RunConfig(args.command, opts)


# --------------------------------------------------------------------------
# output helpers

def _emit(reports: Sequence[Report], out: Optional[Path], stem: str) -> int:
    docs = [r.to_dict() for r in reports]
    for d in docs:
        jsonschema.validate(d, REPORT_SCHEMA)
    text = json.dumps(docs if len(docs) != 1 else docs[0], indent=2)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(text + "\n")
        io.write_table(out / f"{stem}_margins.csv",
                       [{"name": d["name"], "lhs": _num(d["lhs"]), "rhs": _num(d["rhs"]),
                         "margin": _num(d["margin"]), "pass": int(d["pass"])} for d in docs],
                       MARGIN_COLUMNS)
    print(text)
    failing = [r.name for r in reports if not r.passed]
    if failing:
        print("FAILED: " + ", ".join(sorted(set(failing))), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _num(x):
    return math.nan if x is None else x


def _fanout(fn: Callable, items: List, workers: int) -> List:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# subcommands

def cmd_exponents(cfg: RunConfig) -> int:
    n, p = cfg.get("n"), cfg.get("p")
    if n is None or p is None:
        raise UsageError("exponents needs --n and --p")
    try:
        out = estimates.exponent_table(int(n), float(p)).to_dict()
        q = cfg.get("q")
        if q is not None:
            t = inequalities.exponents(int(n), float(p), float(q))
            out.update(q=t.q, p_q_star=t.p_q_star, regime=t.regime, p_prime=t.p_prime)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps({k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                      for k, v in out.items()}, indent=2))
    return EXIT_OK


def _problem(cfg: RunConfig) -> psolve.ProblemSpec:
    spec_path = cfg.path("spec")
    d = json.loads(spec_path.read_text()) if spec_path else dict(cfg.get("problem", {}))
    for k in ("n", "p", "f", "M"):
        if cfg.get(k) is not None:
            d[k] = cfg.get(k)
    try:
        return psolve.ProblemSpec.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid problem spec: {exc}") from exc


def cmd_solve_branch(cfg: RunConfig) -> int:
    spec = _problem(cfg)
    out = Path(cfg.get("out", "branch.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        branch = psolve.continue_branch(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    io.write_table(out, branch.table(), psolve.BRANCH_COLUMNS)
    prof = out.with_name(out.stem + "_profiles")
    prof.mkdir(exist_ok=True)
    for i, pt in enumerate(branch.points):
        io.write_field(prof / f"point_{i:04d}.pfield", pt.u)
    meta = {"spec": spec.to_dict(), "lambda_star_bracket": list(branch.lambda_star_bracket),
            "tol_eig": branch.tol_eig, "profiles": prof.name}
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    worst = max(pt.pohozaev_residual for pt in branch.points)
    rep = Report.compare("pohozaev", worst, float(cfg.get("pohozaev_tol", 1e-4)), None, 0.0,
                         spec.M, lambda_star=branch.lambda_star, points=len(branch.points),
                         ends_at_fold=branch.ends_at_fold)
    return _emit([rep], out.parent, out.stem + "_report")


def load_branch(csv_path: Path) -> psolve.Branch:
    """Rebuild a branch from branch.csv, its JSON sidecar and the profile snapshots."""
    meta_path = csv_path.with_suffix(".json")
    if not meta_path.exists():
        raise UsageError(f"missing branch sidecar {meta_path}")
    meta = json.loads(meta_path.read_text())
    spec = psolve.ProblemSpec.from_dict(meta["spec"])
    rows = io.read_table(csv_path)
    prof = csv_path.with_name(meta["profiles"])
    points = []
    for i, row in enumerate(rows):
        u0 = io.read_field(prof / f"point_{i:04d}.pfield")
        points.append(psolve.solve_at(spec, row["lambda"], u0))
    return psolve.Branch(tuple(points), tuple(meta["lambda_star_bracket"]), meta["tol_eig"])


def _read_fields(cfg: RunConfig) -> List:
    fp = cfg.path("field")
    if fp is not None:
        return [io.read_field(fp)]
    seed, count = int(cfg.get("seed", 0)), int(cfg.get("count", 8))
    d = int(cfg.get("d", 3))
    return corpus_mod.corpus(seed, count, d=d, shape=int(cfg.get("shape", 71 if d == 3 else 129)))


def cmd_symmetrize(cfg: RunConfig) -> int:
    f = io.read_field(cfg.path("field") or _missing("--field"))
    levels = int(cfg.positive("levels", 1024))
    res = symmetrize.schwarz(f, levels=levels)
    if cfg.get("out"):
        io.write_field(Path(cfg.get("out")), res.vstar)
    tol = float(cfg.get("tol", 1e-2))
    reps = [Report.compare(f"norm_L{r:g}", abs(res.star_norms[r] - a) / a if a else 0.0, tol, None, 0.0,
                           f"levels={levels}", source=a, star=res.star_norms[r])
            for r, a in res.source_norms.items()]
    return _emit(reps, None, "symmetrize")


def _missing(flag):
    raise UsageError(f"{flag} is required")


def cmd_functional(cfg: RunConfig) -> int:
    f = io.read_field(cfg.path("field") or _missing("--field"))
    p, q = float(cfg.get("p", 2.0)), float(cfg.get("q", 1.0))
    try:
        fn = levelgeom.functional_Ipq_tilde if cfg.get("tilde") else levelgeom.functional_Ipq
        res = fn(f, p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps({"p": p, "q": q, "value": res.value, "tangential": res.tangential,
                      "curvature": res.curvature, "empty": res.empty}, indent=2))
    return EXIT_OK


def _ineq_task(job):
    name, f, o = job
    tol = o.get("tol", 1e-2)
    if name == "isoperimetric":
        return inequalities.isoperimetric_check(f, tol=tol)
    if name == "thm11":
        return symmetrize.compare_Ipq(f, o.get("p", 2.0), o.get("q", 1.0), A=o.get("A"),
                                      levels=o.get("levels", 1024), tol=tol)
    n = f.n if isinstance(f, RadialField) else f.d
    cs = inequalities.constants_remark(n, o["p"], o["q"], A=o.get("A"))
    if name == "morrey":
        return inequalities.check_morrey(f, o["p"], o["q"], cs, tol)
    if name == "sobolev":
        return inequalities.check_sobolev(f, o["p"], o["q"], o.get("r"), cs, tol)
    return inequalities.check_moser_trudinger(f, o["p"], o["q"], cs, tol)


def _surface(o) -> levelgeom.ParametricSurface:
    s = dict(o.get("surface", {"kind": "sphere", "n": 3}))
    kind = s.pop("kind", "sphere")
    makers = {"sphere": levelgeom.sphere, "torus": levelgeom.torus, "ellipsoid": levelgeom.ellipsoid}
    if kind not in makers:
        raise UsageError(f"unknown surface kind {kind!r}")
    try:
        return makers[kind](**s)
    except TypeError as exc:
        raise UsageError(f"surface parameters: {exc}") from exc


def cmd_verify(cfg: RunConfig) -> int:
    ineq, est = cfg.get("ineq"), cfg.get("estimate")
    if (ineq is None) == (est is None):
        raise UsageError("verify needs exactly one of --ineq or --estimate")
    out = Path(cfg.get("out")) if cfg.get("out") else None
    if est is not None:
        return _emit(_verify_estimate(cfg, est), out, f"verify_{est}")
    o = dict(cfg.options)
    if ineq == "ms":
        rep = levelgeom.michael_simon_check(_surface(o), q=float(o.get("q", 1.0)), A=o.get("A"),
                                            tol=float(o.get("tol", 1e-6)))
        return _emit([rep], out, "verify_ms")
    if ineq in ("morrey", "sobolev", "mt") and ("p" not in o or "q" not in o):
        raise UsageError(f"--ineq {ineq} needs --p and --q")
    fields = _read_fields(cfg)
    jobs = [(ineq, f, o) for f in fields]
    try:
        reports = _fanout(_ineq_task, jobs, max_threads())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return _emit(reports, out, f"verify_{ineq}")


def _verify_estimate(cfg: RunConfig, est: str) -> List[Report]:
    bp = cfg.path("branch") or _missing("--branch")
    branch = load_branch(bp)
    spec = branch.points[0].spec
    n, p = spec.n, spec.p
    count = int(cfg.get("s_count", 32))
    if est in ("thm14a", "thm14b"):
        want_a = est == "thm14a"
        if want_a != (n <= p + 2):
            raise UsageError(f"{est} does not apply to n={n}, p={p}")
        check = estimates.check_thm14_a if want_a else estimates.check_thm14_b
        C = cfg.get("C")
        reps = [check(pt, float(s), C) for pt in branch.points for s in estimates.s_grid(pt, count)]
        worst = max(r.constant_measured for r in reps)
        summary = Report.compare(f"{est}_constant", worst, worst if C is None else float(C), C, 0.0,
                                 spec.M, points=len(branch.points))
        summary.passed = summary.passed and math.isfinite(worst)
        return reps + [summary]
    if est == "thm16":
        return estimates.check_thm16(branch)
    if est == "bootstrap":
        r0 = (p - 1.0) * n / (n - p) if n > p else 1.0
        r0 = float(cfg.get("r0", r0))
        r = float(cfg.get("r", 0.5 * p * r0 / (r0 + 1.0)))
        return [estimates.bootstrap_gradient(pt, r0, r) for pt in branch.points]
    eps_b = float(cfg.get("epsilon_b", 0.1))
    g = estimates.gamma_along_branch(branch, eps_b)
    gamma = float(cfg.get("gamma", 0.5 * np.min(g)))
    return [estimates.boundary_estimate_check(pt.u, eps_b, gamma) for pt in branch.points]


def cmd_corpus(cfg: RunConfig) -> int:
    seed, count = int(cfg.get("seed", 0)), int(cfg.get("count", 50))
    if count < 0:
        raise UsageError("count must be nonnegative")
    out = Path(cfg.get("out", "corpus"))
    out.mkdir(parents=True, exist_ok=True)
    d = int(cfg.get("d", 3))
    fields = corpus_mod.corpus(seed, count, d=d, shape=int(cfg.get("shape", 71 if d == 3 else 129)))
    for i, f in enumerate(fields):
        io.write_field(out / f"field_{i:03d}.pfield", f)
    print(json.dumps({"seed": seed, "count": count, "dir": str(out)}))
    return EXIT_OK


COMMANDS = {
    "exponents": cmd_exponents,
    "solve-branch": cmd_solve_branch,
    "symmetrize": cmd_symmetrize,
    "functional": cmd_functional,
    "verify": cmd_verify,
    "corpus": cmd_corpus,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pstable", description="Level-set functionals, symmetrization and p-Laplace branches.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with default options")
        return sp

    sp = add("exponents", "exponent table for (n, p)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)

    sp = add("solve-branch", "continue the minimal branch to the fold")
    sp.add_argument("--spec", help="problem JSON (n, p, f, m, c, M, grading)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--f", choices=("exp", "power"))
    sp.add_argument("--M", type=int)
    sp.add_argument("--out", help="branch CSV path")

    sp = add("symmetrize", "Schwarz rearrangement of a field snapshot")
    sp.add_argument("--field")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--out")

    sp = add("functional", "evaluate I_{p,q} on a field snapshot")
    sp.add_argument("--field")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--tilde", action="store_true", default=None)

    sp = add("verify", "run an inequality or estimate check")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--ineq", choices=INEQ)
    g.add_argument("--estimate", choices=ESTIMATES)
    sp.add_argument("--field")
    sp.add_argument("--branch")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--r", type=float)
    sp.add_argument("--A", type=float)
    sp.add_argument("--C", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--shape", type=int)
    sp.add_argument("--s-count", dest="s_count", type=int)
    sp.add_argument("--out", help="directory for report JSON and margins CSV")

    sp = add("corpus", "write a seeded corpus of grid fields")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--d", type=int, choices=(2, 3))
    sp.add_argument("--shape", type=int)
    sp.add_argument("--out")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
