"""Command-line entry point: ``mpcomm {vertices,facets,bound,verify,scan}``.

Exit status is 0 when every requested computation finished with an optimal
or complete status and no validation problem was found, 1 otherwise, and 2
for usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from . import classical, corpus, formats, polytope
from .hierarchy import HierarchyError, hierarchy_upper_bound
from .model import (
    DimensionBound,
    DistinguishabilityBound,
    Functional,
    Scenario,
    ValidationError,
    behavior_from_strategy,
    evaluate_functional,
)
from .seesaw import WORKERS_ENV, SeesawConfig, SeesawError, run_seesaw

METHODS = ("classical", "seesaw", "hierarchy")
ADVANTAGE_TOL = 1e-6
DEFAULT_D = Fraction(2, 3)


class CliError(Exception):
    """Problem with the requested job, reported on stderr with exit status 1."""


@dataclass
class JobSpec:
    command: str
    ineq: str | None = None
    ineq_file: str | None = None
    scenario: tuple | None = None
    d: int = 2
    D1: Fraction = DEFAULT_D
    D2: Fraction = DEFAULT_D
    method: str = "classical"
    variant: str = "paper"
    restarts: int = 100
    seed: int = 0
    out: str | None = None
    fmt: str = "text"
    d_range: tuple = (2, 2)
    methods: tuple = ("seesaw", "hierarchy")
    strategy_file: str | None = None
    dimension_given: bool = False  # --d passed explicitly to ``bound``
    constraint: str = "dimension"  # for ``vertices``

    def __post_init__(self):
        if self.command in ("bound", "verify", "scan") and (self.ineq is None) == (self.ineq_file is None):
            raise CliError("give exactly one of --ineq or --ineq-file")


@dataclass
class Outcome:
    records: list
    ok: bool = True
    messages: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# inequality lookup


def load_inequality(job: JobSpec):
    """Returns ``(name, scenario template or None, functional, reference values)``."""
    if job.ineq is not None:
        try:
            e = corpus.get(job.ineq)
        except KeyError:
            raise CliError(f"unknown inequality {job.ineq!r}; known names include I1..I6 and table rows") from None
        return e.name, e.scenario(job.d, job.D1, job.D2), e.functional, dict(e.reference)
    try:
        s, f = formats.read_inequality_file(job.ineq_file)
    except OSError as exc:
        raise CliError(f"cannot read {job.ineq_file}: {exc}") from exc
    name = f.name or os.path.splitext(os.path.basename(job.ineq_file))[0]
    if s is not None:
        s = _with_params(s, job)
    return name, s, f, {}


def _with_params(s: Scenario, job: JobSpec) -> Scenario:
    if s.is_dimension_bounded:
        return s.with_constraint(DimensionBound(job.d))
    return s.with_constraint(DistinguishabilityBound(job.D1, job.D2))


def _require_scenario(s, f):
    if s is None:
        raise CliError("inequality file has no constraint; cannot choose a scenario")
    f.check(s)
    return s


def reference_value(ref: dict, method: str, s: Scenario, d: int | None = None):
    """Reference value bundled with the corpus entry, if one matches."""
    if not ref:
        return None
    if method == "classical":
        if s.is_dimension_bounded or (s.constraint.D1 == DEFAULT_D and s.constraint.D2 == DEFAULT_D):
            return ref.get("sc")
        return None
    if s.is_dimension_bounded:
        d = s.constraint.d
    elif s.constraint.D1 != DEFAULT_D or s.constraint.D2 != DEFAULT_D:
        return None
    if method == "seesaw":
        return ref.get(f"sq_lower_d{d}")
    if method.startswith("hierarchy"):
        v = ref.get(f"sq_hierarchy_d{d}")
        if v is None and d == 2 and s.is_dimension_bounded:
            v = ref.get("sq_hierarchy")
        return v
    return None


# ---------------------------------------------------------------------------
# commands


def _record(name, method, s: Scenario, value, **kw):
    d = kw.pop("d", None)
    if s.is_dimension_bounded:
        d, D1, D2 = s.constraint.d, None, None
    else:
        D1, D2 = s.constraint.D1, s.constraint.D2
    return formats.ResultRecord(name, method, value, d, D1, D2, **kw)


def verdict(rec: formats.ResultRecord) -> str | None:
    if rec.value is None or rec.classical is None:
        return None
    gap = float(rec.value) - float(rec.classical)
    if rec.method == "seesaw" or (rec.method == "verify" and rec.status == "ok"):
        return "quantum advantage: " + ("yes" if gap > ADVANTAGE_TOL else "no")
    if rec.method.startswith("hierarchy"):
        if gap <= ADVANTAGE_TOL:
            return "quantum advantage: no"
        return "quantum advantage: not decided (upper bound exceeds the classical bound)"
    return None


def run_method(method: str, name, s: Scenario, f: Functional, job: JobSpec, ref, sc=None, dimension=None):
    """One computation; returns a ResultRecord whose status is ``ok`` or an error string."""
    if sc is None:
        sc = classical.classical_bound(s, f).value
    t0 = time.perf_counter()
    status, notes, value, seed = "ok", [], None, None
    if method == "classical":
        value = sc
    elif method == "seesaw":
        d = s.constraint.d if s.is_dimension_bounded else job.d
        seed = job.seed
        try:
            res = run_seesaw(s, f, SeesawConfig(d=d, restarts=job.restarts, seed=job.seed))
            value = res.value
            notes.append(f"best restart {res.restart_index}")
        except SeesawError as exc:
            status = f"failed: {exc}"
    elif method in ("hierarchy", "hierarchy_dim"):
        try:
            res = hierarchy_upper_bound(s, f, variant=job.variant, dimension=dimension)
            value = res.value
        except HierarchyError as exc:
            status = f"failed: {exc}"
        notes.append(f"variant {job.variant}")
    else:
        raise CliError(f"unknown method {method!r}")
    wall = (time.perf_counter() - t0) * 1e3
    kw = {"d": dimension if dimension is not None else (job.d if method == "seesaw" else None)}
    pv = reference_value(ref, method, s, kw["d"])
    rec = _record(name, method, s, value, classical=sc, paper_value=pv,
                  seed=seed, wall_ms=round(wall, 1), status=status, notes=notes, **kw)
    v = verdict(rec)
    if v:
        rec.notes.append(v)
    return rec


def cmd_bound(job: JobSpec) -> Outcome:
    name, s, f, ref = load_inequality(job)
    s = _require_scenario(s, f)
    if job.method not in METHODS:
        raise CliError(f"unknown method {job.method!r}")
    dimension = None
    if job.method == "hierarchy" and not s.is_dimension_bounded and job.dimension_given:
        dimension = job.d
    rec = run_method(job.method, name, s, f, job, ref, dimension=dimension)
    return Outcome([rec], rec.status == "ok")


def _bundled_strategy(name: str) -> str:
    p = resources.files("mpcomm") / "data" / "strategies" / f"{name}.json"
    if not p.is_file():
        raise CliError(f"no bundled strategy for {name!r}; pass a strategy file")
    return str(p)


def cmd_verify(job: JobSpec) -> Outcome:
    name, s, f, ref = load_inequality(job)
    path = job.strategy_file or _bundled_strategy(name)
    report = formats.read_strategy_file(path)
    strat = report.strategy
    msgs = [f"warning: {w}" for w in report.warnings]
    problems = strat.problems()
    msgs += [f"invalid: {p}" for p in problems]
    nx, ny, nz = f.shape
    if (len(strat.alice_states), len(strat.bob_states), len(strat.povm)) != (nx, ny, nz):
        raise CliError(f"strategy shape does not match inequality shape {f.shape}")
    value = float(evaluate_functional(f, behavior_from_strategy(strat, check=False)))
    da, db = strat.dims
    if s is None:
        s = Scenario(nx, ny, nz, DimensionBound(da))
    elif s.is_dimension_bounded:
        s = s.with_constraint(DimensionBound(max(da, db)))
    sc = classical.classical_bound(s, f).value
    status = "ok" if not problems else "invalid strategy"
    notes = list(msgs)
    rec = _record(name, "verify", s, value, classical=sc, paper_value=reference_value(ref, "seesaw", s, max(da, db)),
                  status=status, notes=notes, d=max(da, db))
    v = verdict(rec)
    if v:
        rec.notes.append(v)
    return Outcome([rec], not problems, msgs)


def parse_range(text: str) -> tuple[int, int]:
    """``"2..5"`` or ``"3"`` to an inclusive integer range."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; expected e.g. 2..5") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi


def cmd_scan(job: JobSpec) -> Outcome:
    """Seesaw lower and hierarchy upper bounds for each d in the range."""
    name, s0, f, ref = load_inequality(job)
    s0 = _require_scenario(s0, f)
    sc = classical.classical_bound(s0, f).value
    records = []
    lo, hi = job.d_range
    for d in range(lo, hi + 1):
        s = s0.with_constraint(DimensionBound(d)) if s0.is_dimension_bounded else s0
        sub = JobSpec(**{**job.__dict__, "d": d})
        for m in job.methods:
            if m == "hierarchy" and not s.is_dimension_bounded:
                # both readings: distinguishability alone, and with the dimension added
                records.append(run_method("hierarchy", name, s, f, sub, ref, sc))
                records[-1].d = d
                records.append(run_method("hierarchy_dim", name, s, f, sub, ref, sc, dimension=d))
            else:
                records.append(run_method(m, name, s, f, sub, ref, sc))
    records.sort(key=lambda r: (r.ineq, r.d or 0, r.method))
    return Outcome(records, all(r.status == "ok" for r in records))


def cmd_vertices(job: JobSpec) -> Outcome:
    nx, ny, nz = job.scenario
    if job.constraint == "dimension":
        s = Scenario(nx, ny, nz, DimensionBound(job.d))
        vs = classical.enum_vertices_dim(s)
        text = polytope.vpolytope_to_text(polytope.VPolytope(vs.behaviors))
        header = f"# scenario {nx},{ny},{nz} d=2 messages; {vs.raw_count} strategies, {len(vs.behaviors)} distinct\n"
        return Outcome([], True, [header + text])
    out = []
    for label, n, D in (("alice", nx, job.D1), ("bob", ny, job.D2)):
        verts = classical.enum_encoder_vertices_dist(n, D)
        out.append(f"# {label}: {len(verts)} encoder vertices, n={n}, D={D}")
        for v in verts:
            out.append(" ".join(str(x) for x in v.ravel()))
    return Outcome([], True, ["\n".join(out) + "\n"])


def cmd_facets(job: JobSpec) -> Outcome:
    nx, ny, nz = job.scenario
    s = Scenario(nx, ny, nz, DimensionBound(2))
    try:
        h = classical.facet_enumerate_dim(s)
    except classical.CapacityError as exc:
        raise CliError(str(exc)) from exc
    return Outcome([], True, [polytope.hpolytope_to_text(h)])


# ---------------------------------------------------------------------------
# output


def render(records, fmt: str) -> str:
    if fmt == "csv":
        return formats.records_to_csv(records)
    if fmt == "json":
        return json.dumps([r.to_json() for r in records], indent=2, sort_keys=True) + "\n"
    lines = []
    for r in records:
        head = f"{r.ineq} {r.method}"
        if r.d is not None:
            head += f" d={r.d}"
        if r.D1 is not None:
            head += f" D1={r.D1} D2={r.D2}"
        val = "n/a" if r.value is None else (str(r.value) if isinstance(r.value, Fraction) else f"{r.value:.6f}")
        lines.append(f"{head}: {val}")
        if r.classical is not None:
            lines.append(f"  classical bound: {r.classical}")
        if r.paper_value is not None:
            lines.append(f"  reference value: {r.paper_value}")
        if r.status != "ok":
            lines.append(f"  status: {r.status}")
        for n in r.notes:
            lines.append(f"  {n}")
    return "\n".join(lines) + "\n"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _shape(text: str) -> tuple:
    try:
        t = tuple(int(x) for x in text.split(","))
    except ValueError:
        t = ()
    if len(t) != 3 or min(t) < 2:
        raise argparse.ArgumentTypeError(f"scenario must look like 3,2,2 (got {text!r})")
    return t


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpcomm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ineq=True):
        if ineq:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--ineq", help="bundled inequality name (I1..I6, tableN_rKK)")
            g.add_argument("--ineq-file", help="inequality JSON file")
        sp.add_argument("--D1", type=_fraction, default=DEFAULT_D)
        sp.add_argument("--D2", type=_fraction, default=DEFAULT_D)
        sp.add_argument("--out", help="write results here instead of stdout")
        sp.add_argument("--format", dest="fmt", choices=("json", "csv", "text"), default="text")

    sp = sub.add_parser("vertices", help="classical vertices of a scenario")
    sp.add_argument("--scenario", type=_shape, required=True)
    sp.add_argument("--constraint", choices=("dimension", "distinguishability"), default="dimension")
    sp.add_argument("--d", type=int, default=2)
    common(sp, ineq=False)

    sp = sub.add_parser("facets", help="facets of a dimension-bounded classical polytope")
    sp.add_argument("--scenario", type=_shape, required=True)
    common(sp, ineq=False)

    for cmd in ("bound", "scan"):
        sp = sub.add_parser(cmd, help="one bound" if cmd == "bound" else "bounds over a range of d")
        common(sp)
        if cmd == "bound":
            sp.add_argument("--method", choices=METHODS, default="classical")
            sp.add_argument("--d", type=int, default=None)
        else:
            sp.add_argument("--d-range", "--d", dest="d_range", type=parse_range, default=(2, 3))
            sp.add_argument("--methods", default="seesaw,hierarchy",
                            help="comma-separated subset of classical,seesaw,hierarchy")
        sp.add_argument("--restarts", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--variant", choices=("paper", "extended"), default="paper")

    sp = sub.add_parser("verify", help="evaluate an explicit strategy")
    common(sp)
    sp.add_argument("strategy", nargs="?", help="strategy JSON (default: the bundled one)")
    sp.epilog = f"Set {WORKERS_ENV}=N to run see-saw restarts in N processes."
    return p


def _job(args) -> JobSpec:
    kw = dict(command=args.command, out=args.out, fmt=args.fmt, D1=args.D1, D2=args.D2)
    for k in ("ineq", "ineq_file", "scenario", "restarts", "seed", "variant", "method", "d_range"):
        if hasattr(args, k):
            kw[k] = getattr(args, k)
    if getattr(args, "d", None) is not None:
        kw["d"] = args.d
    if args.command == "scan":
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise CliError(f"unknown method(s) {', '.join(bad)}")
        kw["methods"] = methods
    if args.command == "verify":
        kw["strategy_file"] = args.strategy
    kw["dimension_given"] = getattr(args, "d", None) is not None
    kw["constraint"] = getattr(args, "constraint", "dimension")
    job = JobSpec(**kw)
    if job.restarts < 1:
        raise CliError("--restarts must be at least 1")
    return job


COMMANDS = {"bound": cmd_bound, "verify": cmd_verify, "scan": cmd_scan, "vertices": cmd_vertices, "facets": cmd_facets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = _job(args)
        outcome = COMMANDS[job.command](job)
    except (CliError, ValidationError, classical.CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if outcome.records:
        text = render(outcome.records, job.fmt)
    else:
        text = "".join(outcome.messages)
    if job.out:
        with open(job.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if outcome.records and (job.out or job.fmt != "text"):
        # keep machine-readable stdout clean; the summary goes to stderr
        for r in outcome.records:
            for n in r.notes:
                if n.startswith(("quantum advantage", "warning", "invalid")):
                    print(f"{r.ineq} {r.method}: {n}", file=sys.stderr)
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    sys.exit(main())
