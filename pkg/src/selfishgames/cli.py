"""Command line front end: instance files, checks, solvers, generators and reports.

Instance files are JSON with sorted keys and every rational written as a
reduced "p/q" string, so serialization is canonical and hashes are stable.
Exit codes: 0 ok, 1 a requested concept fails, 2 parse or validation error,
3 search budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import binpack, covering, oracles, scheduling
from .core import (
    INFINITE,
    UNAVAILABLE,
    Assignment,
    BinPackInstance,
    GameError,
    SchedInstance,
    SearchBudgetExceeded,
    is_infinite,
    load_vector,
    objective,
    to_rational,
)
from .equilibria import (
    MovePolicy,
    best_response_dynamics,
    is_nash,
    is_strict_pareto,
    is_strong_nash,
    is_weak_pareto,
)

FORMAT = "selfishgames-instance"
VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_BUDGET = 0, 1, 2, 3


class ParseError(GameError, ValueError):
    pass


# ---------------------------------------------------------------- encoding


def enc(x) -> str:
    if is_infinite(x):
        return "inf"
    if x is UNAVAILABLE:
        return "unavailable"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dec(s):
    if s == "unavailable":
        return UNAVAILABLE
    if s == "inf":
        return INFINITE
    if not isinstance(s, (str, int)) or isinstance(s, bool):
        raise ParseError(f"rationals must be strings, got {s!r}")
    try:
        return to_rational(s)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ParseError(f"bad rational {s!r}: {exc}") from None


def instance_to_dict(inst) -> dict:
    if isinstance(inst, BinPackInstance):
        return {"kind": "binpack", "items": [enc(a) for a in inst.items], "alpha": enc(inst.alpha)}
    d = {"kind": "sched", "model": inst.model, "m": inst.m}
    if inst.model == "unrelated":
        d["times"] = [[enc(t) for t in row] for row in inst.times]
    else:
        d["sizes"] = [enc(p) for p in inst.sizes]
        d["speeds"] = [enc(s) for s in inst.speeds]
    return d


def instance_from_dict(d: dict):
    try:
        kind = d["kind"]
        if kind == "binpack":
            return BinPackInstance(tuple(dec(a) for a in d["items"]), dec(d.get("alpha", "1")))
        if kind != "sched":
            raise ParseError(f"unknown instance kind {kind!r}")
        model = d["model"]
        if model == "unrelated":
            return SchedInstance.unrelated([[dec(t) for t in row] for row in d["times"]])
        sizes = [dec(p) for p in d["sizes"]]
        if model == "identical":
            return SchedInstance.identical(sizes, int(d["m"]))
        if model == "related":
            return SchedInstance.related(sizes, [dec(s) for s in d["speeds"]])
        raise ParseError(f"unknown model {model!r}")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed instance: {exc!r}") from None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def instance_hash(inst) -> str:
    return hashlib.sha256(canonical_json(instance_to_dict(inst)).encode()).hexdigest()


@dataclass
class InstanceFile:
    instance: object
    assignments: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "instance": instance_to_dict(self.instance),
            "hash": instance_hash(self.instance),
            "assignments": {
                name: {"target": list(a.target), "resources": a.resource_count}
                for name, a in self.assignments.items()
            },
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> InstanceFile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not JSON: {exc}") from None
    if not isinstance(d, dict) or d.get("format") != FORMAT:
        raise ParseError("not an instance file")
    if d.get("version") != VERSION:
        raise ParseError(f"unsupported version {d.get('version')!r}")
    inst = instance_from_dict(d.get("instance", {}))
    named = {}
    try:
        for name, a in d.get("assignments", {}).items():
            named[name] = Assignment(tuple(int(x) for x in a["target"]), int(a["resources"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed assignment: {exc!r}") from None
    return InstanceFile(inst, named, d.get("meta", {}))


def read_file(path: str) -> InstanceFile:
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------- reports


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction) or is_infinite(v):
        return enc(v)
    if isinstance(v, Assignment):
        return " ".join(map(str, v.target))
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, Fraction) or is_infinite(v):
        return enc(v)
    if isinstance(v, Assignment):
        return {"target": list(v.target), "resources": v.resource_count}
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


def render(rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_jsonable(r) for r in rows], sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in keys})
    return buf.getvalue()


def emit(args, rows):
    text = render(rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _budget(args) -> oracles.EnumerationBudget:
    return oracles.EnumerationBudget(args.budget_profiles, args.budget_coalition)


def _named(f: InstanceFile, name: str) -> Assignment:
    if name not in f.assignments:
        raise ParseError(f"no assignment named {name!r} (have {sorted(f.assignments)})")
    return f.assignments[name]


# ---------------------------------------------------------------- commands

CHECKS = ("ne", "sne", "wpo", "spo")


def run_checks(inst, a, concepts, budget) -> list:
    rows = []
    for c in concepts:
        if c == "ne":
            r = is_nash(inst, a)
            rows.append({"concept": c, "holds": r.is_ne, "witness": _move_text(r.witness_move)})
        elif c == "sne":
            r = is_strong_nash(inst, a, max_nodes=budget.max_coalition_nodes)
            w = r.witness_coalition
            rows.append({"concept": c, "holds": r.is_sne, "method": r.method,
                         "witness": "" if w is None else f"agents {list(w.agents)} -> {list(w.deviation.target)}"})
        elif c == "wpo":
            r = is_weak_pareto(inst, a, budget.max_profiles)
            rows.append({"concept": c, "holds": r.is_wpo, "method": r.method, "witness": _cell(r.witness_profile)})
        elif c == "spo":
            r = is_strict_pareto(inst, a, budget.max_profiles)
            rows.append({"concept": c, "holds": r.is_spo, "method": r.method, "witness": _cell(r.witness_profile)})
        else:
            raise ParseError(f"unknown concept {c!r}; choose from {CHECKS}")
    return rows


def _move_text(m):
    if m is None:
        return ""
    return f"agent {m.agent}: {m.source} -> {m.target} ({enc(m.old_cost)} -> {enc(m.new_cost)})"


def cmd_check(args):
    f = read_file(args.file)
    a = _named(f, args.assignment)
    rows = run_checks(f.instance, a, [c for c in args.concepts.split(",") if c], _budget(args))
    emit(args, rows)
    return EXIT_OK if all(r["holds"] for r in rows) else EXIT_FAIL


def _default_objective(inst):
    return "bins" if isinstance(inst, BinPackInstance) else "makespan"


def cmd_solve(args):
    f = read_file(args.file)
    kind = args.objective or _default_objective(f.instance)
    value, witness = oracles.opt_value(f.instance, kind, _budget(args))
    emit(args, [{"objective": kind, "value": value, "witness": witness}])
    return EXIT_OK


def _start(f: InstanceFile, name):
    if name:
        return _named(f, name)
    inst = f.instance
    if isinstance(inst, BinPackInstance):
        return Assignment(tuple(range(inst.n)), inst.n)
    return Assignment((0,) * inst.n, inst.m) if inst.model != "unrelated" else _first_available(inst)


def _first_available(inst):
    return Assignment(tuple(next(i for i in range(inst.m) if inst.time(k, i) is not UNAVAILABLE)
                            for k in range(inst.n)), inst.m)


def cmd_dynamics(args):
    f = read_file(args.file)
    a, trace = best_response_dynamics(f.instance, _start(f, args.start), MovePolicy(args.policy), args.max_steps)
    if isinstance(f.instance, BinPackInstance):
        a = a.compact()
    emit(args, [{"steps": len(trace), "result": a, "is_ne": is_nash(f.instance, a).is_ne}])
    return EXIT_OK


def cmd_subset_sum(args):
    f = read_file(args.file)
    p, trace = binpack.subset_sum_pack(f.instance, args.tie)
    emit(args, [{"tie": args.tie, "bins": p.resource_count, "packing": p, "sums": list(trace.chosen_sums)}])
    return EXIT_OK


def cmd_lpt(args):
    f = read_file(args.file)
    a = scheduling.lpt_schedule(f.instance)
    emit(args, [{"schedule": a, "loads": list(load_vector(f.instance, a).loads),
                 "makespan": objective(f.instance, a, "makespan"), "cover": objective(f.instance, a, "cover")}])
    return EXIT_OK


# ---------------------------------------------------------------- generators


def _ints(text):
    return [int(x) for x in str(text).split(",") if x != ""]


def _p(params, key, default=None, conv=None):
    if key not in params:
        if default is None:
            raise ParseError(f"missing parameter {key}")
        return default
    v = params[key]
    return conv(v) if conv else v


def _gen_binpack_poa(params, rng):
    p = binpack.ConstructionParams(int(_p(params, "s", 3)), int(_p(params, "t", 1)), int(_p(params, "r_last", 100)))
    c = binpack.gen_poa_lower(p)
    return c.instance, {"ne": c.ne, "opt_hint": c.opt_hint}, ["ne"], "bins"


def _gen_cv(params, rng):
    k = int(_p(params, "k", 2))
    w = scheduling.gen_cv_related(scheduling.CvConstructionParams(k, int(_p(params, "n_k", 1))))
    return w.instance, {"ne": w.schedule, "opt_hint": w.opt_hint}, ["ne", "spo"] if k == 2 else ["ne"], "makespan"


def _gen_wpo(params, rng):
    m = int(_p(params, "m", 2))
    w = scheduling.gen_wpo_unrelated(m, dec(_p(params, "eps", "1/10")))
    return w.instance, {"ne": w.schedule, "opt_hint": w.opt_hint}, ["ne", "wpo"] if m <= 4 else ["ne"], "makespan"


def _gen_spo(params, rng):
    m = int(_p(params, "m", 2))
    w = scheduling.gen_spo_unrelated(m, dec(_p(params, "eps", "1/100")))
    return w.instance, {"ne": w.schedule, "opt_hint": w.opt_hint}, ["ne", "spo"] if m <= 4 else ["ne"], "makespan"


def _gen_reduction(params, rng):
    kind = _p(params, "kind")
    data = {"a": _ints(_p(params, "a"))}
    if "B" in params:
        data["B"] = int(params["B"])
    r = scheduling.gen_recognition_fixture(kind, data)
    return r.instance, {"ne": r.schedule}, ["ne"], "makespan", {"expected_pareto": r.expected}


def _gen_cover_identical(params, rng):
    if "harmonic" in params:
        c = covering.gen_cover_lower_identical(harmonic=int(params["harmonic"]))
    else:
        c = covering.gen_cover_lower_identical(int(_p(params, "m", 2)), int(params["T"]) if "T" in params else None)
    return c.instance, {"ne": c.ne, "opt_hint": c.opt_hint}, ["ne"], "cover"


def _gen_cover_related(params, rng):
    kind = _p(params, "kind")
    s = dec(params["s"]) if "s" in params else None
    eps = dec(params["eps"]) if "eps" in params else None
    c = covering.gen_cover_related(kind, s, eps, int(_p(params, "m", 2)))
    extra = {}
    if kind == "two_poa":
        extra["reference"] = enc(covering.poa_two_related_formula(s))
    return c.instance, {"ne": c.ne, "opt_hint": c.opt_hint}, ["ne"], "cover", extra


def _gen_partition_sne(params, rng):
    inst = binpack.gen_partition_sne_fixture(_ints(_p(params, "a")))
    p, _ = binpack.subset_sum_pack(inst)
    return inst, {"ss": p}, ["ne", "sne"], "bins"


def _gen_random_binpack(params, rng):
    n = int(_p(params, "n", 8))
    den = int(_p(params, "den", 60))
    inst = BinPackInstance(tuple(Fraction(rng.randint(1, den), den) for _ in range(n)))
    p, _ = binpack.subset_sum_pack(inst)
    return inst, {"ss": p}, ["ne", "sne"], "bins"


def _gen_random_sched(params, rng):
    model = _p(params, "model", "identical")
    n, m = int(_p(params, "n", 6)), int(_p(params, "m", 3))
    top = int(_p(params, "max_size", 10))
    if model == "unrelated":
        inst = SchedInstance.unrelated([[rng.randint(1, top) for _ in range(m)] for _ in range(n)])
        return inst, {}, [], "makespan"
    sizes = [rng.randint(1, top) for _ in range(n)]
    if model == "identical":
        inst = SchedInstance.identical(sizes, m)
    else:
        speeds = [Fraction(1)] + sorted(Fraction(rng.randint(2, 8), 2) for _ in range(m - 1))
        inst = SchedInstance.related(sizes, speeds)
    return inst, {"lpt": scheduling.lpt_schedule(inst)}, ["ne"], "makespan"


FAMILIES = {
    "binpack-poa-lower": _gen_binpack_poa,
    "cv-related": _gen_cv,
    "wpo-unrelated": _gen_wpo,
    "spo-unrelated": _gen_spo,
    "reduction": _gen_reduction,
    "cover-identical": _gen_cover_identical,
    "cover-related": _gen_cover_related,
    "partition-sne": _gen_partition_sne,
    "random-binpack": _gen_random_binpack,
    "random-sched": _gen_random_sched,
}


def _ratio_of(inst, named, kind):
    if "ne" not in named or "opt_hint" not in named:
        return None
    return oracles.ratio(kind, objective(inst, named["ne"], kind), objective(inst, named["opt_hint"], kind))


def generate(family: str, params: dict, seed: int = 0) -> InstanceFile:
    if family not in FAMILIES:
        raise ParseError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    rng = random.Random(seed)
    out = FAMILIES[family](params, rng)
    inst, named, verified, kind = out[:4]
    meta = {"generator": family, "params": {k: str(v) for k, v in sorted(params.items())}, "verified": verified,
            "objective": kind}
    if family.startswith("random"):
        meta["seed"] = seed
    r = _ratio_of(inst, named, kind)
    if r is not None:
        meta["ratio"] = enc(r)
    if len(out) > 4:
        meta.update(out[4])
    return InstanceFile(inst, named, meta)


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ParseError(f"parameters look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k] = v
    return params


def cmd_generate(args):
    f = generate(args.family, _parse_params(args.param), args.seed)
    text = f.dumps()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- measurement


def measure_row(f: InstanceFile, kind, concept, which, budget) -> dict:
    inst = f.instance
    row = {"hash": instance_hash(inst), "generator": f.meta.get("generator", ""),
           "params": canonical_json(f.meta.get("params", {})), "concept": concept, "objective": kind,
           "which": which, "reference": f.meta.get("reference")}
    try:
        opt = oracles.opt_value(inst, kind, budget)[0]
        eqs = oracles.enumerate_equilibria(inst, concept, budget)
    except SearchBudgetExceeded:
        row.update(verdict="unknown")
        return row
    scored = [(oracles.ratio(kind, objective(inst, a, kind), opt), objective(inst, a, kind)) for a in eqs]
    pick = max(scored, key=lambda x: x[0]) if which == "worst" else min(scored, key=lambda x: x[0])
    row.update(equilibrium_value=pick[1], oracle_value=opt, ratio=pick[0], count=len(eqs), verdict="exact")
    return row


def cmd_measure(args):
    f = read_file(args.file)
    kind = args.objective or f.meta.get("objective") or _default_objective(f.instance)
    row = measure_row(f, kind, args.concept, args.which, _budget(args))
    emit(args, [row])
    return EXIT_BUDGET if row["verdict"] == "unknown" else EXIT_OK


def bounds_rows(t_min=1, t_max=10, s_grid=None) -> list:
    rows = []
    for t in range(t_min, t_max + 1):
        b = binpack.bound_formulas(t)
        rows.append({"t": t, "ffd_ratio": _fmt6(b.ffd_ratio), "spoa": _fmt6(b.spoa),
                     "poa_lower": _fmt6(b.poa_lower), "poa_upper": _fmt6(b.poa_upper),
                     "ff_ratio": _fmt6(b.ff_ratio)})
    for s in s_grid or []:
        rows.append({"s": enc(s), "cover_poa_two_machines": enc(covering.poa_two_related_formula(s)),
                     "approx": _fmt6(covering.poa_two_related_formula(s))})
    return rows


def _fmt6(x):
    # six decimals, rounded half up from the exact value
    if x is None:
        return ""
    q = math.floor(Fraction(x) * 10**6 + Fraction(1, 2))
    return f"{q // 10**6}.{q % 10**6:06d}"


def cmd_bounds(args):
    grid = [dec(x) for x in args.s_grid.split(",")] if args.s_grid else None
    emit(args, bounds_rows(args.t_min, args.t_max, grid))
    return EXIT_OK


def cmd_enumerate(args):
    f = read_file(args.file)
    found = oracles.enumerate_equilibria(f.instance, args.kind, _budget(args))
    emit(args, [{"index": i, "assignment": a} for i, a in enumerate(found)])
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget-profiles", type=int, default=oracles.DEFAULT_BUDGET.max_profiles)
    common.add_argument("--budget-coalition", type=int, default=oracles.DEFAULT_BUDGET.max_coalition_nodes)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for random families")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None)

    parser = argparse.ArgumentParser(prog="selfishgames", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check equilibrium concepts of a named assignment")
    p.add_argument("file")
    p.add_argument("--assignment", default="ne")
    p.add_argument("--concepts", default="ne")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", parents=[common], help="optimal social value with a witness")
    p.add_argument("file")
    p.add_argument("--objective", choices=("bins", "makespan", "cover", "envy"))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("dynamics", parents=[common], help="best-response dynamics")
    p.add_argument("file")
    p.add_argument("--start", default=None)
    p.add_argument("--policy", choices=("lowest", "largest_gain"), default="lowest")
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("subset-sum", parents=[common], help="Subset Sum packing")
    p.add_argument("file")
    p.add_argument("--tie", choices=binpack.TIE_POLICIES, default="lex")
    p.set_defaults(func=cmd_subset_sum)

    p = sub.add_parser("lpt", parents=[common], help="LPT schedule")
    p.add_argument("file")
    p.set_defaults(func=cmd_lpt)

    p = sub.add_parser("generate", parents=[common], help="write a generated instance file")
    p.add_argument("family", choices=sorted(FAMILIES))
    p.add_argument("--param", "-p", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("measure", parents=[common], help="empirical anarchy or stability ratio")
    p.add_argument("file")
    p.add_argument("--objective", choices=("bins", "makespan", "cover", "envy"))
    p.add_argument("--concept", choices=oracles.CONCEPTS, default="ne")
    p.add_argument("--which", choices=("worst", "best"), default="worst")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("bounds", parents=[common], help="bound formula table")
    p.add_argument("--t-min", type=int, default=1)
    p.add_argument("--t-max", type=int, default=10)
    p.add_argument("--s-grid", default=None, help="comma separated speeds in (1, 2)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("enumerate", parents=[common], help="list all equilibria of a kind")
    p.add_argument("file")
    p.add_argument("--kind", choices=oracles.CONCEPTS, default="ne")
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SearchBudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (GameError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
