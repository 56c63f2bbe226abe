"""Command-line interface for replayable experiments and checks.

Exit code is 0 iff every assertion configured for the subcommand holds.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from . import module_sketch as ms
from . import promise as pm
from . import reduction as rd
from . import streams as st
from . import triangles as tri
from .harness import run_experiment, wilson_interval
from .toy_algs import TOY_ALGS, make_toy_alg


def _emit(report, args) -> None:
    if args.out:
        report.write(args.out, args.format)
    else:
        text = report.to_json() if args.format == "json" else report.to_csv()
        print(text)


def _cmd_promise_run(args) -> int:
    config = {
        "experiment": "promise",
        "seed": args.seed,
        "trials": args.trials,
        "n": args.n,
        "variant": args.variant,
        "schedule": args.schedule,
        "churn": args.churn,
        "last_player": args.last_player,
        "copies": args.copies,
    }
    if args.variant == "pm":
        config["M"] = args.M
    report = run_experiment(config)
    _emit(report, args)
    return 0 if report.aggregate.get("wrong", 0) == 0 else 1


def _cmd_triangle_count(args) -> int:
    config = {
        "experiment": "triangle",
        "seed": args.seed,
        "trials": args.trials,
        "mode": args.mode,
        "n": args.n,
        "d": args.d,
        "T": args.T,
        "t_floor": args.t_floor if args.t_floor else args.T,
        "eps": args.eps,
        "churn": args.churn,
        "p": args.p,
    }
    if args.L:
        config["L"] = args.L
    report = run_experiment(config)
    _emit(report, args)
    return 0 if report.aggregate.get("cap_respected", True) else 1


def _cmd_compile_sketch(args) -> int:
    alg = make_toy_alg(args.alg, args.n, args.k)
    if args.s is not None:
        alg.state_bits = args.s
    compiler = rd.compile_total if args.mode == "total" else rd.compile_general
    trace = compiler(alg, small_space=args.small_space)
    params = trace.params

    product = 1
    for ai in params.a:
        product *= ai
    checks = {
        "product_within_budget": product <= 2 ** alg.state_bits,
        "nontrivial_within_budget": params.nontrivial_count <= alg.state_bits,
    }
    if args.mode == "total" and hasattr(alg, "brute"):
        ok = True
        for x in _grid(args.n, args.grid):
            sketch = ms.canonicalize(params, x)
            if rd.recover_total(trace, alg, sketch) != alg.brute(x):
                ok = False
                break
        checks["grid_recovery_exact"] = ok
    if args.mode == "general":
        ok = True
        for i in range(1, params.n + 1):
            prefix = trace.prefix_stream(i)
            looped = st.concat(prefix, trace.loop_stream(i))
            s1, _ = rd.run_on_stream(alg, prefix)
            s2, _ = rd.run_on_stream(alg, looped)
            if s1 != s2 or st.freq(trace.loop_stream(i)) != trace.quotient_vector(i):
                ok = False
        checks["loop_property"] = ok

    payload = {
        "alg": args.alg,
        "mode": args.mode,
        "params": json.loads(ms.params_to_json(params)),
        "state_bits": alg.state_bits,
        "sketch_state_bits": ms.state_bits(params),
        "transitions_fed": trace.transitions_fed,
        "checks": checks,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0 if all(checks.values()) else 1


def _grid(n: int, width: int):
    grid = [st.FrequencyVector(n, {})]
    coords = list(range(1, n + 1))

    def extend(vecs, coord):
        out = []
        for vec in vecs:
            for v in range(width + 1):
                entries = {i: vec[i] for i in coords if vec[i]}
                if v:
                    entries[coord] = v
                out.append(st.FrequencyVector(n, entries))
        return out

    for c in coords:
        grid = extend(grid, c)
    return grid


def _cmd_module_check(args) -> int:
    rng = random.Random(args.seed)
    failures = 0
    param_sets = []
    if args.params_file:
        with open(args.params_file) as fh:
            param_sets.append(ms.params_from_json(fh.read()))
    else:
        param_sets = [ms.random_params(rng) for _ in range(args.sets)]
    per_set = max(1, args.cases // max(1, len(param_sets)))
    for params in param_sets:
        for _ in range(per_set):
            x = st.FrequencyVector(params.n, {
                i: rng.randint(-50, 50) for i in range(1, params.n + 1)})
            y = st.FrequencyVector(params.n, {
                i: rng.randint(-50, 50) for i in range(1, params.n + 1)})
            z = st.FrequencyVector(params.n, {
                i: rng.randint(-50, 50) for i in range(1, params.n + 1)})
            px, py, pz = (ms.canonicalize(params, v) for v in (x, y, z))
            zero = ms.SketchVector.zero(params)
            ok = (
                ms.canonicalize(params, px) == px
                and ms.module_add(params, px, py) == ms.module_add(params, py, px)
                and ms.module_add(params, ms.module_add(params, px, py), pz)
                == ms.module_add(params, px, ms.module_add(params, py, pz))
                and ms.module_add(params, px, zero) == px
                and ms.module_add(params, px, ms.module_neg(params, px)) == zero
                and ms.canonicalize(params, x + y) == ms.module_add(params, px, py)
            )
            if not ok:
                failures += 1
    print(f"module-check: {failures} failures over {len(param_sets)} parameter sets")
    return 0 if failures == 0 else 1


def _cmd_stream_gen(args) -> int:
    rng = random.Random(args.seed)
    if args.kind == "graph":
        spec = tri.GraphStreamSpec(n=args.n, d=args.d, T=args.T,
                                   kind="degree" if args.mode == "maxdeg" else "length",
                                   churn=args.churn, L=args.L)
        gen = tri.generate_graph_stream(spec, rng)
        st.write_stream(args.out, gen.stream)
        print(f"wrote {gen.stream.length()} updates, {gen.T} triangles, m={gen.m}")
        return 0
    inst = pm.random_instance(args.n, rng.randint(0, 1), rng)
    enc = pm.encode_instance(inst, args.variant, args.M if args.variant == "pm" else None)
    schedule = pm.Schedule.insert_only() if args.schedule == "insert" else \
        pm.Schedule.random_churn(args.churn) if args.schedule == "churn" else \
        pm.Schedule.adversarial_last(args.last_player, args.churn)
    stream = pm.instance_stream(enc, schedule, rng)
    st.write_stream(args.out, stream)
    print(f"wrote {stream.length()} updates, tau={inst.tau}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turnstile-lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("promise-run", help="trial loop for the parity gadget")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--variant", choices=("binary", "pm"), default="binary")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--schedule", choices=("insert", "churn", "last-player"),
                   default="insert")
    p.add_argument("--churn", type=int, default=2)
    p.add_argument("--last-player", dest="last_player", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--copies", type=int, default=1)
    p.set_defaults(func=_cmd_promise_run)

    p = sub.add_parser("triangle-count", help="trial loop for triangle estimators")
    common(p)
    p.add_argument("--mode", choices=("maxdeg", "boundedl"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--t-floor", dest="t_floor", type=int, default=None)
    p.add_argument("--eps", default="1/2")
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--p", default="auto")
    p.add_argument("--churn", type=int, default=2)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=_cmd_triangle_count)

    p = sub.add_parser("compile-sketch", help="compile a toy algorithm to sketch params")
    common(p)
    p.add_argument("--alg", choices=sorted(TOY_ALGS), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--s", type=int, default=None,
                   help="override the declared state bits")
    p.add_argument("--mode", choices=("total", "general"), required=True)
    p.add_argument("--small-space", action="store_true")
    p.add_argument("--grid", type=int, default=6,
                   help="verification grid width per coordinate")
    p.set_defaults(func=_cmd_compile_sketch)

    p = sub.add_parser("module-check", help="algebra law suite on sketch params")
    common(p)
    p.add_argument("--params-file", default=None)
    p.add_argument("--sets", type=int, default=20)
    p.add_argument("--cases", type=int, default=2000)
    p.set_defaults(func=_cmd_module_check)

    p = sub.add_parser("stream-gen", help="write a replayable stream file")
    common(p)
    p.add_argument("--kind", choices=("graph", "promise"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--T", type=int, default=4)
    p.add_argument("--mode", choices=("maxdeg", "boundedl"), default="maxdeg")
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--variant", choices=("binary", "pm"), default="binary")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--schedule", choices=("insert", "churn", "last-player"),
                   default="insert")
    p.add_argument("--churn", type=int, default=2)
    p.add_argument("--last-player", dest="last_player", type=int, default=0)
    p.set_defaults(func=_cmd_stream_gen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "stream-gen" and not args.out:
        print("stream-gen requires --out", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
