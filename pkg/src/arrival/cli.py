"""Command line front end.

Every subcommand prints one JSON report on stdout (or writes it to --out).
Exit codes: 0 ok, 1 usage, 2 invalid input, 3 state budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import gadgets, normalize, reductions
from .analysis import hopeful_set
from .errors import ArrivalError, CapacityError
from .expand import DEFAULT_BUDGET, build_game_graph, full_state_count, modified_matrix
from .io import parse_dimacs, read_instance, serialize_instance
from .model import NodeKind, encoding_size
from .simulate import estimate_value, traversal_stats
from .solve import decide, solve, value_denominator_bound

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _frac(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _fmt(x):
    x = Fraction(x)
    return {"exact": f"{x.numerator}/{x.denominator}", "approx": float(x)}


def _emit(report, args, text=None):
    """Write the instance text (if any) and the JSON report."""
    if text is not None:
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
            report["out"] = args.out
        else:
            report["instance"] = text
    data = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out and text is None:
        with open(args.out, "w") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def instance_summary(inst):
    counts = {}
    for k in inst.kinds:
        counts[k.value] = counts.get(k.value, 0) + 1
    return {
        "vertices": inst.n,
        "edges": sum(len(s) for s in inst.succ),
        "order_total": inst.order_total(),
        "kinds": dict(sorted(counts.items())),
        "encoding_bits": encoding_size(inst),
        "start": inst.names[inst.start],
        "target": inst.names[inst.target],
        "dead": None if inst.dead is None else inst.names[inst.dead],
    }


# -- subcommands -------------------------------------------------------------

def cmd_analyze(args):
    inst = read_instance(args.instance)
    rep = hopeful_set(inst).to_json(inst)
    rep["start_hopeful"] = inst.start in hopeful_set(inst).hopeful
    _emit(rep, args)


def cmd_normalize(args):
    inst = read_instance(args.instance)
    mode = args.mode
    if mode == "simple":
        out = normalize.to_simple_form(inst)
    elif mode == "prune":
        out = normalize.prune_dead_edges(inst)
    elif mode == "swap":
        out = normalize.swap_target_dead(inst)
    elif mode == "prefix-target":
        out = normalize.prefix_coin(inst, normalize.TO_TARGET)
    elif mode == "prefix-dead":
        out = normalize.prefix_coin(inst, normalize.TO_DEAD)
    elif mode in ("geq", "geq-dead"):
        l = args.l if args.l is not None else normalize.default_depth(inst)
        out = normalize.geq_to_strict(inst, l, toward_dead=(mode == "geq-dead"))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(mode)
    rep = {"mode": mode, "input": instance_summary(inst), "output": instance_summary(out)}
    if mode.startswith("geq"):
        rep["l"] = l
    _emit(rep, args, serialize_instance(out))


def cmd_reduce(args):
    inst = read_instance(args.instance)
    fn = {
        "player": reductions.random_to_player,
        "random": reductions.player_to_random,
        "dual": reductions.dualize_players,
    }[args.to]
    out = fn(inst)
    rep = {"to": args.to, "input": instance_summary(inst), "output": instance_summary(out)}
    if args.to == "dual":
        rep["complement_identity"] = reductions.dual_identity_holds(inst, args.budget)
    _emit(rep, args, serialize_instance(out))


def cmd_expand(args):
    inst = read_instance(args.instance)
    g = build_game_graph(inst, args.budget)
    rep = {"full_states": full_state_count(inst) + 1, "reachable_states": g.size}
    if not inst.has_players:
        sys_ = modified_matrix(inst, args.budget)
        rep["retained_states"] = sys_.size
        rep["nonzeros"] = sum(len(r) for r in sys_.rows)
        rep["start_index"] = sys_.start
        if args.dump:
            with open(args.dump, "w") as fh:
                fh.write(sys_.dump_triplets())
            rep["dump"] = args.dump
    _emit(rep, args)


def cmd_solve(args):
    inst = read_instance(args.instance)
    r = solve(inst, args.budget, p=args.p)
    _emit(r.to_json(inst), args)


def cmd_decide(args):
    inst = read_instance(args.instance)
    if args.problem == "quant" and args.p is None:
        raise UsageError("decide: --problem quant needs --p")
    verdict = decide(inst, args.problem, args.p, args.budget)
    rep = {"problem": args.problem, "verdict": verdict}
    if args.p is not None:
        rep["p"] = _fmt(args.p)["exact"]
    _emit(rep, args)


def cmd_simulate(args):
    inst = read_instance(args.instance)
    if args.traversal:
        r = traversal_stats(inst, args.samples, args.seed, args.step_limit)
    else:
        r = estimate_value(inst, None, args.samples, args.seed, args.step_limit, args.budget)
    rep = r.to_json()
    rep.pop("backend", None)
    _emit(rep, args)


def cmd_generate(args):
    fam = args.family
    stats = None
    if fam == "double-exp":
        if args.n is None:
            raise UsageError("generate: double-exp needs --n")
        inst = gadgets.gen_double_exp(args.n)
        extra = {"expected_value": _fmt(gadgets.double_exp_value(args.n))["exact"]}
    else:
        if not args.dimacs:
            raise UsageError(f"generate: {fam} needs a DIMACS file")
        with open(args.dimacs) as fh:
            phi = parse_dimacs(fh.read())
        extra = {}
        if fam == "ssat-rs1":
            inst, stats = gadgets.gen_ssat_rs1(phi)
        elif fam == "ssat-rs2":
            inst = gadgets.gen_ssat_rs2(phi)
            _, stats = gadgets.gen_ssat_rs1(phi)
        else:
            inst, stats = gadgets.gen_majsat_rs(phi)
    rep = {"family": fam, "instance_summary": instance_summary(inst)}
    rep.update(extra)
    if stats is not None:
        rep["gadget_stats"] = stats.to_json()
    _emit(rep, args, serialize_instance(inst))


def cmd_stats(args):
    inst = read_instance(args.instance)
    rep = instance_summary(inst)
    rep["full_states"] = full_state_count(inst) + 1
    rep["denominator_bound_k"] = value_denominator_bound(inst)
    rep["switch_nodes"] = len(inst.switch_nodes)
    rep["players"] = sorted({k.value for k in inst.kinds if k in (NodeKind.MAX, NodeKind.MIN)})
    _emit(rep, args)


def build_parser():
    p = _Parser(prog="arrival", description="Exact analysis of stochastic Arrival games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help, instance=True):
        sp = sub.add_parser(name, help=help)
        if instance:
            sp.add_argument("instance", help="instance file")
        sp.add_argument("--out", help="write the instance (or report) here")
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="expanded state budget")
        sp.set_defaults(func=fn)
        return sp

    add("analyze", cmd_analyze, "hopeful vertices and desperation")
    sp = add("normalize", cmd_normalize, "value-preserving transformations")
    sp.add_argument("--mode", default="simple",
                    choices=["simple", "prune", "swap", "prefix-target", "prefix-dead", "geq", "geq-dead"])
    sp.add_argument("--l", type=int, help="depth of the epsilon gadget (geq modes)")
    sp = add("reduce", cmd_reduce, "variant reductions")
    sp.add_argument("--to", required=True, choices=["player", "random", "dual"])
    sp = add("expand", cmd_expand, "expanded game and pruned matrix")
    sp.add_argument("--dump", help="write the pruned matrix as row col a/b triplets")
    sp = add("solve", cmd_solve, "exact value and verdicts")
    sp.add_argument("--p", type=_frac, help="threshold for the quantitative verdict")
    sp = add("decide", cmd_decide, "qual0, qual1 or quant")
    sp.add_argument("--problem", required=True, choices=["qual0", "qual1", "quant"])
    sp.add_argument("--p", type=_frac)
    sp = add("simulate", cmd_simulate, "Monte-Carlo estimate")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--step-limit", type=int, default=None)
    sp.add_argument("--traversal", action="store_true", help="report edge traversal statistics")
    sp = add("generate", cmd_generate, "hardness gadget families", instance=False)
    sp.add_argument("--family", required=True, choices=["double-exp", "ssat-rs1", "ssat-rs2", "majsat-rs"])
    sp.add_argument("--n", type=int)
    sp.add_argument("dimacs", nargs="?", help="DIMACS CNF input for the SAT families")
    add("stats", cmd_stats, "instance size statistics")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as e:
        sys.stderr.write(str(e).rstrip() + "\n")
        return EXIT_USAGE
    except CapacityError as e:
        sys.stderr.write(f"capacity: {e}\n")
        return EXIT_CAPACITY
    except (ArrivalError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
