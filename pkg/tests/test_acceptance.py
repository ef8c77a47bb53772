"""Acceptance criteria 1-11.

Each test prints one PASS/FAIL line (visible without -s) and then asserts
the same condition.  Run directly with ``python tests/test_acceptance.py``.
"""

import sys
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from arrival.corpus import random_cnf, random_instance, random_simple_rs, rng_for
from arrival.expand import modified_matrix
from arrival.gadgets import (
    double_exp_value, gen_double_exp, gen_majsat_rs, gen_ssat_rs1, gen_ssat_rs2, majsat_closed_form,
)
from arrival.model import NodeKind
from arrival.normalize import epsilon, geq_to_strict, prune_dead_edges, swap_target_dead, to_simple_form
from arrival.reductions import player_to_random, random_to_player
from arrival.simulate import traversal_stats
from arrival.solve import denominator_within, solve, solve_chain, value_denominator_bound

from oracles import kleene_iteration, sat_fraction, ssat_value

HALF = Fraction(1, 2)


@pytest.fixture
def say(capsys):
    def _say(num, ok, text):
        with capsys.disabled():
            print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {text}")
    return _say


# -- shared corpora (seeded, built once) -------------------------------------

@lru_cache(maxsize=None)
def _solved(inst):
    return solve(inst).value


@lru_cache(maxsize=None)
def ssat_suite():
    rng = rng_for(2024)
    out = []
    for i in range(60):
        n = 2 if i % 2 else 4
        phi = random_cnf(rng, n, rng.randint(1, 3), width=3)
        out.append(phi)
    return tuple(out)


@lru_cache(maxsize=None)
def majsat_suite():
    rng = rng_for(77)
    return tuple(random_cnf(rng, rng.randint(1, 4), rng.randint(1, 4)) for _ in range(60))


@lru_cache(maxsize=None)
def simple_rs_suite():
    out = []
    seed = 0
    while len(out) < 100:
        rng = rng_for(5000 + seed)
        seed += 1
        inst = random_simple_rs(rng, n_internal=rng.randint(1, 6), max_switches=4)
        out.append(inst)
    return tuple(out)


def _with_kind(kinds, need, count, base):
    out = []
    seed = 0
    while len(out) < count:
        rng = rng_for(base + seed)
        seed += 1
        inst = random_instance(rng, n_internal=rng.randint(1, 5), kinds=kinds, max_switches=2)
        if need in inst.kind_set:
            out.append(inst)
    return tuple(out)


@lru_cache(maxsize=None)
def rand_suite():
    return _with_kind((NodeKind.RANDOM, NodeKind.SWITCH), NodeKind.RANDOM, 100, 10_000)


@lru_cache(maxsize=None)
def max_suite():
    return _with_kind((NodeKind.MAX, NodeKind.SWITCH, NodeKind.RANDOM), NodeKind.MAX, 100, 20_000)


@lru_cache(maxsize=None)
def geq_suite():
    rs = _with_kind((NodeKind.RANDOM, NodeKind.SWITCH), NodeKind.RANDOM, 10, 30_000)
    games = _with_kind((NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX, NodeKind.MIN), NodeKind.MIN, 10, 40_000)
    return rs + games


# -- criteria ----------------------------------------------------------------

def test_c01_double_exp_values(say):
    rows, ok = [], True
    for n in (1, 2, 3, 4):
        t = time.perf_counter()
        v = solve(gen_double_exp(n)).value
        dt = time.perf_counter() - t
        good = v == Fraction(1, 2 ** (2 ** n - 1)) == double_exp_value(n) and dt < 5
        ok &= good
        rows.append(f"n={n}:{v} ({dt:.2f}s)")
    say(1, ok, "double-exp exact values " + ", ".join(rows))
    assert ok


def test_c02_ssat_gadget_equivalence(say):
    t = time.perf_counter()
    bad, nontrivial = [], 0
    for phi in ssat_suite():
        inst, _ = gen_ssat_rs1(phi)
        want = ssat_value(phi.num_vars, phi.clauses)
        got = _solved(inst)
        nontrivial += 0 < want < 1
        if got != want:
            bad.append((phi.clauses, got, want))
    dt = time.perf_counter() - t
    ok = not bad and len(ssat_suite()) >= 50 and dt < 600
    say(2, ok, f"{len(ssat_suite())} formulas (n in {{2,4}}, m<=3), {len(bad)} mismatches, "
               f"{nontrivial} with value strictly inside (0,1), {dt:.1f}s")
    assert ok, bad[:3]


def test_c03_ssat_sizes(say):
    bad = []
    for phi in ssat_suite():
        _, st = gen_ssat_rs1(phi)
        n, m, D = st.n, st.m, st.D
        if st.num_vertices != 6 + 8 * n + 2 * m or st.order_total != 5 + 8 * n + 4 * m + 3 * D * n:
            bad.append((phi.clauses, st.num_vertices, st.order_total))
    ok = not bad
    say(3, ok, f"|V| = 6+8n+2m and order total = 5+8n+4m+3Dn on {len(ssat_suite())} instances, {len(bad)} violations")
    assert ok, bad[:3]


def test_c04_majsat_threshold(say):
    bad_thr, bad_form, above = [], [], 0
    for phi in majsat_suite():
        inst, _ = gen_majsat_rs(phi)
        v = _solved(inst)
        p = sat_fraction(phi.num_vars, phi.clauses)
        above += p > HALF
        if (v > HALF) != (p > HALF):
            bad_thr.append(phi.clauses)
        if v != majsat_closed_form(phi, p):
            bad_form.append(phi.clauses)
    ok = not bad_thr and not bad_form and len(majsat_suite()) >= 50
    say(4, ok, f"{len(majsat_suite())} CNFs ({above} with p>1/2): threshold mismatches {len(bad_thr)}, "
               f"closed form 1/2+(p-1/2)2^(-nD) mismatches {len(bad_form)}")
    assert ok


def test_c05_dualization(say):
    bad = []
    for phi in ssat_suite():
        inst, _ = gen_ssat_rs1(phi)
        if _solved(gen_ssat_rs2(phi)) != 1 - _solved(inst):
            bad.append(phi.clauses)
    ok = not bad
    say(5, ok, f"val(rs2) = 1 - val(rs1) on {len(ssat_suite())} formulas, {len(bad)} mismatches")
    assert ok


def test_c06_swap_identity(say):
    bad = []
    for inst in simple_rs_suite():
        assert inst.n <= 8 and len(inst.switch_nodes) <= 4
        if _solved(swap_target_dead(inst)) != 1 - _solved(inst):
            bad.append(inst)
    mid = sum(0 < _solved(i) < 1 for i in simple_rs_suite())
    ok = not bad
    say(6, ok, f"swap identity on {len(simple_rs_suite())} simple-form instances ({mid} with 0<v<1), "
               f"{len(bad)} failures")
    assert ok


def test_c07_reductions(say):
    bad1 = [i for i in rand_suite() if (_solved(i) > 0) != (_solved(random_to_player(i)) == 1)]
    bad2 = [i for i in max_suite() if (_solved(i) > 0) != (_solved(player_to_random(i)) > 0)]
    pos1 = sum(_solved(i) > 0 for i in rand_suite())
    pos2 = sum(_solved(i) > 0 for i in max_suite())
    ok = not bad1 and not bad2
    say(7, ok, f"random->player on {len(rand_suite())} ({pos1} positive): {len(bad1)} failures; "
               f"player->random on {len(max_suite())} ({pos2} positive): {len(bad2)} failures")
    assert ok


def _reaches_deficit(sys):
    """Every retained row leads to a row with sum < 1: (I - P) is nonsingular."""
    deficit = {i for i in range(sys.star) if sys.row_sum(i) - sys.rows[i].get(sys.star, 0) < 1}
    back = {i: [] for i in range(sys.star)}
    for i in range(sys.star):
        for j in sys.rows[i]:
            if j != sys.star:
                back[j].append(i)
    seen, stack = set(deficit), list(deficit)
    while stack:
        for i in back[stack.pop()]:
            if i not in seen:
                seen.add(i)
                stack.append(i)
    return bool(deficit), len(seen) == sys.star


def matrix_corpus():
    out = list(simple_rs_suite())
    out += [gen_double_exp(n) for n in (1, 2, 3)]
    out += [gen_majsat_rs(phi)[0] for phi in majsat_suite()[:15]]
    return out


def test_c08_matrix_properties(say):
    stats = {"systems": 0, "stable": 0, "rounded": 0}
    bad = []
    for inst in matrix_corpus():
        sys = modified_matrix(inst)
        stats["systems"] += 1
        if sys.start is None:
            # start cannot reach the target: empty system, value 0
            ref, _, how = kleene_iteration(inst)
            stats[how] += 1
            if ref != 0 or _solved(inst) != 0:
                bad.append(inst)
            continue
        sub = all(sys.row_sum(i) - sys.rows[i].get(sys.star, 0) <= 1 for i in range(sys.star))
        some_deficit, nonsingular = _reaches_deficit(sys)
        h = solve_chain(sys)
        subst = all(
            sum((p * (1 if j == sys.star else h[j]) for j, p in sys.rows[i].items()), Fraction(0)) == h[i]
            for i in range(sys.star)
        )
        ref, _, how = kleene_iteration(inst)
        stats[how] += 1
        if not (sub and some_deficit and nonsingular and subst and h[sys.start] == ref):
            bad.append(inst)
    ok = not bad and stats["systems"] == len(matrix_corpus())
    say(8, ok, f"{stats['systems']} systems: substochastic, deficient row, nonsingular, h=Ph+b, "
               f"h(start)=fixpoint ({stats['stable']} stabilized, {stats['rounded']} by exact rounding); "
               f"{len(bad)} failures")
    assert ok


def traversal_corpus():
    out = [prune_dead_edges(i) for i in simple_rs_suite()]
    out += [prune_dead_edges(to_simple_form(gen_double_exp(n))) for n in (1, 2, 3)]
    out += [prune_dead_edges(to_simple_form(gen_majsat_rs(phi)[0])) for phi in majsat_suite()[:5]]
    return out


@pytest.mark.slow
def test_c09_expectation_bound(say):
    edges = flagged = 0
    worst_trunc = 0.0
    worst_ratio = 0.0
    for k, inst in enumerate(traversal_corpus()):
        rep = traversal_stats(inst, samples=100_000, seed=k)
        edges += len(rep.desperation)
        flagged += len(rep.flagged)
        worst_trunc = max(worst_trunc, rep.truncation_fraction)
        for e in rep.desperation:
            worst_ratio = max(worst_ratio, rep.edge_mean[e] / rep.bound(e))
    ok = flagged == 0 and worst_trunc < 1e-3
    say(9, ok, f"{len(traversal_corpus())} instances, {edges} hopeful edges, {flagged} above 2^(k+1)-1 + 5 sigma "
               f"(max mean/bound {worst_ratio:.3f}); max truncation fraction {worst_trunc:.1e}")
    assert ok


def test_c10_denominator_bound(say):
    corpus = list(simple_rs_suite()) + list(rand_suite()) + list(max_suite()) + list(geq_suite())
    corpus += [gen_ssat_rs1(phi)[0] for phi in ssat_suite()]
    corpus += [gen_majsat_rs(phi)[0] for phi in majsat_suite()]
    corpus += [gen_double_exp(n) for n in (1, 2, 3, 4)]
    bad = [i for i in corpus if not denominator_within(_solved(i), value_denominator_bound(i))]
    ok = not bad
    say(10, ok, f"reduced denominator <= 4^k on {len(corpus)} instances, {len(bad)} violations")
    assert ok


def test_c11_geq_to_strict(say):
    bad = []
    for inst in geq_suite():
        v = _solved(inst)
        for l in (1, 2):
            if _solved(geq_to_strict(inst, l)) != v + epsilon(l) * (1 - v):
                bad.append((inst, l))
    ok = not bad and len(geq_suite()) == 20
    say(11, ok, f"value v + 2^-(2^l-1)(1-v) for l in {{1,2}} on {len(geq_suite())} instances, {len(bad)} failures")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
