import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from arrival import _kernels
from arrival.corpus import random_instance, random_simple_rs, rng_for
from arrival.errors import ContractError
from arrival.gadgets import gen_double_exp
from arrival.model import NodeKind, Outcome, run_play
from arrival.normalize import prune_dead_edges, to_simple_form
from arrival.simulate import estimate_value, instance_tables, traversal_stats
from arrival.solve import solve

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not available")

CODE = {Outcome.REACHED_TARGET: _kernels.TARGET, Outcome.REACHED_DEAD: _kernels.DEAD,
        Outcome.TRUNCATED: _kernels.TRUNCATED}


@pytest.mark.parametrize("seed", range(8))
def test_numpy_kernel_matches_run_play(seed):
    inst = random_instance(rng_for(seed), kinds=(NodeKind.RANDOM, NodeKind.SWITCH))
    t = instance_tables(inst)
    out, steps, _, _ = _kernels.run_batch(t, 42, 0, 200, 500, use_numba=False)
    for r in range(200):
        tr = run_play(inst, seed=42, step_limit=500, run_index=r)
        assert out[r] == CODE[tr.outcome]
        assert steps[r] == tr.steps


@needs_numba
@pytest.mark.parametrize("seed", range(8))
def test_backends_agree(seed):
    inst = random_simple_rs(rng_for(seed))
    t = instance_tables(inst)
    a = _kernels.run_batch(t, 9, 17, 3000, 400, count_edges=True, use_numba=True)
    b = _kernels.run_batch(t, 9, 17, 3000, 400, count_edges=True, use_numba=False)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_estimate_is_close_and_reproducible():
    inst = gen_double_exp(2)
    r1 = estimate_value(inst, samples=40_000, seed=1)
    r2 = estimate_value(inst, samples=40_000, seed=1)
    assert r1.to_json() == r2.to_json()
    p = 1 / 8
    sigma = (p * (1 - p) / 40_000) ** 0.5
    assert abs(float(r1.reach_frequency) - p) < 5 * sigma
    assert r1.truncated == 0


def test_strategy_on_expanded_states():
    from arrival.model import InstanceBuilder

    b = InstanceBuilder()
    x = b.add_node("x", NodeKind.MAX)
    r = b.add_node("r", NodeKind.RANDOM)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.add_edge(x, d)
    b.add_edge(x, r)
    b.add_edge(r, t, Fraction(3, 4))
    b.add_edge(r, d, Fraction(1, 4))
    b.start = x
    inst = b.build()
    rep = solve(inst)
    est = estimate_value(inst, rep.strategies["max"], samples=20_000, seed=3)
    assert abs(float(est.reach_frequency) - 0.75) < 0.02
    # default positional choice takes the first edge, straight to d
    assert estimate_value(inst, samples=100).reached == 0


def test_traversal_bound_on_simple_form():
    inst = prune_dead_edges(to_simple_form(gen_double_exp(2)))
    rep = traversal_stats(inst, samples=20_000, seed=0)
    assert rep.truncated == 0
    assert not rep.flagged
    assert rep.desperation


def test_traversal_rejects_players():
    with pytest.raises(ContractError):
        traversal_stats(random_instance(rng_for(2), kinds=(NodeKind.MAX,)), samples=10)


def test_bad_sample_count():
    with pytest.raises(ContractError):
        estimate_value(gen_double_exp(1), samples=0)


def test_env_flag_selects_numpy():
    env = dict(os.environ, ARRIVAL_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from arrival import _kernels; print(_kernels.backend())"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.mark.slow
def test_estimates_track_exact_values():
    from arrival.solve import value

    hits = total = 0
    for seed in range(60):
        inst = random_simple_rs(rng_for(300 + seed))
        v = float(value(inst))
        rep = estimate_value(inst, samples=20_000, seed=seed)
        tol = 4 * (v * (1 - v) / rep.samples) ** 0.5
        total += 1
        hits += abs(float(rep.reach_frequency) - v) <= tol
    assert hits >= 0.99 * total


def test_desperation_zero_edges_are_used_at_most_once():
    inst = prune_dead_edges(to_simple_form(gen_double_exp(2)))
    rep = traversal_stats(inst, samples=5_000, seed=2)
    for e, k in rep.desperation.items():
        if k == 0:
            assert rep.edge_mean[e] <= 1
