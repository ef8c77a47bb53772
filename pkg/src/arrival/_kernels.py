"""Sampling kernels.

Both back ends consume the same SplitMix64 stream as ``model.run_play`` and
return identical per-run outcomes, step counts and edge traversal counts.
The compiled path needs numba; set ARRIVAL_DISABLE_NUMBA=1 (or leave numba
uninstalled) to use the vectorised numpy path instead.
"""

from __future__ import annotations

import os

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
MASK = np.uint64(0xFFFFFFFFFFFFFFFF)

K_RANDOM, K_SWITCH, K_MAX, K_MIN, K_TARGET, K_DEAD = range(6)
TARGET, DEAD, TRUNCATED = 0, 1, 2

_disabled = os.environ.get("ARRIVAL_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by ARRIVAL_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised through the env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * M1
    z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _run_kernel(kind, succ_ptr, succ_idx, cum, den, rej, order_ptr, order_idx, order_edge,
                slot, choice, nslots, start, seed, first_run, runs, limit, count_edges):
    nedges = succ_idx.shape[0]
    outcome = np.empty(runs, np.int8)
    steps = np.empty(runs, np.int64)
    if count_edges:
        tsum = np.zeros(nedges, np.float64)
        tsq = np.zeros(nedges, np.float64)
    else:
        tsum = np.zeros(0, np.float64)
        tsq = np.zeros(0, np.float64)
    local = np.zeros(nedges, np.int64)
    pos = np.zeros(nslots, np.int64)
    for r in range(runs):
        idx = first_run + np.uint64(r)
        st = _mix(seed * GOLDEN + idx + GOLDEN)
        for j in range(nslots):
            pos[j] = 0
        v = start
        n = 0
        res = TRUNCATED
        while True:
            k = kind[v]
            if k == K_TARGET:
                res = TARGET
                break
            if k == K_DEAD:
                res = DEAD
                break
            if n >= limit:
                break
            if k == K_SWITCH:
                j = slot[v]
                p = pos[j]
                e = order_ptr[v] + p
                w = order_idx[e]
                eid = order_edge[e]
                p += 1
                if p == order_ptr[v + 1] - order_ptr[v]:
                    p = 0
                pos[j] = p
            elif k == K_RANDOM:
                d = den[v]
                lim = rej[v]
                while True:
                    st = st + GOLDEN
                    u = _mix(st)
                    if lim == np.uint64(0) or u <= lim:
                        break
                rr = u % d
                eid = succ_ptr[v]
                while rr >= cum[eid]:
                    eid += 1
                w = succ_idx[eid]
            else:
                eid = succ_ptr[v] + choice[v]
                w = succ_idx[eid]
            if count_edges:
                local[eid] += 1
            v = w
            n += 1
        outcome[r] = res
        steps[r] = n
        if count_edges:
            for e in range(nedges):
                c = local[e]
                if c:
                    tsum[e] += c
                    tsq[e] += c * c
                    local[e] = 0
    return outcome, steps, tsum, tsq


_mix_np = getattr(_mix, "py_func", _mix)


def _run_numpy(kind, succ_ptr, succ_idx, cum, den, rej, order_ptr, order_idx, order_edge,
               slot, choice, nslots, start, seed, first_run, runs, limit, count_edges, chunk=4096):
    """Lockstep version: every active run advances one step per iteration."""
    nedges = succ_idx.shape[0]
    outcome = np.empty(runs, np.int8)
    steps = np.empty(runs, np.int64)
    tsum = np.zeros(nedges if count_edges else 0, np.float64)
    tsq = np.zeros(nedges if count_edges else 0, np.float64)
    order_len = np.diff(order_ptr)
    with np.errstate(over="ignore"):
        for lo in range(0, runs, chunk):
            R = min(chunk, runs - lo)
            idx = np.arange(int(first_run) + lo, int(first_run) + lo + R, dtype=np.uint64)
            st = _mix_np(np.uint64(seed) * GOLDEN + idx + GOLDEN)
            v = np.full(R, start, np.int64)
            n = np.zeros(R, np.int64)
            pos = np.zeros((R, max(nslots, 1)), np.int64)
            res = np.full(R, TRUNCATED, np.int8)
            local = np.zeros((R, nedges), np.int64) if count_edges else None
            active = np.arange(R)
            while active.size:
                k = kind[v[active]]
                res[active[k == K_TARGET]] = TARGET
                res[active[k == K_DEAD]] = DEAD
                keep = (k != K_TARGET) & (k != K_DEAD) & (n[active] < limit)
                active = active[keep]
                if not active.size:
                    break
                cur = v[active]
                k = kind[cur]
                eid = np.empty(active.size, np.int64)
                nxt = np.empty(active.size, np.int64)

                m = k == K_SWITCH
                if m.any():
                    a = active[m]
                    c = cur[m]
                    j = slot[c]
                    p = pos[a, j]
                    e = order_ptr[c] + p
                    nxt[m] = order_idx[e]
                    eid[m] = order_edge[e]
                    p = p + 1
                    p[p == order_len[c]] = 0
                    pos[a, j] = p

                m = k == K_RANDOM
                if m.any():
                    a = active[m]
                    c = cur[m]
                    s = st[a]
                    u = np.zeros(a.size, np.uint64)
                    todo = np.arange(a.size)
                    while todo.size:
                        s[todo] = s[todo] + GOLDEN
                        u[todo] = _mix_np(s[todo])
                        lim = rej[c[todo]]
                        ok = (lim == 0) | (u[todo] <= lim)
                        todo = todo[~ok]
                    st[a] = s
                    rr = u % den[c]
                    e = succ_ptr[c].copy()
                    while True:
                        more = rr >= cum[e]
                        if not more.any():
                            break
                        e[more] += 1
                    nxt[m] = succ_idx[e]
                    eid[m] = e

                m = (k == K_MAX) | (k == K_MIN)
                if m.any():
                    c = cur[m]
                    e = succ_ptr[c] + choice[c]
                    nxt[m] = succ_idx[e]
                    eid[m] = e

                if count_edges:
                    np.add.at(local, (active, eid), 1)
                v[active] = nxt
                n[active] += 1
            outcome[lo:lo + R] = res
            steps[lo:lo + R] = n
            if count_edges:
                tsum += local.sum(axis=0)
                tsq += (local.astype(np.float64) ** 2).sum(axis=0)
    return outcome, steps, tsum, tsq


def run_batch(tables, seed, first_run, runs, limit, count_edges=False, use_numba=None):
    """Run ``runs`` plays with run indices first_run, first_run+1, ..."""
    if use_numba is None:
        use_numba = HAVE_NUMBA
    fn = _run_kernel if (use_numba and HAVE_NUMBA) else _run_numpy
    return fn(
        tables["kind"], tables["succ_ptr"], tables["succ_idx"], tables["cum"], tables["den"],
        tables["rej"], tables["order_ptr"], tables["order_idx"], tables["order_edge"],
        tables["slot"], tables["choice"], tables["nslots"], tables["start"],
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(first_run), runs, np.int64(limit), count_edges,
    )
