"""Compiled CKY kernels shared by inside scoring, tree sampling and Viterbi.

Chart items are indexed ``[i, j, state, c]``. Unbounded charts have a single
state. Depth-bounded charts have ``2 * D`` states, state ``2 * (d - 1) + side``
for depth ``d`` and side 0 (left) / 1 (right). ``left_state[s]`` and
``right_state[s]`` give the states of the two children of a state-``s``
item; ``left_state`` is -1 when a left child would exceed the bound, which
only blocks it if it spans two or more tokens.

Inside scores are kept linear and rescaled per span: the true score of
``ins[i, j, s, c]`` is ``ins[i, j, s, c] * 2**ex[i, j]``. ``nz[i, j]`` is
False when every item of the span is exactly zero.

Node records written by the samplers and the Viterbi decoder are rows
``(start, end, label, split)`` in pre-order with ``split = -1`` on
preterminals.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


def state_tables(D):
    """Child-state lookup tables for bound ``D`` (``0`` means unbounded)."""
    if D == 0:
        return np.zeros(1, np.int64), np.zeros(1, np.int64)
    n = 2 * D
    left = np.empty(n, np.int64)
    right = np.empty(n, np.int64)
    for s in range(n):
        d, side = s // 2 + 1, s % 2
        ld = d + side
        left[s] = 2 * (ld - 1) if ld <= D else -1
        right[s] = 2 * (d - 1) + 1
    return left, right


@njit(cache=True)
def inside(tokens, G, C, left_state, right_state, ins, ex, nz, M):
    """Fill the chart for one sentence in place."""
    n = tokens.shape[0]
    S = left_state.shape[0]
    CC = C * C
    for i in range(n):
        j = i + 1
        m = 0.0
        for c in range(C):
            p = G[c, CC + tokens[i]]
            for s in range(S):
                ins[i, j, s, c] = p
            if p > m:
                m = p
        if m > 0.0:
            mant, e = math.frexp(m)
            for s in range(S):
                for c in range(C):
                    ins[i, j, s, c] = math.ldexp(ins[i, j, s, c], -e)
            ex[i, j] = e
            nz[i, j] = True
        else:
            ex[i, j] = 0
            nz[i, j] = False
    for w in range(2, n + 1):
        for i in range(n - w + 1):
            j = i + w
            emax = 0
            found = False
            for k in range(i + 1, j):
                if nz[i, k] and nz[k, j]:
                    e = ex[i, k] + ex[k, j]
                    if not found or e > emax:
                        emax = e
                        found = True
            m = 0.0
            for s in range(S):
                for c in range(C):
                    ins[i, j, s, c] = 0.0
                if not found:
                    continue
                rs = right_state[s]
                for a in range(CC):
                    M[a] = 0.0
                for k in range(i + 1, j):
                    if not (nz[i, k] and nz[k, j]):
                        continue
                    ls = left_state[s]
                    if ls < 0:
                        if k - i > 1:
                            continue
                        ls = 0
                    scale = math.ldexp(1.0, ex[i, k] + ex[k, j] - emax)
                    if scale == 0.0:
                        continue
                    for l in range(C):
                        a = ins[i, k, ls, l] * scale
                        if a == 0.0:
                            continue
                        for r in range(C):
                            M[l * C + r] += a * ins[k, j, rs, r]
                for c in range(C):
                    acc = 0.0
                    for a in range(CC):
                        acc += G[c, a] * M[a]
                    ins[i, j, s, c] = acc
                    if acc > m:
                        m = acc
            if m > 0.0:
                mant, e = math.frexp(m)
                for s in range(S):
                    for c in range(C):
                        ins[i, j, s, c] = math.ldexp(ins[i, j, s, c], -e)
                ex[i, j] = emax + e
                nz[i, j] = True
            else:
                ex[i, j] = 0
                nz[i, j] = False


@njit(cache=True)
def sentence_logmass(n, root, C, ins, ex, nz):
    if not nz[0, n]:
        return NEG_INF
    acc = 0.0
    for c in range(C):
        acc += root[c] * ins[0, n, 0, c]
    if acc <= 0.0:
        return NEG_INF
    return math.log(acc) + ex[0, n] * math.log(2.0)


@njit(cache=True)
def _pick(weights, total, u):
    """Index of the bin containing ``u * total`` in the cumulative weights."""
    target = u * total
    acc = 0.0
    last = -1
    for idx in range(weights.shape[0]):
        wt = weights[idx]
        if wt > 0.0:
            acc += wt
            last = idx
            if target < acc:
                return idx
    return last


@njit(cache=True)
def sample(n, G, root, C, left_state, right_state, ins, ex, nz, uniforms, nodes, W, stack):
    """Draw a tree top-down from a filled chart; returns False on zero mass."""
    CC = C * C
    total = 0.0
    for c in range(C):
        W[c] = root[c] * ins[0, n, 0, c]
        total += W[c]
    if not nz[0, n] or total <= 0.0:
        return False
    c0 = _pick(W[:C], total, uniforms[0])
    used = 1
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = c0
    stack[0, 3] = 0
    top = 1
    out = 0
    while top > 0:
        top -= 1
        i = stack[top, 0]
        j = stack[top, 1]
        c = stack[top, 2]
        s = stack[top, 3]
        nodes[out, 0] = i
        nodes[out, 1] = j
        nodes[out, 2] = c
        if j - i == 1:
            nodes[out, 3] = -1
            out += 1
            continue
        emax = 0
        found = False
        for k in range(i + 1, j):
            if nz[i, k] and nz[k, j]:
                e = ex[i, k] + ex[k, j]
                if not found or e > emax:
                    emax = e
                    found = True
        rs = right_state[s]
        nw = (j - i - 1) * CC
        total = 0.0
        for k in range(i + 1, j):
            base = (k - i - 1) * CC
            ls = left_state[s]
            blocked = ls < 0 and k - i > 1
            if ls < 0:
                ls = 0
            if blocked or not (nz[i, k] and nz[k, j]):
                for a in range(CC):
                    W[base + a] = 0.0
                continue
            scale = math.ldexp(1.0, ex[i, k] + ex[k, j] - emax)
            for l in range(C):
                a = ins[i, k, ls, l] * scale
                for r in range(C):
                    wt = G[c, l * C + r] * a * ins[k, j, rs, r]
                    W[base + l * C + r] = wt
                    total += wt
        if total <= 0.0:
            return False
        idx = _pick(W[:nw], total, uniforms[used])
        used += 1
        k = i + 1 + idx // CC
        l = (idx % CC) // C
        r = idx % C
        nodes[out, 3] = k
        out += 1
        lstate = left_state[s]
        if lstate < 0:
            lstate = 0
        stack[top, 0] = k
        stack[top, 1] = j
        stack[top, 2] = r
        stack[top, 3] = rs
        top += 1
        stack[top, 0] = i
        stack[top, 1] = k
        stack[top, 2] = l
        stack[top, 3] = lstate
        top += 1
    return True


@njit(cache=True)
def count_nodes(tokens, nodes, C, counts, root_counts):
    """Add the rule uses of one tree (node records) to the count arrays."""
    n = tokens.shape[0]
    CC = C * C
    m = 2 * n - 1
    root_counts[nodes[0, 2]] += 1
    # children of a node are located by span in the pre-order record list
    for a in range(m):
        i = nodes[a, 0]
        c = nodes[a, 2]
        k = nodes[a, 3]
        if k < 0:
            counts[c, CC + tokens[i]] += 1
        else:
            lab_l = nodes[a + 1, 2]
            # right child follows the left subtree, which has 2*(k-i)-1 records
            lab_r = nodes[a + 1 + 2 * (k - i) - 1, 2]
            counts[c, lab_l * C + lab_r] += 1


@njit(cache=True)
def nodes_logprob(tokens, nodes, logG, logroot, C):
    n = tokens.shape[0]
    CC = C * C
    total = logroot[nodes[0, 2]]
    for a in range(2 * n - 1):
        i = nodes[a, 0]
        c = nodes[a, 2]
        k = nodes[a, 3]
        if k < 0:
            total += logG[c, CC + tokens[i]]
        else:
            lab_l = nodes[a + 1, 2]
            lab_r = nodes[a + 2 * (k - i), 2]
            total += logG[c, lab_l * C + lab_r]
    return total


@njit(cache=True)
def gibbs_sweep(tokens, offsets, G, root, logG, logroot, C, left_state, right_state,
                uniforms, nodes, counts, root_counts, status, tree_logp):
    """Sample a tree for every sentence and accumulate rule counts.

    ``uniforms[offsets[t]:offsets[t+1]]`` is the random stream of sentence
    ``t``; node records of sentence ``t`` go to rows
    ``2*offsets[t]-t .. 2*offsets[t+1]-t-2`` of ``nodes``.
    """
    N = offsets.shape[0] - 1
    S = left_state.shape[0]
    maxn = 1
    for t in range(N):
        if offsets[t + 1] - offsets[t] > maxn:
            maxn = offsets[t + 1] - offsets[t]
    ins = np.zeros((maxn, maxn + 1, S, C))
    ex = np.zeros((maxn, maxn + 1), np.int64)
    nz = np.zeros((maxn, maxn + 1), np.bool_)
    M = np.zeros(C * C)
    W = np.zeros(max(C, (maxn - 1) * C * C))
    stack = np.zeros((2 * maxn, 4), np.int64)
    for t in range(N):
        a, b = offsets[t], offsets[t + 1]
        sent = tokens[a:b]
        n = b - a
        inside(sent, G, C, left_state, right_state, ins, ex, nz, M)
        row = 2 * a - t
        out = nodes[row : row + 2 * n - 1]
        ok = sample(n, G, root, C, left_state, right_state, ins, ex, nz,
                    uniforms[a:b], out, W, stack)
        if not ok:
            status[t] = 1
            tree_logp[t] = NEG_INF
            continue
        status[t] = 0
        count_nodes(sent, out, C, counts, root_counts)
        tree_logp[t] = nodes_logprob(sent, out, logG, logroot, C)


@njit(cache=True)
def viterbi(tokens, logG, logroot, C, left_state, right_state, nodes):
    """Most probable tree of one sentence; returns its log probability."""
    n = tokens.shape[0]
    S = left_state.shape[0]
    CC = C * C
    best = np.full((n, n + 1, S, C), NEG_INF)
    bk = np.full((n, n + 1, S, C), -1, np.int64)
    bl = np.full((n, n + 1, S, C), -1, np.int64)
    br = np.full((n, n + 1, S, C), -1, np.int64)
    for i in range(n):
        for s in range(S):
            for c in range(C):
                best[i, i + 1, s, c] = logG[c, CC + tokens[i]]
    for w in range(2, n + 1):
        for i in range(n - w + 1):
            j = i + w
            for s in range(S):
                rs = right_state[s]
                for c in range(C):
                    top = NEG_INF
                    kk = -1
                    ll = -1
                    rr = -1
                    for k in range(i + 1, j):
                        ls = left_state[s]
                        if ls < 0:
                            if k - i > 1:
                                continue
                            ls = 0
                        for l in range(C):
                            bl_score = best[i, k, ls, l]
                            if bl_score == NEG_INF:
                                continue
                            for r in range(C):
                                sc = logG[c, l * C + r] + bl_score + best[k, j, rs, r]
                                if sc > top:
                                    top = sc
                                    kk = k
                                    ll = l
                                    rr = r
                    best[i, j, s, c] = top
                    bk[i, j, s, c] = kk
                    bl[i, j, s, c] = ll
                    br[i, j, s, c] = rr
    top = NEG_INF
    c0 = -1
    for c in range(C):
        sc = logroot[c] + best[0, n, 0, c]
        if sc > top:
            top = sc
            c0 = c
    if c0 < 0:
        return NEG_INF
    stack = np.zeros((2 * n, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = c0
    stack[0, 3] = 0
    sp = 1
    out = 0
    while sp > 0:
        sp -= 1
        i = stack[sp, 0]
        j = stack[sp, 1]
        c = stack[sp, 2]
        s = stack[sp, 3]
        nodes[out, 0] = i
        nodes[out, 1] = j
        nodes[out, 2] = c
        if j - i == 1:
            nodes[out, 3] = -1
            out += 1
            continue
        k = bk[i, j, s, c]
        nodes[out, 3] = k
        out += 1
        ls = left_state[s]
        if ls < 0:
            ls = 0
        stack[sp, 0] = k
        stack[sp, 1] = j
        stack[sp, 2] = br[i, j, s, c]
        stack[sp, 3] = right_state[s]
        sp += 1
        stack[sp, 0] = i
        stack[sp, 1] = k
        stack[sp, 2] = bl[i, j, s, c]
        stack[sp, 3] = ls
        sp += 1
    return top
