"""Compiled multi-output CART kernels.

A split minimises the sum over output bits of the count-weighted Gini
impurity of both children. For one binary output with ``c`` ones among
``n`` samples, ``n * gini = 2 * (c - c**2 / n)``; summed over outputs and
children, and dropping the constant total of ones, minimising impurity is
the same as maximising ``S2_left / n_left + S2_right / n_right`` where
``S2`` is the sum of squared per-output one-counts. Both sums are updated
incrementally while sweeping samples in feature order.
"""
import numpy as np
from numba import njit

@njit(cache=True)
def _splitmix(state):
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _pick_features(n_features, m_try, state):
    perm = np.arange(n_features)
    if m_try >= n_features:
        return perm
    for i in range(m_try):
        j = i + np.int64(_splitmix(state) % np.uint64(n_features - i))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return np.sort(perm[:m_try])


@njit(cache=True)
def _on_lists(Y):
    # CSR layout of the set bits of each target row
    n, n_out = Y.shape
    ptr = np.zeros(n + 1, np.int64)
    for r in range(n):
        c = 0
        for o in range(n_out):
            if Y[r, o]:
                c += 1
        ptr[r + 1] = ptr[r] + c
    cols = np.empty(ptr[n], np.int64)
    for r in range(n):
        k = ptr[r]
        for o in range(n_out):
            if Y[r, o]:
                cols[k] = o
                k += 1
    return ptr, cols


@njit(cache=True, nogil=True)
def build_tree(XT, Y, order, sample_idx, max_depth, min_leaf, m_try, seed):
    """Grow one tree on the rows ``sample_idx`` (repeats allowed).

    ``XT`` is the (n_features, n_rows) transposed input, ``order[f]`` the
    argsort of ``XT[f]``. ``max_depth < 0`` means unlimited. Leaves hold
    per-output majority bits with ties resolved to 0. Among equal-impurity
    splits the lowest feature index, then the lowest threshold, wins.
    Returns flat node arrays ``(feature, threshold, left, right, value)``.
    """
    n = sample_idx.shape[0]
    n_features, n_rows = XT.shape
    n_out = Y.shape[1]
    if 0 <= max_depth < 30:
        cap = min(2 ** (max_depth + 1) - 1, 2 * n - 1)
    else:
        cap = 2 * n - 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros((cap, n_out), np.uint8)

    ptr, cols = _on_lists(Y)

    # bootstrap multiplicity per row; repeated rows always travel together
    mult = np.zeros(n_rows, np.int64)
    for p in range(n):
        mult[sample_idx[p]] += 1
    srt = np.empty((n_features, n), np.int32)
    sval = np.empty((n_features, n), np.float64)
    for f in range(n_features):
        k = 0
        for r in order[f]:
            v = XT[f, r]
            for _ in range(mult[r]):
                srt[f, k] = r
                sval[f, k] = v
                k += 1

    goes_left = np.zeros(n_rows, np.bool_)
    buf = np.empty(n, np.int32)
    vbuf = np.empty(n, np.float64)
    counts = np.zeros(n_out, np.int64)
    cl = np.zeros(n_out, np.int64)
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        s = st_start[top]
        e = st_end[top]
        depth = st_depth[top]
        m = e - s

        counts[:] = 0
        for i in range(s, e):
            r = srt[0, i]
            for q in range(ptr[r], ptr[r + 1]):
                counts[cols[q]] += 1
        pure = True
        s2_tot = 0
        for o in range(n_out):
            c = counts[o]
            value[node, o] = 1 if 2 * c > m else 0
            if c != 0 and c != m:
                pure = False
            s2_tot += c * c
        if pure or (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf:
            continue

        feats = _pick_features(n_features, m_try, state)
        best_score = -1.0
        best_f = -1
        best_thr = 0.0
        for f in feats:
            cl[:] = 0
            s2l = 0
            s2r = s2_tot
            v1 = sval[f, s]
            for i in range(m - 1):
                r = srt[f, s + i]
                for q in range(ptr[r], ptr[r + 1]):
                    o = cols[q]
                    s2l += 2 * cl[o] + 1
                    s2r -= 2 * (counts[o] - cl[o]) - 1
                    cl[o] += 1
                v0 = v1
                v1 = sval[f, s + i + 1]
                nl = i + 1
                nr = m - nl
                if nl < min_leaf:
                    continue
                if nr < min_leaf:
                    break
                if not v1 > v0:
                    continue
                score = s2l / nl + s2r / nr
                if score > best_score + 1e-12 * abs(best_score):
                    best_score = score
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if not thr < v1:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue

        nl = 0
        for i in range(s, e):
            flag = sval[best_f, i] <= best_thr
            goes_left[srt[best_f, i]] = flag
            if flag:
                nl += 1
        # stable partition keeps every feature's segment sorted
        for f in range(n_features):
            a = 0
            b = nl
            for i in range(s, e):
                r = srt[f, i]
                if goes_left[r]:
                    buf[a] = r
                    vbuf[a] = sval[f, i]
                    a += 1
                else:
                    buf[b] = r
                    vbuf[b] = sval[f, i]
                    b += 1
            for i in range(m):
                srt[f, s + i] = buf[i]
                sval[f, s + i] = vbuf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        # right pushed first so the left subtree is grown first
        st_node[top] = n_nodes - 1
        st_start[top] = s + nl
        st_end[top] = e
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = n_nodes - 2
        st_start[top] = s
        st_end[top] = s + nl
        st_depth[top] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by each row."""
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
