"""Pure-Python kernels: the fallback backend.

These functions mirror the compiled kernels in ``_ckernels.pyx`` operation
for operation.  Every floating-point accumulation happens in the same order
in both backends, so the two produce bit-identical results; the test suite
asserts this.  Keep the two files in sync when touching either.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND = "python"

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64_next(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def dijkstra(indptr, indices, weights, origin, dest):
    """Single-pair shortest path over a CSR adjacency.

    Returns (dist, pred) float64/int32 arrays of length N.  pred[v] is the
    lowest-index predecessor among all shortest paths reaching v; -1 where
    none.  Stops once dest is settled, so only entries on/below dest's
    distance are final.  dist[dest] == inf means unreachable.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int32)
    done = np.zeros(n, dtype=np.uint8)

    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    weights_l = weights.tolist()
    dist_l = dist.tolist()
    pred_l = pred.tolist()
    done_l = done.tolist()

    dist_l[origin] = 0.0
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if done_l[u]:
            continue
        done_l[u] = 1
        if u == dest:
            break
        for e in range(indptr_l[u], indptr_l[u + 1]):
            v = indices_l[e]
            if done_l[v]:
                continue
            nd = d + weights_l[e]
            dv = dist_l[v]
            if nd < dv:
                dist_l[v] = nd
                pred_l[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dv and u < pred_l[v]:
                # Equal-length alternative: keep the lowest-index predecessor
                # so the reported path is deterministic.
                pred_l[v] = u

    dist[:] = dist_l
    pred[:] = pred_l
    return dist, pred


def bfs_mask(indptr, indices, base, k):
    """Unweighted BFS up to k hops; returns a uint8 membership mask."""
    n = len(indptr) - 1
    mask = np.zeros(n, dtype=np.uint8)
    mask[base] = 1
    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    mask_l = mask.tolist()
    frontier = [base]
    for _ in range(k):
        if not frontier:
            break
        nxt = []
        for u in frontier:
            for e in range(indptr_l[u], indptr_l[u + 1]):
                v = indices_l[e]
                if not mask_l[v]:
                    mask_l[v] = 1
                    nxt.append(v)
        frontier = nxt
    mask[:] = mask_l
    return mask


def build_tree(x, y, samples, max_depth, min_samples_split, min_samples_leaf,
               m_try, seed):
    """Grow a CART regression tree on binary features.

    x: uint8 matrix (n_rows, n_features); y: float64 targets; samples:
    int32 row indices (bootstrap, may repeat).  A split sends x==0 left and
    x==1 right, chosen to maximise the variance-reduction proxy
    sum_l^2/n_l + sum_r^2/n_r.  Candidate features per split are drawn with
    an in-kernel splitmix64 PRNG so both backends pick the same ones.

    Returns (feature, left, right, value) arrays; feature == -1 marks a leaf.
    """
    n = len(samples)
    n_features = x.shape[1]
    cap = 2 * n + 1

    feature = np.full(cap, -1, dtype=np.int32)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    x_l = x.tolist()
    y_l = y.tolist()
    order = list(samples)
    tmp = [0] * n
    perm = list(range(n_features))
    state = seed & _MASK64

    feature_l = feature.tolist()
    left_l = left.tolist()
    right_l = right.tolist()
    value_l = value.tolist()

    n_nodes = 1
    stack = [(0, 0, n, 0)]  # node_id, start, end, depth
    while stack:
        node, start, end, depth = stack.pop()
        n_node = end - start
        total = 0.0
        y_min = y_l[order[start]]
        y_max = y_min
        for i in range(start, end):
            yv = y_l[order[i]]
            total += yv
            if yv < y_min:
                y_min = yv
            elif yv > y_max:
                y_max = yv

        if y_min == y_max:
            feature_l[node] = -1
            value_l[node] = y_min
            continue
        value_l[node] = total / n_node
        if depth >= max_depth or n_node < min_samples_split:
            continue

        parent_proxy = total * total / n_node
        best_proxy = parent_proxy
        best_feature = -1

        if m_try >= n_features:
            n_cand = n_features
        else:
            n_cand = m_try
        for j in range(n_cand):
            if m_try >= n_features:
                f = j
            else:
                state, z = _splitmix64_next(state)
                r = j + z % (n_features - j)
                perm[j], perm[r] = perm[r], perm[j]
                f = perm[j]
            count1 = 0
            sum1 = 0.0
            for i in range(start, end):
                row = order[i]
                if x_l[row][f]:
                    count1 += 1
                    sum1 += y_l[row]
            count0 = n_node - count1
            if count1 < min_samples_leaf or count0 < min_samples_leaf:
                continue
            sum0 = total - sum1
            proxy = sum0 * sum0 / count0 + sum1 * sum1 / count1
            if proxy > best_proxy:
                best_proxy = proxy
                best_feature = f

        if best_feature < 0:
            continue

        # Stable partition: x==0 rows first, preserving order within sides.
        n_left = 0
        n_right = 0
        for i in range(start, end):
            row = order[i]
            if x_l[row][best_feature]:
                tmp[n_right] = row
                n_right += 1
            else:
                order[start + n_left] = row
                n_left += 1
        for i in range(n_right):
            order[start + n_left + i] = tmp[i]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature_l[node] = best_feature
        left_l[node] = left_id
        right_l[node] = right_id
        stack.append((right_id, start + n_left, end, depth + 1))
        stack.append((left_id, start, start + n_left, depth + 1))

    feature[:] = feature_l
    left[:] = left_l
    right[:] = right_l
    value[:] = value_l
    return (feature[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def predict_tree(feature, left, right, value, x):
    """Route each row of x through the tree; returns float64 predictions."""
    n_rows = x.shape[0]
    out = np.empty(n_rows, dtype=np.float64)
    feature_l = feature.tolist()
    left_l = left.tolist()
    right_l = right.tolist()
    value_l = value.tolist()
    x_l = x.tolist()
    for r in range(n_rows):
        node = 0
        f = feature_l[node]
        row = x_l[r]
        while f >= 0:
            node = right_l[node] if row[f] else left_l[node]
            f = feature_l[node]
        out[r] = value_l[node]
    return out
