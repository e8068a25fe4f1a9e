# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the fast backend.

Mirrors ``_pykernels.py`` operation for operation; floating-point work runs
in the same order so both backends return bit-identical results.  Keep the
two files in sync when touching either.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, uint8_t, uint64_t

BACKEND = "compiled"


cdef inline uint64_t _splitmix64(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline bint _heap_less(double d1, int32_t n1, double d2, int32_t n2) nogil:
    if d1 < d2:
        return True
    if d1 == d2 and n1 < n2:
        return True
    return False


cdef void _heap_push(double* hd, int32_t* hn, int* size, double d, int32_t n) nogil:
    cdef int i = size[0]
    cdef int parent
    hd[i] = d
    hn[i] = n
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _heap_less(hd[i], hn[i], hd[parent], hn[parent]):
            hd[i], hd[parent] = hd[parent], hd[i]
            hn[i], hn[parent] = hn[parent], hn[i]
            i = parent
        else:
            break


cdef void _heap_pop(double* hd, int32_t* hn, int* size, double* d, int32_t* n) nogil:
    cdef int i = 0
    cdef int child, last
    d[0] = hd[0]
    n[0] = hn[0]
    last = size[0] - 1
    hd[0] = hd[last]
    hn[0] = hn[last]
    size[0] = last
    while True:
        child = 2 * i + 1
        if child >= last:
            break
        if child + 1 < last and _heap_less(hd[child + 1], hn[child + 1], hd[child], hn[child]):
            child += 1
        if _heap_less(hd[child], hn[child], hd[i], hn[i]):
            hd[i], hd[child] = hd[child], hd[i]
            hn[i], hn[child] = hn[child], hn[i]
            i = child
        else:
            break


def dijkstra(indptr, indices, weights, origin, dest):
    """Single-pair shortest path over a CSR adjacency; see _pykernels."""
    cdef int32_t[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef int32_t[::1] indices_v = np.ascontiguousarray(indices, dtype=np.int32)
    cdef double[::1] weights_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = indptr_v.shape[0] - 1
    cdef int m = indices_v.shape[0]

    dist_arr = np.full(n, np.inf)
    pred_arr = np.full(n, -1, dtype=np.int32)
    done_arr = np.zeros(n, dtype=np.uint8)
    heap_d_arr = np.empty(m + 2, dtype=np.float64)
    heap_n_arr = np.empty(m + 2, dtype=np.int32)

    cdef double[::1] dist = dist_arr
    cdef int32_t[::1] pred = pred_arr
    cdef uint8_t[::1] done = done_arr
    cdef double[::1] heap_d = heap_d_arr
    cdef int32_t[::1] heap_n = heap_n_arr

    cdef int heap_size = 0
    cdef int32_t u, v, src = origin, dst = dest
    cdef int e
    cdef double d, nd, dv

    with nogil:
        dist[src] = 0.0
        _heap_push(&heap_d[0], &heap_n[0], &heap_size, 0.0, src)
        while heap_size > 0:
            _heap_pop(&heap_d[0], &heap_n[0], &heap_size, &d, &u)
            if done[u]:
                continue
            done[u] = 1
            if u == dst:
                break
            for e in range(indptr_v[u], indptr_v[u + 1]):
                v = indices_v[e]
                if done[v]:
                    continue
                nd = d + weights_v[e]
                dv = dist[v]
                if nd < dv:
                    dist[v] = nd
                    pred[v] = u
                    _heap_push(&heap_d[0], &heap_n[0], &heap_size, nd, v)
                elif nd == dv and u < pred[v]:
                    pred[v] = u

    return dist_arr, pred_arr


def bfs_mask(indptr, indices, base, k):
    """Unweighted BFS up to k hops; returns a uint8 membership mask."""
    cdef int32_t[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef int32_t[::1] indices_v = np.ascontiguousarray(indices, dtype=np.int32)
    cdef int n = indptr_v.shape[0] - 1

    mask_arr = np.zeros(n, dtype=np.uint8)
    cur_arr = np.empty(n, dtype=np.int32)
    nxt_arr = np.empty(n, dtype=np.int32)

    cdef uint8_t[::1] mask = mask_arr
    cdef int32_t[::1] cur_v = cur_arr
    cdef int32_t[::1] nxt_v = nxt_arr
    cdef int32_t* cur = &cur_v[0] if n > 0 else NULL
    cdef int32_t* nxt = &nxt_v[0] if n > 0 else NULL
    cdef int32_t* swap
    cdef int n_cur = 1, n_nxt, level, i, e
    cdef int32_t u, v, src = base
    cdef int hops = k

    with nogil:
        mask[src] = 1
        cur[0] = src
        for level in range(hops):
            if n_cur == 0:
                break
            n_nxt = 0
            for i in range(n_cur):
                u = cur[i]
                for e in range(indptr_v[u], indptr_v[u + 1]):
                    v = indices_v[e]
                    if not mask[v]:
                        mask[v] = 1
                        nxt[n_nxt] = v
                        n_nxt += 1
            swap = cur
            cur = nxt
            nxt = swap
            n_cur = n_nxt

    return mask_arr


def build_tree(x, y, samples, max_depth, min_samples_split, min_samples_leaf,
               m_try, seed):
    """Grow a CART regression tree on binary features; see _pykernels."""
    cdef const uint8_t[:, ::1] x_v = np.ascontiguousarray(x, dtype=np.uint8)
    cdef const double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef int32_t[::1] samples_v = np.ascontiguousarray(samples, dtype=np.int32)

    cdef int n = samples_v.shape[0]
    cdef int n_features = x_v.shape[1]
    cdef int cap = 2 * n + 1

    feature_arr = np.full(cap, -1, dtype=np.int32)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    value_arr = np.zeros(cap, dtype=np.float64)
    order_arr = np.array(samples_v, dtype=np.int32)
    tmp_arr = np.empty(n, dtype=np.int32)
    perm_arr = np.arange(n_features, dtype=np.int32)
    stack_arr = np.empty((cap + 1, 4), dtype=np.int64)

    cdef int32_t[::1] feature = feature_arr
    cdef int32_t[::1] left = left_arr
    cdef int32_t[::1] right = right_arr
    cdef double[::1] value = value_arr
    cdef int32_t[::1] order = order_arr
    cdef int32_t[::1] tmp = tmp_arr
    cdef int32_t[::1] perm = perm_arr
    cdef long long[:, ::1] stack = stack_arr

    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef int max_depth_c = max_depth
    cdef int min_split_c = min_samples_split
    cdef int min_leaf_c = min_samples_leaf
    cdef int m_try_c = m_try

    cdef int n_nodes = 1, sp = 1
    cdef int node, start, end, depth, n_node, i, j, f, r, row
    cdef int n_cand, count1, count0, n_left, n_right, left_id, right_id
    cdef int best_feature
    cdef double total, y_min, y_max, yv, parent_proxy, best_proxy
    cdef double sum0, sum1, proxy
    cdef int32_t swap_tmp

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0

    with nogil:
        while sp > 0:
            sp -= 1
            node = <int>stack[sp, 0]
            start = <int>stack[sp, 1]
            end = <int>stack[sp, 2]
            depth = <int>stack[sp, 3]
            n_node = end - start
            total = 0.0
            y_min = y_v[order[start]]
            y_max = y_min
            for i in range(start, end):
                yv = y_v[order[i]]
                total += yv
                if yv < y_min:
                    y_min = yv
                elif yv > y_max:
                    y_max = yv

            if y_min == y_max:
                feature[node] = -1
                value[node] = y_min
                continue
            value[node] = total / n_node
            if depth >= max_depth_c or n_node < min_split_c:
                continue

            parent_proxy = total * total / n_node
            best_proxy = parent_proxy
            best_feature = -1

            if m_try_c >= n_features:
                n_cand = n_features
            else:
                n_cand = m_try_c
            for j in range(n_cand):
                if m_try_c >= n_features:
                    f = j
                else:
                    r = j + <int>(_splitmix64(&state) % <uint64_t>(n_features - j))
                    swap_tmp = perm[j]
                    perm[j] = perm[r]
                    perm[r] = swap_tmp
                    f = perm[j]
                count1 = 0
                sum1 = 0.0
                for i in range(start, end):
                    row = order[i]
                    if x_v[row, f]:
                        count1 += 1
                        sum1 += y_v[row]
                count0 = n_node - count1
                if count1 < min_leaf_c or count0 < min_leaf_c:
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
                if x_v[row, best_feature]:
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
            feature[node] = best_feature
            left[node] = left_id
            right[node] = right_id
            stack[sp, 0] = right_id
            stack[sp, 1] = start + n_left
            stack[sp, 2] = end
            stack[sp, 3] = depth + 1
            sp += 1
            stack[sp, 0] = left_id
            stack[sp, 1] = start
            stack[sp, 2] = start + n_left
            stack[sp, 3] = depth + 1
            sp += 1

    return (feature_arr[:n_nodes].copy(), left_arr[:n_nodes].copy(),
            right_arr[:n_nodes].copy(), value_arr[:n_nodes].copy())


def predict_tree(feature, left, right, value, x):
    """Route each row of x through the tree; returns float64 predictions."""
    cdef int32_t[::1] feature_v = np.ascontiguousarray(feature, dtype=np.int32)
    cdef int32_t[::1] left_v = np.ascontiguousarray(left, dtype=np.int32)
    cdef int32_t[::1] right_v = np.ascontiguousarray(right, dtype=np.int32)
    cdef double[::1] value_v = np.ascontiguousarray(value, dtype=np.float64)
    cdef const uint8_t[:, ::1] x_v = np.ascontiguousarray(x, dtype=np.uint8)
    cdef int n_rows = x_v.shape[0]

    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int r, node
    cdef int32_t f

    with nogil:
        for r in range(n_rows):
            node = 0
            f = feature_v[node]
            while f >= 0:
                if x_v[r, f]:
                    node = right_v[node]
                else:
                    node = left_v[node]
                f = feature_v[node]
            out[r] = value_v[node]

    return out_arr
