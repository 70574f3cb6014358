# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirror ``_kernels_py`` exactly on 64-bit integers."""

from libc.stdlib cimport malloc, free


cdef inline long long _floordiv(long long a, long long b) noexcept nogil:
    cdef long long q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef inline long long _reward(long long num, long long den, long long n_impls,
                              long long eps, long long r_min,
                              long long r_max) noexcept nogil:
    cdef long long x
    if den <= 0:
        num = 0
        den = 1
    if num * n_impls > den:
        return eps
    x = r_max * den - num * n_impls * (r_max - r_min)
    return _floordiv(2 * x + den, 2 * den)


cdef inline int _choose(long long *counts, int n, long long total, int current,
                        long long cost, long long eps, long long r_min,
                        long long r_max) noexcept nogil:
    cdef int best = current
    cdef long long best_val = _reward(counts[current], total, n, eps, r_min, r_max)
    cdef long long val
    cdef int j
    for j in range(n):
        if j == current:
            continue
        val = _reward(counts[j], total, n, eps, r_min, r_max) - cost
        if val > best_val:
            best = j
            best_val = val
    return best


def reward_units(long long num, long long den, long long n_impls,
                 long long epsilon, long long r_min, long long r_max):
    return _reward(num, den, n_impls, epsilon, r_min, r_max)


def choose_impl(counts, long long total, int current, long long switch_cost,
                long long epsilon, long long r_min, long long r_max):
    cdef int n = len(counts)
    cdef long long *buf = <long long *> malloc(n * sizeof(long long))
    cdef int j
    if buf == NULL:
        raise MemoryError()
    try:
        for j in range(n):
            buf[j] = counts[j]
        return _choose(buf, n, total, current, switch_cost, epsilon, r_min, r_max)
    finally:
        free(buf)


def run_dynamics(assignment, order, rational, switch_cost, int n_impls,
                 long long epsilon, long long r_min, long long r_max,
                 int window_size, long long treasury, int max_blocks,
                 int deciders):
    cdef int n = len(assignment)
    cdef int *impl = <int *> malloc(n * sizeof(int))
    cdef int *ord_ = <int *> malloc(n * sizeof(int))
    cdef char *rat = <char *> malloc(n * sizeof(char))
    cdef long long *cost = <long long *> malloc(n * sizeof(long long))
    cdef long long *pop = <long long *> malloc(n_impls * sizeof(long long))
    cdef long long *win = <long long *> malloc(n_impls * sizeof(long long))
    cdef int *ring = <int *> malloc((window_size if window_size > 0 else 1) * sizeof(int))
    cdef long long *out_counts = <long long *> malloc(
        <size_t> max_blocks * n_impls * sizeof(long long))
    cdef long long *out_paid = <long long *> malloc(max_blocks * sizeof(long long))
    cdef long long *out_tre = <long long *> malloc(max_blocks * sizeof(long long))
    cdef int v, i, k, b, cur, new, head = 0
    cdef long long length = 0, ptr = 0, r, paid
    try:
        if (impl == NULL or ord_ == NULL or rat == NULL or cost == NULL
                or pop == NULL or win == NULL or ring == NULL
                or out_counts == NULL or out_paid == NULL or out_tre == NULL):
            raise MemoryError()
        for i in range(n_impls):
            pop[i] = 0
            win[i] = 0
        for v in range(n):
            impl[v] = assignment[v]
            ord_[v] = order[v]
            rat[v] = 1 if rational[v] else 0
            cost[v] = switch_cost[v]
            pop[impl[v]] += 1

        with nogil:
            for b in range(max_blocks):
                for k in range(deciders):
                    v = ord_[ptr % n]
                    ptr += 1
                    if not rat[v]:
                        continue
                    cur = impl[v]
                    new = _choose(win, n_impls, length, cur, cost[v],
                                  epsilon, r_min, r_max)
                    if new != cur:
                        impl[v] = new
                        pop[cur] -= 1
                        pop[new] += 1

                paid = 0
                for v in range(n):
                    i = impl[v]
                    r = _reward(win[i], length, n_impls, epsilon, r_min, r_max)
                    if r > treasury:
                        r = 0
                    treasury -= r
                    paid += r
                    if window_size <= 0:
                        length += 1
                    elif length < window_size:
                        ring[(head + length) % window_size] = i
                        length += 1
                    else:
                        win[ring[head]] -= 1
                        ring[head] = i
                        head = (head + 1) % window_size
                    win[i] += 1

                for i in range(n_impls):
                    out_counts[<size_t> b * n_impls + i] = pop[i]
                out_paid[b] = paid
                out_tre[b] = treasury

        counts_rows = [
            tuple([out_counts[<size_t> b * n_impls + i] for i in range(n_impls)])
            for b in range(max_blocks)
        ]
        paid_rows = [out_paid[b] for b in range(max_blocks)]
        treasury_rows = [out_tre[b] for b in range(max_blocks)]
        return counts_rows, paid_rows, treasury_rows
    finally:
        free(impl); free(ord_); free(rat); free(cost); free(pop); free(win)
        free(ring); free(out_counts); free(out_paid); free(out_tre)
