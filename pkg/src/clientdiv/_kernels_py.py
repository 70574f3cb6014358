"""Pure-Python reference kernels.

Same signatures and results as the compiled ``_kernels`` extension. Used when
the extension is not built, or when ``CLIENTDIV_PURE_PYTHON=1`` is set.
"""


def reward_units(num, den, n_impls, epsilon, r_min, r_max):
    """Reward for an implementation holding ``num / den`` of the distribution.

    ``den == 0`` (empty distribution) is treated as share 0. Interpolated
    rewards are rounded half-up to whole units.
    """
    if den <= 0:
        num, den = 0, 1
    if num * n_impls > den:
        return epsilon
    # r_max - (num/den * n) * (r_max - r_min), as a single fraction over den
    x = r_max * den - num * n_impls * (r_max - r_min)
    return (2 * x + den) // (2 * den)


def choose_impl(counts, total, current, switch_cost, epsilon, r_min, r_max):
    """Index of the implementation with the best net reward at current shares.

    Ties keep ``current``; among other tied candidates the lowest index wins.
    """
    n = len(counts)
    best = current
    best_val = reward_units(counts[current], total, n, epsilon, r_min, r_max)
    for j in range(n):
        if j == current:
            continue
        val = reward_units(counts[j], total, n, epsilon, r_min, r_max) - switch_cost
        if val > best_val:
            best, best_val = j, val
    return best


def run_dynamics(assignment, order, rational, switch_cost, n_impls,
                 epsilon, r_min, r_max, window_size, treasury,
                 max_blocks, deciders):
    """Counts-only replay of the reward protocol, one submission per validator per block.

    ``window_size == 0`` selects cumulative counting. Returns three lists of
    length ``max_blocks``: per-block implementation counts (tuples), rewards
    paid, and treasury remaining after the block.
    """
    n = len(assignment)
    impl = list(assignment)
    pop = [0] * n_impls
    for i in impl:
        pop[i] += 1

    win_counts = [0] * n_impls
    ring = [0] * window_size if window_size > 0 else None
    head = 0
    length = 0
    ptr = 0

    counts_rows = []
    paid_rows = []
    treasury_rows = []
    for _ in range(max_blocks):
        for _k in range(deciders):
            v = order[ptr % n]
            ptr += 1
            if not rational[v]:
                continue
            cur = impl[v]
            new = choose_impl(win_counts, length, cur, switch_cost[v],
                              epsilon, r_min, r_max)
            if new != cur:
                impl[v] = new
                pop[cur] -= 1
                pop[new] += 1

        paid = 0
        for v in range(n):
            i = impl[v]
            r = reward_units(win_counts[i], length, n_impls, epsilon, r_min, r_max)
            if r > treasury:
                r = 0
            treasury -= r
            paid += r
            if ring is None:
                length += 1
            elif length < window_size:
                ring[(head + length) % window_size] = i
                length += 1
            else:
                win_counts[ring[head]] -= 1
                ring[head] = i
                head = (head + 1) % window_size
            win_counts[i] += 1

        counts_rows.append(tuple(pop))
        paid_rows.append(paid)
        treasury_rows.append(treasury)
    return counts_rows, paid_rows, treasury_rows
