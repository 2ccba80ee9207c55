"""Pure-Python allocation kernels.

Reference twin of ``_kernels_ext.pyx``. Both perform the same floating-point
operations in the same order, so results are bit-identical across backends.
"""

NAME = "python"


def waterfill(budget, demands):
    """Equal-share max-min fill of ``budget`` over ``demands``.

    Works on any numeric type that supports + - / and comparison, so passing
    ``fractions.Fraction`` gives exact results. Returns ``(allocs, leftover)``
    where ``leftover`` is the unused budget (zero unless every demand is met).
    """
    n = len(demands)
    allocs = [None] * n
    rem = budget
    left = n
    while left:
        fair = rem / left
        hit = False
        for i in range(n):
            if allocs[i] is None and demands[i] <= fair:
                allocs[i] = demands[i]
                rem -= demands[i]
                left -= 1
                hit = True
        if not hit:
            for i in range(n):
                if allocs[i] is None:
                    allocs[i] = fair
            return allocs, rem - rem
    return allocs, rem


def cascade(capacity, demand, rank, eps, out):
    """Strict-priority cascade with per-slice residual floor.

    ``rank[i]`` is the priority position of entry ``i``'s slice (0 served
    first), ``eps[r]`` the residual floor of slice ``r``. Allocations are
    written into ``out``; the unallocated capacity is returned.
    """
    n = len(demand)
    m = len(eps)
    demand = [float(d) for d in demand]
    rank = [int(r) for r in rank]
    totals = [0.0] * m
    for i in range(n):
        totals[rank[i]] += demand[i]
    remaining = float(capacity)
    for r in range(m):
        members = [i for i in range(n) if rank[i] == r]
        if not members:
            continue
        lower = False
        for q in range(r + 1, m):
            if totals[q] > 0.0:
                lower = True
                break
        budget = remaining * (1.0 - eps[r]) if lower else remaining
        if budget < 0.0:
            budget = 0.0
        allocs, left = waterfill(budget, [demand[i] for i in members])
        for i, a in zip(members, allocs):
            out[i] = a
        remaining = remaining - budget + left
        if remaining < 0.0:
            remaining = 0.0
    return remaining
