"""Pure-Python implementations of the hot kernels (reference and fallback)."""

HIT_EQUAL = 1 << 30


def _valuation(d, p):
    v = 0
    while d % p == 0:
        d //= p
        v += 1
    return v


def zp_first_hit(g, centers, levels, p):
    """Index of the first ball ``(centers[i], levels[i])`` holding g, else -1."""
    for i in range(len(centers)):
        d = g - centers[i]
        if d == 0:
            return i
        if _valuation(d, p) >= levels[i]:
            return i
    return -1


def zp_max_valuation(x, centers, p):
    """max v_p(x - c) over centers; -1 if empty, HIT_EQUAL if x is a center."""
    best = -1
    for c in centers:
        d = x - c
        if d == 0:
            return HIT_EQUAL
        v = _valuation(d, p)
        if v > best:
            best = v
    return best


def int_difference_set(values):
    return {a - b for a in values for b in values}


def int_pair_counts(values, targets):
    """For each target t, the number of ordered pairs (a, b) with b - a = t."""
    counts = {t: 0 for t in targets}
    for a in values:
        for b in values:
            d = b - a
            if d in counts:
                counts[d] += 1
    return [counts[t] for t in targets]
