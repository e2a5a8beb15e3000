# Compiled twins of _kernels_py; callers guarantee every value fits in int64.

cdef long long HIT_EQUAL = 1 << 30


cdef inline long long _valuation(long long d, long long p) noexcept nogil:
    cdef long long v = 0
    while d % p == 0:
        d //= p
        v += 1
    return v


cdef long long _first_hit(long long g, const long long[:] centers,
                          const long long[:] levels, long long p) noexcept nogil:
    cdef Py_ssize_t i
    cdef long long d
    for i in range(centers.shape[0]):
        d = g - centers[i]
        if d == 0 or _valuation(d, p) >= levels[i]:
            return i
    return -1


cdef long long _max_valuation(long long x, const long long[:] centers,
                              long long p) noexcept nogil:
    cdef Py_ssize_t i
    cdef long long d, v, best = -1
    for i in range(centers.shape[0]):
        d = x - centers[i]
        if d == 0:
            return HIT_EQUAL
        v = _valuation(d, p)
        if v > best:
            best = v
    return best


def zp_first_hit(long long g, const long long[:] centers,
                 const long long[:] levels, long long p):
    cdef long long r
    with nogil:
        r = _first_hit(g, centers, levels, p)
    return r


def zp_max_valuation(long long x, const long long[:] centers, long long p):
    cdef long long r
    with nogil:
        r = _max_valuation(x, centers, p)
    return r


def int_difference_set(values):
    cdef long long[:] a
    import array
    a = array.array("q", values)
    cdef Py_ssize_t i, j, n = a.shape[0]
    cdef set out = set()
    for i in range(n):
        for j in range(n):
            out.add(a[i] - a[j])
    return out


def int_pair_counts(values, targets):
    import array
    cdef long long[:] a = array.array("q", sorted(values))
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, lo, hi, mid
    cdef long long t, want
    result = []
    for t in targets:
        count = 0
        # values are distinct and sorted: binary search for a[i] + t
        for i in range(n):
            want = a[i] + t
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if a[mid] < want:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < n and a[lo] == want:
                count += 1
        result.append(count)
    return result
