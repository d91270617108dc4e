# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled distance kernels; mirrors kernels._pure exactly."""

from libc.stdlib cimport free, malloc


def levenshtein(str a, str b):
    """Classic edit distance between two strings."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef long *previous = <long *> malloc((lb + 1) * sizeof(long))
    cdef long *current = <long *> malloc((lb + 1) * sizeof(long))
    if previous == NULL or current == NULL:
        free(previous)
        free(current)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long cost, best, candidate
    cdef Py_UCS4 ca
    try:
        for j in range(lb + 1):
            previous[j] = j
        for i in range(1, la + 1):
            current[0] = i
            ca = a[i - 1]
            for j in range(1, lb + 1):
                cost = 0 if ca == <Py_UCS4> b[j - 1] else 1
                best = previous[j] + 1
                candidate = current[j - 1] + 1
                if candidate < best:
                    best = candidate
                candidate = previous[j - 1] + cost
                if candidate < best:
                    best = candidate
                current[j] = best
            previous, current = current, previous
        return previous[lb]
    finally:
        free(previous)
        free(current)


cdef long _subtree(
    Py_ssize_t ia,
    Py_ssize_t ib,
    tuple labels_a,
    tuple kids_a,
    long *sza,
    tuple labels_b,
    tuple kids_b,
    long *szb,
    long *memo,
    Py_ssize_t nb,
) except -1:
    cdef long cached = memo[ia * nb + ib]
    if cached >= 0:
        return cached
    cdef long base = 0 if labels_a[ia] == labels_b[ib] else 1
    cdef tuple ca = <tuple> kids_a[ia]
    cdef tuple cb = <tuple> kids_b[ib]
    cdef Py_ssize_t m = len(ca), n = len(cb)
    cdef long result
    if m == 0 and n == 0:
        memo[ia * nb + ib] = base
        return base
    cdef long *row = <long *> malloc((n + 1) * sizeof(long))
    if row == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long diagonal, previous, best, candidate
    try:
        row[0] = 0
        for j in range(1, n + 1):
            row[j] = row[j - 1] + szb[<Py_ssize_t> cb[j - 1]]
        for i in range(1, m + 1):
            diagonal = row[0]
            row[0] = row[0] + sza[<Py_ssize_t> ca[i - 1]]
            for j in range(1, n + 1):
                best = diagonal + _subtree(
                    <Py_ssize_t> ca[i - 1], <Py_ssize_t> cb[j - 1],
                    labels_a, kids_a, sza, labels_b, kids_b, szb, memo, nb,
                )
                candidate = row[j] + sza[<Py_ssize_t> ca[i - 1]]
                if candidate < best:
                    best = candidate
                candidate = row[j - 1] + szb[<Py_ssize_t> cb[j - 1]]
                if candidate < best:
                    best = candidate
                diagonal = row[j]
                row[j] = best
        result = base + row[n]
        memo[ia * nb + ib] = result
        return result
    finally:
        free(row)


def tree_distance(
    tuple labels_a,
    tuple kids_a,
    tuple sizes_a,
    tuple labels_b,
    tuple kids_b,
    tuple sizes_b,
):
    """Hierarchy-preserving tree edit distance (see kernels._pure)."""
    cdef Py_ssize_t na = len(labels_a), nb = len(labels_b)
    cdef long *memo = <long *> malloc(na * nb * sizeof(long))
    cdef long *sza = <long *> malloc(na * sizeof(long))
    cdef long *szb = <long *> malloc(nb * sizeof(long))
    if memo == NULL or sza == NULL or szb == NULL:
        free(memo)
        free(sza)
        free(szb)
        raise MemoryError()
    cdef Py_ssize_t i
    cdef long result
    try:
        for i in range(na * nb):
            memo[i] = -1
        for i in range(na):
            sza[i] = <long> sizes_a[i]
        for i in range(nb):
            szb[i] = <long> sizes_b[i]
        result = _subtree(0, 0, labels_a, kids_a, sza, labels_b, kids_b, szb, memo, nb)
        return result
    finally:
        free(memo)
        free(sza)
        free(szb)
