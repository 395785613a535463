# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled longest-common-subsequence length over integer token ids."""

from libc.stdlib cimport malloc, free


def lcs_length(a, b):
    """Length of the LCS of two sequences of ints (token ids)."""
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t m = len(b)
    if n == 0 or m == 0:
        return 0
    cdef long *xs = <long *> malloc(n * sizeof(long))
    cdef long *ys = <long *> malloc(m * sizeof(long))
    cdef long *prev = <long *> malloc((m + 1) * sizeof(long))
    cdef long *curr = <long *> malloc((m + 1) * sizeof(long))
    if xs == NULL or ys == NULL or prev == NULL or curr == NULL:
        free(xs); free(ys); free(prev); free(curr)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long tmp
    try:
        for i in range(n):
            xs[i] = a[i]
        for j in range(m):
            ys[j] = b[j]
        for j in range(m + 1):
            prev[j] = 0
        for i in range(n):
            curr[0] = 0
            for j in range(m):
                if xs[i] == ys[j]:
                    curr[j + 1] = prev[j] + 1
                else:
                    tmp = prev[j + 1]
                    if curr[j] > tmp:
                        tmp = curr[j]
                    curr[j + 1] = tmp
            prev, curr = curr, prev
        return prev[m]
    finally:
        free(xs); free(ys); free(prev); free(curr)
