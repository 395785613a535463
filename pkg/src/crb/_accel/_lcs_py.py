"""Pure-Python fallback for the LCS hot loop (same contract as _lcs.pyx)."""


def lcs_length(a, b):
    """Length of the LCS of two sequences of ints (token ids)."""
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    prev = [0] * (m + 1)
    for i in range(n):
        curr = [0] * (m + 1)
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                curr[j + 1] = prev[j] + 1
            else:
                curr[j + 1] = prev[j + 1] if prev[j + 1] >= curr[j] else curr[j]
        prev = curr
    return prev[m]
