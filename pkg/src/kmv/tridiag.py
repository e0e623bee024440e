"""Direct tridiagonal elimination that sweeps in from both ends.

Forward elimination runs from the top row to the middle and backward
elimination from the bottom row to the middle; the two halves meet at the
central unknown (odd size) or central pair (even size).  The operations on
the lower half are the exact mirror of those on the upper half, so a
persymmetric system with a mirror-symmetric right-hand side yields a
bitwise mirror-symmetric solution.

For an M-matrix (positive diagonal, nonpositive off-diagonals, diagonally
dominant by columns) every intermediate quantity is a sum of nonnegative
terms, so a nonnegative right-hand side gives a nonnegative solution in
floating point, not just in exact arithmetic.
"""

import numpy as np
from numba import njit

__all__ = ["solve_tridiagonal", "TridiagonalBreakdown"]


class TridiagonalBreakdown(ArithmeticError):
    pass


@njit(cache=True)
def _twisted_solve(lower, diag, upper, rhs, out):
    """Solve in place; returns the smallest pivot encountered.

    ``lower[i]`` multiplies ``x[i-1]`` (``lower[0]`` unused), ``upper[i]``
    multiplies ``x[i+1]`` (``upper[n-1]`` unused).
    """
    n = diag.shape[0]
    bf = np.empty(n)
    df = np.empty(n)
    bb = np.empty(n)
    db = np.empty(n)
    if n % 2 == 1:
        mid = n // 2
        top_end = mid  # rows 0..mid-1 eliminated from above
        bot_end = mid  # rows n-1..mid+1 eliminated from below
    else:
        top_end = n // 2  # rows 0..n/2-1
        bot_end = n // 2 - 1  # rows n-1..n/2
    min_pivot = np.inf

    bf[0] = diag[0]
    df[0] = rhs[0]
    for i in range(1, top_end):
        w = lower[i] / bf[i - 1]
        bf[i] = diag[i] - w * upper[i - 1]
        df[i] = rhs[i] - w * df[i - 1]
    bb[n - 1] = diag[n - 1]
    db[n - 1] = rhs[n - 1]
    for i in range(n - 2, bot_end, -1):
        w = upper[i] / bb[i + 1]
        bb[i] = diag[i] - w * lower[i + 1]
        db[i] = rhs[i] - w * db[i + 1]

    for i in range(top_end):
        if bf[i] < min_pivot:
            min_pivot = bf[i]
    for i in range(bot_end + 1, n):
        if bb[i] < min_pivot:
            min_pivot = bb[i]

    if n % 2 == 1:
        mid = n // 2
        piv = diag[mid]
        r = rhs[mid]
        if mid > 0:
            wl = lower[mid] / bf[mid - 1]
            wu = upper[mid] / bb[mid + 1]
            piv = diag[mid] - wl * upper[mid - 1] - wu * lower[mid + 1]
            r = rhs[mid] - wl * df[mid - 1] - wu * db[mid + 1]
        if piv < min_pivot:
            min_pivot = piv
        out[mid] = r / piv
        lo = mid - 1
        hi = mid + 1
    else:
        k = n // 2 - 1
        det = bf[k] * bb[k + 1] - upper[k] * lower[k + 1]
        if det < min_pivot:
            min_pivot = det
        out[k] = (df[k] * bb[k + 1] - upper[k] * db[k + 1]) / det
        out[k + 1] = (bf[k] * db[k + 1] - lower[k + 1] * df[k]) / det
        lo = k - 1
        hi = k + 2

    for i in range(lo, -1, -1):
        out[i] = (df[i] - upper[i] * out[i + 1]) / bf[i]
    for i in range(hi, n):
        out[i] = (db[i] - lower[i] * out[i - 1]) / bb[i]
    return min_pivot


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve the tridiagonal system; raises :class:`TridiagonalBreakdown` on a nonpositive pivot."""
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    n = diag.shape[0]
    if not (lower.shape == upper.shape == rhs.shape == (n,)) or n < 1:
        raise ValueError("lower, diag, upper and rhs must be 1-D arrays of equal length")
    out = np.empty(n)
    try:
        min_pivot = _twisted_solve(lower, diag, upper, rhs, out)
    except ZeroDivisionError:
        raise TridiagonalBreakdown("zero pivot") from None
    if not min_pivot > 0.0:
        raise TridiagonalBreakdown(f"nonpositive pivot {min_pivot!r}")
    return out
