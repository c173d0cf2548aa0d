"""Numba kernels for the strictly sequential solver inner loops.

Gauss-Seidel sweeps and multiplicative block sweeps cannot be vectorized with
numpy without changing their mathematics (ordering matters), so they live
here as jitted CSR routines, together with packed-Cholesky helpers for the
cached block factorizations used by patch smoothers and local corrections.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gs_forward(indptr, indices, data, diag, b, x):
    n = len(b)
    for i in range(n):
        s = b[i]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s -= data[k] * x[j]
        x[i] = s / diag[i]


@njit(cache=True)
def gs_backward(indptr, indices, data, diag, b, x):
    n = len(b)
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s -= data[k] * x[j]
        x[i] = s / diag[i]


@njit(cache=True)
def _chol_packed(a, s):
    """In-place packed (row-major lower) Cholesky; returns -1 or the bad pivot."""
    for i in range(s):
        base_i = i * (i + 1) // 2
        for j in range(i + 1):
            base_j = j * (j + 1) // 2
            acc = a[base_i + j]
            for k in range(j):
                acc -= a[base_i + k] * a[base_j + k]
            if i == j:
                if acc <= 0.0:
                    return i
                a[base_i + j] = np.sqrt(acc)
            else:
                a[base_i + j] = acc / a[base_j + j]
    return -1


@njit(cache=True)
def _chol_solve_packed(a, s, rhs):
    for i in range(s):
        base = i * (i + 1) // 2
        acc = rhs[i]
        for k in range(i):
            acc -= a[base + k] * rhs[k]
        rhs[i] = acc / a[base + i]
    for i in range(s - 1, -1, -1):
        acc = rhs[i]
        for k in range(i + 1, s):
            acc -= a[k * (k + 1) // 2 + i] * rhs[k]
        rhs[i] = acc / a[i * (i + 1) // 2 + i]


@njit(cache=True)
def factor_blocks(indptr, indices, data, bptr, bdofs, fptr, factors):
    """Gather each block's dense submatrix from CSR and Cholesky-factor it.

    Blocks are given as CSR-style (bptr, bdofs) with each block's DOFs sorted.
    Packed lower factors are written into `factors` at offsets `fptr`.
    Returns the index of the first non-SPD block, or -1.
    """
    nblocks = len(bptr) - 1
    for bl in range(nblocks):
        lo, hi = bptr[bl], bptr[bl + 1]
        s = hi - lo
        base = fptr[bl]
        for r in range(s):
            i = bdofs[lo + r]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                # binary search for j within the block's sorted DOF list
                a, c = lo, hi
                while a < c:
                    mid = (a + c) // 2
                    if bdofs[mid] < j:
                        a = mid + 1
                    else:
                        c = mid
                if a < hi and bdofs[a] == j:
                    col = a - lo
                    if col <= r:
                        factors[base + r * (r + 1) // 2 + col] = data[k]
        bad = _chol_packed(factors[base:base + s * (s + 1) // 2], s)
        if bad >= 0:
            return bl
    return -1


@njit(cache=True)
def block_jacobi_apply(bptr, bdofs, fptr, factors, damping, r, out, scratch):
    """out += damping * sum over blocks of scatter(block_solve(r|block))."""
    nblocks = len(bptr) - 1
    for bl in range(nblocks):
        lo, hi = bptr[bl], bptr[bl + 1]
        s = hi - lo
        for k in range(s):
            scratch[k] = r[bdofs[lo + k]]
        _chol_solve_packed(factors[fptr[bl]:], s, scratch[:s])
        for k in range(s):
            out[bdofs[lo + k]] += damping * scratch[k]


@njit(cache=True)
def block_gs_sweep(indptr, indices, data, bptr, bdofs, fptr, factors, b, x,
                   scratch, reverse):
    """Multiplicative block sweep: per block solve on the current residual."""
    nblocks = len(bptr) - 1
    for t in range(nblocks):
        bl = nblocks - 1 - t if reverse else t
        lo, hi = bptr[bl], bptr[bl + 1]
        s = hi - lo
        for k in range(s):
            i = bdofs[lo + k]
            acc = b[i]
            for t in range(indptr[i], indptr[i + 1]):
                acc -= data[t] * x[indices[t]]
            scratch[k] = acc
        _chol_solve_packed(factors[fptr[bl]:], s, scratch[:s])
        for k in range(s):
            x[bdofs[lo + k]] += scratch[k]


class BlockSet:
    """A list of (possibly overlapping) DOF blocks with cached Cholesky factors."""

    def __init__(self, bptr, bdofs):
        self.bptr = np.ascontiguousarray(bptr, dtype=np.int64)
        self.bdofs = np.ascontiguousarray(bdofs, dtype=np.int64)
        sizes = np.diff(self.bptr)
        self.max_size = int(sizes.max()) if len(sizes) else 0
        self.fptr = np.zeros(len(self.bptr), dtype=np.int64)
        np.cumsum(sizes * (sizes + 1) // 2, out=self.fptr[1:])
        self.factors = None

    @property
    def n_blocks(self):
        return len(self.bptr) - 1

    def factorize(self, A):
        self.factors = np.zeros(self.fptr[-1])
        bad = factor_blocks(A.indptr, A.indices, A.data,
                            self.bptr, self.bdofs, self.fptr, self.factors)
        if bad >= 0:
            raise ValueError(f"block {bad} is not SPD")
        return self

    def solve_blocks(self, r, damping=1.0, out=None):
        if out is None:
            out = np.zeros_like(r)
        scratch = np.empty(self.max_size)
        block_jacobi_apply(self.bptr, self.bdofs, self.fptr, self.factors,
                           damping, r, out, scratch)
        return out

    def gs_sweep(self, A, b, x, reverse=False):
        scratch = np.empty(self.max_size)
        block_gs_sweep(A.indptr, A.indices, A.data, self.bptr, self.bdofs,
                       self.fptr, self.factors, b, x, scratch, reverse)
