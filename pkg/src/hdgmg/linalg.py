"""Sparse assembly helpers, preconditioned CG with Lanczos bookkeeping, and a
dense Cholesky coarse solver.

Matrices are scipy CSR; the conjugate gradient tracks its alpha/beta
coefficients so the extreme eigenvalues of the preconditioned operator (and
hence a condition number estimate) come for free from the associated
symmetric tridiagonal matrix.
"""

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class IndefinitePreconditionerError(RuntimeError):
    """Raised when CG observes a negative preconditioner or operator pairing.

    This is the mechanism that turns an indefinite multigrid preconditioner
    into a reported `N/A` outcome instead of a silent wrong answer.
    """


class NotConvergedError(RuntimeError):
    def __init__(self, iterations, rel_residual):
        super().__init__(f"no convergence in {iterations} iterations "
                         f"(relative residual {rel_residual:.3e})")
        self.iterations = iterations
        self.rel_residual = rel_residual


def assemble_from_triplets(n, triplets, m=None):
    """CSR matrix from (row, col, value) triplets; duplicates are summed.

    `triplets` is either an iterable of tuples or a (rows, cols, vals) triple
    of arrays.  Summation order is fixed by (row, col, insertion order), so
    results are bit-reproducible run to run.
    """
    if isinstance(triplets, tuple) and len(triplets) == 3:
        rows, cols, vals = (np.asarray(a) for a in triplets)
    else:
        data = list(triplets)
        rows = np.array([t[0] for t in data], dtype=np.int64)
        cols = np.array([t[1] for t in data], dtype=np.int64)
        vals = np.array([t[2] for t in data], dtype=np.float64)
    m = n if m is None else m
    if len(rows) and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise IndexError("triplet index out of range")
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    mat.sum_duplicates()
    return mat


def _as_operator(A):
    if A is None:
        return None
    if sp.issparse(A) or isinstance(A, np.ndarray):
        return lambda x: A @ x
    if callable(A):
        return A
    raise TypeError("expected a matrix or a callable operator")


class PcgResult:
    def __init__(self, x, iterations, converged, residuals, alphas, betas):
        self.x = x
        self.iterations = iterations
        self.converged = converged
        self.residuals = residuals
        self.alphas = alphas
        self.betas = betas

    def lanczos_tridiagonal(self):
        """Diagonal and off-diagonal of the Lanczos matrix built from the CG
        coefficients."""
        a = np.asarray(self.alphas)
        b = np.asarray(self.betas)
        k = len(a)
        diag = 1.0 / a
        diag[1:] += b[: k - 1] / a[: k - 1]
        off = np.sqrt(b[: k - 1]) / a[: k - 1]
        return diag, off


def pcg(A, b, M=None, rel_tol=1e-8, max_iter=500, x0=None, raise_on_fail=False):
    """Preconditioned conjugate gradient for SPD A (and SPD M).

    Stops when ||r||/||b|| <= rel_tol.  A negative p'Ap or r'Mr pairing
    aborts with IndefinitePreconditionerError.  Non-convergence is reported
    in the result unless raise_on_fail is set.
    """
    apply_A = _as_operator(A)
    apply_M = _as_operator(M) if M is not None else (lambda r: r)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x) if x0 is not None else b.copy()
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return PcgResult(np.zeros_like(b), 0, True, [0.0], [], [])
    residuals = [np.linalg.norm(r) / norm_b]
    if residuals[0] <= rel_tol:
        return PcgResult(x, 0, True, residuals, [], [])

    z = apply_M(r)
    rz = float(r @ z)
    if rz < 0.0:
        raise IndefinitePreconditionerError(f"r'Mr = {rz:.3e} < 0")
    p = z.copy()
    alphas, betas = [], []
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise IndefinitePreconditionerError(f"p'Ap = {pAp:.3e} <= 0")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        alphas.append(alpha)
        residuals.append(np.linalg.norm(r) / norm_b)
        if residuals[-1] <= rel_tol:
            betas.append(0.0)
            return PcgResult(x, it, True, residuals, alphas, betas)
        z = apply_M(r)
        rz_new = float(r @ z)
        if rz_new < 0.0:
            raise IndefinitePreconditionerError(f"r'Mr = {rz_new:.3e} < 0")
        beta = rz_new / rz
        betas.append(beta)
        p = z + beta * p
        rz = rz_new
    if raise_on_fail:
        raise NotConvergedError(max_iter, residuals[-1])
    return PcgResult(x, max_iter, False, residuals, alphas, betas)


def estimate_condition_number(diag, off=None):
    """Ratio of extreme eigenvalues of a symmetric tridiagonal matrix.

    Accepts either (diag, off) arrays or a PcgResult.
    """
    if isinstance(diag, PcgResult):
        diag, off = diag.lanczos_tridiagonal()
    diag = np.asarray(diag, dtype=float)
    if len(diag) < 2:
        raise ValueError("need at least 2 recorded iterations")
    off = np.asarray(off, dtype=float)
    eig = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    return float(eig[-1] / eig[0])


class CoarseSolver:
    """Dense Cholesky factorization of the coarsest-level SPD matrix."""

    def __init__(self, A):
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        try:
            self._factor = scipy.linalg.cho_factor(dense, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise ValueError(f"coarse matrix is not SPD: {exc}") from exc
        self.shape = dense.shape

    def solve(self, b):
        return scipy.linalg.cho_solve(self._factor, b)

    def __call__(self, b):
        return self.solve(b)


def coarse_direct_solve(A):
    return CoarseSolver(A)


def check_symmetric(A, tol=1e-12):
    """True when ||A - A'||_max <= tol * ||A||_max."""
    if sp.issparse(A):
        diff = (A - A.T).tocoo()
        num = np.abs(diff.data).max() if diff.nnz else 0.0
        den = np.abs(A.data).max()
    else:
        num = np.abs(A - A.T).max()
        den = np.abs(A).max()
    return num <= tol * den
