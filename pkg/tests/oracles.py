"""Independent reference implementations used only as test oracles.

Everything here is built from first principles (explicit loops, dense
matrices, generic convex solvers) without calling into the package code
paths under test.
"""

from __future__ import annotations

import math

import numpy as np


def pascal_row(k: int) -> list[int]:
    """Row k of Pascal's triangle by pure additive accumulation."""
    row = [1]
    for _ in range(k):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return row


def dense_pa_matrix(order: int, n: int, boundary: str) -> np.ndarray:
    """Explicit dense order-k difference matrix, built entry by entry."""
    coeffs = [(-1) ** (order + m) * math.comb(order, m) for m in range(order + 1)]
    if boundary == "periodic":
        mat = np.zeros((n, n))
        for j in range(n):
            for m in range(order + 1):
                mat[j, (j + m) % n] += coeffs[m]
    elif boundary == "valid":
        mat = np.zeros((n - order, n))
        for j in range(n - order):
            for m in range(order + 1):
                mat[j, j + m] += coeffs[m]
    else:
        raise ValueError(boundary)
    return mat


def dense_objective(f, A, b, lam, order, boundary="valid"):
    """Direct evaluation of lam/2 ||Af-b||^2 + ||T_k f||_1 via dense matrices."""
    T = dense_pa_matrix(order, len(f), boundary)
    r = A @ f - b
    return 0.5 * lam * float(r @ r) + float(np.abs(T @ f).sum())


def reference_min_objective_batch(problems, iters=1_000_000):
    """Minimal objective values of lam/2 ||Af-b||^2 + ||T_k f||_1, valid mode.

    Reference solver: accelerated proximal gradient (with gradient-scheme
    restarts) run for a fixed iteration budget.  The composite objective is
    made prox-friendly by the exact change of variables f = pinv(T) w + N q,
    where N spans the null space of T (polynomials of degree < k): since the
    valid-mode T has full row rank, (w, q) ranges over all of R^n and the
    nonsmooth term becomes the separable ||w||_1.  All linear algebra is
    dense and batched across problem instances, which must share (m, n).

    ``problems`` is a sequence of (A_dense, b, lam, order) tuples.  Returns
    an array of final objective values, one per problem.
    """
    nb = len(problems)
    m, n = np.asarray(problems[0][0]).shape
    amat = np.empty((nb, m, n))
    bs = np.empty((nb, m))
    lams = np.empty((nb, 1))
    l1_mask = np.zeros((nb, n), dtype=bool)
    for i, (A, b, lam, order) in enumerate(problems):
        A = np.asarray(A, dtype=float)
        T = dense_pa_matrix(order, n, "valid")
        vand = np.vander(np.linspace(-1.0, 1.0, n), N=order, increasing=True)
        null_basis, _ = np.linalg.qr(vand)
        change = np.hstack([np.linalg.pinv(T), null_basis])
        amat[i] = A @ change
        bs[i] = np.asarray(b, dtype=float)
        lams[i] = lam
        l1_mask[i, : n - order] = True

    lip = lams[:, 0] * np.linalg.svd(amat, compute_uv=False)[:, 0] ** 2
    step = (1.0 / lip)[:, None]

    z = np.zeros((nb, n))
    y = z.copy()
    tk = np.ones(nb)
    for _ in range(iters):
        resid = np.einsum("bmn,bn->bm", amat, y) - bs
        grad = lams * np.einsum("bmn,bm->bn", amat, resid)
        znew = y - step * grad
        shrunk = np.sign(znew) * np.maximum(np.abs(znew) - step, 0.0)
        znew = np.where(l1_mask, shrunk, znew)
        tknew = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        ynew = znew + ((tk - 1.0) / tknew)[:, None] * (znew - z)
        restart = np.einsum("bn,bn->b", y - znew, znew - z) > 0.0
        tknew[restart] = 1.0
        ynew[restart] = znew[restart]
        z, y, tk = znew, ynew, tknew

    resid = np.einsum("bmn,bn->bm", amat, z) - bs
    return (
        0.5 * lams[:, 0] * np.einsum("bm,bm->b", resid, resid)
        + np.abs(np.where(l1_mask, z, 0.0)).sum(axis=1)
    )


def reference_min_objective(A, b, lam, order, iters=1_000_000) -> float:
    return float(reference_min_objective_batch([(A, b, lam, order)], iters)[0])
