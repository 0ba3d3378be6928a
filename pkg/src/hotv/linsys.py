"""Linear forward models: sparse random sampling operators, spectral-norm
estimation by power iteration, and rescaling so the operator has unit
spectral norm."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

# entries per generation chunk, kept machine-independent so a seed always
# produces identical triplets
_CHUNK_ENTRIES = 1 << 22


class LinearOperator:
    """A forward/adjoint map pair with explicit dimensions.

    Matrix-backed operators (the usual case) keep a CSR handle, can be
    rescaled cheaply and serialized as coordinate triplets.  Matrix-free
    operators are built from two callables.
    """

    def __init__(self, m: int, n: int,
                 matvec: Callable[[np.ndarray], np.ndarray] | None = None,
                 rmatvec: Callable[[np.ndarray], np.ndarray] | None = None,
                 matrix=None):
        self.m = int(m)
        self.n = int(n)
        if matrix is not None:
            self._mat = sp.csr_matrix(matrix)
            if self._mat.shape != (self.m, self.n):
                raise ValueError(
                    f"matrix shape {self._mat.shape} != ({self.m}, {self.n})"
                )
            self._mat_t = sp.csr_matrix(self._mat.T)
            self._matvec = self._mat.dot
            self._rmatvec = self._mat_t.dot
        else:
            if matvec is None or rmatvec is None:
                raise ValueError("need either a matrix or both callables")
            self._mat = None
            self._matvec = matvec
            self._rmatvec = rmatvec

    @classmethod
    def from_matrix(cls, matrix) -> "LinearOperator":
        matrix = sp.csr_matrix(matrix)
        return cls(matrix.shape[0], matrix.shape[1], matrix=matrix)

    @classmethod
    def identity(cls, n: int) -> "LinearOperator":
        return cls.from_matrix(sp.identity(n, format="csr"))

    @classmethod
    def diagonal(cls, d) -> "LinearOperator":
        return cls.from_matrix(sp.diags(np.asarray(d, dtype=float), format="csr"))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def matrix(self):
        """CSR matrix backing this operator, or None if matrix-free."""
        return self._mat

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"forward input shape {x.shape} != ({self.n},)")
        return self._matvec(x)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"adjoint input shape {y.shape} != ({self.m},)")
        return self._rmatvec(y)

    def scaled(self, factor: float) -> "LinearOperator":
        if self._mat is not None:
            return LinearOperator.from_matrix(self._mat * factor)
        fwd, adj = self._matvec, self._rmatvec
        return LinearOperator(self.m, self.n,
                              matvec=lambda x: factor * fwd(x),
                              rmatvec=lambda y: factor * adj(y))

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzero entries as (row, col, value) arrays in row-major order."""
        if self._mat is None:
            raise ValueError("matrix-free operator has no stored triplets")
        coo = self._mat.tocoo()
        # CSR -> COO is already row-major with sorted columns per row
        return coo.row.copy(), coo.col.copy(), coo.data.copy()


@dataclass(frozen=True)
class NormalizedSystem:
    """Operator rescaled to unit spectral norm with correspondingly scaled
    data; ``scale`` is the original norm."""

    operator: LinearOperator
    data: np.ndarray
    scale: float


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    estimates: tuple[float, ...]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.estimates)


def random_sampling_operator(m: int, n: int, density: float,
                             seed: int) -> LinearOperator:
    """Random m x n sampling matrix: each entry is independently nonzero
    with probability ``density`` and nonzero values are Uniform[0, 1].

    Fully determined by ``seed``.  Rows are generated in fixed-size chunks
    so large operators never materialize a dense mask.
    """
    if not (0.0 < density <= 1.0):
        raise ValueError(f"density must be in (0, 1], got {density}")
    if m < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got ({m}, {n})")
    rng = np.random.default_rng(seed)
    chunk_rows = max(1, _CHUNK_ENTRIES // n)
    rows_parts, cols_parts, vals_parts = [], [], []
    for start in range(0, m, chunk_rows):
        c = min(chunk_rows, m - start)
        mask = rng.random((c, n)) < density
        r_idx, c_idx = np.nonzero(mask)
        vals = rng.random(r_idx.size)
        rows_parts.append((r_idx + start).astype(np.int64))
        cols_parts.append(c_idx.astype(np.int64))
        vals_parts.append(vals)
    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    return LinearOperator(m, n, matrix=mat)


def power_iteration(op: LinearOperator, tol: float = 1e-6, max_iter: int = 500,
                    seed: int = 0) -> PowerIterationResult:
    """Largest singular value of ``op`` by power iteration on the Gram
    operator, from a seeded random start.

    Each estimate is sqrt of the Rayleigh quotient of A^T A, a sequence
    that is non-decreasing for the PSD Gram operator.  Iteration stops when
    successive estimates differ by less than ``tol`` relative.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.random(op.n)
    nv = np.linalg.norm(v)
    if nv == 0.0:  # pragma: no cover - all-zero draw is practically impossible
        v = np.ones(op.n)
        nv = np.linalg.norm(v)
    v /= nv
    redrawn = False
    estimates: list[float] = []
    prev = None
    converged = False
    for _ in range(max_iter):
        z = op.forward(v)
        rayleigh = float(z @ z)
        if rayleigh < 1e-14 and not redrawn:
            # start vector (numerically) orthogonal to the top subspace,
            # or a zero operator; re-draw once before concluding
            v = rng.random(op.n)
            v /= np.linalg.norm(v)
            redrawn = True
            z = op.forward(v)
            rayleigh = float(z @ z)
        est = float(np.sqrt(rayleigh))
        estimates.append(est)
        if est == 0.0:
            converged = True
            break
        if prev is not None and abs(est - prev) < tol * est:
            converged = True
            break
        prev = est
        w = op.adjoint(z)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            converged = True
            break
        v = w / nw
    return PowerIterationResult(estimates[-1], tuple(estimates), converged)


def spectral_norm(op: LinearOperator, tol: float = 1e-6, max_iter: int = 500,
                  seed: int = 0) -> float:
    """Spectral norm estimate; warns if it is zero or did not converge."""
    result = power_iteration(op, tol=tol, max_iter=max_iter, seed=seed)
    if result.value == 0.0:
        warnings.warn("operator appears to be zero", stacklevel=2)
    elif not result.converged:
        warnings.warn(
            f"power iteration did not converge in {max_iter} iterations; "
            f"returning last estimate {result.value:.6g}",
            stacklevel=2,
        )
    return result.value


def normalize_system(op: LinearOperator, b: np.ndarray,
                     tol: float = 1e-6) -> NormalizedSystem:
    """Rescale to unit spectral norm: returns (A/s, b/s, s) with
    s = spectral_norm(A).  The minimizer of the regularized objective is
    recovered on the rescaled system by using lambda' = lambda * s**2."""
    b = np.asarray(b, dtype=float)
    if b.shape != (op.m,):
        raise ValueError(f"data shape {b.shape} != ({op.m},)")
    s = spectral_norm(op, tol=tol)
    if s == 0.0:
        raise ValueError("cannot normalize a zero operator")
    return NormalizedSystem(operator=op.scaled(1.0 / s), data=b / s, scale=s)


def save_operator_csv(op: LinearOperator, path) -> None:
    """Write `m,n,nnz` header then one `row,col,value` line per nonzero.

    Values use shortest round-trip decimal formatting, so loading restores
    them bit-exactly.
    """
    rows, cols, vals = op.triplets()
    with open(path, "w") as fh:
        fh.write(f"{op.m},{op.n},{vals.size}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r},{c},{float(v)!r}\n")


def load_operator_csv(path) -> LinearOperator:
    with open(path) as fh:
        m, n, nnz = (int(x) for x in fh.readline().strip().split(","))
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for i in range(nnz):
            r, c, v = fh.readline().strip().split(",")
            rows[i], cols[i], vals[i] = int(r), int(c), float(v)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    return LinearOperator(m, n, matrix=mat)
