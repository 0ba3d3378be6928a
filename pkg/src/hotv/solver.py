"""ADMM solver for the difference-regularized least-squares objective

    min_f  lambda/2 ||A f - b||_2^2 + ||T_k f||_1

Note the parameter convention: lambda multiplies the data-fidelity term,
so LARGER lambda trusts the data MORE.  Some texts put the weight on the
regularizer instead; everything here follows the fidelity-weight form.

The solver splits w ~ T_k f and alternates a conjugate-gradient solve of
(lambda A^T A + beta T^T T) f = lambda A^T b + beta T^T (w - u), the
soft-threshold update w = shrink(T f + u, 1/beta), and the multiplier
step u += T f - w.

The objective trace is not strictly monotone: ADMM trades primal and dual
progress, and isolated objective increases up to a couple of percent
(relative) occur even with near-exact inner solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linsys import NormalizedSystem
from .operators import PATransform, pa_forward, pa_matrix, pa_seminorm
from .signals import relative_data_error, save_grid_csv

# below this unknown count the CG operator lam*A^T A + beta*T^T T is
# assembled densely once per solve (same iteration, far fewer array ops)
_DENSE_NORMAL_LIMIT = 1024


class SolverError(RuntimeError):
    """Raised when the iteration produces non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    """ADMM hyperparameters.

    ``lam`` weights the data-fidelity term; ``beta`` is the augmented
    Lagrangian penalty (defaults assume the system has been normalized to
    unit operator norm).  ``seed`` is kept for contract completeness: the
    default initialization f0 = A^T b is deterministic and ignores it.
    """

    order: int
    lam: float
    beta: float = 32.0
    boundary: str = "periodic"
    outer_max: int = 250
    outer_tol: float = 1e-5
    inner_max: int = 40
    inner_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0 or self.beta <= 0:
            raise ValueError("lam and beta must be positive")
        if self.outer_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.outer_max < 1 or self.inner_max < 1:
            raise ValueError("iteration limits must be positive")

    def with_lambda(self, lam: float) -> "SolverConfig":
        return SolverConfig(order=self.order, lam=lam, beta=self.beta,
                            boundary=self.boundary, outer_max=self.outer_max,
                            outer_tol=self.outer_tol, inner_max=self.inner_max,
                            inner_tol=self.inner_tol, seed=self.seed)


@dataclass(frozen=True)
class SolverResult:
    f: np.ndarray = field(repr=False)
    objective_trace: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    rel_data_error: float
    seminorm: float


def shrink(x: np.ndarray, mu: float) -> np.ndarray:
    """Soft threshold: sign(x) * max(|x| - mu, 0), elementwise."""
    if mu <= 0:
        raise ValueError("shrink threshold must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - mu, 0.0)


def objective(f: np.ndarray, system: NormalizedSystem, t: PATransform,
              lam: float) -> float:
    """lam/2 ||A f - b||^2 + ||T f||_1 evaluated directly."""
    f = np.asarray(f, dtype=float)
    resid = system.operator.forward(f.ravel()) - system.data
    return 0.5 * lam * float(resid @ resid) + pa_seminorm(f, t)


def _cg(apply_h, rhs, x0, tol, max_iter):
    """Conjugate gradients for the SPD system H x = rhs, warm-started.

    Returns (x, breakdown).  Hitting max_iter is normal inexact-ADMM
    behavior, not breakdown; breakdown means a non-positive curvature
    value, which signals a singular or indefinite H.
    """
    x = x0.copy()
    r = rhs - apply_h(x)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), False
    rr = float(r @ r)
    if np.sqrt(rr) <= tol * rhs_norm:
        return x, False
    p = r.copy()
    for _ in range(max_iter):
        hp = apply_h(p)
        php = float(p @ hp)
        if php <= 0.0 or not np.isfinite(php):
            return x, True
        alpha = rr / php
        x += alpha * p
        r -= alpha * hp
        rr_new = float(r @ r)
        if np.sqrt(rr_new) <= tol * rhs_norm:
            return x, False
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, False


def hotv_reconstruct(system: NormalizedSystem, cfg: SolverConfig,
                     shape: tuple[int, ...] | None = None) -> SolverResult:
    """Minimize lam/2 ||A f - b||^2 + ||T_k f||_1 by ADMM.

    ``shape`` gives the grid geometry of the unknown; by default the
    unknown is the 1D vector of length A's column count.  Deterministic:
    the same system and config always produce the same result.
    """
    a = system.operator
    b = system.data
    if shape is None:
        shape = (a.n,)
    t = PATransform(cfg.order, shape, cfg.boundary)
    if t.domain_size != a.n:
        raise ValueError(f"grid {shape} does not match operator columns {a.n}")

    lam, beta = cfg.lam, cfg.beta

    def t_forward(x):
        return pa_forward(x.reshape(shape), t)

    def t_adjoint(g):
        return t.adjoint(g).ravel()

    if a.matrix is not None and a.n <= _DENSE_NORMAL_LIMIT:
        t_mat = pa_matrix(t)
        normal = (lam * (a.matrix.T @ a.matrix)
                  + beta * (t_mat.T @ t_mat)).toarray()

        def apply_h(x):
            return normal @ x
    else:
        def apply_h(x):
            return lam * a.adjoint(a.forward(x)) + beta * t_adjoint(t_forward(x))

    atb = a.adjoint(b)
    f = atb.copy()
    w = t_forward(f)
    u = np.zeros_like(w)

    trace = []
    converged = False
    iterations = 0
    for it in range(cfg.outer_max):
        rhs = lam * atb + beta * t_adjoint(w - u)
        f_new, breakdown = _cg(apply_h, rhs, f, cfg.inner_tol, cfg.inner_max)
        if not np.all(np.isfinite(f_new)):
            raise SolverError(f"non-finite iterate at outer iteration {it}")
        tf = t_forward(f_new)
        w = shrink(tf + u, 1.0 / beta)
        u += tf - w

        resid = a.forward(f_new) - b
        trace.append(0.5 * lam * float(resid @ resid)
                     + float(np.abs(tf).sum()))
        iterations = it + 1
        if breakdown:
            f = f_new
            break
        change = float(np.linalg.norm(f_new - f))
        denom = max(float(np.linalg.norm(f)), 1e-12)
        f = f_new
        # skip the test on the very first pass: w and u have not moved yet,
        # so f can coincide with its init while far from the minimizer
        if it >= 1 and change / denom < cfg.outer_tol:
            converged = True
            break

    f_grid = f.reshape(shape)
    return SolverResult(
        f=f_grid,
        objective_trace=np.array(trace),
        iterations=iterations,
        converged=converged,
        rel_data_error=relative_data_error(system, f),
        seminorm=pa_seminorm(f_grid, t),
    )


def least_squares(system: NormalizedSystem, max_iter: int = 200,
                  tol: float = 1e-8) -> np.ndarray:
    """Baseline solve of the normal equations A^T A f = A^T b by CG."""
    a = system.operator
    atb = a.adjoint(system.data)
    f, _ = _cg(lambda x: a.adjoint(a.forward(x)), atb,
               np.zeros(a.n), tol, max_iter)
    return f


def save_result(result: SolverResult, cfg: SolverConfig, metrics_path,
                vector_path) -> None:
    """Persist a solve: one CSV metrics row (with geometry, order, lambda)
    plus the reconstruction itself as a CSV grid."""
    geometry = "x".join(str(d) for d in result.f.shape)
    with open(metrics_path, "w") as fh:
        fh.write("geometry,order,lambda,iterations,converged,"
                 "rel_data_error,seminorm,final_objective\n")
        fh.write(
            f"{geometry},{cfg.order},{float(cfg.lam)!r},{result.iterations},"
            f"{int(result.converged)},{float(result.rel_data_error)!r},"
            f"{float(result.seminorm)!r},"
            f"{float(result.objective_trace[-1])!r}\n"
        )
    save_grid_csv(result.f, vector_path)
