"""Regularization-weight selection: the power-of-two scaling rule across
transform orders, and the brute-force search for the weight whose
reconstruction lands closest to a known ground truth."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linsys import NormalizedSystem
from .operators import PATransform
from .solver import SolverConfig, hotv_reconstruct

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def scale_lambda(lambda1: float, k: int) -> float:
    """Project a TV (order-1) weight to order k: 2^(k-1) * lambda1.

    Powers of two are exact in binary floating point, so the scaling
    introduces no rounding.
    """
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")
    return lambda1 * 2.0 ** (k - 1)


def scaling_relative_error(lambda_opt_k: float, lambda_opt_1: float,
                           k: int) -> float:
    """(2^(1-k) * lambda_opt_k - lambda_opt_1) / lambda_opt_1.

    Negative values mean the rescaled order-k optimum fell below the TV
    optimum.
    """
    if lambda_opt_1 <= 0:
        raise ValueError("order-1 optimum must be positive")
    return (2.0 ** (1 - k) * lambda_opt_k - lambda_opt_1) / lambda_opt_1


@dataclass(frozen=True)
class LambdaSearchSpec:
    """Log-uniform coarse grid followed by golden-section refinement."""

    grid_lo: float = 1e-2
    grid_hi: float = 1e4
    coarse_points: int = 25
    refine_tol: float = 0.05
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(order=1, lam=1.0)
    )

    def __post_init__(self):
        if not (0 < self.grid_lo < self.grid_hi):
            raise ValueError("need 0 < grid_lo < grid_hi")
        if self.coarse_points < 8:
            raise ValueError("coarse_points must be at least 8")
        if not (0.0 < self.refine_tol < 0.5):
            raise ValueError("refine_tol must lie in (0, 0.5)")


@dataclass(frozen=True)
class LambdaSearchResult:
    lambda_opt: float
    error: float
    curve: tuple[tuple[float, float], ...]  # all sampled (lambda, error)
    boundary: str | None  # "low"/"high" if the best sample sits on an edge
    extended: bool  # grid was widened by one decade


def _log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


def minimize_scalar_log(evaluate, spec: LambdaSearchSpec,
                        coarse_map=None) -> LambdaSearchResult:
    """Minimize a positive-argument scalar function over a log grid.

    Coarse pass: ``coarse_points`` log-uniform samples of ``evaluate`` on
    [grid_lo, grid_hi]; ``coarse_map`` (same contract as ``map``) lets the
    caller evaluate them concurrently.  If the best coarse sample sits on a
    grid edge the grid is widened once by one decade on that side.
    Refinement: golden-section in log space between the neighbors of the
    best coarse sample, sequential, stopping when the bracket width drops
    below ``refine_tol`` relative to the incumbent.  Returns the best
    sample seen anywhere.
    """
    if coarse_map is None:
        coarse_map = map
    grid = list(_log_grid(spec.grid_lo, spec.grid_hi, spec.coarse_points))
    samples: dict[float, float] = {}

    def run_coarse(points):
        todo = [lam for lam in points if lam not in samples]
        for lam, err in zip(todo, coarse_map(evaluate, todo)):
            samples[lam] = float(err)

    run_coarse(grid)
    per_decade = (spec.coarse_points - 1) / math.log10(spec.grid_hi
                                                       / spec.grid_lo)
    extended = False
    best = min(grid, key=lambda lam: samples[lam])
    if best == grid[0]:
        extra_points = max(2, math.ceil(per_decade)) + 1
        extra = list(_log_grid(grid[0] / 10.0, grid[0], extra_points))[:-1]
        run_coarse(extra)
        grid = extra + grid
        extended = True
    elif best == grid[-1]:
        extra_points = max(2, math.ceil(per_decade)) + 1
        extra = list(_log_grid(grid[-1], grid[-1] * 10.0, extra_points))[1:]
        run_coarse(extra)
        grid = grid + extra
        extended = True

    best_idx = min(range(len(grid)), key=lambda i: samples[grid[i]])
    boundary = None
    if best_idx == 0:
        boundary = "low"
    elif best_idx == len(grid) - 1:
        boundary = "high"
    else:
        # golden-section refinement on log(lambda) between the neighbors
        lo = math.log(grid[best_idx - 1])
        hi = math.log(grid[best_idx + 1])
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1 = float(evaluate(math.exp(x1)))
        f2 = float(evaluate(math.exp(x2)))
        samples[math.exp(x1)] = f1
        samples[math.exp(x2)] = f2
        while True:
            center = math.exp((lo + hi) / 2.0)
            if (math.exp(hi) - math.exp(lo)) <= spec.refine_tol * center:
                break
            if f1 <= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = float(evaluate(math.exp(x1)))
                samples[math.exp(x1)] = f1
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = float(evaluate(math.exp(x2)))
                samples[math.exp(x2)] = f2

    lam_best = min(samples, key=samples.get)
    curve = tuple(sorted(samples.items()))
    return LambdaSearchResult(lambda_opt=float(lam_best),
                              error=samples[lam_best], curve=curve,
                              boundary=boundary, extended=extended)


_SEARCH_STATE: dict = {}


def _init_search_worker(system, template, shape, truth):
    _SEARCH_STATE.update(system=system, template=template, shape=shape,
                         truth=truth)


def _search_worker(lam):
    s = _SEARCH_STATE
    res = hotv_reconstruct(s["system"], s["template"].with_lambda(lam),
                           shape=s["shape"])
    return float(np.linalg.norm(s["truth"] - res.f.ravel()))


def optimal_lambda_search(system: NormalizedSystem, t: PATransform,
                          f_true: np.ndarray, spec: LambdaSearchSpec,
                          jobs: int = 1) -> LambdaSearchResult:
    """Brute-force search for the weight minimizing the l2 distance between
    the reconstruction and ``f_true``.

    ``jobs`` > 1 runs the coarse-grid solves in worker processes; the
    golden-section refinement is inherently sequential.
    """
    f_true = np.asarray(f_true, dtype=float)
    if f_true.size != t.domain_size:
        raise ValueError(
            f"ground truth size {f_true.size} != grid size {t.domain_size}"
        )
    template = SolverConfig(order=t.order, lam=1.0, beta=spec.solver.beta,
                            boundary=t.boundary,
                            outer_max=spec.solver.outer_max,
                            outer_tol=spec.solver.outer_tol,
                            inner_max=spec.solver.inner_max,
                            inner_tol=spec.solver.inner_tol,
                            seed=spec.solver.seed)
    flat_truth = f_true.ravel()

    def evaluate(lam: float) -> float:
        res = hotv_reconstruct(system, template.with_lambda(lam),
                               shape=t.shape)
        return float(np.linalg.norm(flat_truth - res.f.ravel()))

    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_search_worker,
            initargs=(system, template, t.shape, flat_truth),
        ) as pool:
            return minimize_scalar_log(
                evaluate, spec,
                coarse_map=lambda _, lams: pool.map(_search_worker,
                                                    list(lams)),
            )
    return minimize_scalar_log(evaluate, spec)


def save_curve_csv(result: LambdaSearchResult, path) -> None:
    """Error curve as `lambda,error` CSV rows sorted by lambda."""
    with open(path, "w") as fh:
        fh.write("lambda,error\n")
        for lam, err in result.curve:
            fh.write(f"{float(lam)!r},{float(err)!r}\n")
