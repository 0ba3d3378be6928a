"""Test-problem generators and measurement utilities: random piecewise
polynomial signals, phantom images, Gaussian noise injection, and data-fit
metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SEGMENT_DEGREES = (0, 1, 2)


@dataclass(frozen=True)
class PiecewisePolynomialSignal:
    """A 1D signal that is polynomial (degree <= 2) between jump indices.

    ``jump_indices`` holds the set S = {j : samples[j+1] != samples[j]} by
    construction; segment i covers samples[boundaries[i]:boundaries[i+1]]
    and equals its stored polynomial exactly.
    """

    n: int
    jump_indices: tuple[int, ...]
    segment_orders: tuple[int, ...]
    segment_coefficients: tuple[tuple[float, ...], ...]
    samples: np.ndarray = field(repr=False)

    @property
    def boundaries(self) -> tuple[int, ...]:
        return (0,) + tuple(j + 1 for j in self.jump_indices) + (self.n,)

    def resample(self) -> np.ndarray:
        """Re-evaluate every segment polynomial; bit-identical to samples."""
        return evaluate_segments(self.n, self.boundaries,
                                 self.segment_coefficients)


def _segment_axis(length: int) -> np.ndarray:
    # local coordinate 0..1 across the segment (segments have >= 2 samples)
    return np.arange(length) / (length - 1)


def evaluate_segments(n, boundaries, coefficients) -> np.ndarray:
    out = np.empty(n)
    for i in range(len(boundaries) - 1):
        s, e = boundaries[i], boundaries[i + 1]
        t = _segment_axis(e - s)
        out[s:e] = np.polynomial.polynomial.polyval(t, coefficients[i])
    return out


def _spaced_subset(rng, lo, hi, count, gap):
    """Uniformly random sorted subset of {lo..hi} with pairwise gaps >= gap.

    Bijection trick: subtract (gap-1)*(i-1) from the i-th element, which
    maps such subsets one-to-one onto plain subsets of a shrunken range.
    """
    hi_shrunk = hi - (gap - 1) * (count - 1)
    if hi_shrunk < lo + count - 1:
        raise ValueError(
            f"cannot place {count} indices with spacing {gap} in [{lo}, {hi}]"
        )
    base = np.sort(rng.choice(np.arange(lo, hi_shrunk + 1), size=count,
                              replace=False))
    return base + (gap - 1) * np.arange(count)


def random_piecewise_polynomial(
    n: int, seed, jump_range: tuple[int, int] = (2, 20)
) -> PiecewisePolynomialSignal:
    """Random piecewise polynomial on an n-point grid.

    The jump count is uniform over ``jump_range``, jump locations are
    uniform among interior indices with minimum spacing 2, and each segment
    gets a random polynomial of degree 0, 1, or 2 (equal probability) whose
    sample values stay within [-1, 1].
    """
    if n < 32:
        raise ValueError(f"grid too small, need n >= 32, got {n}")
    lo, hi = jump_range
    if not (1 <= lo <= hi):
        raise ValueError(f"bad jump range {jump_range}")
    rng = np.random.default_rng(seed)
    n_jumps = int(rng.integers(lo, hi + 1))
    # cut points (first index of a new segment) spaced >= 2, keeping at
    # least two samples in the end segments
    cuts = _spaced_subset(rng, 2, n - 2, n_jumps, gap=2)
    boundaries = (0,) + tuple(int(c) for c in cuts) + (n,)

    orders = []
    coefficients = []
    for i in range(len(boundaries) - 1):
        length = boundaries[i + 1] - boundaries[i]
        degree = int(rng.choice(SEGMENT_DEGREES))
        if degree == 0:
            coeffs = np.array([rng.uniform(-1.0, 1.0)])
        elif degree == 1:
            u, v = rng.uniform(-1.0, 1.0, size=2)
            coeffs = np.array([u, v - u])
        else:
            u, mid, v = rng.uniform(-1.0, 1.0, size=3)
            # parabola through (0,u), (1/2,mid), (1,v)
            coeffs = np.array([u, -3.0 * u + 4.0 * mid - v,
                               2.0 * u - 4.0 * mid + 2.0 * v])
        t = _segment_axis(length)
        peak = np.abs(np.polynomial.polynomial.polyval(t, coeffs)).max()
        if peak > 1.0:
            coeffs = coeffs / peak
        orders.append(degree)
        coefficients.append(tuple(float(c) for c in coeffs))

    samples = evaluate_segments(n, boundaries, coefficients)
    return PiecewisePolynomialSignal(
        n=n,
        jump_indices=tuple(int(c) - 1 for c in cuts),
        segment_orders=tuple(orders),
        segment_coefficients=tuple(coefficients),
        samples=samples,
    )


def spaced_piecewise_constant(n: int, min_gap: int, seed,
                              n_jumps: int | None = None) -> np.ndarray:
    """Piecewise-constant signal whose jump indices are pairwise more than
    ``min_gap`` apart and at least ``min_gap`` from either end.

    This is the well-separated-step regime in which the order-k seminorm
    equals exactly 2^(k-1) times the order-1 value (valid mode, min_gap=k).
    """
    rng = np.random.default_rng(seed)
    lo, hi = min_gap, n - 2 - min_gap
    if n_jumps is None:
        cap = (hi - lo) // (min_gap + 1) + 1
        n_jumps = int(rng.integers(3, min(20, cap) + 1))
    jumps = _spaced_subset(rng, lo, hi, n_jumps, gap=min_gap + 1)
    f = np.empty(n)
    level = rng.uniform(-1.0, 1.0)
    prev = 0
    for j in jumps:
        f[prev: j + 1] = level
        level += rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 1.5)
        prev = j + 1
    f[prev:] = level
    return f


# (intensity, semi-axis a, semi-axis b, center x, center y, rotation deg)
SHEPP_LOGAN_ELLIPSES = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6050, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def _pixel_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    # pixel centers on [-1, 1]^2; row 0 is the top of the image
    coords = -1.0 + (2.0 * np.arange(n) + 1.0) / n
    x = coords[np.newaxis, :]
    y = -coords[:, np.newaxis]
    return x, y


def rasterize_ellipses(n: int, ellipses) -> np.ndarray:
    x, y = _pixel_grid(n)
    img = np.zeros((n, n))
    for value, a, b, x0, y0, phi_deg in ellipses:
        phi = math.radians(phi_deg)
        dx, dy = x - x0, y - y0
        xr = dx * math.cos(phi) + dy * math.sin(phi)
        yr = -dx * math.sin(phi) + dy * math.cos(phi)
        img += value * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return img


def shepp_logan(n: int) -> np.ndarray:
    """Classical head phantom on an n x n grid (standard intensity table)."""
    if n < 32:
        raise ValueError(f"grid too small, need n >= 32, got {n}")
    return rasterize_ellipses(n, SHEPP_LOGAN_ELLIPSES)


def piecewise_smooth_phantom(n: int, seed) -> np.ndarray:
    """Random piecewise-smooth test image: elliptical regions carrying
    quadratic radial shading, so second differences are nonzero inside
    regions while region boundaries remain sharp."""
    if n < 32:
        raise ValueError(f"grid too small, need n >= 32, got {n}")
    rng = np.random.default_rng(seed)
    x, y = _pixel_grid(n)
    img = np.zeros((n, n))

    def add(a, b, x0, y0, phi, amp, grad):
        dx, dy = x - x0, y - y0
        xr = dx * math.cos(phi) + dy * math.sin(phi)
        yr = -dx * math.sin(phi) + dy * math.cos(phi)
        r2 = (xr / a) ** 2 + (yr / b) ** 2
        inside = r2 <= 1.0
        img[inside] += amp * (1.0 + grad * (r2[inside] - 0.5))

    add(0.88, 0.94, 0.0, 0.0, 0.0, 1.0, 0.35)
    for _ in range(8):
        a, b = rng.uniform(0.08, 0.35, size=2)
        x0, y0 = rng.uniform(-0.45, 0.45, size=2)
        phi = rng.uniform(0.0, math.pi)
        amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.15, 0.5)
        grad = rng.uniform(0.4, 1.2)
        add(a, b, x0, y0, phi, amp, grad)
    return img


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian white-noise description: give either the standard deviation
    directly or a target signal-to-noise ratio.  The SNR is the linear
    amplitude ratio std(signal)/std(noise) unless ``db`` is set."""

    seed: int
    sigma: float | None = None
    target_snr: float | None = None
    db: bool = False
    kind: str = "gaussian"

    def __post_init__(self):
        if (self.sigma is None) == (self.target_snr is None):
            raise ValueError("set exactly one of sigma / target_snr")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.target_snr is not None and self.target_snr <= 0:
            raise ValueError("target_snr must be positive")
        if self.kind != "gaussian":
            raise ValueError("only gaussian white noise is supported")


def add_noise(b: np.ndarray, spec: NoiseSpec):
    """Add mean-zero Gaussian white noise to ``b``.

    Returns ``(noisy, realized_sigma, realized_snr)`` where realized values
    are measured from the drawn noise (realized_sigma is its empirical
    standard deviation, realized_snr is std(b)/realized_sigma).
    """
    b = np.asarray(b, dtype=float)
    if spec.sigma is not None:
        sigma = spec.sigma
    else:
        signal_std = float(b.std())
        if signal_std == 0.0:
            raise ValueError("SNR target undefined for constant data")
        ratio = spec.target_snr
        if spec.db:
            ratio = 10.0 ** (ratio / 20.0)
        sigma = signal_std / ratio
    if sigma == 0.0:
        return b.copy(), 0.0, math.inf
    noise = np.random.default_rng(spec.seed).normal(0.0, sigma, size=b.shape)
    realized_sigma = float(noise.std())
    realized_snr = float(b.std()) / realized_sigma if realized_sigma else math.inf
    return b + noise, realized_sigma, realized_snr


def relative_data_error(system, f: np.ndarray) -> float:
    """||A f - b||_2 / ||b||_2 for a (normalized) system."""
    b_norm = float(np.linalg.norm(system.data))
    if b_norm == 0.0:
        raise ValueError("relative data error undefined for zero data")
    f = np.asarray(f, dtype=float).ravel()
    resid = system.operator.forward(f) - system.data
    return float(np.linalg.norm(resid)) / b_norm


def save_grid_csv(arr: np.ndarray, path) -> None:
    """1D: one value per line.  2D: `rows,cols` header, then the grid
    row-major, one CSV line per row.  Values round-trip exactly."""
    arr = np.asarray(arr, dtype=float)
    with open(path, "w") as fh:
        if arr.ndim == 1:
            for v in arr:
                fh.write(f"{float(v)!r}\n")
        elif arr.ndim == 2:
            fh.write(f"{arr.shape[0]},{arr.shape[1]}\n")
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            raise ValueError("only 1D and 2D arrays are supported")


def load_grid_csv(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline().strip()
        rest = fh.read().splitlines()
    if "," in first:
        rows, cols = (int(x) for x in first.split(","))
        out = np.array([[float(v) for v in line.split(",")] for line in rest])
        if out.shape != (rows, cols):
            raise ValueError(f"grid shape {out.shape} != header ({rows},{cols})")
        return out
    return np.array([float(first)] + [float(v) for v in rest])
