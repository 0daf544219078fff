"""Domain geometry, grids, norms, and potential generators.

Geometry conventions used throughout the package:

* potentials live on an ``n x n`` uniform Cartesian grid over the square
  ``[-L, L)^2`` with nodes ``x_i = -L + i*h``, ``h = 2L/n`` (FFT layout, the
  right edge is excluded);
* every potential is real valued and supported inside the unit disk;
* boundary data on the unit circle are stored as Fourier coefficients
  ``c_n`` for ``n = -n_max .. n_max`` in the basis ``exp(i n theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError, SupportError

DEFAULT_GRID_N = 256
DEFAULT_HALF_WIDTH = 1.25
DEFAULT_N_MAX = 32


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialGrid:
    """Real potential sampled on a uniform Cartesian grid.

    Attributes
    ----------
    values : ndarray, shape (n, n)
        Samples ``v(x1_i, x2_j)`` (axis 0 is x1).  Zero at every node with
        ``|x| >= support_radius``.
    grid_step : float
        Node spacing ``h``; the frame half-width is ``n*h/2``.
    support_radius : float
        Radius of the support disk, at most 1.
    smoothness_m : int
        Declared smoothness class (number of integrable derivatives), > 2.
    norm_bound : float
        Declared bound on the max-over-derivatives L1 norm.
    """

    values: np.ndarray
    grid_step: float
    support_radius: float
    smoothness_m: int
    norm_bound: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError("potential values must form a square array")
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if self.support_radius > 1.0 + 1e-12:
            raise SupportError("support radius exceeds the unit disk")
        if self.smoothness_m < 3:
            raise ValueError("smoothness index must be at least 3")
        if not self.norm_bound > 0:
            raise ValueError("declared norm bound must be positive")
        x = self.axis()
        r2 = x[:, None] ** 2 + x[None, :] ** 2
        outside = r2 >= self.support_radius**2 - 1e-15
        if np.any(vals[outside] != 0.0):
            raise SupportError("potential does not vanish outside its support radius")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def half_width(self) -> float:
        return self.n * self.grid_step / 2.0

    def axis(self) -> np.ndarray:
        return -self.half_width + self.grid_step * np.arange(self.n)

    def scaled(self, factor: float) -> "PotentialGrid":
        if factor < 0:
            raise ValueError("scaling factor must be nonnegative")
        return PotentialGrid(self.values * factor, self.grid_step,
                             self.support_radius, self.smoothness_m,
                             max(self.norm_bound * factor, 1e-300))

    def __add__(self, other: "PotentialGrid") -> "PotentialGrid":
        if other.n != self.n or abs(other.grid_step - self.grid_step) > 1e-14:
            raise ValueError("potential grids are incompatible")
        return PotentialGrid(self.values + other.values, self.grid_step,
                             max(self.support_radius, other.support_radius),
                             min(self.smoothness_m, other.smoothness_m),
                             self.norm_bound + other.norm_bound)


@dataclass(frozen=True)
class EnergyContext:
    """Fixed negative energy plus an empirical solvability diagnostic.

    The solvability thresholds of the underlying theory are not quantified;
    ``solvability_margin`` stores the measured condition diagnostic of the
    interior solve (NaN until measured), and ``min_abs_energy`` is the
    user-declared empirical floor below which solves are refused.
    """

    energy: float
    solvability_margin: float = math.nan
    min_abs_energy: float = 1.0

    def __post_init__(self):
        if not self.energy < 0:
            raise ValueError("energy must be negative")
        if abs(self.energy) < self.min_abs_energy:
            raise ValueError(
                f"|E| = {abs(self.energy)} below the declared empirical "
                f"solvability floor {self.min_abs_energy}")

    @property
    def sqrt_abs(self) -> float:
        return math.sqrt(-self.energy)


@dataclass(frozen=True)
class BoundaryFunction:
    """Function on the unit circle stored as coefficients of exp(i n theta)."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length (n = -n_max..n_max)")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n_max(self) -> int:
        return (self.coefficients.size - 1) // 2

    def coefficient(self, n: int) -> complex:
        if abs(n) > self.n_max:
            return 0.0 + 0.0j
        return complex(self.coefficients[n + self.n_max])

    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def values(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for n, c in zip(self.modes(), self.coefficients):
            out += c * np.exp(1j * n * theta)
        return out

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coefficients
        return bool(np.abs(c[::-1] - np.conj(c)).max() <= tol * max(1.0, np.abs(c).max()))

    @staticmethod
    def single_mode(n: int, n_max: int, amplitude: complex = 1.0) -> "BoundaryFunction":
        c = np.zeros(2 * n_max + 1, dtype=complex)
        c[n + n_max] = amplitude
        return BoundaryFunction(c)

    @staticmethod
    def from_samples(samples: np.ndarray, n_max: int) -> "BoundaryFunction":
        """Project uniform-theta samples onto modes ``|n| <= n_max``."""
        samples = np.asarray(samples, dtype=complex)
        m = samples.size
        if m < 2 * n_max + 1:
            raise ResolutionError("insufficient resolution: too few samples for n_max")
        hat = np.fft.fft(samples) / m
        c = np.concatenate([hat[m - n_max:], hat[:n_max + 1]])
        return BoundaryFunction(c)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _centered_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    # second-order centered stencil; wrap-around touches only zero padding
    # because potentials vanish near the frame edge
    return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * h)


def sobolev_norm_m1(v: PotentialGrid, m: int) -> float:
    """Max over multi-indices |J| <= m of the L1 norm of the J-th derivative.

    Derivatives use second-order centered differences; the L1 integral is the
    grid rectangle rule (exact trapezoid here since the integrand vanishes at
    the frame edge).
    """
    if m > v.smoothness_m:
        raise ValueError("requested derivative order exceeds the declared smoothness")
    if v.n < 8 * max(m, 1):
        raise ResolutionError(
            f"insufficient resolution: n = {v.n} grid cannot resolve order-{m} differences")
    h = v.grid_step
    cell = h * h
    best = 0.0
    dx_powers = [v.values]
    for _ in range(m):
        dx_powers.append(_centered_diff(dx_powers[-1], 0, h))
    for j1 in range(m + 1):
        arr = dx_powers[j1]
        for j2 in range(m - j1 + 1):
            if j2 > 0:
                arr = _centered_diff(arr, 1, h)
            best = max(best, float(np.abs(arr).sum() * cell))
    return best


def fourier_decay_norm(v: PotentialGrid, m: int) -> float:
    """Sup over the frequency lattice of (1+|p|^2)^{m/2} |vhat(p)|.

    ``vhat(p) = (2 pi)^{-2} integral exp(i p x) v(x) dx`` approximated by the
    grid rectangle rule (spectrally accurate for these compactly supported
    potentials).
    """
    n, h = v.n, v.grid_step
    vhat_mod = np.abs(np.fft.ifft2(v.values)) * (n * n * h * h) / (2.0 * np.pi) ** 2
    p = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    w = (1.0 + p[:, None] ** 2 + p[None, :] ** 2) ** (m / 2.0)
    return float((w * vhat_mod).max())


def hs_boundary_norm(f: BoundaryFunction, s: float) -> float:
    """Sobolev norm of circle data: (sum_n (1+n^2)^s |c_n|^2)^{1/2}."""
    n = f.modes().astype(float)
    return float(np.sqrt((((1.0 + n * n) ** s) * np.abs(f.coefficients) ** 2).sum()))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def make_bump_potential(center=(0.0, 0.0), radius: float = 0.8, amplitude: float = 1.0,
                        power: int = 5, n: int = DEFAULT_GRID_N,
                        half_width: float = DEFAULT_HALF_WIDTH) -> PotentialGrid:
    """Polynomial bump ``A (1 - |x-x0|^2 / rho^2)_+^s`` sampled on the grid.

    The bump has exactly ``s - 1`` continuous derivatives across its support
    edge, so ``power`` doubles as the smoothness label of the result.
    """
    cx, cy = float(center[0]), float(center[1])
    if power < 3:
        raise ValueError("bump power must be at least 3")
    if radius <= 0:
        raise ValueError("bump radius must be positive")
    reach = math.hypot(cx, cy) + radius
    if reach > 1.0 + 1e-12:
        raise SupportError(f"bump support (radius {reach:.3f}) would leave the unit disk")
    x = -half_width + (2.0 * half_width / n) * np.arange(n)
    d2 = ((x[:, None] - cx) ** 2 + (x[None, :] - cy) ** 2) / radius**2
    vals = amplitude * np.where(d2 < 1.0, (1.0 - np.clip(d2, 0.0, 1.0)) ** power, 0.0)
    grid = PotentialGrid(vals, 2.0 * half_width / n, min(reach, 1.0), power,
                         norm_bound=1e-300)
    bound = sobolev_norm_m1(grid, min(3, power)) if amplitude != 0 else 0.0
    return PotentialGrid(vals, grid.grid_step, grid.support_radius, power,
                         max(1.05 * bound, 1e-12))


def zero_potential(n: int = DEFAULT_GRID_N, half_width: float = DEFAULT_HALF_WIDTH,
                   smoothness_m: int = 8) -> PotentialGrid:
    return PotentialGrid(np.zeros((n, n)), 2.0 * half_width / n, 1.0, smoothness_m, 1e-12)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def save_pgrid(path, v: PotentialGrid) -> None:
    """Text format: header ``n L support_radius m N``, then n^2 reals row-major."""
    with open(path, "w") as fh:
        fh.write(f"{v.n} {v.half_width!r} {v.support_radius!r} "
                 f"{v.smoothness_m} {v.norm_bound!r}\n")
        for row in v.values:
            fh.write(" ".join(repr(x) for x in row))
            fh.write("\n")


def load_pgrid(path) -> PotentialGrid:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 5:
            raise ValueError("malformed .pgrid header")
        n = int(head[0])
        half_width = float(head[1])
        support_radius = float(head[2])
        m = int(head[3])
        bound = float(head[4])
        vals = np.loadtxt(fh).reshape(n, n)
    return PotentialGrid(vals, 2.0 * half_width / n, support_radius, m, bound)


def save_boundary_csv(path, f: BoundaryFunction) -> None:
    with open(path, "w") as fh:
        for n, c in zip(f.modes(), f.coefficients):
            fh.write(f"{n}, {c.real!r}, {c.imag!r}\n")


def load_boundary_csv(path) -> BoundaryFunction:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    order = np.argsort(rows[:, 0])
    rows = rows[order]
    n_max = int(rows[-1, 0])
    if rows.shape[0] != 2 * n_max + 1 or int(rows[0, 0]) != -n_max:
        raise ValueError("boundary CSV must cover n = -n_max..n_max")
    return BoundaryFunction(rows[:, 1] + 1j * rows[:, 2])
