"""Complex-momentum machinery: the spectral-parameter map k(lambda), the
Green's-function symbol, and the periodized integral-equation solve for the
exponentially growing eigenfunctions.

The integral equation ``mu = 1 + g * (v mu)`` is solved entirely in symbol
space on the periodic computational box ``[-L, L)^2``.  The frequency lattice
is offset by half a step per component, which keeps it clear of the (at most
two) real zeros of the symbol ``xi^2 + 2 k.xi``; the offset is realized by
pre/post multiplication with unimodular phase ramps around standard FFTs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .core import PotentialGrid
from .errors import NonConvergenceError, ResonantNodeError

LS_TOLERANCE = 1e-8


@dataclass(frozen=True)
class KPoint:
    """Point on the fixed-energy surface k1^2 + k2^2 = E < 0."""

    k1: complex
    k2: complex
    lam: complex
    energy: float

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("spectral parameter must be nonzero")
        if not self.energy < 0:
            raise ValueError("energy must be negative")
        resid = abs(self.k1**2 + self.k2**2 - self.energy)
        if resid > 1e-12 * max(1.0, abs(self.energy)):
            raise ValueError(f"k does not lie on the energy surface (residual {resid:.2e})")
        if self.k1.imag == 0 and self.k2.imag == 0:
            raise ValueError("k must have a nonzero imaginary part")

    @property
    def magnitude(self) -> float:
        """|k| = (|Re k|^2 + |Im k|^2)^{1/2}."""
        return math.sqrt(abs(self.k1) ** 2 + abs(self.k2) ** 2)

    def real_part(self) -> np.ndarray:
        return np.array([self.k1.real, self.k2.real])

    def imag_part(self) -> np.ndarray:
        return np.array([self.k1.imag, self.k2.imag])


def k_of_lambda(lam: complex, energy: float) -> KPoint:
    """Map the spectral parameter to complex momentum at fixed negative energy.

    ``k = (sqrt(E)/2 (lam + 1/lam), i sqrt(E)/2 (1/lam - lam))`` with the
    principal branch ``sqrt(E) = i sqrt(|E|)``.
    """
    lam = complex(lam)
    if lam == 0:
        raise ValueError("spectral parameter must be nonzero")
    if not energy < 0:
        raise ValueError("energy must be negative")
    root = 1j * math.sqrt(-energy)
    k1 = root / 2.0 * (lam + 1.0 / lam)
    k2 = 1j * root / 2.0 * (1.0 / lam - lam)
    return KPoint(k1, k2, lam, energy)


def conjugate_kpoint(k: KPoint) -> KPoint:
    """Componentwise conjugate momentum; corresponds to lambda -> -1/conj(lambda)."""
    return KPoint(k.k1.conjugate(), k.k2.conjugate(),
                  -1.0 / k.lam.conjugate(), k.energy)


# ---------------------------------------------------------------------------
# symbol
# ---------------------------------------------------------------------------

def faddeev_symbol(xi, k: KPoint, guard: float = 1e-10):
    """Fourier multiplier ``-1 / (xi^2 + 2 k.xi)`` of convolution with g.

    ``xi`` is a pair of real frequencies or a pair of arrays.  Raises
    ``ResonantNodeError`` when the denominator falls within ``guard`` of zero
    (the evaluation point is then effectively on the symbol's zero set and a
    lattice offset is required).
    """
    xi1 = np.asarray(xi[0], dtype=float)
    xi2 = np.asarray(xi[1], dtype=float)
    den = xi1**2 + xi2**2 + 2.0 * (k.k1 * xi1 + k.k2 * xi2)
    bad = np.abs(den) <= guard * max(1.0, k.magnitude**2)
    if np.any(bad):
        raise ResonantNodeError(
            "resonant node: frequency lattice point within guard distance of a "
            "symbol zero; offset the lattice")
    out = -1.0 / den
    return complex(out) if out.ndim == 0 else out


def symbol_zeros(k: KPoint) -> np.ndarray:
    """The at-most-two real zeros of ``xi^2 + 2 k.xi``: 0 and -2 Re k."""
    return np.array([[0.0, 0.0], [-2.0 * k.k1.real, -2.0 * k.k2.real]])


# ---------------------------------------------------------------------------
# periodized box
# ---------------------------------------------------------------------------

class SpectralBox:
    """Offset-lattice FFT helper for one (n, half_width) spatial grid."""

    def __init__(self, n: int, half_width: float, offset_fraction: float = 0.5):
        self.n = n
        self.half_width = half_width
        self.step = 2.0 * half_width / n
        self.offset_fraction = offset_fraction
        x = -half_width + self.step * np.arange(n)
        self.x1 = x
        base = 2.0 * np.pi * np.fft.fftfreq(n, d=self.step)
        off = offset_fraction * np.pi / half_width
        self.xi = base + off
        ramp = np.exp(-1j * 2.0 * np.pi * offset_fraction * np.arange(n) / n)
        self._pre = np.outer(ramp, ramp)
        self._post = np.conj(self._pre)
        self.XI1, self.XI2 = np.meshgrid(self.xi, self.xi, indexing="ij")
        self.X1, self.X2 = np.meshgrid(x, x, indexing="ij")

    def symbol_grid(self, k: KPoint, guard: float = 1e-10) -> np.ndarray:
        return faddeev_symbol((self.XI1, self.XI2), k, guard=guard)

    def convolve(self, symbol: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Convolution with the kernel whose offset-lattice multiplier is ``symbol``."""
        return self._post * np.fft.ifft2(symbol * np.fft.fft2(self._pre * w))

    def spectral_derivatives(self, w: np.ndarray):
        """(d/dx1, d/dx2) of the offset-lattice trig interpolant of w."""
        what = np.fft.fft2(self._pre * w)
        d1 = self._post * np.fft.ifft2(1j * self.XI1 * what)
        d2 = self._post * np.fft.ifft2(1j * self.XI2 * what)
        return d1, d2


@lru_cache(maxsize=8)
def _box(n: int, half_width: float, offset_fraction: float = 0.5) -> SpectralBox:
    return SpectralBox(n, half_width, offset_fraction)


def box_for(v: PotentialGrid) -> SpectralBox:
    return _box(v.n, v.half_width)


# ---------------------------------------------------------------------------
# mu fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MuField:
    """Faddeev function with the growth factor removed.

    ``kind == "spatial"``: values are ``mu(., k)`` on the Cartesian grid at a
    fixed momentum.  ``kind == "spectral"``: values are ``mu(z, .)`` on a
    spectral-annulus grid at a fixed point ``z`` (produced by the dbar module).
    ``residual`` is the achieved sup-norm fixed-point residual.
    """

    values: np.ndarray
    kind: str
    residual: float
    kpoint: KPoint | None = None
    z: complex | None = None
    grid_step: float = 0.0
    half_width: float = 0.0

    def __post_init__(self):
        if self.kind not in ("spatial", "spectral"):
            raise ValueError("kind must be 'spatial' or 'spectral'")
        if self.kind == "spatial" and self.kpoint is None:
            raise ValueError("spatial mu field requires its momentum")

    def interpolate(self, z: complex) -> complex:
        """Bicubic sample of a spatial-kind field at the point x(z)."""
        from scipy.ndimage import map_coordinates
        if self.kind != "spatial":
            raise ValueError("interpolation in x applies to spatial fields")
        ci = (z.real + self.half_width) / self.grid_step
        cj = (z.imag + self.half_width) / self.grid_step
        re = map_coordinates(self.values.real, [[ci], [cj]], order=3, mode="nearest")
        im = map_coordinates(self.values.imag, [[ci], [cj]], order=3, mode="nearest")
        return complex(re[0] + 1j * im[0])


def solve_mu_ls(v: PotentialGrid, k: KPoint, tol: float = LS_TOLERANCE,
                maxiter: int = 400, restart: int = 60) -> MuField:
    """Solve ``(I - M) mu = 1`` with ``Mf = conv_g(v f)`` on the periodic box.

    GMRES on the complex system; the returned field carries the certified
    sup-norm residual ``||mu - 1 - M mu||_inf / ||mu||_inf``.  Stagnation is
    reported as ``NonConvergenceError`` with the residual history (the
    operational stand-in for an exceptional point or an energy of too small
    modulus).
    """
    box = box_for(v)
    sym = box.symbol_grid(k)
    vv = v.values
    n = box.n

    def matvec(u):
        field = u.reshape(n, n)
        return (field - box.convolve(sym, vv * field)).ravel()

    op = LinearOperator((n * n, n * n), matvec=matvec, dtype=complex)
    rhs = np.ones(n * n, dtype=complex)
    history: list[float] = []
    mu_vec, info = gmres(op, rhs, rtol=min(tol * 1e-2, 1e-9), atol=0.0,
                         restart=restart, maxiter=maxiter,
                         callback=lambda r: history.append(float(r)),
                         callback_type="pr_norm")
    mu = mu_vec.reshape(n, n)
    resid = float(np.abs(mu - 1.0 - box.convolve(sym, vv * mu)).max()
                  / max(np.abs(mu).max(), 1e-300))
    if info != 0 or resid > tol:
        raise NonConvergenceError(
            f"LS non-convergence at lambda={k.lam:.4g}, E={k.energy:.4g} "
            f"(residual {resid:.2e}, target {tol:.1e})", history=history)
    return MuField(mu, "spatial", resid, kpoint=k,
                   grid_step=v.grid_step, half_width=v.half_width)


def psi_from_mu(mu: MuField, k: KPoint | None = None) -> np.ndarray:
    """Restore the exponential factor: ``psi = exp(i k.x) mu`` on the grid."""
    if mu.kind != "spatial":
        raise ValueError("psi is defined for spatial mu fields")
    k = k or mu.kpoint
    box = _box(mu.values.shape[0], mu.half_width)
    growth = np.exp(1j * (k.k1 * box.X1 + k.k2 * box.X2))
    return growth * mu.values


def mu_z_derivatives(v: PotentialGrid, k: KPoint, mu: MuField | None = None,
                     tol: float = LS_TOLERANCE):
    """Spectral derivatives (d mu/dz, d mu/dzbar) of the solved field.

    ``z = x1 + i x2``, so ``d/dz = (d/dx1 - i d/dx2)/2`` and
    ``d/dzbar = (d/dx1 + i d/dx2)/2``.
    """
    if mu is None:
        mu = solve_mu_ls(v, k, tol=tol)
    box = box_for(v)
    d1, d2 = box.spectral_derivatives(mu.values - 1.0)
    return 0.5 * (d1 - 1j * d2), 0.5 * (d1 + 1j * d2)


# ---------------------------------------------------------------------------
# pointwise Green's function (validation path only)
# ---------------------------------------------------------------------------

def green_function_grid(k: KPoint, n: int = 128, half_width: float = 1.25) -> np.ndarray:
    """Reconstruct g on a small periodic grid by inverse transform of the symbol.

    Used only to validate the symbol against the defining PDE
    ``(Delta + 2 i k.grad) g = delta``; the solver path never needs g pointwise.
    """
    box = _box(n, half_width)
    sym = box.symbol_grid(k)
    # inverse transform with the quadrature weight (d xi)^2 / (2 pi)^2 = 1/(2L)^2
    return box._post * np.fft.ifft2(sym) * (n * n) / (2.0 * half_width) ** 2


# ---------------------------------------------------------------------------
# field dumps
# ---------------------------------------------------------------------------

def save_cfield(path, mu: MuField) -> None:
    """Dump a spatial mu field: header ``n L kind re(k1) im(k1) re(k2) im(k2)
    residual``, then values row-major as ``re im`` pairs."""
    if mu.kind != "spatial":
        raise ValueError("cfield dumps are defined for spatial mu fields")
    k = mu.kpoint
    n = mu.values.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{n} {mu.half_width!r} {mu.kind} {k.k1.real!r} {k.k1.imag!r} "
                 f"{k.k2.real!r} {k.k2.imag!r} {mu.residual!r}\n")
        for row in mu.values:
            for x in row:
                fh.write(f"{x.real!r} {x.imag!r}\n")


def load_cfield(path, lam: complex, energy: float) -> MuField:
    """Read a spatial dump back; the (lambda, E) labels are not stored in the
    file and must be supplied."""
    with open(path) as fh:
        head = fh.readline().split()
        n = int(head[0])
        half_width = float(head[1])
        kind = head[2]
        k1 = float(head[3]) + 1j * float(head[4])
        k2 = float(head[5]) + 1j * float(head[6])
        residual = float(head[7])
        data = np.loadtxt(fh)
    vals = (data[:, 0] + 1j * data[:, 1]).reshape(n, n)
    kp = KPoint(k1, k2, lam, energy)
    return MuField(vals, kind, residual, kpoint=kp,
                   grid_step=2.0 * half_width / n, half_width=half_width)
