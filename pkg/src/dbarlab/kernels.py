"""Hot numerical kernels with numba acceleration and a pure-numpy fallback.

The jitted path is used by default whenever numba imports cleanly.  Setting
the environment variable ``DBARLAB_DISABLE_NUMBA=1`` (before import) selects
the vectorized numpy implementations instead; both paths compute identical
quantities (summation order differs, so results may disagree at the level of
float rounding).  ``benchmarks/bench_kernels.py`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("DBARLAB_DISABLE_NUMBA", "").strip() not in ("", "0")

if not _DISABLED:
    try:
        from numba import njit
        HAVE_NUMBA = True
    except ImportError:            # pragma: no cover - numba is a declared dep
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# plain-python kernel bodies (compiled when numba is active)
# ---------------------------------------------------------------------------

def _weighted_phase_sum_loop(x1, x2, w, p1, p2):
    acc = 0.0 + 0.0j
    for i in range(x1.shape[0]):
        ph = p1 * x1[i] + p2 * x2[i]
        acc += w[i] * (np.cos(ph) + 1j * np.sin(ph))
    return acc


def _cauchy_direct_loop(t_re, t_im, s_re, s_im, vals, area):
    out = np.empty(t_re.shape[0], dtype=np.complex128)
    for i in range(t_re.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(s_re.shape[0]):
            dre = t_re[i] - s_re[j]
            dim = t_im[i] - s_im[j]
            d2 = dre * dre + dim * dim
            if d2 > 1e-300:
                acc += vals[j] * area[j] * (dre - 1j * dim) / d2
        out[i] = acc / np.pi
    return out


def _scattering_phase_loop(lam_re, lam_im, scale, zx, zy):
    out = np.empty(lam_re.shape[0], dtype=np.complex128)
    for i in range(lam_re.shape[0]):
        a2 = lam_re[i] * lam_re[i] + lam_im[i] * lam_im[i]
        ph = scale * (1.0 - 1.0 / a2) * (lam_re[i] * zy - lam_im[i] * zx)
        out[i] = np.cos(ph) + 1j * np.sin(ph)
    return out


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks
# ---------------------------------------------------------------------------

def _weighted_phase_sum_np(x1, x2, w, p1, p2):
    return complex((w * np.exp(1j * (p1 * x1 + p2 * x2))).sum())


def _cauchy_direct_np(t_re, t_im, s_re, s_im, vals, area):
    tz = t_re[:, None] + 1j * t_im[:, None]
    sz = s_re[None, :] + 1j * s_im[None, :]
    diff = tz - sz
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = np.where(np.abs(diff) > 1e-150, 1.0 / diff, 0.0)
    return (ker * (vals * area)[None, :]).sum(axis=1) / np.pi


def _scattering_phase_np(lam_re, lam_im, scale, zx, zy):
    a2 = lam_re * lam_re + lam_im * lam_im
    ph = scale * (1.0 - 1.0 / a2) * (lam_re * zy - lam_im * zx)
    return np.exp(1j * ph)


if USING_NUMBA:
    weighted_phase_sum = njit(cache=True)(_weighted_phase_sum_loop)
    cauchy_direct = njit(cache=True)(_cauchy_direct_loop)
    scattering_phase = njit(cache=True)(_scattering_phase_loop)
else:
    weighted_phase_sum = _weighted_phase_sum_np
    cauchy_direct = _cauchy_direct_np
    scattering_phase = _scattering_phase_np

# explicit handles for the benchmark
NUMPY_IMPLS = {
    "weighted_phase_sum": _weighted_phase_sum_np,
    "cauchy_direct": _cauchy_direct_np,
    "scattering_phase": _scattering_phase_np,
}
LOOP_IMPLS = {
    "weighted_phase_sum": _weighted_phase_sum_loop,
    "cauchy_direct": _cauchy_direct_loop,
    "scattering_phase": _scattering_phase_loop,
}
