"""Literal time-domain engine: the slow, independently computed oracle.

Everything here is evaluated directly from the definitions: projections as
explicit weighted inner products against the basis matrix, per-bin
denominators summed literally instead of simplified to sum(w), the residual
recomputed as f - g every iteration, and energies as literal sum(w * r^2).
The spectral engine must reproduce this path; tests compare the two.
"""

from __future__ import annotations

import numpy as np

from .core import FseParams

# Basis matrices per transform size. Phases use integer arithmetic modulo n
# before scaling; evaluating exp(-2j*pi*k*i/n) directly loses ~6 digits at
# large k*i and would not survive the 1e-12 projection comparison.
_CONJ_BASIS: dict[int, np.ndarray] = {}
_CONJ_BASIS_SQ: dict[int, np.ndarray] = {}


def conj_basis(n: int) -> np.ndarray:
    """Rows k = 0..n/2 of conj(phi_k)[i] = exp(-2j*pi*((k*i) mod n)/n)."""
    cached = _CONJ_BASIS.get(n)
    if cached is None:
        h = n // 2
        ki = (np.outer(np.arange(h + 1, dtype=np.int64),
                       np.arange(n, dtype=np.int64)) % n)
        cached = np.exp((-2j * np.pi / n) * ki)
        cached.setflags(write=False)
        _CONJ_BASIS[n] = cached
    return cached


def _conj_basis_sq(n: int) -> np.ndarray:
    cached = _CONJ_BASIS_SQ.get(n)
    if cached is None:
        pc = conj_basis(n)
        cached = pc * pc
        cached.setflags(write=False)
        _CONJ_BASIS_SQ[n] = cached
    return cached


def projections(r: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Literal projection coefficients p_k for bins 0..n/2 and their denominators.

    p_k = sum_i(r w conj(phi_k)) / sum_i(conj(phi_k) w phi_k), both sums written
    out in full. The denominator equals sum(w) analytically; it is computed
    literally here so the comparison against the simplified path stays honest.
    """
    n = r.shape[0]
    pc = conj_basis(n)
    num = (pc * w) @ r
    den = (pc.real ** 2 + pc.imag ** 2) @ w
    return num / den, den


def run_window(f_win: np.ndarray, w: np.ndarray, p: FseParams):
    """Generate one window model literally in the time domain.

    Returns (coeffs over bins 0..n/2, model value at the window center,
    iterations used, converged flag, energy after each iteration).
    """
    n = f_win.shape[0]
    h = n // 2
    center = (n - 1) // 2
    pc = conj_basis(n)
    m = pc * w
    sk = (pc.real ** 2 + pc.imag ** 2) @ w
    gk = np.conj(_conj_basis_sq(n) @ w)
    inv_den = 1.0 / np.maximum(sk * sk - (gk.real ** 2 + gk.imag ** 2),
                               1e-12 * sk * sk)
    coeffs = np.zeros(h + 1, dtype=np.complex128)
    g = np.zeros(n)
    r = f_win.copy()
    e0 = float(np.sum(w * f_win * f_win))
    tol_energy = p.residual_tol * e0
    max_iter = int(p.max_iter)
    energies = np.zeros(max_iter)
    gamma = p.gamma
    iters = 0
    converged = False
    for it in range(max_iter):
        proj = m @ r
        mag2 = proj.real ** 2 + proj.imag ** 2
        metric = 2.0 * (mag2 * sk - ((proj * proj) * gk).real) * inv_den
        metric[0] = mag2[0] / sk[0]
        metric[h] = mag2[h] / sk[h]
        u = int(np.argmax(metric))
        if not (metric[u] > 0.0):
            converged = True
            break
        if u == 0 or u == h:
            c = gamma * (proj[u].real / sk[u])
            coeffs[u] += c
            g = g + c * np.conj(pc[u]).real
        else:
            gu = gk[u]
            c = gamma * ((proj[u] * sk[u] - proj[u].conjugate() * gu.conjugate())
                         * inv_den[u])
            coeffs[u] += c
            g = g + 2.0 * (c * np.conj(pc[u])).real
        r = f_win - g
        e = float(np.sum(w * r * r))
        iters = it + 1
        energies[it] = e
        if e <= tol_energy:
            converged = True
            break
    return coeffs, float(g[center]), iters, converged, energies[:iters]
