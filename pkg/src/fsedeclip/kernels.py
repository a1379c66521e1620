"""Hot iteration loop of the spectral engine, in two interchangeable backends.

The numba backend jit-compiles an explicit loop; the numpy backend runs the
same arithmetic vectorized. All state is carried as separate real/imaginary
float64 arrays and every expression is written in plain real arithmetic with
the same evaluation order in both backends: complex-multiply ufuncs are
avoided because numpy may contract them with fused multiply-adds while the
jit code rounds every product, which would break bit-identity. With that
discipline the two backends produce bit-identical outputs; tests assert it.
Backend choice comes from the FSEDECLIP_BACKEND environment variable
(auto | numba | numpy) or from set_backend().
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

_FORCED: str | None = None


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAVE_NUMBA else ("numpy",)


def set_backend(name: str | None) -> None:
    """Force a backend for this process; None returns control to the env var."""
    global _FORCED
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r} (use 'numba' or 'numpy')")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _FORCED = name


def current_backend() -> str:
    if _FORCED is not None:
        return _FORCED
    env = os.environ.get("FSEDECLIP_BACKEND", "auto").lower()
    if env == "numpy":
        return "numpy"
    if env == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError(
                "FSEDECLIP_BACKEND=numba but numba is not importable"
            )
        return "numba"
    if env == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    raise ValueError(f"unknown FSEDECLIP_BACKEND value {env!r}")


def _iterate_numpy(wr_re, wr_im, ww2_re, ww2_im, g_re, g_im, inv_den,
                   ph_re, ph_im, sum_w, gamma, max_iter, tol_energy, e0,
                   coeffs, energies):
    """One window's greedy loop over the half spectrum, vectorized.

    wr_re/wr_im   transform of the weighted residual, bins 0..n/2, in place
    ww2_re/ww2_im transform of the weights, doubled to length 2n (no modulo)
    g_re/g_im     pair cross terms G_k = conj(ww[2k mod n])
    inv_den       1 / max(sum_w^2 - |G_k|^2, floor); pair fit denominators
    ph_re/ph_im   basis value of bin k at the window center
    coeffs        accumulated coefficients per bin, updated in place
    energies      weighted residual energy after each iteration, in place
    """
    h = wr_re.shape[0] - 1
    n = 2 * h
    e = e0
    g_center = 0.0
    iters = 0
    converged = False
    for it in range(max_iter):
        mag2 = wr_re * wr_re + wr_im * wr_im
        w2re = wr_re * wr_re - wr_im * wr_im
        w2im = wr_re * wr_im + wr_im * wr_re
        metric = 2.0 * (mag2 * sum_w - (w2re * g_re - w2im * g_im)) * inv_den
        metric[0] = mag2[0] / sum_w
        metric[h] = mag2[h] / sum_w
        u = int(np.argmax(metric))
        if not (metric[u] > 0.0):
            converged = True
            break
        Wre = wr_re[u]
        Wim = wr_im[u]
        if u == 0 or u == h:
            # self-conjugate bin: one real coefficient
            c = gamma * (Wre / sum_w)
            coeffs[u] = coeffs[u] + c
            e = e + (-2.0 * (c * Wre) + (c * c) * sum_w)
            wr_re -= c * ww2_re[n - u : n - u + h + 1]
            wr_im -= c * ww2_im[n - u : n - u + h + 1]
            g_center = g_center + c * ph_re[u]
        else:
            # conjugate pair: gamma step toward the joint least-squares fit
            gre = g_re[u]
            gim = g_im[u]
            cre = gamma * ((Wre * sum_w - (Wre * gre - Wim * gim)) * inv_den[u])
            cim = gamma * ((Wim * sum_w + (Wre * gim + Wim * gre)) * inv_den[u])
            coeffs[u] = coeffs[u] + complex(cre, cim)
            e = e + (
                -4.0 * (cre * Wre + cim * Wim)
                + 2.0 * ((cre * cre - cim * cim) * gre
                         - (cre * cim + cim * cre) * gim)
                + 2.0 * (cre * cre + cim * cim) * sum_w
            )
            a_re = ww2_re[n - u : n - u + h + 1]
            a_im = ww2_im[n - u : n - u + h + 1]
            b_re = ww2_re[u : u + h + 1]
            b_im = ww2_im[u : u + h + 1]
            wr_re -= (cre * a_re - cim * a_im) + (cre * b_re + cim * b_im)
            wr_im -= (cre * a_im + cim * a_re) + (cre * b_im - cim * b_re)
            g_center = g_center + 2.0 * (cre * ph_re[u] - cim * ph_im[u])
        iters = it + 1
        energies[it] = e
        if e <= tol_energy:
            converged = True
            break
    return g_center, iters, converged


def _make_jit_kernel():
    @njit(cache=True, nogil=True)
    def _iterate_numba(wr_re, wr_im, ww2_re, ww2_im, g_re, g_im, inv_den,
                       ph_re, ph_im, sum_w, gamma, max_iter, tol_energy, e0,
                       coeffs, energies):
        h = wr_re.shape[0] - 1
        n = 2 * h
        e = e0
        g_center = 0.0
        iters = 0
        converged = False
        for it in range(max_iter):
            best = -1.0
            u = 0
            for k in range(h + 1):
                re = wr_re[k]
                im = wr_im[k]
                mag2 = re * re + im * im
                if k == 0 or k == h:
                    m = mag2 / sum_w
                else:
                    w2re = re * re - im * im
                    w2im = re * im + im * re
                    m = (2.0 * (mag2 * sum_w - (w2re * g_re[k] - w2im * g_im[k]))
                         * inv_den[k])
                if m > best:
                    best = m
                    u = k
            if not (best > 0.0):
                converged = True
                break
            Wre = wr_re[u]
            Wim = wr_im[u]
            if u == 0 or u == h:
                c = gamma * (Wre / sum_w)
                coeffs[u] = coeffs[u] + c
                e = e + (-2.0 * (c * Wre) + (c * c) * sum_w)
                for i in range(h + 1):
                    wr_re[i] = wr_re[i] - c * ww2_re[n - u + i]
                    wr_im[i] = wr_im[i] - c * ww2_im[n - u + i]
                g_center = g_center + c * ph_re[u]
            else:
                gre = g_re[u]
                gim = g_im[u]
                cre = gamma * ((Wre * sum_w - (Wre * gre - Wim * gim))
                               * inv_den[u])
                cim = gamma * ((Wim * sum_w + (Wre * gim + Wim * gre))
                               * inv_den[u])
                coeffs[u] = coeffs[u] + complex(cre, cim)
                e = e + (
                    -4.0 * (cre * Wre + cim * Wim)
                    + 2.0 * ((cre * cre - cim * cim) * gre
                             - (cre * cim + cim * cre) * gim)
                    + 2.0 * (cre * cre + cim * cim) * sum_w
                )
                for i in range(h + 1):
                    are = ww2_re[n - u + i]
                    aim = ww2_im[n - u + i]
                    bre = ww2_re[u + i]
                    bim = ww2_im[u + i]
                    wr_re[i] = wr_re[i] - ((cre * are - cim * aim)
                                           + (cre * bre + cim * bim))
                    wr_im[i] = wr_im[i] - ((cre * aim + cim * are)
                                           + (cre * bim - cim * bre))
                g_center = g_center + 2.0 * (cre * ph_re[u] - cim * ph_im[u])
            iters = it + 1
            energies[it] = e
            if e <= tol_energy:
                converged = True
                break
        return g_center, iters, converged

    return _iterate_numba


_iterate_jit = _make_jit_kernel() if _HAVE_NUMBA else None


def iterate_window(wr_re, wr_im, ww2_re, ww2_im, g_re, g_im, inv_den,
                   ph_re, ph_im, sum_w, gamma, max_iter, tol_energy, e0,
                   coeffs, energies):
    """Run the greedy loop with the active backend; mutates wr/coeffs/energies."""
    if current_backend() == "numba":
        return _iterate_jit(wr_re, wr_im, ww2_re, ww2_im, g_re, g_im, inv_den,
                            ph_re, ph_im, sum_w, gamma, max_iter, tol_energy,
                            e0, coeffs, energies)
    return _iterate_numpy(wr_re, wr_im, ww2_re, ww2_im, g_re, g_im, inv_den,
                          ph_re, ph_im, sum_w, gamma, max_iter, tol_energy,
                          e0, coeffs, energies)


def warmup() -> None:
    """Trigger jit compilation on a tiny window so timed runs start hot."""
    if current_backend() != "numba":
        return
    n = 8
    h = n // 2
    rng = np.random.default_rng(0)
    w = np.abs(rng.standard_normal(n)) + 0.5
    f = rng.standard_normal(n)
    wr = np.fft.rfft(f * w)
    ww = np.fft.fft(w)
    ww2 = np.concatenate([ww, ww])
    pair_g = np.conj(ww2[2 * np.arange(h + 1)])
    sum_w = float(np.sum(w))
    inv_den = 1.0 / np.maximum(
        sum_w * sum_w - (pair_g.real ** 2 + pair_g.imag ** 2),
        1e-12 * sum_w * sum_w,
    )
    ph = np.exp(2j * np.pi * ((np.arange(h + 1) * ((n - 1) // 2)) % n) / n)
    coeffs = np.zeros(h + 1, dtype=np.complex128)
    energies = np.zeros(4)
    e0 = float(np.sum(w * f * f))
    _iterate_jit(np.ascontiguousarray(wr.real), np.ascontiguousarray(wr.imag),
                 np.ascontiguousarray(ww2.real), np.ascontiguousarray(ww2.imag),
                 np.ascontiguousarray(pair_g.real),
                 np.ascontiguousarray(pair_g.imag),
                 inv_den, np.ascontiguousarray(ph.real),
                 np.ascontiguousarray(ph.imag), sum_w, 1.25, 4, 0.0, e0,
                 coeffs, energies)
