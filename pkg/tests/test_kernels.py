import numpy as np
import pytest

from fsedeclip import kernels
from fsedeclip.core import FseParams
from fsedeclip.engine import generate_window_model

from helpers import random_window

NEEDS_NUMBA = pytest.mark.skipif(
    "numba" not in kernels.available_backends(), reason="numba not installed"
)


@pytest.fixture
def restore_backend():
    yield
    kernels.set_backend(None)


class TestBackendSelection:
    def test_numpy_backend_always_available(self):
        assert "numpy" in kernels.available_backends()

    def test_set_backend_overrides_env(self, restore_backend, monkeypatch):
        monkeypatch.setenv("FSEDECLIP_BACKEND", "numpy")
        kernels.set_backend("numpy")
        assert kernels.current_backend() == "numpy"

    def test_env_var_selects_numpy(self, restore_backend, monkeypatch):
        kernels.set_backend(None)
        monkeypatch.setenv("FSEDECLIP_BACKEND", "numpy")
        assert kernels.current_backend() == "numpy"

    def test_env_var_rejects_unknown_value(self, restore_backend, monkeypatch):
        kernels.set_backend(None)
        monkeypatch.setenv("FSEDECLIP_BACKEND", "quantum")
        with pytest.raises(ValueError):
            kernels.current_backend()

    def test_set_backend_rejects_unknown_name(self):
        with pytest.raises(ValueError):
            kernels.set_backend("fortran")

    @NEEDS_NUMBA
    def test_auto_prefers_numba(self, restore_backend, monkeypatch):
        kernels.set_backend(None)
        monkeypatch.setenv("FSEDECLIP_BACKEND", "auto")
        assert kernels.current_backend() == "numba"

    def test_warmup_is_idempotent(self):
        kernels.warmup()
        kernels.warmup()


def _run_with_backend(backend, samples, labels, params):
    kernels.set_backend(backend)
    try:
        model, g_center, energies = generate_window_model(
            samples, labels, params, with_energies=True
        )
    finally:
        kernels.set_backend(None)
    return model, g_center, energies


@NEEDS_NUMBA
class TestBackendBitIdentity:
    """Both backends evaluate the same expression trees in the same order,
    so every float they produce must be identical to the last bit."""

    @pytest.mark.parametrize("seed", range(8))
    def test_random_windows_match_exactly(self, seed):
        rng = np.random.default_rng(seed)
        n = 512
        samples, labels = random_window(rng, n, max_lost=60)
        params = FseParams(support=200, fft_size=n, max_iter=80)

        m_np, g_np, e_np = _run_with_backend("numpy", samples, labels, params)
        m_nb, g_nb, e_nb = _run_with_backend("numba", samples, labels, params)

        assert m_np.iterations_used == m_nb.iterations_used
        assert m_np.converged == m_nb.converged
        assert g_np == g_nb  # exact float equality, not approx
        assert np.array_equal(e_np, e_nb)
        assert m_np.coeffs.keys() == m_nb.coeffs.keys()
        for k in m_np.coeffs:
            assert m_np.coeffs[k] == m_nb.coeffs[k]

    def test_direct_kernel_call_matches_exactly(self):
        rng = np.random.default_rng(99)
        n = 256
        h = n // 2
        w = np.abs(rng.standard_normal(n)) + 0.1
        f = rng.standard_normal(n)
        wr = np.fft.rfft(f * w)
        ww = np.fft.fft(w)
        ww2 = np.concatenate([ww, ww])
        pair_g = np.conj(ww2[2 * np.arange(h + 1)])
        sum_w = float(np.sum(w))
        inv_den = 1.0 / np.maximum(
            sum_w * sum_w - (pair_g.real**2 + pair_g.imag**2),
            1e-12 * sum_w * sum_w,
        )
        ph = np.exp(2j * np.pi * ((np.arange(h + 1) * ((n - 1) // 2)) % n) / n)

        results = {}
        for backend in ("numpy", "numba"):
            args = dict(
                wr_re=np.ascontiguousarray(wr.real),
                wr_im=np.ascontiguousarray(wr.imag),
                ww2_re=np.ascontiguousarray(ww2.real),
                ww2_im=np.ascontiguousarray(ww2.imag),
                g_re=np.ascontiguousarray(pair_g.real),
                g_im=np.ascontiguousarray(pair_g.imag),
                inv_den=inv_den.copy(),
                ph_re=np.ascontiguousarray(ph.real),
                ph_im=np.ascontiguousarray(ph.imag),
                coeffs=np.zeros(h + 1, dtype=np.complex128),
                energies=np.zeros(50),
            )
            kernels.set_backend(backend)
            try:
                out = kernels.iterate_window(
                    args["wr_re"], args["wr_im"], args["ww2_re"], args["ww2_im"],
                    args["g_re"], args["g_im"], args["inv_den"],
                    args["ph_re"], args["ph_im"], sum_w, 1.25, 50, 0.0,
                    float(np.sum(w * (f * 0 + f) ** 2)), args["coeffs"],
                    args["energies"],
                )
            finally:
                kernels.set_backend(None)
            results[backend] = (out, args["wr_re"], args["wr_im"],
                                args["coeffs"], args["energies"])

        (g_a, it_a, conv_a), wr_re_a, wr_im_a, c_a, e_a = results["numpy"]
        (g_b, it_b, conv_b), wr_re_b, wr_im_b, c_b, e_b = results["numba"]
        assert (g_a, it_a, conv_a) == (g_b, it_b, conv_b)
        assert np.array_equal(wr_re_a, wr_re_b)
        assert np.array_equal(wr_im_a, wr_im_b)
        assert np.array_equal(c_a, c_b)
        assert np.array_equal(e_a, e_b)
