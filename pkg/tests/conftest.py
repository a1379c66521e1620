import pytest

from fsedeclip.kernels import warmup


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jit kernel once so timed tests start hot
    warmup()
