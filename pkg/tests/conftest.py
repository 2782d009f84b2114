import numpy as np
import pytest

from mimo_secrecy.model import SystemConfig, sample_channels
from mimo_secrecy import mtmse as mt


def crand(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rand_herm(rng, n):
    a = crand(rng, n, n)
    return a + a.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig3_cfg():
    return SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, snr_db=25.0, epsilon=1.5)


@pytest.fixture
def instance(fig3_cfg):
    """Channels and an initial state of the three-user 4x4 scenario."""
    ch = sample_channels(fig3_cfg, 11)
    st = mt.initial_state(fig3_cfg, ch, 5)
    return fig3_cfg, ch, st


_ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Record a criterion status line and echo it past output capture."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(line):
        _ACCEPTANCE_LINES.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
