import numpy as np
import pytest

from chanrecon.arrays import ArrayConfig, angle_grid
from chanrecon.channel import PathSet, generate_channel
from chanrecon.csi_rs import PortConfig, beamforming_matrix


def single_path_channel(bs_array, m_ue=4, aoa_idx=2100, aod=(2400,), gain=0.8 - 0.6j,
                        r_ula=3600, r_upa=200):
    """Noiseless one-path channel with both angles on the estimation grids."""
    aoa = angle_grid(r_ula)[aoa_idx]
    if bs_array.kind == "ula":
        aods = np.array([angle_grid(r_ula)[aod[0]]])
    else:
        g = angle_grid(r_upa)
        aods = np.array([[g[aod[0]], g[aod[1]]]])
    ps = PathSet(np.array([gain]), np.array([aoa]), aods)
    return generate_channel(ps, bs_array, m_ue)


def unquantized_input(ch, j=8, mode="widebeam", m_tx=1):
    """``(W, h_srs, P)`` with the effective channel fed back unquantized."""
    ports = PortConfig.for_array(ch.n_bs, j)
    h_srs = ch.h[:, m_tx - 1].copy()
    p = beamforming_matrix(mode, ports, h_srs).p
    w = p.conj().T @ ch.h            # K x M_UE, so W^H = H^H P
    return w, h_srs, p


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ula32():
    return ArrayConfig.ula(32)


@pytest.fixture
def upa84():
    return ArrayConfig.upa(8, 4)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


ACCEPTANCE_LINES = []


def acceptance_line(number, name, ok, detail):
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
