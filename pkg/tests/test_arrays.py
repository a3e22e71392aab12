import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanrecon.arrays import (AngleRangeError, ArrayConfig, DimensionError, angle_grid,
                              ula_response, upa_response, upa_dictionary)

angles = st.floats(-np.pi / 2, np.pi / 2)
sizes = st.integers(1, 16)


def test_ula_examples():
    assert np.allclose(ula_response(1, 0.3), [1])
    assert np.allclose(ula_response(4, 0.0), np.ones(4) / 2)
    assert np.allclose(ula_response(2, np.pi / 2), np.array([1, -1]) / np.sqrt(2))


def test_ula_elements():
    th = 0.41
    a = ula_response(6, th)
    ref = np.array([np.exp(1j * i * np.pi * np.sin(th)) for i in range(6)]) / np.sqrt(6)
    assert np.allclose(a, ref, atol=1e-14)


def test_upa_collapses_to_ula():
    mv, mh = 0.3, -0.7
    assert np.allclose(upa_response(1, 5, mv, mh),
                       ula_response(5, np.arcsin(np.sin(mh) * np.cos(mv))))
    assert np.allclose(upa_response(5, 1, mv, mh), ula_response(5, mv))
    assert np.allclose(upa_response(2, 2, 0, 0), np.ones(4) / 2)


@given(st.integers(1, 6), st.integers(1, 6), angles, angles)
def test_upa_double_loop(nv, nh, mv, mh):
    a = upa_response(nv, nh, mv, mh)
    for v in range(nv):
        for h in range(nh):
            ref = np.exp(1j * np.pi * (v * np.sin(mv) + h * np.sin(mh) * np.cos(mv)))
            assert abs(a[v * nh + h] * np.sqrt(nv * nh) - ref) < 1e-12


@given(sizes, angles)
def test_ula_unit_norm(n, th):
    assert abs(np.linalg.norm(ula_response(n, th)) - 1) < 1e-12


@given(sizes, sizes, angles, angles)
def test_upa_unit_norm(nv, nh, mv, mh):
    assert abs(np.linalg.norm(upa_response(nv, nh, mv, mh)) - 1) < 1e-12


@settings(max_examples=50)
@given(sizes, st.floats(-1.5, 1.5))
def test_response_is_continuous(n, th):
    assert np.linalg.norm(ula_response(n, th + 1e-9) - ula_response(n, th)) < 1e-6


def test_rejects_bad_inputs():
    with pytest.raises(DimensionError):
        ula_response(0, 0.1)
    with pytest.raises(DimensionError):
        upa_response(0, 2, 0.1, 0.1)
    with pytest.raises(AngleRangeError):
        ula_response(4, np.pi / 2 + 1e-6)
    with pytest.raises(AngleRangeError):
        upa_response(2, 2, 0.0, -2.0)


def test_array_config():
    upa = ArrayConfig.upa(8, 4)
    assert upa.n_elements == 32
    assert np.allclose(upa.response((0.2, 0.3)), upa_response(8, 4, 0.2, 0.3))
    assert ArrayConfig.ula(32).n_elements == 32
    assert upa.as_ula().kind == "ula" and upa.as_ula().n_elements == 32


def test_grid_spans_range():
    g = angle_grid(3600)
    assert g.size == 3601 and g[0] == -np.pi / 2 and g[-1] == np.pi / 2
    assert np.allclose(np.diff(g), np.pi / 3600)


def test_upa_dictionary_column_order():
    d = upa_dictionary(2, 3, 4, 5)
    gv, gh = angle_grid(4), angle_grid(5)
    assert np.allclose(d[:, 2 * 6 + 3], upa_response(2, 3, gv[2], gh[3]))
    assert not d.flags.writeable
