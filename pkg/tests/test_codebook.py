import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanrecon.codebook import (PmiCodebook, build_dft_codebook, quantize, rate_objective,
                                read_codebook, write_codebook)
from conftest import crandn


def test_full_unitary_entry():
    cb = build_dft_codebook(4, 4, 1)
    n = np.arange(4)
    dft = np.exp(2j * np.pi * np.outer(n, n) / 4) / 2
    assert any(np.allclose(w, dft) for w in cb.entries)


def test_single_layer_count():
    cb = build_dft_codebook(4, 1, 4)
    assert len(cb) == 16
    flat = cb.entries[:, :, 0]
    assert np.allclose(np.linalg.norm(flat, axis=1), 1)
    gram = np.abs(flat.conj() @ flat.T)
    assert np.all(gram[~np.eye(16, dtype=bool)] < 1 - 1e-9)     # all distinct


@pytest.mark.parametrize("k,l,o", [(4, 1, 4), (4, 2, 4), (4, 4, 4), (8, 3, 2)])
def test_entries_semi_unitary(k, l, o):
    cb = build_dft_codebook(k, l, o)
    for w in cb.entries:
        assert np.allclose(w.conj().T @ w, np.eye(l), atol=1e-9)


def test_layers_above_ports():
    with pytest.raises(ValueError):
        build_dft_codebook(4, 5, 4)


def test_single_entry_codebook(rng):
    w = np.eye(4)[:, :2].astype(complex)
    idx, sel = quantize(crandn(rng, 4, 4), PmiCodebook(w[None], 1), 100.0)
    assert idx == 0 and np.array_equal(sel, w)


def test_recovers_generating_entry():
    cb = build_dft_codebook(4, 2, 4)
    for i0 in (0, 7, len(cb) - 1):
        w0 = cb.entries[i0]
        h_uq = 3.0 * w0.conj().T               # h_uq^H h_uq = 9 W0 W0^H
        idx, _ = quantize(h_uq, cb, 100.0)
        objs = [rate_objective(h_uq, w, 100.0) for w in cb.entries]
        assert idx == i0 and objs[idx] >= max(objs) - 1e-12


def test_unitary_ties_pick_first(rng):
    cb = build_dft_codebook(4, 4, 4)
    assert quantize(crandn(rng, 4, 4), cb, 100.0)[0] == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariant_to_left_unitary(seed):
    rng = np.random.default_rng(seed)
    cb = build_dft_codebook(4, 2, 4)
    h = crandn(rng, 4, 4)
    q, _ = np.linalg.qr(crandn(rng, 4, 4))
    assert quantize(h, cb, 100.0)[0] == quantize(q @ h, cb, 100.0)[0]


def test_export_round_trip(tmp_path):
    cb = build_dft_codebook(4, 2, 4)
    write_codebook(tmp_path / "cb.txt", cb)
    back = read_codebook(tmp_path / "cb.txt")
    assert np.array_equal(back.entries, cb.entries) and back.oversampling == 4
