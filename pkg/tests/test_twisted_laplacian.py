import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusdimer.torus_graph import build_square_torus, reverse_graph
from torusdimer.twisted_laplacian import (Character, LogDet, assemble,
                                          det_spectral, determinant,
                                          forman_sum, spectral_eigenvalues,
                                          write_determinant_csv)

from conftest import random_conductance

unit = st.floats(0.0, 1.0, exclude_max=True, allow_nan=False)


def test_character_normalization():
    chi = Character(1.3, -0.25)
    assert math.isclose(chi.u, 0.3)
    assert math.isclose(chi.v, 0.75)
    assert Character(0.0, 0.0).is_trivial
    assert not Character(0.5, 0.0).is_trivial


@given(unit, unit, st.integers(-3, 3), st.integers(-3, 3))
def test_character_value_is_unitary(u, v, a, b):
    z = Character(u, v).value_on_crossing(a, b)
    assert abs(abs(z) - 1.0) < 1e-12


def test_trivial_character_row_sums(square2):
    lap = assemble(square2, Character(0.0, 0.0))
    assert np.abs(lap.matrix.sum(axis=1)).max() < 1e-14


def test_golden_determinants(square2):
    # closed forms on the uniform 2x2 torus
    d = determinant(assemble(square2, Character(0.5, 0.5)))
    assert abs(d.value() - 1.0) < 1e-13
    d = determinant(assemble(square2, Character(0.0, 0.5)))
    assert abs(d.value() - 9.0 / 16.0) < 1e-13
    lam = sorted(spectral_eigenvalues(2, (0, 2), Character(0.0, 0.5)).ravel())
    assert np.allclose(lam, [0.5, 0.5, 1.5, 1.5], atol=1e-14)


def test_trivial_determinant_flags_zero(square2):
    d = determinant(assemble(square2, Character(0.0, 0.0)))
    assert d.is_zero
    assert d.value() == 0
    assert det_spectral(2, (0, 2), Character(0.0, 0.0)).is_zero


def test_adjoint_identities(square2_random):
    # the adjoint of the twisted matrix is the reversed graph's matrix at the
    # same character; the transpose is the reversed graph's at the conjugate
    g = square2_random
    r = reverse_graph(g)
    chi = Character(0.37, 0.71)
    a = assemble(g, chi).matrix
    assert np.allclose(a.conj().T, assemble(r, chi).matrix, atol=1e-15)
    assert np.allclose(a.T, assemble(r, chi.conjugate()).matrix, atol=1e-15)


def test_symmetric_conductances_give_hermitian():
    from conftest import symmetric_conductance

    g = build_square_torus(3, (0, 3), conductance=symmetric_conductance(5, 3, 0, 3))
    a = assemble(g, Character(0.21, 0.84)).matrix
    assert np.abs(a - a.conj().T).max() < 1e-14


def test_non_crossing_entry_is_minus_conductance():
    g = build_square_torus(4, (0, 4))
    chi = Character(0.3, 0.8)
    m = assemble(g, chi).matrix
    for e in g.edges:
        if e.crossing == (0, 0) and e.tail != e.head:
            assert m[e.tail, e.head] == -e.conductance
            break
    else:
        pytest.fail("expected a non-crossing edge on the 4x4 torus")


@pytest.mark.parametrize("n,shift", [(2, (0, 2)), (4, (0, 4)), (8, (1, 8)),
                                     (4, (2, 2))])
def test_spectral_matches_dense(n, shift):
    g = build_square_torus(n, shift)
    rng = np.random.default_rng(7)
    for _ in range(20):
        chi = Character(rng.uniform(), rng.uniform())
        dd = determinant(assemble(g, chi))
        sp = det_spectral(n, shift, chi)
        assert not dd.is_zero and not sp.is_zero
        assert abs(dd.value() - sp.value()) <= 1e-10 * abs(sp.value())


def test_determinant_periodicity(square2):
    d1 = determinant(assemble(square2, Character(0.3, 0.4)))
    d2 = determinant(assemble(square2, Character(1.3, -0.6)))
    assert abs(d1.value() - d2.value()) < 1e-13


def test_nontrivial_grid_determinants_stay_away_from_zero():
    g = build_square_torus(8, (0, 8))
    for u in (0.0, 0.25, 0.5):
        for v in (0.0, 0.25, 0.5):
            if u == v == 0.0:
                continue
            d = determinant(assemble(g, Character(u, v)))
            assert not d.is_zero
            assert abs(d.value()) > 1e-12


def test_forman_identity(square2, square2_random):
    g32 = build_square_torus(3, (0, 2))
    rng = np.random.default_rng(9)
    for g in (square2, g32, square2_random):
        for _ in range(8):
            chi = Character(rng.uniform(), rng.uniform())
            fs = forman_sum(g, chi)
            dd = determinant(assemble(g, chi)).value()
            assert abs(fs - dd) <= 1e-10 * abs(dd)


def test_forman_trivial_vanishes(square2):
    assert abs(forman_sum(square2, Character(0.0, 0.0))) < 1e-14


def test_forman_conjugation(square2_random):
    chi = Character(0.34, 0.81)
    lhs = forman_sum(square2_random, chi)
    rhs = np.conj(forman_sum(square2_random, chi.conjugate()))
    assert abs(lhs - rhs) < 1e-13


def test_forman_includes_compressible_fields(square2):
    # compressible fields carry a contractible cycle, whose factor vanishes,
    # so including them cannot change the sum
    chi = Character(0.29, 0.53)
    a = forman_sum(square2, chi)
    b = forman_sum(square2, chi, include_compressible=True)
    assert abs(a - b) < 1e-13


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_logdet_scaling(log_scale):
    d = LogDet(log_modulus=2.0, phase=1j)
    assert abs(d.scaled(log_scale) - math.exp(2.0 - log_scale) * 1j) < 1e-300 \
        or math.isclose(abs(d.scaled(log_scale)), math.exp(2.0 - log_scale))


def test_determinant_csv(tmp_path, square2):
    path = tmp_path / "dets.csv"
    chis = [Character(0.1, 0.2), Character(0.0, 0.0)]
    write_determinant_csv(square2, chis, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "u,v,log_modulus,phase_re,phase_im,zero_flag"
    assert len(lines) == 3
    assert lines[2].endswith(",1")  # trivial character row carries the flag
