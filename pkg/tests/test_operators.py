import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qres.operators import (
    DensityOperator,
    HermitianObservable,
    ValidationError,
    eig_hermitian,
    hermitian_basis,
    hs_inner,
    matrix_exp,
    op_norm,
    random_density,
    random_hermitian,
    random_povm_element,
    random_unitary,
    sample,
    schatten_norms,
    trace_norm,
    unvec,
    vec,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 5)


def test_vec_is_row_stacking():
    a = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(a), [1, 2, 3, 4])
    assert np.array_equal(unvec(vec(a)), a)


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_row_stacking_sandwich(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_unitary(rng, d), random_hermitian(rng, d)
    x = random_density(rng, d)
    assert np.allclose(vec(a @ x @ b), np.kron(a, b.T) @ vec(x), atol=1e-12)


def test_norms_known_values():
    x = np.diag([3.0, -1.0, 0.5])
    assert op_norm(x) == 3.0
    assert trace_norm(x) == 4.5
    assert schatten_norms(x) == (3.0, 4.5)
    assert trace_norm(np.array([[0, 1], [0, 0]])) == pytest.approx(1.0)


def test_eig_descending():
    w, v = eig_hermitian(np.diag([1.0, 3.0, 2.0]))
    assert np.allclose(w, [3, 2, 1])
    assert np.allclose(np.abs(v[:, 0]), [0, 1, 0])


def test_hermitian_basis_orthonormal():
    for d in (2, 3, 4):
        b = hermitian_basis(d)
        gram = np.array([[hs_inner(x, y) for y in b] for x in b])
        assert len(b) == d * d
        assert np.allclose(gram, np.eye(d * d), atol=1e-13)


def test_matrix_exp_matches_eig():
    rng = np.random.default_rng(0)
    h = random_hermitian(rng, 3)
    w, v = np.linalg.eigh(h)
    expect = v @ np.diag(np.exp(-1j * w * 0.7)) @ v.conj().T
    assert np.allclose(matrix_exp(-1j * h, 0.7), expect, atol=1e-12)


def test_validation_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        HermitianObservable(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        HermitianObservable(np.diag([1.5, 0.0]), povm=True)
    with pytest.raises(ValidationError):
        DensityOperator(np.diag([1.0, 1.0]))
    with pytest.raises(ValidationError):
        DensityOperator(np.diag([1.5, -0.5]))


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_samplers_satisfy_invariants(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho)[0] > -1e-12
    u = random_unitary(rng, d)
    assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)
    e = random_povm_element(rng, d)
    w = np.linalg.eigvalsh(e)
    assert w[0] >= -1e-12 and w[-1] <= 1 + 1e-12


def test_sample_is_deterministic():
    for kind in ("pure_state", "mixed_state", "hermitian", "povm_element"):
        a, b = sample(7, kind, 3), sample(7, kind, 3)
        assert np.array_equal(np.asarray(a), np.asarray(b))
    with pytest.raises(ValidationError):
        sample(7, "nope", 3)
