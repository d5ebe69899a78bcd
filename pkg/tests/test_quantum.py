import numpy as np
import pytest

from loccwidth.errors import DimensionMismatch, NotPsd
from loccwidth.linalg import dagger, fnorm
from loccwidth.quantum import (
    ChoiMatrix,
    CpMap,
    Ensemble,
    Instrument,
    MultipartiteSpace,
    Povm,
    canonicalize_kraus,
    choi_of,
    embed_local,
    map_of_choi,
    povm_weighted_points,
    scalars_from_weights,
    trace_affine_vector,
)

from conftest import random_psd, random_qubit_povm


def choi_by_definition(cp: CpMap) -> np.ndarray:
    """Oracle: sum_ij E_ij (x) map(E_ij), input index first, by direct loops."""
    d_in, d_out = cp.in_dim, cp.out_dim
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for i in range(d_in):
        for j in range(d_in):
            e_ij = np.zeros((d_in, d_in), dtype=np.complex128)
            e_ij[i, j] = 1.0
            c += np.kron(e_ij, cp.apply(e_ij))
    return c


def random_cpmap(d_in: int, d_out: int, n_kraus: int, gen: np.random.Generator) -> CpMap:
    ops = [
        gen.standard_normal((d_out, d_in)) + 1j * gen.standard_normal((d_out, d_in))
        for _ in range(n_kraus)
    ]
    total = sum(dagger(k) @ k for k in ops)
    w = np.linalg.eigvalsh(total)
    scale = 1.0 / np.sqrt(w[-1] * 1.01)
    return CpMap(d_in, d_out, tuple(scale * k for k in ops))


def test_space_dims():
    space = MultipartiteSpace((2, 3, 2))
    assert space.total_dim == 12
    assert space.replacing(1, 5).party_dims == (2, 5, 2)
    with pytest.raises(ValueError):
        MultipartiteSpace((2, 0))


def test_ensemble_normalize_and_flags():
    space = MultipartiteSpace((2,))
    rho = np.diag([0.5, 0.5])
    e = Ensemble(space, ((0.3, 2.0 * rho), (0.2, rho)))
    assert not e.is_normalized
    q, normalized = e.normalize()
    assert q == pytest.approx(0.3 * 2.0 + 0.2)
    assert normalized.is_normalized
    assert normalized.validate() == []


def test_povm_validate():
    good = Povm(2, tuple(random_qubit_povm(5, np.random.default_rng(0))))
    assert good.validate() == []
    bad = Povm(2, (np.eye(2) * 0.5,))
    assert any("completeness" in msg for msg in bad.validate())
    indefinite = Povm(2, (np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
    assert any("eigenvalue" in msg for msg in indefinite.validate())


def test_embed_local_identity_and_diag():
    space = MultipartiteSpace((2, 2))
    assert fnorm(embed_local(np.eye(2), 0, space) - np.eye(4)) < 1e-14
    assert fnorm(embed_local(np.eye(2), 1, space) - np.eye(4)) < 1e-14
    got = embed_local(np.diag([1.0, 0.0]), 0, space)
    assert fnorm(got - np.diag([1.0, 1.0, 0.0, 0.0])) < 1e-14


def test_embed_local_product_state_oracle():
    gen = np.random.default_rng(4)
    space = MultipartiteSpace((2, 3))
    for _ in range(20):
        k = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
        rho_a = random_psd(2, gen)
        rho_b = random_psd(3, gen)
        lifted = embed_local(k, 1, space)
        left = lifted @ np.kron(rho_a, rho_b) @ dagger(lifted)
        right = np.kron(rho_a, k @ rho_b @ dagger(k))
        assert fnorm(left - right) <= 1e-10 * max(1.0, fnorm(right))
    with pytest.raises(DimensionMismatch):
        embed_local(np.eye(3), 0, space)


def test_canonicalize_kraus():
    gen = np.random.default_rng(8)
    from loccwidth.demos import haar_unitary

    u0 = haar_unitary(3, gen)
    p, u = canonicalize_kraus(u0)
    assert fnorm(p - np.eye(3)) <= 1e-9
    assert fnorm(u - u0) <= 1e-9

    p, u = canonicalize_kraus(np.diag([2.0, 0.0]))
    assert fnorm(p - np.diag([2.0, 0.0])) <= 1e-10
    assert fnorm(u - np.diag([1.0, 0.0])) <= 1e-10

    for _ in range(20):
        a = gen.standard_normal((3, 2)) + 1j * gen.standard_normal((3, 2))
        p, u = canonicalize_kraus(a)
        assert fnorm(u @ p - a) <= 1e-9 * max(1.0, fnorm(a))
        support = dagger(u) @ u
        assert fnorm(support @ support - support) <= 1e-9


def test_choi_identity_channel():
    ident = CpMap(2, 2, (np.eye(2),))
    c = choi_of(ident)
    omega = np.zeros((4, 4), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            omega[i * 2 + i, j * 2 + j] = 1.0
    assert fnorm(c.matrix - omega) < 1e-14
    assert np.trace(c.matrix).real == pytest.approx(2.0)
    assert fnorm(c.matrix - choi_by_definition(ident)) < 1e-14


def test_choi_depolarize_to_maximally_mixed():
    # map(X) = tr(X) I/2 via Kraus {|i><j| / sqrt(2)}
    kraus = []
    for i in range(2):
        for j in range(2):
            k = np.zeros((2, 2), dtype=np.complex128)
            k[i, j] = 1.0 / np.sqrt(2.0)
            kraus.append(k)
    cp = CpMap(2, 2, tuple(kraus))
    c = choi_of(cp)
    assert fnorm(c.matrix - np.eye(4) / 2.0) < 1e-14
    assert fnorm(c.matrix - choi_by_definition(cp)) < 1e-14


def test_choi_round_trip_and_linearity():
    gen = np.random.default_rng(15)
    for _ in range(30):
        d_in = int(gen.integers(1, 4))
        d_out = int(gen.integers(1, 4))
        cp = random_cpmap(d_in, d_out, int(gen.integers(1, 4)), gen)
        c = choi_of(cp)
        assert fnorm(c.matrix - choi_by_definition(cp)) <= 1e-12
        back = map_of_choi(c)
        assert fnorm(choi_of(back).matrix - c.matrix) <= 1e-8
        assert len(back.kraus) <= np.linalg.matrix_rank(c.matrix, tol=1e-9)

    a = random_cpmap(2, 2, 2, gen)
    b = random_cpmap(2, 2, 1, gen)
    mixed = 0.3 * choi_of(a).matrix + 0.7 * choi_of(b).matrix
    combined = CpMap(
        2, 2, tuple(np.sqrt(0.3) * k for k in a.kraus) + tuple(np.sqrt(0.7) * k for k in b.kraus)
    )
    assert fnorm(choi_of(combined).matrix - mixed) <= 1e-10


def test_map_of_choi_rejects_indefinite():
    with pytest.raises(NotPsd):
        map_of_choi(ChoiMatrix(2, 2, np.diag([1.0, 1.0, 1.0, -1.0])))


def test_instrument_trace_preserving():
    gen = np.random.default_rng(16)
    from loccwidth.demos import random_kraus_instrument

    kraus = random_kraus_instrument(3, 4, gen)
    inst = Instrument(3, tuple((i, CpMap(3, 3, (k,))) for i, k in enumerate(kraus)))
    assert inst.validate() == []
    for _ in range(10):
        rho = random_psd(3, gen)
        rho /= np.trace(rho).real
        total = sum(np.trace(cp.apply(rho)).real for _, cp in inst.branches)
        assert total == pytest.approx(1.0, abs=1e-8)


def test_trace_affine_embedding_geometry():
    gen = np.random.default_rng(17)
    d = 3
    # the maximally mixed point is the origin, dimension is d^2 - 1
    assert np.allclose(trace_affine_vector(np.eye(d) / d), np.zeros(d * d - 1), atol=1e-12)
    povm = [random_psd(d, gen) for _ in range(4)]
    total = sum(povm)
    from loccwidth.linalg import inv_sqrt_on_support

    s, _ = inv_sqrt_on_support(total)
    povm = [s @ e @ s for e in povm]  # rescale to a proper POVM
    pts = povm_weighted_points(povm, d)
    assert pts.dim == d * d - 1
    assert abs(pts.weights.sum() - 1.0) <= 1e-10
    from loccwidth.caratheodory import barycentre

    assert np.max(np.abs(barycentre(pts))) <= 1e-9
    scalars = scalars_from_weights(povm, d, pts.weights)
    assert np.allclose(scalars, 1.0, atol=1e-10)
