"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from loccwidth.demos import random_ensemble, random_kraus_instrument, random_protocol
from loccwidth.quantum import MultipartiteSpace
from loccwidth.tree import Leaf, Node, ProtocolTree


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_instance(
    seed: int,
    dims: tuple[int, ...] = (2, 2),
    rounds: int = 2,
    outcomes: list[int] | None = None,
    n_states: int = 3,
):
    """(tree, ensemble) pair with seed-determined contents."""
    gen = np.random.default_rng(seed)
    space = MultipartiteSpace(dims)
    if outcomes is None:
        outcomes = [int(gen.integers(2, 5)) for _ in range(rounds)]
    tree = random_protocol(space, rounds, outcomes, n_states, gen)
    ensemble = random_ensemble(space, n_states, gen)
    return tree, ensemble


def leaf_walk_success(tree: ProtocolTree, ensemble) -> float:
    """Independent oracle: explicit leaf enumeration with kron embeddings.

    Walks the tree once carrying the list of cumulative global Kraus
    products, then sums p_f(v) tr(N_v rho_f(v)) leaf by leaf. Kept free of
    the package's evaluation code on purpose.
    """
    total = 0.0

    def embed(k: np.ndarray, party: int, dims: tuple[int, ...]) -> np.ndarray:
        g = np.eye(1, dtype=np.complex128)
        for p, d in enumerate(dims):
            g = np.kron(g, k if p == party else np.eye(d))
        return g

    def walk(vertex, dims: tuple[int, ...], ops: list[np.ndarray]):
        nonlocal total
        if isinstance(vertex, Leaf):
            p, rho = ensemble.members[vertex.label]
            for op in ops:
                total += p * float(np.trace(op @ rho @ op.conj().T).real)
            return
        assert isinstance(vertex, Node)
        for edge in vertex.edges:
            new_dims = list(dims)
            new_dims[vertex.party] = edge.out_dim
            lifted = [embed(k, vertex.party, dims) for k in edge.kraus]
            walk(edge.child, tuple(new_dims), [g @ op for op in ops for g in lifted])

    walk(tree.root, tree.space.party_dims, [np.eye(tree.space.total_dim, dtype=np.complex128)])
    return total


def same_shape(a, b) -> bool:
    """Structural identity: parties, edge counts, leaf labels."""
    if isinstance(a, Leaf) or isinstance(b, Leaf):
        return isinstance(a, Leaf) and isinstance(b, Leaf) and a.label == b.label
    if a.party != b.party or len(a.edges) != len(b.edges):
        return False
    return all(same_shape(ea.child, eb.child) for ea, eb in zip(a.edges, b.edges))


def random_hermitian(d: int, gen: np.random.Generator) -> np.ndarray:
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    return (g + g.conj().T) / 2.0


def random_psd(d: int, gen: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = d if rank is None else rank
    g = gen.standard_normal((d, r)) + 1j * gen.standard_normal((d, r))
    return g @ g.conj().T


def random_qubit_povm(outcomes: int, gen: np.random.Generator) -> list[np.ndarray]:
    """POVM from a Haar dilation slice; elements are generically full rank."""
    kraus = random_kraus_instrument(2, outcomes, gen)
    return [k.conj().T @ k for k in kraus]


def random_mixed_dim_tree(
    dims: tuple[int, ...], rounds: int, n_labels: int, gen: np.random.Generator
) -> ProtocolTree:
    """Tree whose edge maps change the acting party's local dimension."""
    from loccwidth.demos import haar_unitary
    from loccwidth.tree import Edge

    def instrument(d: int, out_dims: list[int]) -> list[np.ndarray]:
        iso = haar_unitary(sum(out_dims), gen)[:, :d]
        ops, row = [], 0
        for dd in out_dims:
            ops.append(iso[row : row + dd, :])
            row += dd
        return ops

    def build(depth: int, current: tuple[int, ...]):
        if depth == rounds:
            return Leaf(int(gen.integers(0, n_labels)))
        party = depth % len(current)
        d = current[party]
        out_dims = [int(gen.integers(1, 4)) for _ in range(int(gen.integers(2, 5)))]
        while sum(out_dims) < d:
            out_dims.append(int(gen.integers(1, 4)))
        edges = []
        for k in instrument(d, out_dims):
            nxt = list(current)
            nxt[party] = k.shape[0]
            edges.append(Edge((k,), build(depth + 1, tuple(nxt))))
        return Node(party, tuple(edges))

    space = MultipartiteSpace(dims)
    return ProtocolTree(space, build(0, space.party_dims))
