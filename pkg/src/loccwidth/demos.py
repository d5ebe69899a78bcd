"""Built-in demo protocols and seeded random instances."""

from __future__ import annotations

import numpy as np

from .quantum import Ensemble, MultipartiteSpace
from .tree import Edge, Leaf, Node, ProtocolTree


def _basis_projectors(d: int) -> list[np.ndarray]:
    eye = np.eye(d, dtype=np.complex128)
    return [np.outer(eye[:, i], eye[:, i].conj()) for i in range(d)]


def bell_demo() -> tuple[ProtocolTree, Ensemble]:
    """Two Bell states told apart by local Z measurements and one broadcast."""
    space = MultipartiteSpace((2, 2))
    proj = _basis_projectors(2)
    second = [
        Node(1, tuple(Edge((proj[b],), Leaf(0 if a == b else 1)) for b in range(2)))
        for a in range(2)
    ]
    root = Node(0, tuple(Edge((proj[a],), second[a]) for a in range(2)))
    phi = np.zeros(4, dtype=np.complex128)
    phi[0] = phi[3] = 1.0 / np.sqrt(2.0)  # (|00> + |11>)/sqrt(2)
    psi = np.zeros(4, dtype=np.complex128)
    psi[1] = psi[2] = 1.0 / np.sqrt(2.0)  # (|01> + |10>)/sqrt(2)
    members = (
        (0.5, np.outer(phi, phi.conj())),
        (0.5, np.outer(psi, psi.conj())),
    )
    return ProtocolTree(space, root), Ensemble(space, members)


def product_basis_demo(dims: tuple[int, int] = (2, 2)) -> tuple[ProtocolTree, Ensemble]:
    """Orthogonal product basis states, identified by two rounds of local Z."""
    d1, d2 = dims
    space = MultipartiteSpace((d1, d2))
    p1, p2 = _basis_projectors(d1), _basis_projectors(d2)
    root = Node(
        0,
        tuple(
            Edge(
                (p1[a],),
                Node(1, tuple(Edge((p2[b],), Leaf(a * d2 + b)) for b in range(d2))),
            )
            for a in range(d1)
        ),
    )
    eye = np.eye(d1 * d2, dtype=np.complex128)
    members = tuple(
        (1.0 / (d1 * d2), np.outer(eye[:, k], eye[:, k].conj())) for k in range(d1 * d2)
    )
    return ProtocolTree(space, root), Ensemble(space, members)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus_instrument(
    d: int, outcomes: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Complete family of d x d Kraus operators from a Haar dilation slice."""
    u = haar_unitary(d * outcomes, rng)
    v = u[:, :d]  # isometry C^d -> C^outcomes (x) C^d
    return [v[i * d : (i + 1) * d, :] for i in range(outcomes)]


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ensemble(
    space: MultipartiteSpace, n_states: int, rng: np.random.Generator
) -> Ensemble:
    weights = rng.random(n_states) + 0.1
    weights /= weights.sum()
    return Ensemble(
        space, tuple((float(w), random_density(space.total_dim, rng)) for w in weights)
    )


def random_protocol(
    space: MultipartiteSpace,
    rounds: int,
    outcomes_per_round: list[int],
    n_labels: int,
    rng: np.random.Generator,
) -> ProtocolTree:
    """Random tree with Haar-sliced vertex instruments, parties alternating.

    Every edge carries a single square Kraus operator, so the tree is
    already fine-grained and local dimensions never change.
    """
    if len(outcomes_per_round) != rounds:
        raise ValueError("need one outcome count per round")

    def build(depth: int) -> Node | Leaf:
        if depth == rounds:
            return Leaf(int(rng.integers(0, n_labels)))
        party = depth % space.num_parties
        d = space.party_dims[party]
        kraus = random_kraus_instrument(d, outcomes_per_round[depth], rng)
        return Node(party, tuple(Edge((k,), build(depth + 1)) for k in kraus))

    return ProtocolTree(space, build(0))


def random_demo(
    seed: int,
    rounds: int = 2,
    dims: tuple[int, ...] = (2, 2),
    root_outcomes: int = 12,
    later_outcomes: int = 3,
    n_states: int = 4,
) -> tuple[ProtocolTree, Ensemble]:
    """Seed-determined random discrimination instance; labels are optimized."""
    from .tree import evaluate_success, with_labels

    rng = np.random.default_rng(seed)
    space = MultipartiteSpace(dims)
    outcomes = [root_outcomes] + [later_outcomes] * (rounds - 1)
    tree = random_protocol(space, rounds, outcomes, n_states, rng)
    ensemble = random_ensemble(space, n_states, rng)
    _, labels = evaluate_success(tree, ensemble, relabel=True)
    return with_labels(tree, labels), ensemble
