"""Convex decomposition of fine-grained protocols into slim components.

Every vertex POVM is peeled into small-support rescalings of itself; taking
one choice per vertex and multiplying the peel coefficients writes the whole
protocol as a convex mixture of protocols with the same tree, edge maps
proportional to the originals, and at most d_loc^2 live outcomes per vertex.
The mixture also implements the protocol's instrument exactly, and the
number of mixture members needed can be cut down to the affine dimension of
the instrument polytope plus one.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .caratheodory import (
    WeightedPointSet,
    hermitian_to_vector,
    peel_decompose,
    reduce_support,
)
from .errors import CapExceeded, DimensionMismatch
from .linalg import fnorm
from .quantum import (
    Ensemble,
    Instrument,
    Povm,
    choi_of,
    povm_weighted_points,
    scalars_from_weights,
)
from .tree import (
    Edge,
    Leaf,
    Node,
    Path,
    ProtocolTree,
    evaluate_success,
    is_fine_grained,
    iter_vertices,
    vertex_id,
)

NULL_TOL = 1e-10
ZERO_ELEMENT = 1e-14
DEFAULT_CAP = 100_000


def decompose_povm_slim(
    povm: Povm, null_tol: float = NULL_TOL
) -> list[tuple[float, np.ndarray]]:
    """Convex split of a POVM into rescalings with at most dim^2 live elements.

    Returns (lambda_j, scalars_j) pairs: scalars_j[i] * E_i summed over i is
    the identity for every component, sum_j lambda_j = 1, and the scalars
    recombine to 1 for every element. Elements that are (numerically) zero
    are passed through with scalar 1.
    """
    d = povm.dim
    traces = [float(np.trace(e).real) for e in povm.elements]
    live = [i for i, tr in enumerate(traces) if tr > ZERO_ELEMENT]
    base = np.ones(len(povm.elements))
    if len(live) <= d * d:
        return [(1.0, base)]
    elements = [povm.elements[i] for i in live]
    points = povm_weighted_points(elements, d)
    components = []
    for coeff, sub in peel_decompose(points, null_tol):
        scalars = base.copy()
        scalars[live] = scalars_from_weights(elements, d, sub.weights)
        components.append((coeff, scalars))
    return components


@dataclass(frozen=True)
class VertexChoices:
    """Per-vertex POVM decomposition of a fine-grained tree."""

    path: Path
    local_dim: int
    components: tuple[tuple[float, np.ndarray], ...]  # (lambda, per-edge scalars)


@dataclass(frozen=True)
class SlimComponent:
    weight: float
    tree: ProtocolTree
    choices: tuple[tuple[str, int], ...] = field(repr=False)  # (vertex id, component index)


@dataclass(frozen=True)
class SlimDecomposition:
    components: tuple[SlimComponent, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def provenance(self) -> tuple[tuple[tuple[str, int], ...], ...]:
        return tuple(c.choices for c in self.components)


def vertex_decompositions(tree: ProtocolTree, null_tol: float = NULL_TOL) -> list[VertexChoices]:
    if not is_fine_grained(tree):
        raise ValueError("slim decomposition needs a fine-grained tree; run fine_grain first")
    out = []
    for path, vertex, space in iter_vertices(tree):
        if isinstance(vertex, Leaf):
            continue
        d_loc = space.party_dims[vertex.party]
        povm = Povm(d_loc, tuple(e.element() for e in vertex.edges))
        comps = decompose_povm_slim(povm, null_tol)
        out.append(VertexChoices(path, d_loc, tuple(comps)))
    return out


def component_count(decomps: list[VertexChoices]) -> int:
    return prod(len(v.components) for v in decomps)


def _scaled_tree(tree: ProtocolTree, scalars_by_vertex: dict[str, np.ndarray]) -> ProtocolTree:
    def rebuild(vertex: Node | Leaf, path: Path) -> Node | Leaf:
        if isinstance(vertex, Leaf):
            return vertex
        scalars = scalars_by_vertex[vertex_id(path)]
        edges = []
        for i, edge in enumerate(vertex.edges):
            root = np.sqrt(scalars[i])
            kraus = edge.kraus if scalars[i] == 1.0 else tuple(root * k for k in edge.kraus)
            edges.append(Edge(kraus, rebuild(edge.child, path + (i,))))
        return Node(vertex.party, tuple(edges))

    return ProtocolTree(tree.space, rebuild(tree.root, ()))


def _component_from_indices(
    tree: ProtocolTree, decomps: list[VertexChoices], indices: tuple[int, ...]
) -> SlimComponent:
    weight = 1.0
    scalars_by_vertex = {}
    choices = []
    for v, j in zip(decomps, indices):
        lam, scalars = v.components[j]
        weight *= lam
        scalars_by_vertex[vertex_id(v.path)] = scalars
        choices.append((vertex_id(v.path), j))
    return SlimComponent(weight, _scaled_tree(tree, scalars_by_vertex), tuple(choices))


def iter_slim_components(
    tree: ProtocolTree, null_tol: float = NULL_TOL, decomps: list[VertexChoices] | None = None
):
    """Lazily yield every slim component (the count multiplies over vertices)."""
    if decomps is None:
        decomps = vertex_decompositions(tree, null_tol)
    for indices in itertools.product(*(range(len(v.components)) for v in decomps)):
        yield _component_from_indices(tree, decomps, indices)


def slim_decompose_tree(
    tree: ProtocolTree, cap: int = DEFAULT_CAP, null_tol: float = NULL_TOL
) -> SlimDecomposition:
    """Materialize the full decomposition; raises CapExceeded past ``cap``."""
    decomps = vertex_decompositions(tree, null_tol)
    total = component_count(decomps)
    if total > cap:
        raise CapExceeded(f"{total} components exceed the cap {cap}")
    return SlimDecomposition(tuple(iter_slim_components(tree, null_tol, decomps)))


def _thread_count() -> int:
    raw = os.environ.get("LOCC_SLIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class BestSlimResult:
    weight: float
    tree: ProtocolTree
    success: float
    exhaustive: bool
    total_components: int
    evaluated: int


def best_slim(
    tree: ProtocolTree,
    ensemble: Ensemble,
    cap: int = DEFAULT_CAP,
    null_tol: float = NULL_TOL,
    rng: np.random.Generator | None = None,
) -> BestSlimResult:
    """Best slim component for the discrimination objective.

    Enumerates exhaustively when the component count fits the cap (then the
    winner is guaranteed at least the mixture's success, i.e. the original
    protocol's); otherwise samples ``cap`` choice vectors from the mixture
    weights and flags the result as non-exhaustive.
    """
    decomps = vertex_decompositions(tree, null_tol)
    total = component_count(decomps)
    exhaustive = total <= cap
    if exhaustive:
        index_iter = itertools.product(*(range(len(v.components)) for v in decomps))
        evaluated = total
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        lambda_tables = [np.array([lam for lam, _ in v.components]) for v in decomps]
        index_iter = (
            tuple(int(rng.choice(len(tbl), p=tbl / tbl.sum())) for tbl in lambda_tables)
            for _ in range(cap)
        )
        evaluated = cap

    def score(indices: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
        comp = _component_from_indices(tree, decomps, indices)
        value, _ = evaluate_success(comp.tree, ensemble)
        return value, indices

    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(score, index_iter, chunksize=16))
    else:
        scores = [score(ix) for ix in index_iter]
    if not scores:
        raise ValueError("nothing evaluated; cap must be at least 1")
    best_value = -1.0
    best_indices = None
    for value, indices in scores:
        if value > best_value + 1e-15:
            best_value, best_indices = value, indices
    winner = _component_from_indices(tree, decomps, best_indices)
    return BestSlimResult(
        weight=winner.weight,
        tree=winner.tree,
        success=best_value,
        exhaustive=exhaustive,
        total_components=total,
        evaluated=evaluated,
    )


def randomness_bound(in_dim: int, out_dims: list[int]) -> int:
    """Mixture size that always suffices: sum D0^2 Di^2 - D0^2 + 1."""
    return sum(in_dim * in_dim * d * d for d in out_dims) - in_dim * in_dim + 1


def reduce_shared_randomness(
    components: list[tuple[float, Instrument]], null_tol: float = NULL_TOL
) -> tuple[list[tuple[float, Instrument]], int]:
    """Thin a mixture of instruments without changing what it implements.

    All instruments must share input dimension, outcome labels and per-label
    output dimensions. Embeds each instrument as the stacked real vectors of
    its per-outcome Choi matrices and reduces the mixture's support until the
    points are affinely independent; trace preservation pins D0^2 of the
    coordinates, so the retained count never exceeds
    R = sum D0^2 Di^2 - D0^2 + 1, which is asserted. Returns the retained
    (weight, instrument) pairs, always a subset of the input, and R.
    """
    if not components:
        raise ValueError("empty mixture")
    first = components[0][1]
    labels = [label for label, _ in first.branches]
    out_dims = {label: cp.out_dim for label, cp in first.branches}
    in_dim = first.in_dim
    vectors = []
    for _, inst in components:
        if inst.in_dim != in_dim or [l for l, _ in inst.branches] != labels:
            raise DimensionMismatch("mixture members implement different instrument shapes")
        parts = []
        for label, cp in inst.branches:
            if cp.out_dim != out_dims[label]:
                raise DimensionMismatch(f"branch {label!r} output dims differ across members")
            parts.append(hermitian_to_vector(choi_of(cp).matrix))
        vectors.append(np.concatenate(parts))
    weights = np.array([lam for lam, _ in components], dtype=np.float64)
    points = WeightedPointSet(np.array(vectors), weights / weights.sum())
    reduced = reduce_support(points, null_tol)
    bound = randomness_bound(in_dim, [out_dims[label] for label in labels])
    retained = reduced.support
    assert retained.size <= bound, (
        f"support {retained.size} exceeded the shared-randomness bound {bound}; "
        "tolerance misconfiguration or mixture members too far from trace preserving"
    )
    return [(float(reduced.weights[i]), components[i][1]) for i in retained], bound


def edge_recombination_residual(decomps: list[VertexChoices]) -> float:
    """max over edges of |sum_j lambda_j scalar_j - 1|."""
    worst = 0.0
    for v in decomps:
        lams = np.array([lam for lam, _ in v.components])
        table = np.array([scalars for _, scalars in v.components])
        worst = max(worst, float(np.max(np.abs(lams @ table - 1.0))))
    return worst


def nonzero_outdegree_ok(component: SlimComponent, zero_tol: float = 1e-12) -> bool:
    """Condition check: live outdegree at most d_loc^2 at every vertex."""
    for path, vertex, space in iter_vertices(component.tree):
        if isinstance(vertex, Leaf):
            continue
        d_loc = space.party_dims[vertex.party]
        live = sum(1 for e in vertex.edges if max(fnorm(k) for k in e.kraus) > zero_tol)
        if live > d_loc * d_loc:
            return False
    return True
