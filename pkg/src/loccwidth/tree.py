"""LOCC protocol trees: local instruments at vertices, CP maps on edges.

A protocol starts at the root; the acting party applies its vertex
instrument, one outgoing edge fires per outcome, the outcome index is
broadcast (implicitly: the path *is* the transcript), and the walk continues
until a leaf, whose label is the protocol's coarse-grained outcome. Local
dimensions may change along a path; each vertex's per-party dimensions are
recomputed from the edge maps above it. Trees are immutable; every
transformation returns a new tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LabelOutOfRange
from .linalg import as_matrix, dagger, fnorm
from .quantum import CpMap, Ensemble, Instrument, MultipartiteSpace, embed_local

COMPLETENESS_TOL = 1e-8

Path = tuple[int, ...]


@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Edge:
    kraus: tuple[np.ndarray, ...] = field(repr=False)
    child: "Node | Leaf"

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus)
        if not ops:
            raise ValueError("edge with no Kraus operators")
        shape = ops[0].shape
        for k in ops:
            if k.shape != shape:
                raise DimensionMismatch(f"mixed Kraus shapes {shape} vs {k.shape}")
        object.__setattr__(self, "kraus", ops)

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    def element(self) -> np.ndarray:
        e = np.zeros((self.in_dim, self.in_dim), dtype=np.complex128)
        for k in self.kraus:
            e += dagger(k) @ k
        return e


@dataclass(frozen=True)
class Node:
    party: int
    edges: tuple["Edge", ...]


@dataclass(frozen=True)
class ProtocolTree:
    space: MultipartiteSpace
    root: "Node | Leaf"


def vertex_id(path: Path) -> str:
    return "root" if not path else ".".join(str(i) for i in path)


def node_at(tree: ProtocolTree, path: Path) -> Node | Leaf:
    vertex: Node | Leaf = tree.root
    for i in path:
        if isinstance(vertex, Leaf):
            raise KeyError(f"path {path} runs past a leaf")
        vertex = vertex.edges[i].child
    return vertex


def space_at(tree: ProtocolTree, path: Path) -> MultipartiteSpace:
    """Per-party dimensions in force at the given vertex."""
    space = tree.space
    vertex: Node | Leaf = tree.root
    for i in path:
        assert isinstance(vertex, Node)
        edge = vertex.edges[i]
        space = space.replacing(vertex.party, edge.out_dim)
        vertex = edge.child
    return space


def subtree_at(tree: ProtocolTree, path: Path) -> ProtocolTree:
    return ProtocolTree(space_at(tree, path), node_at(tree, path))


def iter_vertices(tree: ProtocolTree):
    """Depth-first (path, vertex, space) triples, root first."""
    stack: list[tuple[Path, Node | Leaf, MultipartiteSpace]] = [((), tree.root, tree.space)]
    while stack:
        path, vertex, space = stack.pop()
        yield path, vertex, space
        if isinstance(vertex, Node):
            for i in reversed(range(len(vertex.edges))):
                edge = vertex.edges[i]
                stack.append(
                    (path + (i,), edge.child, space.replacing(vertex.party, edge.out_dim))
                )


def validate_tree(tree: ProtocolTree, tol: float = COMPLETENESS_TOL) -> list[tuple[str, str]]:
    """Diagnostics (vertex id, message); empty means the tree is valid."""
    problems: list[tuple[str, str]] = []
    for path, vertex, space in iter_vertices(tree):
        vid = vertex_id(path)
        if isinstance(vertex, Leaf):
            if vertex.label < 0:
                problems.append((vid, f"negative leaf label {vertex.label}"))
            continue
        if not 0 <= vertex.party < space.num_parties:
            problems.append((vid, f"acting party {vertex.party} out of range"))
            continue
        if not vertex.edges:
            problems.append((vid, "vertex has no outgoing edges"))
            continue
        d_loc = space.party_dims[vertex.party]
        total = np.zeros((d_loc, d_loc), dtype=np.complex128)
        bad_dims = False
        for i, edge in enumerate(vertex.edges):
            if edge.in_dim != d_loc:
                problems.append(
                    (vid, f"edge {i}: Kraus input dim {edge.in_dim} != local dim {d_loc}")
                )
                bad_dims = True
                continue
            total += edge.element()
        if not bad_dims:
            defect = fnorm(total - np.eye(d_loc))
            if defect > tol:
                problems.append((vid, f"instrument completeness defect {defect:.3e}"))
    return problems


def fine_grain(tree: ProtocolTree) -> ProtocolTree:
    """Split every edge into rank-1 pieces, replicating the subtree below."""

    def split(vertex: Node | Leaf) -> Node | Leaf:
        if isinstance(vertex, Leaf):
            return vertex
        edges = []
        for edge in vertex.edges:
            child = split(edge.child)
            for k in edge.kraus:
                edges.append(Edge((k,), child))
        return Node(vertex.party, tuple(edges))

    return ProtocolTree(tree.space, split(tree.root))


def is_fine_grained(tree: ProtocolTree) -> bool:
    return all(
        len(edge.kraus) == 1
        for _, vertex, _ in iter_vertices(tree)
        if isinstance(vertex, Node)
        for edge in vertex.edges
    )


def _embedded_kraus(edge: Edge, party: int, space: MultipartiteSpace) -> list[np.ndarray]:
    return [embed_local(k, party, space) for k in edge.kraus]


def cumulative_map(tree: ProtocolTree, path: Path) -> CpMap:
    """Composition of the embedded edge maps from the root down to ``path``."""
    in_dim = tree.space.total_dim
    ops = [np.eye(in_dim, dtype=np.complex128)]
    space = tree.space
    vertex: Node | Leaf = tree.root
    for i in path:
        if not isinstance(vertex, Node):
            raise KeyError(f"path {path} runs past a leaf")
        edge = vertex.edges[i]
        lifted = _embedded_kraus(edge, vertex.party, space)
        ops = [g @ a for a in ops for g in lifted]
        space = space.replacing(vertex.party, edge.out_dim)
        vertex = edge.child
    return CpMap(in_dim, space.total_dim, tuple(ops))


def evaluate_success(
    tree: ProtocolTree, ensemble: Ensemble, relabel: bool = False
) -> tuple[float, dict[str, int]]:
    """Discrimination success sum over leaves of p_f(v) tr(N_v rho_f(v)).

    With ``relabel`` each leaf is assigned the best state index instead of
    its stored label (ties to the lowest index) and the optimized value is
    returned. Labels actually used are reported per leaf.
    """
    if tree.space.total_dim == 0:
        raise ValueError("empty space")
    n = len(ensemble.members)
    labels: dict[str, int] = {}

    def walk(vertex: Node | Leaf, space: MultipartiteSpace, sigmas: list[np.ndarray], path: Path) -> float:
        if isinstance(vertex, Leaf):
            traces = np.array([float(np.trace(s).real) for s in sigmas])
            if relabel:
                choice = int(np.argmax(traces))
            else:
                if not 0 <= vertex.label < n:
                    raise LabelOutOfRange(
                        f"leaf {vertex_id(path)} labelled {vertex.label}, ensemble has {n} members"
                    )
                choice = vertex.label
            labels[vertex_id(path)] = choice
            return float(traces[choice])
        total = 0.0
        for i, edge in enumerate(vertex.edges):
            lifted = _embedded_kraus(edge, vertex.party, space)
            evolved = [
                sum(g @ s @ dagger(g) for g in lifted) for s in sigmas
            ]
            total += walk(
                edge.child,
                space.replacing(vertex.party, edge.out_dim),
                evolved,
                path + (i,),
            )
        return total

    sigmas0 = [p * rho for p, rho in ensemble.members]
    value = walk(tree.root, tree.space, sigmas0, ())
    return value, labels


def with_labels(tree: ProtocolTree, labels: dict[str, int]) -> ProtocolTree:
    """New tree with leaf labels replaced according to a vertex-id map."""

    def rebuild(vertex: Node | Leaf, path: Path) -> Node | Leaf:
        if isinstance(vertex, Leaf):
            return Leaf(labels.get(vertex_id(path), vertex.label))
        return Node(
            vertex.party,
            tuple(
                Edge(edge.kraus, rebuild(edge.child, path + (i,)))
                for i, edge in enumerate(vertex.edges)
            ),
        )

    return ProtocolTree(tree.space, rebuild(tree.root, ()))


def extract_instrument(tree: ProtocolTree) -> Instrument:
    """Instrument with one branch per leaf label; Kraus union of cumulative maps."""
    in_dim = tree.space.total_dim
    buckets: dict[int, list[np.ndarray]] = {}
    out_dims: dict[int, int] = {}

    def walk(vertex: Node | Leaf, space: MultipartiteSpace, ops: list[np.ndarray]):
        if isinstance(vertex, Leaf):
            d_out = space.total_dim
            if vertex.label in out_dims and out_dims[vertex.label] != d_out:
                raise DimensionMismatch(
                    f"label {vertex.label} reached with output dims "
                    f"{out_dims[vertex.label]} and {d_out}"
                )
            out_dims[vertex.label] = d_out
            buckets.setdefault(vertex.label, []).extend(ops)
            return
        for edge in vertex.edges:
            lifted = _embedded_kraus(edge, vertex.party, space)
            walk(
                edge.child,
                space.replacing(vertex.party, edge.out_dim),
                [g @ a for a in ops for g in lifted],
            )

    walk(tree.root, tree.space, [np.eye(in_dim, dtype=np.complex128)])
    branches = tuple(
        (label, CpMap(in_dim, out_dims[label], tuple(buckets[label])))
        for label in sorted(buckets)
    )
    return Instrument(in_dim, branches)


@dataclass(frozen=True)
class WidthReport:
    max_outdegree: int
    per_depth_max: tuple[int, ...]
    leaf_count: int
    depth: int

    def to_dict(self) -> dict:
        return {
            "max_outdegree": self.max_outdegree,
            "per_depth_max": list(self.per_depth_max),
            "leaf_count": self.leaf_count,
            "depth": self.depth,
        }


def width_report(tree: ProtocolTree) -> WidthReport:
    per_depth: dict[int, int] = {}
    leaves = 0
    max_out = 0
    for path, vertex, _ in iter_vertices(tree):
        if isinstance(vertex, Leaf):
            leaves += 1
            continue
        out = len(vertex.edges)
        max_out = max(max_out, out)
        depth = len(path)
        per_depth[depth] = max(per_depth.get(depth, 0), out)
    depth = max((len(p) for p, v, _ in iter_vertices(tree) if isinstance(v, Leaf)), default=0)
    per_depth_max = tuple(per_depth.get(k, 0) for k in range(len(per_depth)))
    return WidthReport(max_out, per_depth_max, leaves, depth)


def width_bound_violations(
    tree: ProtocolTree, multiplier: int, nonzero_only: bool = False, zero_tol: float = 1e-12
) -> list[tuple[str, int, int]]:
    """Vertices whose outdegree exceeds multiplier * d_loc^2.

    With ``nonzero_only`` edges whose maps vanish (pruned components) are not
    counted.
    """
    violations = []
    for path, vertex, space in iter_vertices(tree):
        if isinstance(vertex, Leaf):
            continue
        d_loc = space.party_dims[vertex.party]
        if nonzero_only:
            out = sum(
                1 for e in vertex.edges if max(fnorm(k) for k in e.kraus) > zero_tol
            )
        else:
            out = len(vertex.edges)
        bound = multiplier * d_loc * d_loc
        if out > bound:
            violations.append((vertex_id(path), out, bound))
    return violations
