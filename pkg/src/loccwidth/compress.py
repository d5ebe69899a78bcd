"""Top-down width compression preserving discrimination success exactly.

Each vertex measurement is replaced by an equivalent two-stage one: a first
stage whose outcomes all have the *same* conditional success as the whole
protocol (built by repeatedly merging an above-average outcome with a
below-average one), then a Caratheodory support reduction of the first-stage
POVM down to d_loc^2 outcomes, then the recorded binary second stage that
restores each original post-measurement ensemble up to a positive scalar.
Composing both stages into a single local measurement keeps the round count
and leaves every vertex with at most 2 d_loc^2 outgoing edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .caratheodory import reduce_support
from .errors import ConvergenceFailure, DimensionMismatch
from .linalg import as_matrix, dagger, inv_sqrt_on_support, sqrt_psd
from .quantum import (
    Ensemble,
    MultipartiteSpace,
    embed_local,
    povm_weighted_points,
    scalars_from_weights,
)
from .tree import Edge, Leaf, Node, ProtocolTree, evaluate_success, subtree_at

Q_CUTOFF = 1e-12
EQUALIZE_TOL = 1e-8


def matrix_sum_split(
    x: np.ndarray, y: np.ndarray, rank_tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Split matrices of equal width against their combined square root.

    Returns (C, D) with C sqrt(X^dag X + Y^dag Y) = X, likewise D for Y, and
    C^dag C + D^dag D = I. When X^dag X + Y^dag Y is singular the inverse
    square root is taken on the support and the completion acting on the
    null space is added to C (overflowing into D only when C has no rows
    left to carry it). Requires rows(X) + rows(Y) >= cols, otherwise no
    exact completion exists.
    """
    x = as_matrix(x)
    y = as_matrix(y)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"widths differ: {x.shape[1]} vs {y.shape[1]}")
    n = x.shape[1]
    a, b = x.shape[0], y.shape[0]
    m = dagger(x) @ x + dagger(y) @ y
    pinv_sqrt, null_proj = inv_sqrt_on_support(m, rank_tol)
    c = x @ pinv_sqrt
    d = y @ pinv_sqrt
    null_rank = int(round(float(np.trace(null_proj).real)))
    if null_rank == 0:
        return c, d
    if a + b < n:
        raise DimensionMismatch(
            f"no completion: rows {a}+{b} < width {n} with singular combined Gram matrix"
        )
    # Orthonormal basis of the null space of M.
    w_null, v_null = np.linalg.eigh(null_proj)
    basis_n = v_null[:, w_null > 0.5]
    # Stack C over D and extend with null_rank orthonormal columns orthogonal
    # to the existing range, preferring standard basis vectors on C's rows so
    # the benign square case degenerates to "add the null projector to C".
    z = np.vstack([c, d])
    u_z, s_z, _ = np.linalg.svd(z, full_matrices=False)
    rank_z = int(np.sum(s_z > 1e-10 * s_z[0])) if s_z.size and s_z[0] > 0 else 0
    range_basis = [u_z[:, j] for j in range(rank_z)]
    completion: list[np.ndarray] = []
    for row in range(a + b):
        if len(completion) == null_rank:
            break
        v = np.zeros(a + b, dtype=np.complex128)
        v[row] = 1.0
        for _ in range(2):  # re-orthogonalize for numerical safety
            for u in range_basis:
                v -= (u.conj() @ v) * u
            for u in completion:
                v -= (u.conj() @ v) * u
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            completion.append(v / nv)
    if len(completion) < null_rank:
        raise DimensionMismatch("could not complete the split to a full isometry")
    w = np.column_stack(completion)
    z = z + w @ dagger(basis_n)
    return z[:a], z[a:]


@dataclass(frozen=True)
class EqualizedOutcome:
    """First-stage outcome with its recorded binary continuation.

    ``second_stage`` lists (original outcome index, scalar c) pairs, at most
    two of them, with sum_c c * E_original = element of this outcome; the
    recorded continuation (split per Lemma-style binary measurement, then the
    original subtrees) gives this outcome conditional success equal to the
    equalization target.
    """

    kraus: tuple[np.ndarray, ...] = field(repr=False)
    weight: float
    conditional_success: float | None
    second_stage: tuple[tuple[int, float], ...]

    def element(self) -> np.ndarray:
        n = self.kraus[0].shape[1]
        e = np.zeros((n, n), dtype=np.complex128)
        for k in self.kraus:
            e += dagger(k) @ k
        return e


def _edge_conditional(
    members: list[tuple[float, np.ndarray]],
    edge: Edge,
    party: int,
    space: MultipartiteSpace,
) -> tuple[float, list[tuple[float, np.ndarray]] | None]:
    """Probability of an edge firing and the normalized ensemble it induces."""
    lifted = [embed_local(k, party, space) for k in edge.kraus]
    sigmas = []
    for p, rho in members:
        out = sum(g @ rho @ dagger(g) for g in lifted)
        sigmas.append(p * out)
    traces = np.array([float(np.trace(s).real) for s in sigmas])
    q = float(traces.sum())
    if q <= Q_CUTOFF:
        return 0.0, None
    d_out = lifted[0].shape[0]
    normalized = []
    for tr, sigma in zip(traces, sigmas):
        if tr > 0.0:
            normalized.append((tr / q, sigma / tr))
        else:
            normalized.append((0.0, np.eye(d_out, dtype=np.complex128) / d_out))
    return q, normalized


def conditional_success(
    tree: ProtocolTree, v_child: int, ensemble: Ensemble
) -> tuple[float, float | None]:
    """(q_i, t_i) for one root outcome: reach probability and subtree success.

    Returns (0.0, None) when the outcome has probability below the cutoff.
    """
    if isinstance(tree.root, Leaf):
        raise ValueError("root is a leaf; it has no outcomes")
    edge = tree.root.edges[v_child]
    q, members = _edge_conditional(list(ensemble.members), edge, tree.root.party, tree.space)
    if members is None:
        return 0.0, None
    sub = subtree_at(tree, (v_child,))
    t_i, _ = evaluate_success(sub, Ensemble(sub.space, tuple(members)))
    return q, t_i


def equalize(
    outcomes: list[EqualizedOutcome], t_target: float, tol: float = EQUALIZE_TOL
) -> list[EqualizedOutcome]:
    """Merge outcomes until every conditional success equals the target.

    Each round pairs the outcome with the largest t_i above the target with
    the smallest below it and replaces the pair per the s <= 1 / s > 1 merge:
    the merged outcome B = sqrt(E_1 + s E_k) has conditional success exactly
    the target under its two-entry second stage, while the partner survives
    scaled by the leftover factor. The sum q_i t_i is invariant round by
    round, so total success is preserved exactly.
    """
    pool = list(outcomes)
    done: list[EqualizedOutcome] = []
    budget = len(outcomes) + 2
    for _ in range(budget):
        if not pool:
            break
        ts = np.array([o.conditional_success for o in pool])
        qs = np.array([o.weight for o in pool])
        devs = np.abs(ts - t_target)
        if np.max(devs) <= tol:
            break
        if np.max(qs * devs) <= Q_CUTOFF:
            # Weight conservation only controls q_i * |t_i - t|; leftovers
            # below this floor have no partner left and cannot influence the
            # total success, so they are flagged as unreachable below.
            break
        hi = int(np.argmax(ts))
        lo = int(np.argmin(ts))
        t1, tk = float(ts[hi]), float(ts[lo])
        if not t1 > t_target > tk:
            raise ConvergenceFailure(
                f"cannot merge: extremes {t1:.12f}, {tk:.12f} do not straddle {t_target:.12f}"
            )
        o1, ok = pool[hi], pool[lo]
        if len(o1.second_stage) != 1 or len(ok.second_stage) != 1:
            raise ConvergenceFailure("merged outcome re-entered the equalization pool")
        lam = (t1 - t_target) / (t1 - tk)
        s = lam * o1.weight / ((1.0 - lam) * ok.weight)
        (orig1, c1), (origk, ck) = o1.second_stage[0], ok.second_stage[0]
        e1, ek = o1.element(), ok.element()
        replacements: list[EqualizedOutcome] = []
        if s <= 1.0:
            b = sqrt_psd(e1 + s * ek)
            merged = EqualizedOutcome(
                kraus=(b,),
                weight=o1.weight + s * ok.weight,
                conditional_success=t_target,
                second_stage=((orig1, c1), (origk, s * ck)),
            )
            leftover_scale = 1.0 - s
            if leftover_scale > Q_CUTOFF:
                replacements.append(
                    EqualizedOutcome(
                        kraus=tuple(np.sqrt(leftover_scale) * k for k in ok.kraus),
                        weight=leftover_scale * ok.weight,
                        conditional_success=tk,
                        second_stage=((origk, leftover_scale * ck),),
                    )
                )
        else:
            inv_s = 1.0 / s
            b = sqrt_psd(inv_s * e1 + ek)
            merged = EqualizedOutcome(
                kraus=(b,),
                weight=inv_s * o1.weight + ok.weight,
                conditional_success=t_target,
                second_stage=((orig1, inv_s * c1), (origk, ck)),
            )
            leftover_scale = 1.0 - inv_s
            if leftover_scale > Q_CUTOFF:
                replacements.append(
                    EqualizedOutcome(
                        kraus=tuple(np.sqrt(leftover_scale) * k for k in o1.kraus),
                        weight=leftover_scale * o1.weight,
                        conditional_success=t1,
                        second_stage=((orig1, leftover_scale * c1),),
                    )
                )
        done.append(merged)
        pool = [o for j, o in enumerate(pool) if j not in (hi, lo)] + replacements
    else:
        raise ConvergenceFailure(f"equalization did not settle within {budget} merges")
    for o in pool:
        if abs(o.conditional_success - t_target) <= tol:
            done.append(o)
        else:
            # Below the q * deviation floor: keep the POVM element for
            # completeness but flag the conditional success as undefined,
            # the same treatment as a zero-probability outcome.
            done.append(
                EqualizedOutcome(o.kraus, o.weight, None, o.second_stage)
            )
    return done


def caratheodory_stage(
    equalized: list[EqualizedOutcome], d_loc: int, null_tol: float = 1e-10
) -> list[EqualizedOutcome]:
    """Drop all but d_loc^2 outcomes, rescaling the survivors back to a POVM.

    Support reduction runs on the points E_i / tr(E_i) inside the trace-1
    affine picture with weights tr(E_i)/d, whose barycentre is I/d; retained
    outcomes are rescaled by g_i = w_i d / tr(E_i), which multiplies weights
    and second-stage scalars but leaves every normalized post-measurement
    ensemble (hence its conditional success) untouched.
    """
    live = [o for o in equalized if float(np.trace(o.element()).real) > 1e-14]
    if len(live) <= d_loc * d_loc:
        return live
    elements = [o.element() for o in live]
    points = povm_weighted_points(elements, d_loc)
    reduced = reduce_support(points, null_tol)
    g = scalars_from_weights(elements, d_loc, reduced.weights)
    out = []
    for o, gi in zip(live, g):
        if gi <= 0.0:
            continue
        root = np.sqrt(gi)
        out.append(
            EqualizedOutcome(
                kraus=tuple(root * k for k in o.kraus),
                weight=gi * o.weight,
                conditional_success=o.conditional_success,
                second_stage=tuple((idx, gi * c) for idx, c in o.second_stage),
            )
        )
    return out


def compress_protocol_m1(
    tree: ProtocolTree,
    ensemble: Ensemble,
    tol: float = EQUALIZE_TOL,
    null_tol: float = 1e-10,
) -> ProtocolTree:
    """Theorem-style top-down compression of every vertex to <= 2 d_loc^2 edges.

    Preserves the leaf-labelled discrimination success and the number of
    communication rounds. Each compressed vertex measurement is the
    composition of a Caratheodory-reduced equalized first stage with its
    binary second stage, so every outgoing edge carries a positive multiple
    of one original edge map, the corresponding child is that original
    outcome's recursively compressed subtree, and children referenced twice
    are compressed once.
    """

    def compress(vertex: Node | Leaf, space: MultipartiteSpace, members) -> Node | Leaf:
        if isinstance(vertex, Leaf):
            return vertex
        d_loc = space.party_dims[vertex.party]
        positive: list[EqualizedOutcome] = []
        zero_q: list[EqualizedOutcome] = []
        child_members: dict[int, list[tuple[float, np.ndarray]]] = {}
        child_spaces: dict[int, MultipartiteSpace] = {}
        t_target = 0.0
        for i, edge in enumerate(vertex.edges):
            child_space = space.replacing(vertex.party, edge.out_dim)
            child_spaces[i] = child_space
            q_i, cond = _edge_conditional(members, edge, vertex.party, space)
            if cond is None:
                # Unreachable on this ensemble: exempt from equalization but
                # kept so the first-stage POVM still sums to the identity;
                # the subtree is compressed against a placeholder ensemble.
                zero_q.append(
                    EqualizedOutcome(edge.kraus, 0.0, None, ((i, 1.0),))
                )
                d_out = child_space.total_dim
                n = len(members)
                child_members[i] = [
                    (1.0 / n, np.eye(d_out, dtype=np.complex128) / d_out)
                ] * n
                continue
            child_members[i] = cond
            sub = ProtocolTree(child_space, edge.child)
            t_i, _ = evaluate_success(sub, Ensemble(child_space, tuple(cond)))
            positive.append(EqualizedOutcome(edge.kraus, q_i, t_i, ((i, 1.0),)))
            t_target += q_i * t_i
        equalized = equalize(positive, t_target, tol) if positive else []
        kept = caratheodory_stage(equalized + zero_q, d_loc, null_tol)
        planned = sum(len(o.second_stage) for o in kept)
        if planned > len(vertex.edges):
            # The rebuild would widen this vertex (possible only when it is
            # already inside the 2 d_loc^2 bound, since the rebuild itself
            # never exceeds it): keep the original edges and only compress
            # the children.
            compressed_children = {
                idx: compress(edge.child, child_spaces[idx], child_members[idx])
                for idx, edge in enumerate(vertex.edges)
            }
            return Node(
                vertex.party,
                tuple(
                    Edge(edge.kraus, compressed_children[idx])
                    for idx, edge in enumerate(vertex.edges)
                ),
            )
        referenced = sorted({idx for o in kept for idx, _ in o.second_stage})
        compressed_children = {
            idx: compress(vertex.edges[idx].child, child_spaces[idx], child_members[idx])
            for idx in referenced
        }
        new_edges = []
        for o in kept:
            for idx, c in o.second_stage:
                scaled = tuple(np.sqrt(c) * k for k in vertex.edges[idx].kraus)
                new_edges.append(Edge(scaled, compressed_children[idx]))
        return Node(vertex.party, tuple(new_edges))

    if not ensemble.is_normalized:
        raise ValueError("compress_protocol_m1 needs a normalized ensemble")
    root = compress(tree.root, tree.space, list(ensemble.members))
    return ProtocolTree(tree.space, root)
