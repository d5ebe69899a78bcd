"""Orchestration layer shared by the CLI and the HTTP service.

Each operation takes already-parsed JSON payloads, runs the core pipeline,
and returns a report dict (plus any result payloads). Reports satisfy:
whenever ``status`` is "ok", every listed residual is within its configured
tolerance. Wall time is only reported when asked for, so reports stay
byte-deterministic under a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import demos, serialize
from .compress import compress_protocol_m1
from .errors import LoccError
from .linalg import fnorm
from .quantum import choi_of
from .slim import (
    component_count,
    edge_recombination_residual,
    iter_slim_components,
    nonzero_outdegree_ok,
    reduce_shared_randomness,
    vertex_decompositions,
)
from .tree import (
    Leaf,
    ProtocolTree,
    evaluate_success,
    extract_instrument,
    fine_grain,
    iter_vertices,
    validate_tree,
    width_bound_violations,
    width_report,
)

REPORT_SCHEMA = "locc-report/1"


@dataclass(frozen=True)
class Tolerances:
    completeness: float = 1e-8
    equalize: float = 1e-8
    rank: float = 1e-10
    null: float = 1e-10
    success_drift: float = 1e-7


def _max_local_dim(tree: ProtocolTree) -> int:
    dims = [
        space.party_dims[vertex.party]
        for _, vertex, space in iter_vertices(tree)
        if not isinstance(vertex, Leaf)
    ]
    return max(dims, default=1)


def _completeness_defect(tree: ProtocolTree) -> float:
    worst = 0.0
    for _, vertex, space in iter_vertices(tree):
        if isinstance(vertex, Leaf):
            continue
        d = space.party_dims[vertex.party]
        total = sum(e.element() for e in vertex.edges)
        worst = max(worst, fnorm(total - np.eye(d)))
    return worst


def _base_report(operation: str, payloads: list, started: float | None) -> dict:
    report = {
        "version": REPORT_SCHEMA,
        "operation": operation,
        "input_digest": serialize.digest(payloads),
        "status": "ok",
        "residuals": {},
        "bounds": {},
    }
    if started is not None:
        report["wall_time_ms"] = round(1000.0 * (time.perf_counter() - started), 3)
    return report


def run_validate(tree_payload: dict, tols: Tolerances = Tolerances(), timing: bool = False) -> dict:
    started = time.perf_counter() if timing else None
    tree = serialize.tree_from_json(tree_payload)
    diagnostics = validate_tree(tree, tols.completeness)
    report = _base_report("validate", [tree_payload], started)
    report["diagnostics"] = [{"vertex": v, "message": m} for v, m in diagnostics]
    report["widths"] = width_report(tree).to_dict()
    report["residuals"]["completeness"] = _completeness_defect(tree)
    if diagnostics:
        report["status"] = "invalid"
    return report


def run_evaluate(
    tree_payload: dict,
    ensemble_payload: dict,
    relabel: bool = False,
    tols: Tolerances = Tolerances(),
    timing: bool = False,
) -> dict:
    started = time.perf_counter() if timing else None
    tree = serialize.tree_from_json(tree_payload)
    ensemble = serialize.ensemble_from_json(ensemble_payload)
    problems = ensemble.validate()
    if problems:
        report = _base_report("evaluate", [tree_payload, ensemble_payload], started)
        report["status"] = "invalid"
        report["diagnostics"] = [{"vertex": "ensemble", "message": m} for m in problems]
        return report
    value, labels = evaluate_success(tree, ensemble, relabel=relabel)
    report = _base_report("evaluate", [tree_payload, ensemble_payload], started)
    report["success"] = value
    report["relabel"] = relabel
    report["labels"] = labels
    report["widths"] = width_report(tree).to_dict()
    return report


def run_compress_m1(
    tree_payload: dict,
    ensemble_payload: dict,
    tols: Tolerances = Tolerances(),
    timing: bool = False,
) -> tuple[dict, dict]:
    started = time.perf_counter() if timing else None
    tree = serialize.tree_from_json(tree_payload)
    ensemble = serialize.ensemble_from_json(ensemble_payload)
    before, _ = evaluate_success(tree, ensemble)
    compressed = compress_protocol_m1(tree, ensemble, tols.equalize, tols.null)
    after, _ = evaluate_success(compressed, ensemble)
    d = _max_local_dim(tree)
    rounds = width_report(tree).depth
    report = _base_report("compress-m1", [tree_payload, ensemble_payload], started)
    report["success_before"] = before
    report["success_after"] = after
    report["widths_before"] = width_report(tree).to_dict()
    report["widths_after"] = width_report(compressed).to_dict()
    report["bounds"] = {
        "per_vertex_outcomes": 2 * d * d,
        "total_width": (2 * d * d) ** rounds,
    }
    violations = width_bound_violations(compressed, 2)
    report["residuals"] = {
        "success_drift": abs(after - before),
        "completeness": _completeness_defect(compressed),
    }
    if violations:
        report["status"] = "invalid"
        report["diagnostics"] = [
            {"vertex": v, "message": f"outdegree {out} exceeds {bound}"}
            for v, out, bound in violations
        ]
    elif (
        report["residuals"]["success_drift"] > tols.success_drift
        or report["residuals"]["completeness"] > tols.completeness
    ):
        report["status"] = "invalid"
    return report, serialize.tree_to_json(compressed)


def run_slim(
    tree_payload: dict,
    cap: int = 10_000,
    reduce_randomness: bool = False,
    tols: Tolerances = Tolerances(),
    timing: bool = False,
) -> tuple[dict, list[tuple[float, dict]] | None]:
    """Slim decomposition report plus (lambda, tree payload) records.

    The input is fine-grained first. When the component count exceeds the
    cap nothing is materialized and the report is flagged; randomness
    reduction needs the materialized mixture, so it is skipped then too.
    """
    started = time.perf_counter() if timing else None
    tree = fine_grain(serialize.tree_from_json(tree_payload))
    decomps = vertex_decompositions(tree, tols.null)
    total = component_count(decomps)
    report = _base_report("slim", [tree_payload], started)
    report["component_count"] = total
    report["cap"] = cap
    report["widths"] = width_report(tree).to_dict()
    report["bounds"] = {"per_vertex_outcomes": _max_local_dim(tree) ** 2}
    report["residuals"]["edge_recombination"] = edge_recombination_residual(decomps)
    if total > cap:
        report["exhaustive"] = False
        report["status"] = "cap_exceeded"
        return report, None
    report["exhaustive"] = True
    records: list[tuple[float, dict]] = []
    slim_ok = True
    weight_sum = 0.0
    components = list(iter_slim_components(tree, tols.null, decomps))
    for comp in components:
        slim_ok = slim_ok and nonzero_outdegree_ok(comp)
        weight_sum += comp.weight
        records.append((comp.weight, serialize.tree_to_json(comp.tree)))
    report["residuals"]["weight_sum"] = abs(weight_sum - 1.0)
    report["slim_bound_ok"] = slim_ok
    if reduce_randomness:
        mixture = [(c.weight, extract_instrument(c.tree)) for c in components]
        reduced, bound = reduce_shared_randomness(mixture, tols.null)
        original = {
            label: choi_of(cp) for label, cp in extract_instrument(tree).branches
        }
        worst = 0.0
        for label, choi in original.items():
            mixed = np.zeros_like(choi.matrix)
            for mu, inst in reduced:
                branch = dict(inst.branches)[label]
                mixed += mu * choi_of(branch).matrix
            worst = max(worst, fnorm(mixed - choi.matrix))
        report["bounds"]["randomness_support"] = bound
        report["randomness"] = {
            "input_components": len(mixture),
            "retained_components": len(reduced),
            "bits": float(np.log2(bound)),
        }
        report["residuals"]["mixture_choi"] = worst
        if len(reduced) > bound or worst > 1e-7:
            report["status"] = "invalid"
    if not slim_ok or report["residuals"]["edge_recombination"] > 1e-9:
        report["status"] = "invalid"
    return report, records


def run_demo(
    name: str,
    seed: int = 0,
    rounds: int = 2,
    dims: tuple[int, ...] = (2, 2),
    tols: Tolerances = Tolerances(),
    timing: bool = False,
) -> tuple[dict, dict]:
    """Build a named demo, evaluate it, and run it through compress-m1."""
    if name == "bell":
        tree, ensemble = demos.bell_demo()
    elif name == "product-basis":
        tree, ensemble = demos.product_basis_demo(tuple(dims[:2]))
    elif name == "random":
        tree, ensemble = demos.random_demo(seed=seed, rounds=rounds, dims=tuple(dims))
    else:
        raise ValueError(f"unknown demo {name!r}; pick bell, product-basis or random")
    tree_payload = serialize.tree_to_json(tree)
    ensemble_payload = serialize.ensemble_to_json(ensemble)
    report, compressed_payload = run_compress_m1(tree_payload, ensemble_payload, tols, timing)
    report["operation"] = "demo"
    report["demo"] = {"name": name, "seed": seed, "rounds": rounds, "dims": list(dims)}
    artifacts = {
        "tree": tree_payload,
        "ensemble": ensemble_payload,
        "compressed_tree": compressed_payload,
    }
    return report, artifacts


def error_object(exc: Exception) -> dict:
    return {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "numerical": isinstance(exc, LoccError),
        }
    }
