import pytest
from fastapi.testclient import TestClient

from loccwidth.demos import bell_demo
from loccwidth.serialize import ensemble_to_json, tree_from_json, tree_to_json
from loccwidth.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def bell_payloads():
    tree, ens = bell_demo()
    return tree_to_json(tree), ensemble_to_json(ens)


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_validate_endpoint(client, bell_payloads):
    tree, _ = bell_payloads
    r = client.post("/validate", json={"tree": tree})
    assert r.status_code == 200
    report = r.json()["report"]
    assert report["status"] == "ok"
    assert report["operation"] == "validate"


def test_validate_rejects_malformed_payload(client):
    r = client.post("/validate", json={"tree": {"version": "locc-tree/1"}})
    assert r.status_code == 422


def test_evaluate_endpoint(client, bell_payloads):
    tree, ens = bell_payloads
    r = client.post("/evaluate", json={"tree": tree, "ensemble": ens, "relabel": False})
    assert r.status_code == 200
    assert r.json()["report"]["success"] == pytest.approx(1.0, abs=1e-10)


def test_compress_endpoint_round_trips(client, bell_payloads):
    tree, ens = bell_payloads
    r = client.post("/compress-m1", json={"tree": tree, "ensemble": ens})
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["residuals"]["success_drift"] <= 1e-7
    from loccwidth.tree import validate_tree

    assert validate_tree(tree_from_json(body["tree"])) == []


def test_slim_endpoint_with_components(client):
    from conftest import random_instance

    tree, _ = random_instance(seed=45, dims=(2, 2), rounds=1, outcomes=[6])
    r = client.post(
        "/slim",
        json={"tree": tree_to_json(tree), "include_components": True, "cap": 1000},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["exhaustive"] is True
    assert body["components"] is not None
    total = sum(rec["lambda"] for rec in body["components"])
    assert total == pytest.approx(1.0, abs=1e-9)


def test_demo_endpoint(client):
    r = client.post("/demo", json={"name": "bell"})
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["success_after"] == pytest.approx(1.0, abs=1e-9)
    assert body["compressed_tree"]["version"] == "locc-tree/1"
    # identical request gives an identical report (seeded determinism)
    again = client.post("/demo", json={"name": "bell"})
    assert again.json()["report"] == body["report"]


def test_demo_unknown_name_rejected(client):
    r = client.post("/demo", json={"name": "teleport"})
    assert r.status_code == 422


def test_tolerance_overrides_accepted(client, bell_payloads):
    tree, ens = bell_payloads
    r = client.post(
        "/compress-m1",
        json={"tree": tree, "ensemble": ens, "tolerances": {"success_drift": 1e-5}},
    )
    assert r.status_code == 200
