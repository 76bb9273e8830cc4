"""HTTP service: endpoints, error mapping, service/library equivalence."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from conftest import make_policy_store, seed_hub
from polyhub.engines.base import IslandTag
from polyhub.hub.config import HubConfig
from polyhub.hub.core import DataHub
from polyhub.service.app import build_app

GOLDEN_QUERY = "REL(SELECT _row FROM CAST(KV(SCAN w), REL) WHERE count > 5)"


@pytest.fixture
def client(hub):
    with TestClient(build_app(hub)) as test_client:
        test_client.hub = hub
        yield test_client


def test_health_reports_registry_stats(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["engine_count"] == 3
    assert body["island_count"] == 3
    assert body["shim_count"] == 3
    assert body["cast_codec_count"] == 6


def test_query_endpoint_matches_library_result(client):
    library = client.hub.query("alice", GOLDEN_QUERY)
    response = client.post("/query", json={"principal_id": "alice", "query": GOLDEN_QUERY})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "relation"
    assert body["columns"] == list(library.value.schema.column_names)
    assert body["rows"] == [list(row) for row in library.value.rows]
    assert body["rows"] == [["apple"]]
    assert body["row_count"] == 1


def test_query_equivalence_for_all_islands(client):
    for text in [
        "REL(SELECT name, age FROM person WHERE age > 30)",
        "KV(SCAN w ROWS 'a':'b')",
        "ARR(SUB grid[1:3, 0:2])",
    ]:
        library = client.hub.query("alice", text)
        body = client.post("/query", json={"principal_id": "alice", "query": text}).json()
        if body["kind"] == "relation":
            assert body["rows"] == [list(r) for r in library.value.rows]
        elif body["kind"] == "entries":
            assert [(e["row"], e["value"]) for e in body["entries"]] == [
                (e.row, e.value) for e in library.value
            ]
        else:
            assert body["array"]["cells"] == list(library.value.cells)


def test_denied_query_is_403_with_reason_and_no_records(client):
    before = len(client.hub.monitor.records())
    response = client.post("/query", json={"principal_id": "eve", "query": "KV(SCAN w)"})
    assert response.status_code == 403
    body = response.json()
    assert body["error"] == "AccessDenied"
    assert "no query policy" in body["reason"]
    assert len(client.hub.monitor.records()) == before


def test_parse_error_is_400_with_position(client):
    response = client.post("/query", json={"principal_id": "alice", "query": "KV(SCAN)"})
    assert response.status_code == 400
    assert "position 8" in response.json()["reason"]


def test_limit_exceeded_is_403(client):
    from polyhub.access import PolicyStore, Principal, QueryPolicy, ViewPolicy

    store = PolicyStore(
        principals=[Principal(id="capped", roles=frozenset({"r"}))],
        view_policies=[ViewPolicy(role="r", table="person")],
        query_policies=[QueryPolicy(
            role="r",
            allowed_islands=frozenset({IslandTag.REL}),
            max_result_rows=2,
        )],
    )
    hub = seed_hub(DataHub.in_memory(policy_store=store))
    with TestClient(build_app(hub)) as capped_client:
        response = capped_client.post(
            "/query", json={"principal_id": "capped", "query": "REL(SELECT * FROM person)"}
        )
    assert response.status_code == 403
    assert response.json()["error"] == "LimitExceeded"
    assert "2" in response.json()["reason"]


def test_explain_endpoint(client):
    body = client.post("/explain", json={"query": GOLDEN_QUERY}).json()
    lines = body["plan"].splitlines()
    assert lines[0].startswith("REL:rel0")
    assert lines[1].lstrip().startswith("KV:kv0 SCAN w")


def test_ingest_endpoint(client, tmp_path):
    source = tmp_path / "cars.csv"
    source.write_text("plate,speed\nabc,88\nxyz,61\n")
    response = client.post("/ingest", json={
        "source": str(source), "format": "csv", "island": "REL",
        "engine_id": "rel0", "table": "cars",
    })
    assert response.status_code == 200
    assert response.json() == {"rows_parsed": 2, "rows_loaded": 2, "columns_dropped": []}
    # the new table is immediately queryable through the service
    body = client.post("/query", json={
        "principal_id": "alice", "query": "REL(SELECT * FROM cars)",
    })
    assert body.status_code == 403  # no view policy on the new table: default deny
    search = client.get("/catalog/search", params={"q": "plate"}).json()
    assert [e["id"] for e in search["entries"]] == ["cars"]


def test_crawl_endpoint(client, tmp_path):
    (tmp_path / "logs.csv").write_text("ts,msg\n1,hi\n")
    response = client.post("/crawl", json={"root": str(tmp_path)})
    assert response.status_code == 200
    body = response.json()
    assert body["scanned_count"] == 1
    assert len(body["registered"]) == 1
    assert client.get("/catalog/search", params={"q": "logs"}).json()["entries"]


def test_crawl_bad_root_is_400(client, tmp_path):
    response = client.post("/crawl", json={"root": str(tmp_path / "missing")})
    assert response.status_code == 400
    assert response.json()["error"] == "CrawlError"


def test_catalog_duplicates_endpoint(client, tmp_path):
    (tmp_path / "a.csv").write_text("x\n1\n")
    client.post("/crawl", json={"root": str(tmp_path)})
    import time
    from polyhub.catalog import DatasetEntry

    checksum = client.hub.catalog.search(["a"])[0].checksum
    client.hub.catalog.register(DatasetEntry(
        id="copy", name="copy", checksum=checksum,
        created_at=time.time(), updated_at=time.time(), source_path="/tmp/copy.csv",
    ))
    groups = client.get("/catalog/duplicates").json()["groups"]
    assert len(groups) == 1 and "copy" in groups[0]


def test_catalog_stale_endpoint(client):
    body = client.post("/catalog/stale", json={"days": 0.001}).json()
    assert body["flagged"] == 0  # fixture entries were updated moments ago
    assert client.post("/catalog/stale", json={"days": 10}).json()["flagged"] == 0


def test_registry_dump_endpoint(client):
    dump = client.get("/registry").json()
    assert set(dump) == {"islands", "engines", "shims", "cast_codecs"}
    assert len(dump["cast_codecs"]) == 6


def test_dua_render_endpoint(client):
    response = client.post("/dua/render", json={
        "institution": "Lab", "data_description": "Counts.", "duration": "1 year",
    })
    assert "Lab" in response.json()["document"]
    missing = client.post("/dua/render", json={"data_description": "x", "duration": "y"})
    assert missing.status_code == 400
    assert "institution required" in missing.json()["reason"]


def test_policy_reload_endpoint(tmp_path):
    policy_doc = {
        "principals": [{"id": "alice", "roles": ["analyst"], "auths": []}],
        "view_policies": [],
        "query_policies": [{"role": "analyst", "allowed_islands": ["KV"]}],
    }
    policy_file = tmp_path / "policies.json"
    policy_file.write_text(json.dumps(policy_doc))
    config = HubConfig(
        data_dir=tmp_path / "data",
        policy_file=policy_file,
        catalog_file=tmp_path / "catalog.json",
        snapshot_on_shutdown=False,
    )
    (tmp_path / "data").mkdir()
    hub = seed_hub(DataHub.from_config(config))
    with TestClient(build_app(hub)) as client:
        denied = client.post("/query", json={"principal_id": "alice", "query": "ARR(SUB grid[0:1, 0:1])"})
        assert denied.status_code == 403
        policy_doc["query_policies"][0]["allowed_islands"] = ["KV", "ARR"]
        policy_file.write_text(json.dumps(policy_doc))
        assert client.post("/policies/reload").json() == {"status": "reloaded"}
        allowed = client.post("/query", json={"principal_id": "alice", "query": "ARR(SUB grid[0:1, 0:1])"})
        assert allowed.status_code == 200


def test_shutdown_snapshots_when_configured(tmp_path):
    policy_file = tmp_path / "policies.json"
    policy_file.write_text(json.dumps({"principals": [], "view_policies": [], "query_policies": []}))
    config = HubConfig(
        data_dir=tmp_path / "data",
        policy_file=policy_file,
        catalog_file=tmp_path / "catalog.json",
        snapshot_on_shutdown=True,
    )
    hub = seed_hub(DataHub.from_config(config))
    with TestClient(build_app(hub)):
        pass  # enter and leave the lifespan
    snapshots = sorted(p.name for p in (tmp_path / "data").glob("*.phub"))
    assert snapshots == ["arr0.phub", "kv0.phub", "rel0.phub"]
    assert config.catalog_file.exists()

    # a second hub restores the seeded data from the snapshots
    reborn = DataHub.from_config(config)
    assert reborn.registry.engine("rel0").row_count("person") == 3
    assert len(reborn.registry.engine("kv0").scan("w")) == 2
