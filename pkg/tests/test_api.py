import shutil

import pytest
from fastapi.testclient import TestClient

from taxolab.api import create_app
from taxolab.store import ArtifactStore
from taxolab.workspace import Workspace

FIXED_CLOCK = lambda: 1_700_000_000.0  # noqa: E731 - deterministic commit stamps


@pytest.fixture
def work(tmp_path, demo_store):
    root = tmp_path / "store"
    shutil.copytree(demo_store.root, root)
    return Workspace(ArtifactStore(root), clock=FIXED_CLOCK)


@pytest.fixture
def client(work):
    return TestClient(create_app(work))


def first_output(client):
    return client.get("/v1/outputs").json()[0]["output_id"]


def new_session(client):
    return client.post(
        "/v1/sessions", json={"output_id": first_output(client)}
    ).json()["session_id"]


# ---------------------------------------------------------------- reads

def test_outputs_match_grid_manifest(client, work):
    assert client.get("/v1/outputs").json() == work.grid["cells"]


def test_corpus_endpoint(client, work):
    doc = client.get("/v1/corpus").json()
    assert doc["size"] == len(work.corpus)
    assert [it["id"] for it in doc["items"]] == work.corpus.item_ids


def test_corpus_substring_search(client):
    hits = client.get("/v1/corpus/items", params={"query": "VERKEHR"}).json()
    assert hits["total"] >= 1
    assert all("verkehr" in it["canonical_text"] for it in hits["items"])
    paged = client.get(
        "/v1/corpus/items", params={"query": "", "offset": 5, "limit": 3}
    ).json()
    assert len(paged["items"]) == 3
    assert paged["offset"] == 5


def test_output_detail_carries_coords_and_clusters(client, work):
    output_id = first_output(client)
    doc = client.get(f"/v1/outputs/{output_id}").json()
    assert len(doc["coords"]) == len(work.corpus)
    assert len(doc["clusters"]["labels"]) == len(work.corpus)
    assert doc["output_id"] == output_id
    assert client.get("/v1/outputs/nope").status_code == 404


def test_neighbors_endpoint(client, work):
    item = work.corpus.item_ids[0]
    doc = client.get(f"/v1/items/{item}/neighbors", params={"k": 4}).json()
    assert len(doc["neighbors"]) == 4
    assert item not in {n["item_id"] for n in doc["neighbors"]}
    scores = [n["distance"] for n in doc["neighbors"]]
    assert scores == sorted(scores)
    assert client.get("/v1/items/zzz/neighbors").status_code == 404


def test_idempotent_reads_between_mutations(client):
    sid = new_session(client)
    a = client.get(f"/v1/sessions/{sid}").json()
    b = client.get(f"/v1/sessions/{sid}").json()
    assert a == b
    outs1 = client.get("/v1/outputs").json()
    outs2 = client.get("/v1/outputs").json()
    assert outs1 == outs2


# ---------------------------------------------------------------- error mapping

def test_reject_unknown_item_is_404_with_machine_code(client):
    sid = new_session(client)
    resp = client.post(f"/v1/sessions/{sid}/reject", json={"item_ids": ["zzz"]})
    assert resp.status_code == 404
    assert resp.json()["code"] == "unknown_item"


def test_conflict_codes(client, work):
    sid = new_session(client)
    item = work.corpus.item_ids[0]
    client.post(f"/v1/sessions/{sid}/seed", json={"item_id": item})
    resp = client.post(f"/v1/sessions/{sid}/accept", json={"item_ids": [item]})
    assert resp.status_code == 409
    assert resp.json()["code"] == "not_suggested"
    resp = client.post(f"/v1/sessions/{sid}/commit", json={"label": "x"})
    assert resp.status_code == 200
    client.post(f"/v1/sessions/{sid}/seed", json={"item_id": work.corpus.item_ids[1]})
    resp = client.post(f"/v1/sessions/{sid}/commit", json={"label": "x"})
    assert resp.status_code == 409
    assert resp.json()["code"] == "duplicate_label"


def test_unknown_session_404(client):
    assert client.get("/v1/sessions/nope").status_code == 404
    resp = client.post("/v1/sessions", json={"output_id": "nope"})
    assert resp.status_code == 404
    assert resp.json()["code"] == "unknown_output"


def test_polygon_validation_422(client):
    sid = new_session(client)
    resp = client.post(
        f"/v1/sessions/{sid}/polygon",
        json={"output_id": first_output(client), "points": [[0, 0], [1, 1]]},
    )
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_polygon"


# ---------------------------------------------------------------- transport transparency

def scripted_flow_http(client):
    """The end-to-end protocol exercised over the wire."""
    outputs = client.get("/v1/outputs").json()
    sid = client.post("/v1/sessions", json={"output_id": outputs[0]["output_id"]}).json()[
        "session_id"
    ]
    corpus = client.get("/v1/corpus").json()
    seed = corpus["items"][0]["id"]
    client.post(f"/v1/sessions/{sid}/seed", json={"item_id": seed})
    cands = client.post(f"/v1/sessions/{sid}/candidates").json()["entries"]
    client.post(
        f"/v1/sessions/{sid}/accept",
        json={"item_ids": [cands[0]["item_id"], cands[1]["item_id"]]},
    )
    client.post(f"/v1/sessions/{sid}/reject", json={"item_ids": [cands[2]["item_id"]]})
    client.post(
        f"/v1/sessions/{sid}/switch", json={"output_id": outputs[-1]["output_id"]}
    )
    client.post(f"/v1/sessions/{sid}/candidates")
    client.post(f"/v1/sessions/{sid}/commit", json={"label": "mobility"})
    state = client.get(f"/v1/sessions/{sid}").json()
    return state, client.get("/v1/taxonomy/export").json()


def scripted_flow_inprocess(work):
    """The same action sequence driven directly on the engine."""
    engine = work.engine
    outputs = [c["output_id"] for c in work.grid["cells"]]
    session = engine.create_session(outputs[0])
    sid = session.session_id
    seed = work.corpus.item_ids[0]
    engine.seed_item(sid, seed)
    cands = engine.compute_candidates(sid)
    engine.accept_candidates(sid, [cands[0]["item_id"], cands[1]["item_id"]])
    engine.reject_candidates(sid, [cands[2]["item_id"]])
    engine.switch_output(sid, outputs[-1])
    engine.compute_candidates(sid)
    engine.commit_class(sid, "mobility")
    state = {k: v for k, v in session.snapshot().items() if k != "version"}
    return state, engine.export()


def canonical_state(state: dict) -> dict:
    return {k: v for k, v in state.items() if k != "session_id"}


def test_http_flow_equals_inprocess_flow(tmp_path, demo_store):
    http_root = tmp_path / "http"
    proc_root = tmp_path / "proc"
    shutil.copytree(demo_store.root, http_root)
    shutil.copytree(demo_store.root, proc_root)

    http_work = Workspace(ArtifactStore(http_root), clock=FIXED_CLOCK)
    http_state, http_export = scripted_flow_http(TestClient(create_app(http_work)))

    proc_work = Workspace(ArtifactStore(proc_root), clock=FIXED_CLOCK)
    proc_state, proc_export = scripted_flow_inprocess(proc_work)

    assert canonical_state(http_state) == canonical_state(proc_state)
    assert http_export == proc_export


# ---------------------------------------------------------------- persistence

def test_sessions_and_taxonomy_survive_reload(tmp_path, demo_store):
    root = tmp_path / "store"
    shutil.copytree(demo_store.root, root)
    work = Workspace(ArtifactStore(root), clock=FIXED_CLOCK)
    client = TestClient(create_app(work))
    sid = new_session(client)
    item = work.corpus.item_ids[3]
    client.post(f"/v1/sessions/{sid}/seed", json={"item_id": item})
    client.post(f"/v1/sessions/{sid}/commit", json={"label": "persisted"})

    fresh = Workspace(ArtifactStore(root), clock=FIXED_CLOCK)
    client2 = TestClient(create_app(fresh))
    assert client2.get(f"/v1/sessions/{sid}").status_code == 200
    taxonomy = client2.get("/v1/taxonomy").json()
    assert [c["label"] for c in taxonomy["classes"]] == ["persisted"]
    assert taxonomy["classes"][0]["member_ids"] == [item]
