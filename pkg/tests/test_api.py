import pytest


class TestIndex:

    def test_index(self, client):
        payload = client.get("/").get_json()
        assert payload["name"] == "cdqaoa"
        assert payload["endpoints"]["runs"] == "/api/runs"

    def test_health(self, client):
        payload = client.get("/health").get_json()
        assert payload["status"] == "ok"
        assert payload["database"] == "connected"


class TestProblems:

    def test_register_is_idempotent(self, client):
        first = client.post("/api/problems", json={"kind": "ising_ring", "N": 6})
        assert first.status_code == 201
        assert first.get_json()["n_qubits"] == 6

        again = client.post("/api/problems", json={"kind": "ising_ring", "N": 6})
        assert again.status_code == 200
        assert again.get_json()["id"] == first.get_json()["id"]

        listed = client.get("/api/problems").get_json()["problems"]
        assert len(listed) == 1

    def test_get_problem(self, client):
        created = client.post("/api/problems", json={"kind": "maxcut", "edges": [[0, 1], [1, 2], [2, 3], [3, 0]]})
        problem_id = created.get_json()["id"]
        payload = client.get(f"/api/problems/{problem_id}").get_json()
        assert payload["obj_max"] == pytest.approx(4.0)
        assert payload["run_count"] == 0

    def test_filter_by_kind(self, client):
        client.post("/api/problems", json={"kind": "ising_ring", "N": 4})
        client.post("/api/problems", json={"kind": "two_level"})
        listed = client.get("/api/problems?kind=two_level").get_json()["problems"]
        assert [p["kind"] for p in listed] == ["two_level"]

    @pytest.mark.parametrize("payload", [
        {},
        {"kind": "torus"},
        {"kind": "ising_ring", "N": 5},
        {"kind": "maxcut", "edges": []},
        {"kind": "regular", "degree": 3, "n": 7},
    ])
    def test_rejects_bad_payloads(self, client, payload):
        response = client.post("/api/problems", json=payload)
        assert response.status_code == 400
        assert response.get_json()["errors"]

    def test_engine_rejection_is_400(self, client):
        response = client.post("/api/problems", json={"kind": "maxcut", "edges": [[0, 1], [0, 1]]})
        assert response.status_code == 400
        assert response.get_json()["kind"] == "InstanceError"

    def test_non_json_body(self, client):
        response = client.post("/api/problems", data="kind=two_level", content_type="text/plain")
        assert response.status_code == 400

    def test_unknown_problem(self, client):
        assert client.get("/api/problems/999").status_code == 404


class TestRuns:

    def test_empty_listing(self, client):
        assert client.get("/api/runs").get_json() == {"runs": []}
        assert client.get("/api/runs/summary").get_json() == {"summary": []}

    @pytest.mark.parametrize("query", ["limit=0", "limit=abc", "command=launch", "problem_id=-1"])
    def test_bad_filters(self, client, query):
        response = client.get(f"/api/runs?{query}")
        assert response.status_code == 400
        assert response.get_json()["errors"]

    def test_unknown_run(self, client):
        response = client.get("/api/runs/42")
        assert response.status_code == 404
        assert response.get_json()["error"] == "Run not found."


class TestChecks:

    def test_schedule_is_normalized(self, client):
        response = client.post("/api/checks/schedule", json={"T": 2.0, "lambda": {"form": "smoothstep"}})
        assert response.status_code == 200
        payload = response.get_json()
        assert payload["schedule"]["T"] == pytest.approx(2.0)
        assert payload["schedule"]["lambda"]["form"] == "smoothstep"
        assert len(payload["digest"]) == 64

    def test_schedule_digest_is_stable(self, client):
        body = {"T": 1.5, "lambda": {"form": "power_law", "params": {"r": 2.0}}}
        first = client.post("/api/checks/schedule", json=body).get_json()["digest"]
        second = client.post("/api/checks/schedule", json=body).get_json()["digest"]
        assert first == second

    @pytest.mark.parametrize("body", [
        {"lambda": {"form": "linear"}},
        {"T": -1.0},
        {"T": 1.0, "lambda": {"form": "cubic"}},
        {"T": 1.0, "s": {"form": "sine", "params": {"s0": "big"}}},
    ])
    def test_schedule_rejects(self, client, body):
        assert client.post("/api/checks/schedule", json=body).status_code == 400

    def test_angles(self, client):
        response = client.post("/api/checks/angles", json={"gammas": [0.2, 0.6], "betas": [0.6, 0.2]})
        assert response.status_code == 200
        payload = response.get_json()
        assert payload["p"] == 2
        assert payload["equivalent_T"] == pytest.approx(1.6)
        assert payload["steps"][0]["lam_eff"] == pytest.approx(0.25)
        assert payload["steps"][1]["q"] == 2

    def test_degenerate_angles(self, client):
        response = client.post("/api/checks/angles", json={"gammas": [0.1], "betas": [-0.1]})
        assert response.status_code == 400
        assert response.get_json()["kind"] == "DegenerateStepError"

    def test_angles_length_mismatch(self, client):
        response = client.post("/api/checks/angles", json={"gammas": [0.1, 0.2], "betas": [0.1]})
        assert response.status_code == 400
