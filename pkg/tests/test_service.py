import numpy as np
import pytest
from fastapi.testclient import TestClient

from claimdur import datagen as dg
from claimdur import encoding, model_io
from claimdur.coxnet import TrainConfig, train
from claimdur.service import create_app
from claimdur.selection import FULL_SUBSET


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    records, _ = dg.generate(dg.interaction_v1(n_records=2500))
    book = encoding.build_codebook(records, min_count=10)
    model = train(records, book, TrainConfig(decay=2.0, n_hidden=2, seed=1))
    path = root / "model.json"
    model_io.save_model(path, model)
    app = create_app(path)
    return TestClient(app, raise_server_exceptions=False), path, records


class TestHealthAndSchema:
    def test_health_reports_version(self, served):
        client, path, _ = served
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["model_version"].startswith("1:")
        assert body["model_version"].split(":")[1] == \
            model_io.model_digest(path)

    def test_schema_lists_model_variables(self, served):
        client, _, _ = served
        body = client.get("/schema").json()
        names = [v["name"] for v in body["variables"]]
        assert names == ["POB", "TOA", "AGE", "SEX"]
        for v in body["variables"]:
            assert v["categories"]
            assert encoding.UNKNOWN_CATEGORY not in v["categories"]

    def test_schema_lists_all_ten_for_full_model(self, tmp_path):
        # a record set covering every variable (tiny but complete)
        rng = np.random.default_rng(0)
        records = []
        import datetime as dt

        for i in range(80):
            records.append(encoding.ClaimRecord(
                covariates={
                    "NOI": str(rng.choice(["03400", "05300"])),
                    "POB": str(rng.choice(["34000", "22100"])),
                    "SOI": str(rng.choice(["06400", "11200"])),
                    "TOA": str(rng.choice(["02100", "11230"])),
                    "AGE": str(rng.integers(18, 66)),
                    "SEX": str(rng.choice(["M", "F"])),
                    "SIC": str(rng.choice(["0617", "4411"])),
                    "OCC": str(rng.choice(["3115", "8148"])),
                    "PAY": str(rng.integers(1, 2000)),
                    "CPC": str(rng.choice(["A1B", "A1C", "B2X"])),
                },
                duration_weeks=float(rng.exponential(4.0) + 0.1),
                event=bool(rng.random() < 0.8),
                open_date=dt.date(2009, 1, 1) + dt.timedelta(
                    days=int(rng.integers(0, 300))),
            ))
        book = encoding.build_codebook(records, min_count=5)
        model = train(records, book, TrainConfig(decay=1.0, seed=0))
        path = tmp_path / "full.json"
        model_io.save_model(path, model)
        client = TestClient(create_app(path))
        names = [v["name"] for v in client.get("/schema").json()["variables"]]
        assert names == list(FULL_SUBSET)


class TestPredict:
    def test_empty_inputs_predicts_global_curve(self, served):
        client, _, records = served
        body = client.post("/predict", json={"inputs": {}}).json()
        assert body["match_count"] == len(records)
        assert body["curve"]["times"]
        assert body["median"] is not None

    def test_unknown_variable_400(self, served):
        client, _, _ = served
        response = client.post("/predict", json={"inputs": {"FOO": "x"}})
        assert response.status_code == 400
        assert "FOO" in response.json()["error"]

    def test_malformed_body_400(self, served):
        client, _, _ = served
        assert client.post("/predict", content=b"}{").status_code == 400
        assert client.post("/predict", json=[1, 2]).status_code == 400
        assert client.post(
            "/predict", json={"inputs": {"POB": {"nested": 1}}}
        ).status_code == 400
        assert client.post(
            "/predict", json={"inputs": {}, "method": "C"}
        ).status_code == 400

    def test_empty_match_422_with_diagnostics(self, served):
        client, _, _ = served
        response = client.post("/predict",
                               json={"inputs": {"POB": "99999"}})
        assert response.status_code == 422
        body = response.json()
        assert body["diagnostics"]["most_restrictive"] == "POB"
        assert body["diagnostics"]["singleton_counts"]["POB"] == 0

    def test_relax_flag_drops_and_reports(self, served):
        client, _, _ = served
        body = client.post("/predict", json={
            "inputs": {"POB": "99999", "SEX": "F"}, "relax": True,
        }).json()
        assert body["dropped"] == ["POB"]
        assert body["match_count"] > 0

    def test_method_b_differs_from_a(self, served):
        client, _, _ = served
        a = client.post("/predict", json={"inputs": {}, "method": "A"}).json()
        b = client.post("/predict", json={"inputs": {}, "method": "B"}).json()
        assert a["eta"] is not None
        assert b["eta"] is None
        assert b["mean"] > a["mean"]

    def test_identical_bodies_identical_bytes(self, served):
        client, _, _ = served
        payload = {"inputs": {"POB": "34000", "SEX": "F"}, "method": "A"}
        first = client.post("/predict", json=payload).content
        second = client.post("/predict", json=payload).content
        assert first == second

    def test_cli_predict_equals_service_predict(self, served):
        client, path, _ = served
        from click.testing import CliRunner

        from claimdur.cli import main

        r = CliRunner().invoke(main, [
            "predict", "--model", str(path),
            "--set", "POB=34000", "--set", "SEX=F",
        ])
        assert r.exit_code == 0, r.output
        body = client.post("/predict", json={
            "inputs": {"POB": "34000", "SEX": "F"},
        }).json()
        assert f"median: {body['median']:.4f}" in r.output
        assert f"eta: {body['eta']:.6f}" in r.output
        assert f"match_count: {body['match_count']}" in r.output


class TestUiMount:
    def test_ui_served_when_directory_exists(self, served, tmp_path):
        _, path, _ = served
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>client</body></html>")
        client = TestClient(create_app(path, ui_dir=ui))
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "client" in response.text

    def test_no_ui_dir_no_mount(self, served):
        client, _, _ = served
        assert client.get("/ui/").status_code == 404
