import math

import pytest

from catsim import __version__

@pytest.mark.api
class TestHealth:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "healthy", "version": __version__}
        assert "X-Simulation-Time-Ms" in response.headers

    def test_docs(self, client):
        response = client.get("/openapi.json")
        assert response.status_code == 200
        assert "/experiments/sweep" in response.json()["paths"]

    def test_unknown_route(self, client):
        response = client.get("/nowhere")
        assert response.status_code == 404
        assert response.json()["error_code"] == "HTTP_404"

@pytest.mark.api
class TestExperimentRoutes:
    def test_sweep(self, client):
        body = {"topology": "chain", "num_qubits": 3, "theta_step": math.pi / 2, "shots": 32, "exact": True}
        response = client.post("/experiments/sweep", json=body)
        assert response.status_code == 200
        data = response.json()
        assert data["header"]["command"] == "sweep"
        assert len(data["rows"]) == 5
        for row in data["rows"]:
            assert row["e_measured"] == pytest.approx(row["e_theory"], abs=1e-12)

    def test_per_qubit_ignores_body_command(self, client):
        body = {"command": "sweep", "exact": True, "shots": 8}
        response = client.post("/experiments/per-qubit", json=body)
        assert response.status_code == 200
        data = response.json()
        assert data["header"]["command"] == "per-qubit"
        assert len(data["rows"]) == 15

    def test_oracle_check(self, client):
        response = client.post("/experiments/oracle-check", json={"oracle_circuits": 5})
        assert response.status_code == 200
        assert response.json()["passed"] is True

    def test_melbourne_topology(self, client):
        response = client.get("/experiments/topologies/melbourne")
        assert response.status_code == 200
        data = response.json()
        assert data["num_qubits"] == 15
        assert len(data["edges"]) == 20
        assert [5, 6] in data["edges"]

    def test_calibration(self, client):
        response = client.get("/experiments/calibrations/melbourne-20200404")
        assert response.status_code == 200
        data = response.json()
        assert data["name"] == "melbourne-20200404"
        assert len(data["qubits"]) == 15

@pytest.mark.api
class TestErrors:
    def test_validation_error(self, client):
        response = client.post("/experiments/sweep", json={"shots": 0})
        assert response.status_code == 422
        data = response.json()
        assert data["error_code"] == "VALIDATION_ERROR"
        assert "shots" in data["detail"]

    def test_domain_error(self, client):
        response = client.post("/experiments/sweep", json={"num_qubits": 16})
        assert response.status_code == 400
        assert response.json()["error_code"] == "CONFIGURATION"

    def test_unknown_calibration(self, client):
        response = client.get("/experiments/calibrations/no-such-device")
        assert response.status_code == 400
        assert response.json()["error_code"] == "CALIBRATION"

    def test_topology_path_rejected(self, client, tmp_path):
        secret = tmp_path / "secrets.txt"
        secret.write_text("db_password=hunter2\n")
        response = client.post("/experiments/sweep", json={"topology": str(secret), "exact": True})
        assert response.status_code == 400
        data = response.json()
        assert data["error_code"] == "TOPOLOGY"
        assert "hunter2" not in data["detail"]

    def test_noise_path_rejected(self, client, tmp_path):
        secret = tmp_path / "secrets.cal"
        secret.write_text("db_password=hunter2\n")
        body = {"topology": "chain", "num_qubits": 3, "noise": str(secret), "shots": 8}
        response = client.post("/experiments/sweep", json=body)
        assert response.status_code == 400
        assert response.json()["error_code"] == "CALIBRATION"
        assert "hunter2" not in response.json()["detail"]

    def test_calibration_name_with_traversal(self, client):
        response = client.get("/experiments/calibrations/..%2Fdata%2Fmelbourne-20200404")
        assert response.status_code in (400, 404)
        assert "qubits" not in response.json()
