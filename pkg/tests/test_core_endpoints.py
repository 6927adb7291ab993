import pytest
from fastapi import status


@pytest.fixture
def tent_payload():
    return {"tent_type": "I", "k": 0.05, "h_l": 0.1, "h_r": 0.1, "p_l": 0.5, "p_r": 0.5, "x": 0.5}


class TestHealthEndpoints:
    """Test health check endpoints"""

    def test_get_health(self, client):
        """Test GET /health endpoint"""
        response = client.get("/health")
        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert "timestamp" in data
        assert data["version"] == "0.1.0-test"
        assert data["env"] == "test"

    def test_post_health(self, client):
        """Test POST /health endpoint"""
        response = client.post("/health")
        assert response.status_code == status.HTTP_200_OK
        assert "version" in response.json()

    def test_health_reports_solver_defaults(self, client):
        """Test the health payload carries the solver defaults read from the environment"""
        solver = client.get("/health").json()["solver"]
        assert solver["margin"] == 0.9
        assert solver["seed"] == 7
        assert solver["power_norm_cap"] == 500
        assert solver["singular_condition_limit"] == 1e12

    def test_process_time_header(self, client):
        """Test every response carries its processing time"""
        response = client.get("/health", headers={"X-Request-ID": "abc"})
        assert float(response.headers["X-Process-Time"]) >= 0.0


class TestStabilityEndpoint:
    """Test the von Neumann sweep endpoint"""

    def test_stable(self, client):
        """Test a*c = 0.9 is reported stable"""
        response = client.get("/stability", params={"ac": 0.9, "thetas": 64})
        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["verdict"] == "stable"
        assert data["n_theta"] == 64
        assert data["power_cap"] == 500
        assert data["max_spectral_radius"] == pytest.approx(1.0, abs=1e-12)

    def test_unstable(self, client):
        """Test a*c = 1.05 is reported unstable"""
        response = client.get("/stability", params={"ac": 1.05, "thetas": 64})
        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["verdict"] == "unstable"
        assert data["max_spectral_radius"] > 1.0
        assert data["max_power_norm"] is None or data["max_power_norm"] > 1.0

    def test_invalid_query(self, client):
        """Test too few frequencies and a missing Courant number are rejected"""
        assert client.get("/stability", params={"ac": 0.5, "thetas": 4}).status_code == 422
        assert client.get("/stability").status_code == 422


class TestTentEndpoints:
    """Test single tent causality checks and solves"""

    def test_cfl_admissible(self, client, tent_payload):
        """Test a gentle tent is admissible and reports its ratios"""
        response = client.post("/tents/cfl", json={"tent": tent_payload, "margin": 0.9})
        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["admissible"] is True
        assert data["ratio_left"] == pytest.approx(0.25)
        assert data["ratio_right"] == pytest.approx(0.25)
        assert data["max_pole_height"] == pytest.approx(0.115)

    def test_cfl_steep_tent(self, client, tent_payload):
        """Test a tent steeper than the local wave speed allows is not admissible"""
        tent_payload.update(k=0.2, p_l=1.0, p_r=1.0)
        data = client.post("/tents/cfl", json={"tent": tent_payload, "margin": 0.9}).json()
        assert data["admissible"] is False
        assert data["ratio_left"] == pytest.approx(2.0)

    def test_cfl_boundary_tent(self, client):
        """Test a left boundary tent has no left ratio"""
        tent = {"tent_type": "L", "k": 0.05, "h_r": 0.1, "p_r": 0.5}
        data = client.post("/tents/cfl", json={"tent": tent}).json()
        assert data["ratio_left"] is None
        assert data["ratio_right"] == pytest.approx(0.25)

    def test_solve_constant_state(self, client, tent_payload):
        """Test a constant inflow comes out unchanged at the apex"""
        payload = {"tent": tent_payload, "inflow": [[0.4, -1.1]] * 3}
        response = client.post("/tents/solve", json=payload)
        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["method"] == "assembled"
        assert data["apex"] == pytest.approx([0.4, -1.1])
        assert data["u_const"] == pytest.approx([0.4, -1.1])
        assert data["condition"] > 0.0

    def test_solve_closed_form(self, client, tent_payload):
        """Test the closed form path agrees with the assembled solve"""
        inflow = [[0.3, 0.1], [-0.2, 0.5], [0.7, -0.4]]
        assembled = client.post("/tents/solve", json={"tent": tent_payload, "inflow": inflow}).json()
        closed = client.post("/tents/solve", json={"tent": tent_payload, "inflow": inflow, "use_closed_form": True})
        data = closed.json()
        assert data["method"] == "closed_form"
        assert data["u_const"] is None
        assert data["apex"] == pytest.approx(assembled["apex"], rel=1e-10, abs=1e-12)

    def test_solve_invalid_geometry(self, client):
        """Test a left tent with a left half-width is rejected with its error type"""
        tent = {"tent_type": "L", "k": 0.05, "h_l": 0.1, "h_r": 0.1}
        response = client.post("/tents/solve", json={"tent": tent, "inflow": [[0.0, 0.0]] * 3})
        assert response.status_code == 422
        data = response.json()
        assert data["status"] == "error"
        assert data["error_type"] == "GeometryError"

    def test_solve_wrong_inflow_length(self, client, tent_payload):
        """Test exactly three inflow corners are required"""
        response = client.post("/tents/solve", json={"tent": tent_payload, "inflow": [[0.0, 0.0]] * 2})
        assert response.status_code == 422
