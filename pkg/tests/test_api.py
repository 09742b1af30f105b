import pytest
from fastapi.testclient import TestClient

from main import app


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_home_and_health(client):
    assert client.get("/").json()["success"] is True
    assert client.get("/health").json() == {"success": True, "message": "Ok"}


def test_signatures(client):
    response = client.get("/signatures")
    assert response.status_code == 200
    assert "basic_modal" in response.json()


def test_classify(client):
    response = client.post("/classify", json={"signature": "basic_modal", "expr": "box(p) <= p"})
    assert response.status_code == 200
    body = response.json()
    assert body["label"] == "very-simple-sahlqvist"
    assert body["l_inequality"] is True


def test_alba_with_trace(client):
    response = client.post("/alba", json={"signature": "basic_modal", "expr": "box(p) <= box(box(p))",
                                          "trace": True})
    assert response.status_code == 200
    body = response.json()
    assert body["flags"] == []
    assert body["trace"][0]["step"] == 1


def test_to_kracht_and_inverse(client):
    kracht = client.post("/to-kracht", json={"signature": "basic_modal", "expr": "box(p) <= box(box(p))"})
    assert kracht.status_code == 200
    pieces = kracht.json()["pieces"]
    assert len(pieces) == 1
    back = client.post("/inverse", json={"signature": "basic_modal", "expr": pieces[0]})
    assert back.status_code == 200
    assert back.json()["inductive"] is not None


def test_check(client):
    response = client.post("/check", json={"signature": "basic_modal", "expr": "box(p) <= p",
                                           "against": "A m:conom. box(*m) <= *m", "seed": 1})
    assert response.status_code == 200
    assert response.json()["equivalent"] is True


def test_inline_signature(client):
    response = client.post("/classify", json={"signature": "f dia 1 (1)\ng box 1 (1)", "expr": "p <= box(dia(p))"})
    assert response.status_code == 200
    assert response.json()["label"] is not None


@pytest.mark.parametrize("path, body, status, kind", [
    ("/classify", {"signature": "no_such_logic", "expr": "p <= p"}, 404, "NotFoundException"),
    ("/classify", {"signature": "basic_modal", "expr": "box(p <= p"}, 400, "ParseException"),
    ("/alba", {"signature": "basic_modal", "expr": "box(dia(p)) <= dia(box(p))"}, 422, "NotInductiveException"),
    ("/to-kracht", {"signature": "basic_modal", "expr": "#j <= dia(p)"}, 422, "NotLInequalityException"),
])
def test_domain_errors(client, path, body, status, kind):
    response = client.post(path, json=body)
    assert response.status_code == status
    assert response.json()["kind"] == kind


def test_parse_error_position(client):
    body = client.post("/classify", json={"signature": "basic_modal", "expr": "box(p <= p"}).json()
    assert isinstance(body["position"], int)


def test_not_kracht_reason(client):
    response = client.post("/inverse", json={"signature": "basic_modal", "expr": "A j:nom. #j <= dia(#j)"})
    assert response.status_code == 422
    assert response.json()["reason"] == "malformed"


def test_validation_error(client):
    response = client.post("/classify", json={"signature": "basic_modal"})
    assert response.status_code == 422
    assert response.json() == {"error": "Validation failed", "fields": ["expr"]}
