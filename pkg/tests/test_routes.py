from optwannier.services.hamiltonian import builtin_model, model_to_document


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    assert response.get_json() == {'status': 'healthy'}


def test_list_models(client):
    response = client.get('/api/v1/models')
    assert response.status_code == 200
    data = response.get_json()
    names = {m['name']: m for m in data['models']}
    assert data['total'] == 3
    assert names['haldane-chern']['time_reversal'] is False
    assert names['square3']['dim'] == 3


def test_get_model(client):
    response = client.get('/api/v1/models/haldane-trivial')
    assert response.status_code == 200
    assert response.get_json()['dim'] == 2


def test_get_unknown_model(client):
    assert client.get('/api/v1/models/kagome').status_code == 404


def test_validate_model(client):
    doc = model_to_document(builtin_model('square3')).model_dump()
    response = client.post('/api/v1/models/validate', json=doc)
    assert response.status_code == 200
    assert response.get_json()['band'] == 2

    doc['band'] = 5
    response = client.post('/api/v1/models/validate', json=doc)
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_run_builtin(client):
    response = client.post('/api/v1/runs', json={'model': 'haldane-trivial', 'n': 16, 'output': '/tmp/ignored'})
    assert response.status_code == 200
    data = response.get_json()
    assert data['chern'] == 0
    assert data['outputs'] == []


def test_run_inline_document(client):
    doc = model_to_document(builtin_model('haldane-trivial')).model_dump()
    response = client.post('/api/v1/runs', json={'document': doc, 'n': 16})
    assert response.status_code == 200
    assert response.get_json()['time_reversal'] is True


def test_run_obstructed_is_not_an_error(client):
    response = client.post('/api/v1/runs', json={'model': 'haldane-chern', 'n': 16})
    assert response.status_code == 200
    assert response.get_json()['obstructed'] is True


def test_run_limits(client):
    assert client.post('/api/v1/runs', json={'model': 'square3', 'n': 128}).status_code == 400
    assert client.post('/api/v1/runs', json={'model': 'square3', 'n': 9}).status_code == 400
    assert client.post('/api/v1/runs', json={'model': '/etc/passwd', 'n': 16}).status_code == 404


def test_compare(client):
    response = client.post('/api/v1/runs/compare', json={'model': 'haldane-trivial', 'n': 16})
    assert response.status_code == 200
    assert response.get_json()['variance_ode'] is not None


def test_run_rejects_non_object_body(client):
    response = client.post('/api/v1/runs', json=[{'model': 'square3'}])
    assert response.status_code == 400
    assert 'error' in response.get_json()
    assert client.post('/api/v1/runs/compare', json='square3').status_code == 400
    assert client.post('/api/v1/models/validate', json=[1, 2]).status_code == 400
