import os


def small_spec(**overrides):
    spec = {'kind': 'hitting', 'surface': 'flat-half-plane', 'start': [1.0, 0.0], 'horizon': 0.5,
            'n': 100, 'dt': 1e-2, 'seed': 7}
    spec.update(overrides)
    return spec


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    body = response.get_json()
    assert body['status'] == 'ok'
    assert body['version'] == '1.0.0'
    assert 'workers' in body['scheduler']


def test_surfaces_listing(client):
    response = client.get('/api/surfaces')
    assert response.status_code == 200
    body = response.get_json()
    assert len(body['surfaces']) == 4
    assert len(body['charts']) == 3
    assert 'invariants' not in body['surfaces'][0]


def test_surfaces_listing_with_checks(client):
    body = client.get('/api/surfaces?check=true&n=200').get_json()
    assert all('invariants' in row for row in body['surfaces'])


def test_post_experiment(client, app):
    response = client.post('/api/experiments', json=small_spec())
    assert response.status_code == 200
    body = response.get_json()
    assert body['kind'] == 'hitting'
    assert len(body['digest']) == 64
    assert body['artifacts'] == {}
    again = client.post('/api/experiments', json=small_spec()).get_json()
    assert again['digest'] == body['digest']
    assert not os.path.exists(app.config['OUTPUT_DIR'])


def test_post_experiment_writes_artifacts(client):
    body = client.post('/api/experiments?write=true', json=small_spec()).get_json()
    assert os.path.exists(body['artifacts']['csv'])
    assert os.path.exists(body['artifacts']['json'])


def test_rejected_specs(client):
    assert client.post('/api/experiments', json=small_spec(kind='animate')).status_code == 400
    assert client.post('/api/experiments', json=small_spec(n=0)).status_code == 400
    response = client.post('/api/experiments', data='not json', content_type='text/plain')
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_failed_experiment_is_unprocessable(client):
    response = client.post('/api/experiments', json=small_spec(start=[-1.0, 0.0]))
    assert response.status_code == 422
    assert 'error' in response.get_json()
