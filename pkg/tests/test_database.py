import sqlite3

import pytest

from cv_teleport import config, tools
from cv_teleport.database import RunArchive
from cv_teleport.experiments import run_command
from cv_teleport.schema import parse_run_config
from cv_teleport.tables import Provenance

PROVENANCE = Provenance('a' * 64, '0.1.0', 2 ** 64 - 1)


class TestRunArchive:

    def test_store_and_get(self, archive):
        run_id = archive.store_run('teleport', PROVENANCE, {'fidelity': 0.694})
        run = archive.get_run(run_id)
        assert run['command'] == 'teleport'
        assert run['seed'] == 2 ** 64 - 1
        assert run['payload'] == {'fidelity': 0.694}

    async def test_store_async(self, archive):
        run_id = await archive.store_run_async('duan', Provenance('b' * 64, '0.1.0'), {'duan': 0.438})
        run = archive.get_run(run_id)
        assert run['seed'] is None
        assert run['payload']['duan'] == 0.438

    def test_get_missing(self, archive):
        assert archive.get_run(404) is None

    def test_list_newest_first_and_paginated(self, archive):
        ids = [archive.store_run('sweep-gain', PROVENANCE, {'i': i}) for i in range(5)]
        page = archive.list_runs(limit=2)
        assert page['total'] == 5
        assert [r['id'] for r in page['results']] == ids[::-1][:2]
        assert page['has_more'] and page['next_offset'] == 2
        last = archive.list_runs(limit=2, offset=4)
        assert last['returned'] == 1
        assert not last['has_more'] and last['next_offset'] is None
        assert 'payload' not in last['results'][0]

    def test_filters(self, archive):
        archive.store_run('teleport', PROVENANCE, {})
        archive.store_run('duan', PROVENANCE, {})
        archive.store_run('duan', Provenance('c' * 64, '0.1.0'), {})
        assert archive.list_runs(command='duan')['total'] == 2
        assert archive.list_runs(command='duan', config_hash='c' * 64)['total'] == 1

    def test_find_latest(self, archive):
        archive.store_run('teleport', PROVENANCE, {'n': 1})
        archive.store_run('teleport', PROVENANCE, {'n': 2})
        assert archive.find_latest('teleport', PROVENANCE.config_hash)['payload'] == {'n': 2}
        assert archive.find_latest('duan', PROVENANCE.config_hash) is None

    def test_clear_all(self, archive):
        archive.store_run('teleport', PROVENANCE, {})
        archive.clear_all()
        assert archive.list_runs()['total'] == 0

    def test_schema_is_idempotent(self, tmp_path):
        path = tmp_path / 'sub' / 'runs.db'
        RunArchive(path).store_run('teleport', PROVENANCE, {})
        assert RunArchive(path).list_runs()['total'] == 1

    def test_rollback_on_error(self, archive):
        with pytest.raises(sqlite3.OperationalError):
            with archive.get_connection() as conn:
                conn.execute("DELETE FROM runs")
                conn.execute("SELECT * FROM missing_table")


class TestTools:

    @pytest.fixture
    def no_archive(self, monkeypatch):
        monkeypatch.setattr(config, 'ARCHIVE_PATH', None)
        monkeypatch.setattr(tools, '_archive', None)

    @pytest.fixture
    def with_archive(self, monkeypatch, archive):
        monkeypatch.setattr(tools, '_archive', archive)
        return archive

    def test_run_tool_without_archive(self, no_archive):
        payload = tools.run_tool('duan', {'teleporter': {'eta_entanglement': 0.84}})
        assert payload['command'] == 'duan'
        assert payload['duan'] == pytest.approx(1.0)
        assert 'run_id' not in payload

    def test_run_tool_archives(self, with_archive):
        payload = tools.run_tool('teleport', {})
        assert payload['fidelity'] == pytest.approx(0.5)
        stored = with_archive.get_run(payload['run_id'])
        assert stored['payload']['fidelity'] == payload['fidelity']
        assert tools.get_run(payload['run_id'])['id'] == payload['run_id']
        assert tools.list_runs(command='teleport')['total'] == 1

    def test_run_tool_validation_error(self, no_archive):
        payload = tools.run_tool('teleport', {'teleporter': {'gain': 1.0}})
        assert payload['fields'][0]['path'] == 'teleporter.gain'
        assert 'error' in payload

    def test_run_tool_sweep_error(self, no_archive):
        payload = tools.run_tool('sweep-gain', {'sweep': {'start': 1.0, 'stop': 1.0}})
        assert 'empty range' in payload['error']

    def test_disabled_archive(self, no_archive):
        assert 'error' in tools.list_runs()
        assert 'error' in tools.get_run(1)

    def test_missing_run(self, with_archive):
        assert tools.get_run(99) == {'error': 'Run 99 not found'}

    def test_archive_result_survives_failure(self, tmp_path):
        archive = RunArchive(tmp_path / 'runs.db')
        (tmp_path / 'runs.db').unlink()
        (tmp_path / 'runs.db').mkdir()
        result = run_command('duan', parse_run_config({}))
        assert tools.archive_result(result, archive) is None
