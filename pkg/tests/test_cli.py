import json

import pytest

import cli
from cv_teleport import config, tools
from cv_teleport.errors import EXIT_CONFIG, EXIT_IO, EXIT_OK


@pytest.fixture(autouse=True)
def no_default_archive(monkeypatch):
    monkeypatch.setattr(config, 'ARCHIVE_PATH', None)
    monkeypatch.setattr(tools, '_archive', None)


@pytest.fixture
def write_config(tmp_path):
    def write(document, name='run.json'):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding='utf-8')
        return str(path)
    return write


def test_teleport_to_stdout(capsys):
    assert cli.main(['teleport']) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith('# config_hash: ')
    assert 'field,value' in out
    assert 'flags.beats_classical,false' in out


def test_json_format(capsys, write_config):
    path = write_config({'teleporter': {'opa1': {'v_squeezed': 0.44}, 'opa2': {'v_squeezed': 0.44}}})
    assert cli.main(['teleport', '--config', path, '--format', 'json']) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data['fidelity'] == pytest.approx(0.694, abs=1e-3)


def test_unknown_key_is_config_error(write_config, caplog):
    path = write_config({'teleporter': {'gain_plsu': 1.0}})
    assert cli.main(['teleport', '--config', path]) == EXIT_CONFIG
    assert 'teleporter.gain_plsu' in caplog.text


def test_missing_config_is_io_error(tmp_path):
    assert cli.main(['duan', '--config', str(tmp_path / 'absent.json')]) == EXIT_IO


def test_empty_sweep_is_config_error(write_config):
    path = write_config({'sweep': {'start': 0.5, 'stop': 0.5}})
    assert cli.main(['sweep-gain', '--config', path]) == EXIT_CONFIG


def test_spectrum_needs_seed(capsys):
    assert cli.main(['spectrum']) == EXIT_CONFIG
    assert cli.main(['spectrum', '--seed', '5']) == EXIT_OK
    assert '# seed: 5' in capsys.readouterr().out


def test_invalid_samples():
    assert cli.main(['teleport', '--samples', '1']) == EXIT_CONFIG


def test_out_file_is_reproducible(tmp_path, write_config):
    path = write_config({'teleporter': {'opa1': {'v_squeezed': 0.44}, 'opa2': {'v_squeezed': 0.44}}})
    first, second = tmp_path / 'a' / 'spectrum.csv', tmp_path / 'b' / 'spectrum.csv'
    for out in (first, second):
        assert cli.main(['spectrum', '--config', path, '--seed', str(2 ** 64 - 1), '--out', str(out)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    header = [line for line in first.read_text(encoding='utf-8').splitlines() if not line.startswith('#')][0]
    assert header == 'trace,quadrature,frequency_hz,power_db'


def test_sweep_columns(capsys):
    assert cli.main(['sweep-gain']) == EXIT_OK
    lines = [line for line in capsys.readouterr().out.splitlines() if not line.startswith('#')]
    assert lines[0] == 'g_plus,g_minus,F,T_q,V_q'
    assert len(lines) == 42


def test_archive_and_runs(tmp_path, capsys):
    db = str(tmp_path / 'runs.db')
    assert cli.main(['duan', '--archive', db]) == EXIT_OK
    assert cli.main(['tv-map', '--archive', db]) == EXIT_OK
    capsys.readouterr()

    assert cli.main(['runs', '--archive', db]) == EXIT_OK
    listing = capsys.readouterr().out
    assert '(2 total)' in listing
    assert 'tv-map' in listing and 'duan' in listing

    assert cli.main(['runs', '--archive', db, '--filter', 'duan', '--show', '1']) == EXIT_OK
    shown = json.loads(capsys.readouterr().out)
    assert shown['command'] == 'duan'
    assert shown['payload']['duan'] == pytest.approx(1.0)


def test_runs_without_archive():
    assert cli.main(['runs']) == EXIT_CONFIG


def test_show_missing_run(tmp_path):
    assert cli.main(['runs', '--archive', str(tmp_path / 'runs.db'), '--show', '7']) != EXIT_OK


def test_no_command_prints_help(capsys):
    assert cli.main([]) == EXIT_OK
    assert 'sweep-gain' in capsys.readouterr().out
