import json

import pytest

from optwannier.cli import EXIT_FAILED, EXIT_OBSTRUCTED, EXIT_OK, main


def test_models_lists_builtins(capsys):
    assert main(['models']) == EXIT_OK
    out = capsys.readouterr().out
    for name in ('square3', 'haldane-trivial', 'haldane-chern'):
        assert name in out


def test_run_writes_report(tmp_path, capsys):
    code = main(['run', '--model', 'haldane-trivial', '--grid', '16', '--out', str(tmp_path),
                 '--emit', 'report,coeffs', '--threads', '1'])
    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed['chern'] == 0
    assert (tmp_path / 'coeffs.csv').exists()
    assert json.loads((tmp_path / 'report.json').read_text(encoding='utf-8'))['n'] == 16


def test_run_obstructed_exit_code(tmp_path, capsys):
    code = main(['run', '--model', 'haldane-chern', '--grid', '16', '--out', str(tmp_path)])
    assert code == EXIT_OBSTRUCTED
    assert json.loads((tmp_path / 'report.json').read_text(encoding='utf-8'))['obstructed'] is True


def test_run_rejects_odd_grid(tmp_path, capsys):
    assert main(['run', '--grid', '15', '--out', str(tmp_path)]) == EXIT_FAILED
    assert 'grid size' in capsys.readouterr().err


def test_run_unknown_model(tmp_path, capsys):
    assert main(['run', '--model', 'does-not-exist', '--out', str(tmp_path)]) == EXIT_FAILED
    assert 'does-not-exist' in capsys.readouterr().err


def test_compare(capsys):
    assert main(['compare', '--model', 'haldane-trivial', '--grid', '16']) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['e_para'] > 0


def test_run_orbital_offsets_and_gap_tol(tmp_path, capsys):
    code = main(['run', '--model', 'haldane-trivial', '--grid', '16', '--out', str(tmp_path), '--threads', '1',
                 '--gap-tol', '1e-6', '--orbital-offsets', '0,0;0.5,0.25', '--emit', 'wannier', '--window', '2'])
    assert code == EXIT_OK
    assert (tmp_path / 'wannier.csv').exists()

    assert main(['run', '--model', 'haldane-trivial', '--grid', '16', '--out', str(tmp_path),
                 '--orbital-offsets', '0,0']) == EXIT_FAILED
    assert 'offsets' in capsys.readouterr().err


def test_run_rejects_malformed_offsets(capsys):
    with pytest.raises(SystemExit):
        main(['run', '--orbital-offsets', '0,0;1'])
    assert 'x,y pairs' in capsys.readouterr().err
