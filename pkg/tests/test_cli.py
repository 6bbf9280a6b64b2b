import json

import pytest

import cli
from cli import EXIT_ERROR, EXIT_MISMATCH, EXIT_OK, main
from fixtures import cube, icosphere, triangle
from mesh_core import RawMesh, load_obj_file, prepare_mesh, save_obj


def json_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


@pytest.fixture
def cube_obj(tmp_path):
    return save_obj(cube(), tmp_path / 'cube.obj')


@pytest.fixture
def sphere_obj(tmp_path):
    return save_obj(icosphere(2), tmp_path / 'sphere.obj')


def test_no_command_is_usage_error():
    assert main([]) == EXIT_ERROR


def test_unknown_kind_is_usage_error(cube_obj):
    assert main(['encode', str(cube_obj), '--kind', 'octree']) == EXIT_ERROR


def test_encode(cube_obj, tmp_path, capsys):
    out = tmp_path / 'cube.bpt'
    assert main(['-q', 'encode', str(cube_obj), '--out', str(out)]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result['kind'] == 'bpt'
    assert result['faces'] == 12
    assert result['config'] == {'blocks': 8, 'offsets': 16, 'bits': 7}
    data = out.read_bytes()
    assert data[:4] == b'BPT1'
    assert data[9] == 0
    assert result['tokens'] == (len(data) - 18) // 4


def test_encode_directory_all_kinds(tmp_path, capsys):
    meshes = tmp_path / 'meshes'
    save_obj(cube(), meshes / 'cube.obj')
    save_obj(icosphere(1), meshes / 'parts' / 'sphere.obj')
    out = tmp_path / 'tokens'
    args = ['-q', 'encode', str(meshes), '--out', str(out), '--kind', 'all', '--workers', '1']
    assert main(args) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result['meshes'] == 2
    assert result['failed'] == []
    assert sorted(p.relative_to(out).as_posix() for p in out.rglob('*.bpt')) == [
        'cube.blocked.bpt', 'cube.bpt.bpt', 'cube.vanilla.bpt',
        'parts/sphere.blocked.bpt', 'parts/sphere.bpt.bpt', 'parts/sphere.vanilla.bpt',
    ]
    assert main(['-q', 'decode', str(out / 'parts' / 'sphere.vanilla.bpt'),
                 '--out', str(tmp_path / 'sphere.obj')]) == EXIT_OK


def test_encode_all_kinds_needs_directory(cube_obj):
    assert main(['-q', 'encode', str(cube_obj), '--kind', 'all']) == EXIT_ERROR


def test_encode_vanilla_kind_code(cube_obj, tmp_path):
    out = tmp_path / 'cube_vanilla.bpt'
    assert main(['-q', 'encode', str(cube_obj), '--out', str(out), '--kind', 'vanilla']) == EXIT_OK
    assert out.read_bytes()[9] == 1


def test_encode_rejects_bad_block_count(cube_obj, tmp_path):
    out = tmp_path / 'x.bpt'
    assert main(['-q', 'encode', str(cube_obj), '--out', str(out), '--bits', '7', '--blocks', '5']) == EXIT_ERROR
    assert not out.exists()


def test_encode_rejects_bad_obj(tmp_path):
    bad = tmp_path / 'bad.obj'
    bad.write_text("v 0 0 0\nf 1 2 3\n")
    assert main(['-q', 'encode', str(bad)]) == EXIT_ERROR


def test_encode_missing_file(tmp_path):
    assert main(['-q', 'encode', str(tmp_path / 'missing.obj')]) == EXIT_ERROR


def test_encode_decode_round_trip(cube_obj, tmp_path, capsys):
    bpt = tmp_path / 'cube.bpt'
    decoded = tmp_path / 'cube_decoded.obj'
    assert main(['-q', 'encode', str(cube_obj), '--out', str(bpt)]) == EXIT_OK
    assert main(['-q', 'decode', str(bpt), '--out', str(decoded)]) == EXIT_OK
    result = json_lines(capsys.readouterr().out)[-1]
    assert result['faces'] == 12

    original, _ = prepare_mesh(cube(), 7)
    restored, _ = prepare_mesh(load_obj_file(decoded), 7)
    assert restored == original


def test_decode_bad_magic(cube_obj, tmp_path):
    bpt = tmp_path / 'cube.bpt'
    main(['-q', 'encode', str(cube_obj), '--out', str(bpt)])
    bpt.write_bytes(b'NOPE' + bpt.read_bytes()[4:])
    assert main(['-q', 'decode', str(bpt)]) == EXIT_ERROR


def test_decode_truncated(cube_obj, tmp_path):
    bpt = tmp_path / 'cube.bpt'
    main(['-q', 'encode', str(cube_obj), '--out', str(bpt)])
    bpt.write_bytes(bpt.read_bytes()[:-6])
    assert main(['-q', 'decode', str(bpt)]) == EXIT_MISMATCH


def test_roundtrip_all_kinds(sphere_obj, capsys):
    assert main(['-q', 'roundtrip', str(sphere_obj), '--kind', 'all']) == EXIT_OK
    results = json_lines(capsys.readouterr().out)
    assert [r['kind'] for r in results] == ['bpt', 'vanilla', 'blocked']
    assert all(r['ok'] for r in results)


@pytest.mark.parametrize("blocks", ['4', '16'])
def test_roundtrip_other_layouts(sphere_obj, blocks):
    assert main(['-q', 'roundtrip', str(sphere_obj), '--kind', 'all', '--blocks', blocks]) == EXIT_OK


def test_roundtrip_mismatch(sphere_obj, monkeypatch, capsys):
    wrong, _ = prepare_mesh(triangle(), 7)
    monkeypatch.setattr(cli, 'decode_sequence', lambda seq: wrong)
    assert main(['-q', 'roundtrip', str(sphere_obj)]) == EXIT_MISMATCH
    result = json_lines(capsys.readouterr().out)[0]
    assert not result['ok']
    assert result['faces'] == [320, 1]


def test_stats_json(sphere_obj, tmp_path, capsys):
    save_obj(cube(), tmp_path / 'cube.obj')
    assert main(['-q', 'stats', str(tmp_path), '--json', '--workers', '1']) == EXIT_OK
    lines = json_lines(capsys.readouterr().out)
    records, summary = lines[:-1], lines[-1]['summary']
    assert len(records) == 2
    assert summary['total'] == 2
    for record in records:
        assert record['ratio']['vanilla'] == 1.0
        assert set(record['avd']['bpt']) == {'8', '32', '128'}
    sphere = next(r for r in records if r['path'].endswith('sphere.obj'))
    lengths = sphere['token_len']
    assert lengths['bpt'] < lengths['blocked'] < lengths['vanilla']


def test_compare_is_stats_alias(sphere_obj, capsys):
    assert main(['-q', 'compare', str(sphere_obj), '--workers', '1']) == EXIT_OK
    summary = json_lines(capsys.readouterr().out)[-1]
    assert set(summary['ratio']) == {'bpt', 'vanilla', 'blocked'}


def test_filter_writes_manifest(sphere_obj, tmp_path, capsys):
    manifest = tmp_path / 'manifest.jsonl'
    assert main(['-q', 'filter', str(tmp_path), '--max-len', '9600', '--manifest', str(manifest),
                 '--workers', '1']) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary['total'] == 1
    assert summary['kept'] == 1
    assert 'summary' in json_lines(manifest.read_text())[-1]


def test_filter_empty_directory(tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    assert main(['-q', 'filter', str(empty)]) == EXIT_ERROR


def test_metrics_identical(cube_obj, capsys):
    assert main(['-q', 'metrics', str(cube_obj), str(cube_obj)]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result == {'cd': 0.0, 'hd': 0.0, 'n': 1024, 'seed': 0}


def test_metrics_translated(cube_obj, tmp_path, capsys):
    raw = cube()
    moved = save_obj(RawMesh(raw.positions + [1e-3, 0, 0], raw.faces), tmp_path / 'moved.obj')
    assert main(['-q', 'metrics', str(cube_obj), str(moved), '--points', '256', '--seed', '3']) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result['hd'] == pytest.approx(1e-3, rel=1e-9)


def test_metrics_repeatable(cube_obj, sphere_obj, capsys):
    args = ['-q', 'metrics', str(cube_obj), str(sphere_obj), '--seed', '5']
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
    assert json.loads(first)['cd'] > 0


def test_fixtures_command(tmp_path, capsys):
    out = tmp_path / 'fixtures'
    assert main(['-q', 'fixtures', '--out', str(out), '--fuzz', '2']) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['meshes'] == 13
    assert len(list(out.glob('*.obj'))) == 13
    assert main(['-q', 'roundtrip', str(out / 'fuzz_001.obj'), '--kind', 'all']) == EXIT_OK


def test_plot_writes_images(cube_obj, tmp_path):
    out = tmp_path / 'plots'
    assert main(['-q', 'plot', str(cube_obj), '--out', str(out), '--workers', '1']) == EXIT_OK
    assert (out / 'avd_curves.png').stat().st_size > 0
    assert (out / 'utilization.png').stat().st_size > 0


def test_stdout_is_json_only(cube_obj, tmp_path, capsys):
    main(['encode', str(cube_obj), '--out', str(tmp_path / 'c.bpt')])
    captured = capsys.readouterr()
    json.loads(captured.out)
    assert all([line.startswith('{') for line in captured.out.splitlines()])
