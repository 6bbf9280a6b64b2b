from corpus import CorpusManifest
from metrics import vertex_emission_stream
from tokenizer_baselines import encode_sequence
from tokenizer_bpt import KINDS
from visualize import avd_curves, plot_avd_curves, plot_utilization


def test_avd_curves_per_kind(icospheres, cfg):
    mesh = icospheres[320]
    streams = {kind: vertex_emission_stream(encode_sequence(mesh, cfg, kind)) for kind in KINDS}
    curves = avd_curves(streams, (1, 4, 16))
    assert set(curves) == set(KINDS)
    assert all(set(c) == {'1', '4', '16'} for c in curves.values())
    assert curves['vanilla'] == curves['blocked']


def test_plot_avd_curves(tmp_path):
    curves = {'bpt': {'8': 3.0, '32': 9.5}, 'vanilla': {'8': 4.0, '32': 11.0}}
    out = tmp_path / 'nested' / 'avd.png'
    plot_avd_curves(curves, out)
    assert out.read_bytes()[:4] == b'\x89PNG'


def test_plot_utilization_handles_failed_records(tmp_path):
    manifest = CorpusManifest(
        records=[
            {'path': 'a.obj', 'faces': 12, 'token_len': {'bpt': 40}, 'kept': True},
            {'path': 'b.obj', 'faces': 900, 'token_len': {'bpt': 2400}, 'kept': False},
            {'path': 'c.obj', 'faces': None, 'token_len': {}, 'kept': False},
        ],
        summary={'max_len': 1000},
    )
    out = tmp_path / 'utilization.png'
    plot_utilization(manifest, out)
    assert out.stat().st_size > 0
