from flatdenjoy import cherry as Ch
from flatdenjoy import plotting


def test_png_figures(stage0, tmp_path):
    p = plotting.plot_map(stage0.map, tmp_path / "map.png")
    assert p.read_bytes()[:4] == b"\x89PNG"
    q = plotting.plot_gap_cover(Ch.gap_cover(stage0.map, 3), tmp_path / "g.png")
    assert q.stat().st_size > 0


def test_decay_figure(k4_run, tmp_path):
    p = plotting.plot_decay(k4_run["cert"].decay, tmp_path / "decay.png")
    assert p.stat().st_size > 0


def test_svg_is_reproducible_and_tagged(stage0, tmp_path):
    tr = Ch.suspension_trace(stage0.map, float(stage0.I.mid), 10)
    a = plotting.plot_trace(tr, stage0.map, tmp_path / "a.svg", "cafe")
    b = plotting.plot_trace(tr, stage0.map, tmp_path / "b.svg", "cafe")
    text = a.read_text()
    assert "<!-- config cafe -->" in text.splitlines()[1]
    assert "<dc:date>" not in text
    assert a.read_bytes() == b.read_bytes()
