"""Renderer tests, ending with the cross-component acceptance check:
every preset CSV renders deterministically (byte-identical across two
runs) and the simulator package never imports the renderer."""
import hashlib
import re
import subprocess
import sys
from pathlib import Path

import pytest

from figures import FigureSpec, RenderError, PRESETS, load_rows, \
    preset_spec, render

REPO = Path(__file__).resolve().parents[2]

# desk-scale sweeps: one trial and short sweeps keep every preset CSV
# cheap while exercising the full row vocabulary
_CHEAP = {
    "fig6": dict(trials=1, sweep=(10, 20)),
    "fig7": dict(trials=1, sweep=(1.5,)),
    "fig8": dict(trials=1, sweep=(1, 3)),
    "fig9": dict(trials=1, sweep=(60.0,)),
    "fig10": dict(),
    "fig11": dict(trials=1, sweep=(10.0,)),
    "fig12": dict(trials=1, sweep=(10.0,)),
    "ase": dict(trials=1, sweep=(50.0,)),
}


@pytest.fixture(scope="session")
def preset_csvs(tmp_path_factory):
    from isac_sim.experiments import PRESET_COMMENTS, preset_config, \
        run_experiment, write_csv
    out = tmp_path_factory.mktemp("csv")
    paths = {}
    for preset, overrides in _CHEAP.items():
        cfg = preset_config(preset, **overrides)
        path = out / f"{preset}.csv"
        write_csv(run_experiment(cfg), path,
                  PRESET_COMMENTS.get(preset, ()))
        paths[preset] = path
    return paths


def _lines_csv(path, rows):
    body = "\n".join(f"fig9,p_dl_dbm,{x},{m},{y},0.0,1,7"
                     for x, m, y in rows)
    path.write_text("experiment,sweep_name,sweep_value,metric,mean,std,"
                    "trials,seed\n" + body + ("\n" if body else ""))
    return str(path)


def test_load_rows_skips_comments_and_keeps_file(tmp_path):
    path = tmp_path / "in.csv"
    path.write_text("# note one\na,b\n# note two\n1,2\n\n3,4\n")
    before = hashlib.sha256(path.read_bytes()).hexdigest()
    header, rows = load_rows(path)
    assert header == ["a", "b"]
    assert rows == [{"a": "1", "b": "2"}, {"a": "3", "b": "4"}]
    assert hashlib.sha256(path.read_bytes()).hexdigest() == before


def test_header_only_csv_is_an_error(tmp_path):
    path = _lines_csv(tmp_path / "empty.csv", [])
    with pytest.raises(RenderError, match="no data rows"):
        render(preset_spec("fig9", path), tmp_path / "out.png")


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(RenderError, match="cannot read"):
        render(preset_spec("fig9", tmp_path / "absent.csv"),
               tmp_path / "out.png")


def test_missing_column_is_an_error(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("experiment,sweep_name,sweep_value,metric\n"
                    "fig9,p_dl_dbm,60.0,omp_sr_b5\n")
    with pytest.raises(RenderError, match="mean"):
        render(preset_spec("fig9", path), tmp_path / "out.png")


def test_ragged_row_is_an_error(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b,c\n1,2\n")
    with pytest.raises(RenderError, match="fields"):
        load_rows(path)


def test_unknown_preset_is_an_error(tmp_path):
    with pytest.raises(RenderError, match="unknown preset"):
        preset_spec("fig99", tmp_path / "x.csv")


def test_log_scale_drops_nonpositive_points(tmp_path):
    path = _lines_csv(tmp_path / "ber.csv", [
        ("10.0", "ber_perfect", "0.1"),
        ("12.0", "ber_perfect", "0.0"),
        ("14.0", "ber_perfect", "0.01"),
    ])
    render(preset_spec("fig12", path), tmp_path / "out.png")
    assert (tmp_path / "out.png").stat().st_size > 0


def test_all_nonpositive_is_an_error(tmp_path):
    path = _lines_csv(tmp_path / "zero.csv", [("10.0", "m", "0.0")])
    with pytest.raises(RenderError, match="no plottable rows"):
        render(preset_spec("fig9", path), tmp_path / "out.png")


def test_sweep_filter_splits_mixed_sweeps(tmp_path, preset_csvs):
    spec = preset_spec("ase", preset_csvs["ase"])
    assert spec.sweep_filter == "p_dl_dbm"
    render(spec, tmp_path / "ase.png")
    # the other sweep family renders too once the filter is retargeted
    other = FigureSpec(preset="ase", csv_path=str(preset_csvs["ase"]),
                       x_label="codebook size", y_label="bit/s/Hz",
                       sweep_filter="m_cb")
    render(other, tmp_path / "ase_mcb.png")


def test_cli_render_and_exit_codes(tmp_path, preset_csvs):
    out = tmp_path / "cli.png"
    proc = subprocess.run(
        [sys.executable, "-m", "figures", "render", "--preset", "fig10",
         "--in", str(preset_csvs["fig10"]), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert str(out) in proc.stdout
    assert out.stat().st_size > 0
    proc = subprocess.run(
        [sys.executable, "-m", "figures", "render", "--preset", "fig10",
         "--in", str(tmp_path / "absent.csv"), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "render error" in proc.stderr


_BLOCKER = """
import importlib, pkgutil, sys

class Block:
    def find_spec(self, name, path=None, target=None):
        if name == "figures" or name.startswith("figures."):
            raise ImportError("renderer import blocked")

sys.meta_path.insert(0, Block())
import isac_sim
for info in pkgutil.iter_modules(isac_sim.__path__):
    importlib.import_module(f"isac_sim.{info.name}")
print("ok")
"""


def test_criterion_12_deterministic_rendering(tmp_path, preset_csvs,
                                              capsys):
    # simulator side must not need the renderer: every module imports
    # with figures blocked, and no simulator source mentions it
    proc = subprocess.run([sys.executable, "-c", _BLOCKER],
                          capture_output=True, text=True)
    clean = proc.returncode == 0 and "ok" in proc.stdout
    pattern = re.compile(r"^\s*(import|from)\s+figures\b", re.M)
    sources = list((REPO / "src" / "isac_sim").glob("*.py"))
    sources += list((REPO / "tests").glob("*.py"))
    mentions = [p.name for p in sources
                if pattern.search(p.read_text(encoding="utf-8"))]

    identical = 0
    for preset, csv_path in preset_csvs.items():
        spec = preset_spec(preset, csv_path)
        a, b = tmp_path / f"{preset}_a.png", tmp_path / f"{preset}_b.png"
        render(spec, a)
        render(spec, b)
        assert a.stat().st_size > 0
        identical += a.read_bytes() == b.read_bytes()

    ok = clean and not mentions and identical == len(preset_csvs)
    with capsys.disabled():
        print(f"\nACCEPTANCE 12: {'PASS' if ok else 'FAIL'}   "
              f"({identical}/{len(preset_csvs)} presets byte-identical, "
              f"simulator imports clean of the renderer)")
    assert ok
