import csv
import io
import os

import pytest

from meshscale import cli
from meshscale.cli import ConfigError, config_reference, main, parse_config, render_csv, run, strip_timestamp

UNITS = ("_count", "_id", "_idx", "_hops", "_linear", "_bps", "_cells", "_flows", "_prob", "_ratio", "_m",
         "_hz", "_mw", "_db", "_exp", "_order")

SH_MINIMAL = """
[experiment]
command = single-tier
rings = 3, 4, 5
seeds = 0-1
schemes = SH
parallel = 1
"""


def _table(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def _numeric(v):
    try:
        float(v)
        return True
    except ValueError:
        return False


def test_minimal_config_valid():
    cfg = parse_config(SH_MINIMAL)
    assert cfg.command == "single-tier"
    assert cfg.get("experiment", "rings") == [3, 4, 5]
    assert cfg.seeds == [0, 1]


def test_k_below_two_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("[hierarchy]\nk = 1.5\n", "multi-tier")
    assert any("k >= 2" in v for v in exc.value.violations)


def test_eps_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("[lattice]\nplacement = perturbed\neps = 0.8\n", "single-tier")
    assert any("eps < 3/4" in v for v in exc.value.violations)


def test_all_violations_reported_with_lines():
    text = "[hierarchy]\nk = 1\nbogus = 1\n[lattice]\neps = 0.9\n[radio]\nalpha = two\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "multi-tier")
    v = exc.value.violations
    assert any(m.startswith("line 3: unknown key hierarchy.bogus") and "'bogus = 1'" in m for m in v)
    assert any("k >= 2" in m for m in v)
    assert any("eps" in m for m in v)
    assert any(m.startswith("line 7:") and "radio.alpha" in m for m in v)


def test_command_mismatch_and_unknown_section():
    with pytest.raises(ConfigError) as exc:
        parse_config("[experiment]\ncommand = plan\n[extra]\nx = 1\n", "bounds")
    assert len(exc.value.violations) == 2


def test_empty_seed_list_rejected():
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nseeds =\n", "single-tier")


def test_single_tier_cardinality():
    cfg = parse_config("[experiment]\nschemes = SH\nparallel = 1\n", "single-tier")
    res = run(cfg)
    assert len(res.rows) == 5 * 20
    assert not res.failures


def test_every_numeric_column_has_a_unit(tmp_path):
    for cmd, cfg_text in (("single-tier", SH_MINIMAL),
                          ("multi-tier", "[experiment]\nsizes = 64\nseeds = 0\nparallel = 1\n"),
                          ("check", ""), ("plan", ""),
                          ("bounds", "[bounds]\nmax_rings = 2\ntrials = 2\n")):
        cfg = parse_config(cfg_text.replace("command = single-tier", f"command = {cmd}"), cmd)
        table = _table(render_csv(cfg, run(cfg)))
        header, rows = table[0], table[1:]
        for j, name in enumerate(header):
            if all(_numeric(r[j]) for r in rows if r[j] != ""):
                assert name.endswith(UNITS), (cmd, name)


def test_plan_command_matches_planner(capsys, tmp_path):
    out = tmp_path / "plan.csv"
    assert main(["plan", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "Transmit power" in printed and "133 W" in printed
    rows = _table(out.read_text())
    assert [r[1] for r in rows[1:]] == ["10000", "39", "2"]
    assert [float(r[7]) for r in rows[1:]] == pytest.approx([50, 800, 4050])
    assert rows[3][-1].startswith("tier 3:")


def test_bounds_command_reports_no_violations(tmp_path, capsys):
    out = tmp_path / "b.csv"
    cfg = tmp_path / "b.ini"
    cfg.write_text("[bounds]\nmax_rings = 32\ntrials = 1000\n[experiment]\nparallel = 1\n")
    assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
    rows = _table(out.read_text())[1:]
    assert len(rows) == 32 * 4 + 1000
    assert all(r[-1] == "false" for r in rows)
    assert "0 bound violations" in capsys.readouterr().err


def test_check_command(capsys):
    assert main(["check", "--out", "-"]) == 0
    out = capsys.readouterr().out
    assert "SM: holds" in out and "BF: fails" in out


@pytest.mark.parametrize("cmd, cfg_text", [
    ("single-tier", "[experiment]\nrings = 3,5\nseeds = 0-3\n"),
    ("multi-tier", "[experiment]\nsizes = 64,256\nseeds = 0-3\n"),
    ("bounds", "[bounds]\nmax_rings = 4\ntrials = 6\n"),
])
def test_byte_identical_reruns_any_parallelism(tmp_path, cmd, cfg_text):
    cfg = tmp_path / "c.ini"
    cfg.write_text(cfg_text)
    texts = []
    for par in ("1", "2", "1"):
        out = tmp_path / f"{cmd}-{par}-{len(texts)}.csv"
        assert main([cmd, "--config", str(cfg), "--out", str(out), "--parallel", par]) == 0
        texts.append(strip_timestamp(out.read_text()))
    assert texts[0] == texts[1] == texts[2]
    assert any(l.startswith("# generated: ") for l in out.read_text().splitlines())


def test_seed_override_shifts_seed_list(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nrings = 2,3\nseeds = 0-2\nschemes = SH\n")
    out = tmp_path / "o.csv"
    assert main(["single-tier", "--config", str(cfg), "--out", str(out), "--seed", "40", "--parallel", "1"]) == 0
    rows = _table(out.read_text())[1:]
    assert sorted({int(r[2]) for r in rows}) == [40, 41, 42]
    assert "# seeds: 40,41,42" in out.read_text()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[hierarchy]\nk = 1.5\n")
    assert main(["multi-tier", "--config", str(cfg)]) == 2
    assert "k >= 2" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path):
    assert main(["check", "--config", str(tmp_path / "none.ini")]) == 4


def test_unwritable_output_is_io_error(tmp_path):
    assert main(["check", "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 4


def test_cell_failure_writes_partial_results(tmp_path, monkeypatch):
    real = cli._single_tier_cell

    def flaky(args):
        if args[1] == 3:
            raise RuntimeError("boom")
        return real(args)

    monkeypatch.setattr(cli, "_single_tier_cell", flaky)
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nrings = 2,3\nseeds = 0-1\nschemes = SH\nparallel = 1\n")
    out = tmp_path / "o.csv"
    assert main(["single-tier", "--config", str(cfg), "--out", str(out)]) == 3
    text = out.read_text()
    assert "# PARTIAL: 2 cell(s) failed" in text
    assert len(_table(text)) == 1 + 2


def test_atomic_write_leaves_no_temp_files(tmp_path):
    out = tmp_path / "x.csv"
    cli.write_atomic(str(out), "a\n")
    cli.write_atomic(str(out), "b\n")
    assert out.read_text() == "b\n"
    assert os.listdir(tmp_path) == ["x.csv"]


def test_config_reference_lists_every_key(capsys):
    assert main(["config-reference"]) == 0
    text = capsys.readouterr().out
    for section, key in cli.SCHEMA:
        assert f"`{key}`" in text and f"[{section}]" in text
    assert text == config_reference()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "meshscale", "check"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "mode,k_order" in proc.stdout
