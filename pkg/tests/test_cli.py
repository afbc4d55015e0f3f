"""Command-line behaviour: subcommands, global flag overrides, exit codes,
and the plot files with their CSV companions."""
import csv
import json
import os

import pytest

from holonomylab import cli, plots

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
FLAT = os.path.join(CONFIG_DIR, "flat-torus-wave.json")


def write_cfg(tmp_path, **kw):
    raw = {"schema_version": 1, "seed": 0,
           "scenario": {"family": "flat-torus-wave", "epsilon": 0.1}}
    raw.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return str(p)


def test_build_prints_scenario_summary(capsys):
    assert cli.main(["build", "--config", FLAT]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["family"] == "flat-torus-wave"
    assert summary["type_tag"] == 1
    assert summary["coordinates"][0] == "xi"
    assert summary["coordinates"][-1] == "eta"


def test_build_without_config_uses_defaults(capsys):
    assert cli.main(["build"]) == 0
    assert json.loads(capsys.readouterr().out)["family"] == "flat-torus-wave"


def test_verify_single_suite_writes_report(tmp_path, capsys):
    out = tmp_path / "rays.json"
    code = cli.main(["verify", "rays", "--config",
                     write_cfg(tmp_path, suites=["lemma1", "rays"]),
                     "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert [s["name"] for s in report["suites"]] == ["rays"]
    assert "rays: pass" in capsys.readouterr().out


def test_holonomy_subcommand(tmp_path):
    out = tmp_path / "hol.json"
    assert cli.main(["holonomy", "--config", FLAT, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["hol_dim"] == 3


def test_report_exit_nonzero_on_failure(tmp_path):
    cfg = write_cfg(tmp_path, suites=["lemma1"],
                    tolerances={"agreement": 1e-30})
    out = tmp_path / "r.json"
    assert cli.main(["report", "--config", cfg, "--out", str(out)]) == 1
    assert not json.loads(out.read_text())["passed"]


def test_bad_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"schema_version": 1}')
    assert cli.main(["build", "--config", str(p)]) == 2
    assert "seed" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path):
    out = tmp_path / "r.json"
    cli.main(["report", "--config", write_cfg(tmp_path, suites=["rays"]),
              "--seed", "5", "--out", str(out)])
    report = json.loads(out.read_text())
    assert report["seed"] == 5
    assert report["scenario_seed"] == 5


def test_samples_flag_overrides_counts(tmp_path):
    out = tmp_path / "r.json"
    cli.main(["report", "--config", write_cfg(tmp_path, suites=["timefn"]),
              "--samples", "9", "--out", str(out)])
    report = json.loads(out.read_text())
    assert report["suites"][0]["details"]["curves"] == 9


def test_plot_writes_svg_and_matching_csv(tmp_path):
    cfg = write_cfg(tmp_path, suites=["rays"])
    figs = tmp_path / "figs"
    with pytest.warns(UserWarning, match="diamond"):
        code = cli.main(["plot", "--config", cfg, "--out", str(figs)])
    assert code == 0
    assert (figs / "rays.svg").exists()
    with open(figs / "rays.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eta", "xi"]
    # CSV holds exactly the plotted ray: eta starts at the fit window edge
    assert float(rows[1][0]) == pytest.approx(10.0)
    assert float(rows[1][1]) == pytest.approx(10.0 ** 3 / 3.0, rel=1e-6)


def test_emit_plots_with_no_curves_warns_and_writes_nothing(tmp_path):
    with pytest.warns(UserWarning, match="nothing to plot"):
        written = plots.emit_plots({}, {}, str(tmp_path / "none"))
    assert written == []
    assert not (tmp_path / "none").exists()


def test_diamond_plot_box_matches_analytic_inequalities(tmp_path):
    import math
    from holonomylab import causality as ca
    rep = ca.causal_diamond((0.0, 0.0), (0.0, 2.0), curves=12, steps=40, seed=0)
    dump = {"diamond": {"box": {"eta": list(rep.box.eta),
                                "xi": list(rep.box.xi)},
                        "curves": [c.tolist() for c in rep.sample_curves]}}
    with pytest.warns(UserWarning, match="rays"):
        written = plots.emit_plots({}, dump, str(tmp_path))
    names = {os.path.basename(p) for p in written}
    assert names == {"diamond.svg", "diamond.csv"}
    with open(tmp_path / "diamond.csv") as fh:
        rows = [r for r in csv.reader(fh)][1:]
    box_xs = sorted({float(r[2]) for r in rows if r[0] == "box"})
    assert box_xs[0] == pytest.approx(-math.expm1(2.0), rel=1e-12)
    assert box_xs[-1] == pytest.approx(math.expm1(2.0), rel=1e-12)
    # every plotted curve point obeys the box inequalities
    for r in rows:
        if r[0] == "curve":
            assert box_xs[0] - 1e-9 <= float(r[2]) <= box_xs[-1] + 1e-9
            assert 0.0 <= float(r[3]) <= 2.0
