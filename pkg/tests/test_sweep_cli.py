import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_noma_pls.channel import SystemConfig
from irs_noma_pls.cli import main, parse_values
from irs_noma_pls.montecarlo import THREADS_ENV
from irs_noma_pls.sweep import (
    Axis,
    ConfigError,
    MetricTable,
    apply_overrides,
    config_text,
    figure_preset,
    noise_dbm,
    parse_config,
    parse_config_text,
    rerun_from_metadata,
    run_sweep,
)


# ---------------------------------------------------------------- config files


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    assert parse_config(p) == SystemConfig()


def test_comments_aliases_and_units():
    cfg = parse_config_text(
        """
        # geometry
        dB1 = 25     # metres
        alphaE=3.0
        rate_target_bps=100000, bandwidth_hz=1e6
        N=4
        """
    )
    assert cfg.d_B1 == 25.0 and cfg.alpha_E == 3.0 and cfg.N == 4
    assert cfg.R1 == pytest.approx(0.1) and cfg.R2 == pytest.approx(0.1)


def test_power_in_dbm():
    cfg = parse_config_text("tx_power_dbm=30\nbandwidth_hz=1e6\neve_tx_power_dbm=0")
    assert noise_dbm(1e6) == pytest.approx(-114.0)
    assert cfg.rho_db == pytest.approx(144.0)
    assert cfg.rho_e_db == pytest.approx(114.0)


def test_a1_alone_violates_ordering():
    with pytest.raises(ConfigError, match="a1 < a2"):
        parse_config_text("a1=0.6")
    assert parse_config_text("a1=0.3").a2 == pytest.approx(0.7)


def test_parse_errors_report_line():
    with pytest.raises(ConfigError) as e:
        parse_config_text("N=2\nthis line is wrong\n")
    assert e.value.line == 2
    with pytest.raises(ConfigError) as e:
        parse_config_text("\n\nbogus_key=1")
    assert e.value.line == 3
    with pytest.raises(ConfigError) as e:
        parse_config_text("N=2.5")
    assert e.value.line == 1
    with pytest.raises(ConfigError):
        parse_config_text("rho_db=abc")


def test_overrides():
    cfg = apply_overrides(SystemConfig(), ["N=7", "rho_db=55"])
    assert (cfg.N, cfg.rho_db) == (7, 55.0)
    with pytest.raises(ConfigError):
        apply_overrides(SystemConfig(), ["N"])


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 200),
    st.floats(0.01, 0.49),
    st.floats(-50, 200),
    st.floats(0.5, 8),
    st.floats(2.0, 6.0),
)
def test_config_text_round_trip(N, a1, rho_db, m2, alpha):
    cfg = SystemConfig(N=N, a1=a1, a2=1 - a1, rho_db=rho_db, m2=m2, alpha_E=alpha)
    assert parse_config_text(config_text(cfg)) == cfg


# ---------------------------------------------------------------- sweeps and tables


def test_single_value_sweep():
    t = run_sweep(SystemConfig(), Axis.RHO_DB, [30.0], {"sop1"})
    assert t.n_rows == 1
    assert list(t.columns) == ["sop1:ClosedForm"]


def test_fig2_style_sweep_with_mc():
    for N in (1, 3):
        t = run_sweep(SystemConfig(N=N), "rho_db", [0, 5, 10, 15, 20, 25, 30, 35, 40], {"sop1"}, 20_000, 1)
        assert t.axis_values == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
        assert list(t.columns) == ["sop1:ClosedForm", "sop1:MC", "sop1:MC_se"]
        for col in t.columns.values():
            assert len(col) == t.n_rows


def test_N_axis_sweep():
    t = run_sweep(SystemConfig(rho_db=60, rho_e_db=60), Axis.N, range(1, 65), {"sop1", "sop2"})
    assert t.axis_values == list(range(1, 65))
    sop1 = t.column("sop1:ClosedForm")
    assert all(b >= a for a, b in zip(sop1, sop1[1:]))


def test_all_metrics_columns():
    t = run_sweep(SystemConfig(N=2), Axis.RHO_E_DB, [0, 20], set(
        ["sop1", "sop2", "sop_net", "asc1", "asc2", "rates", "asymptotes", "floors", "oma"]), 5_000, 2)
    for name in ("sop2:HighSNR", "sop_net:ClosedForm", "rate_E2:Quadrature", "asc2_ceiling:Jensen",
                 "sop1_floor:ClosedForm", "oma_asc2:MC_se", "rate_B1:MC"):
        assert name in t.columns


def test_sweep_input_errors():
    with pytest.raises(ValueError):
        run_sweep(SystemConfig(), Axis.RHO_DB, [], {"sop1"})
    with pytest.raises(ValueError):
        run_sweep(SystemConfig(), Axis.RHO_DB, [20, 10], {"sop1"})
    with pytest.raises(ValueError):
        run_sweep(SystemConfig(), Axis.RHO_DB, [10], {"bogus"})
    with pytest.raises(ValueError):
        run_sweep(SystemConfig(), Axis.RHO_DB, [10], {"oma"})


def test_table_column_length_check():
    with pytest.raises(ValueError):
        MetricTable("x", [1, 2], {"a": [1.0]})


def test_csv_is_rfc4180_and_stable():
    t = run_sweep(SystemConfig(), Axis.RHO_DB, [10, 20], {"sop1", "asc1"}, 4_000, 3)
    text = t.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["rho_db", "sop1:ClosedForm", "asc1:Quadrature", "sop1:MC", "sop1:MC_se", "asc1:MC", "asc1:MC_se"]
    assert len(rows) == 3
    assert text == run_sweep(SystemConfig(), Axis.RHO_DB, [10, 20], {"asc1", "sop1"}, 4_000, 3).to_csv()
    # cells are shortest round-trip floats
    assert float(rows[1][1]) == t.columns["sop1:ClosedForm"][0]


def test_metadata_round_trip_bit_identical():
    cfg = SystemConfig(N=3, rho_e_db=17.3, m1=2.2)
    t = run_sweep(cfg, Axis.RHO_DB, [40, 55.5, 70], {"sop1", "sop2", "asc2"}, 10_000, 99, "MeanEve", tie_eve=True)
    again = rerun_from_metadata(t.metadata_text())
    assert again.to_csv() == t.to_csv()
    assert again.columns == t.columns
    assert parse_config_text(t.metadata_text()) == cfg


def test_preset_round_trip():
    t = figure_preset("fig2", overrides=["R1=0.2"], mc_trials=5_000, seed=5)
    assert rerun_from_metadata(t.metadata_text()).to_csv() == t.to_csv()


# ---------------------------------------------------------------- presets


def test_fig4_columns_and_groups():
    t = figure_preset("fig4")
    assert t.group_name == "N" and sorted(set(t.group_values)) == [1, 3]
    for name in ("sop1:ClosedForm", "sop2:LowSNR", "sop2:HighSNR", "sop1:Asymptotic", "sop2:Asymptotic"):
        assert name in t.columns


def test_fig4_fixes_eve_snr():
    t = figure_preset("fig4", SystemConfig(rho_e_db=50.0))
    ref = run_sweep(SystemConfig(N=1, rho_e_db=10.0), Axis.RHO_DB, [40.0], {"sop1"})
    assert t.columns["sop1:ClosedForm"][0] == ref.columns["sop1:ClosedForm"][0]


def test_fig6_columns():
    t = figure_preset("fig6")
    assert list(t.columns) == [
        "asc1:Quadrature",
        "asc2:Quadrature",
        "asc2:Jensen",
        "asc1:Asymptotic",
        "asc2_ceiling:Quadrature",
        "asc2_ceiling:Jensen",
    ]
    assert t.group_name is None


def test_fig2_override_N_keeps_shape():
    base = figure_preset("fig2", mc_trials=2_000, seed=1)
    five = figure_preset("fig2", overrides=["N=5"], mc_trials=2_000, seed=1)
    assert list(five.columns) == list(base.columns)
    assert set(five.group_values) == {5}
    assert five.n_rows == base.n_rows // 2


def test_fig8_grid():
    t = figure_preset("fig8", overrides=["u1=40", "u2=40"])
    assert t.group_name == "N" and t.axis_name == "rho_db"
    assert t.n_rows == len(set(t.group_values)) * len(set(t.axis_values))


def test_unknown_preset():
    with pytest.raises(ValueError):
        figure_preset("fig7")


# ---------------------------------------------------------------- CLI


def test_parse_values():
    assert parse_values("0:40:5") == [0, 5, 10, 15, 20, 25, 30, 35, 40]
    assert parse_values("1,3,10") == [1.0, 3.0, 10.0]
    with pytest.raises(ConfigError):
        parse_values("0:10")


def test_cli_stats(capsys):
    assert main(["stats", "--override", "N=3"]) == 0
    out = capsys.readouterr().out
    assert "eps (user 2)" in out and "diversity user 2" in out
    assert "3" in out.split("diversity user 2")[1].splitlines()[0]


def test_cli_sweep_to_file(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--values", "0:40:10", "--metrics", "sop1,asc1", "--out", str(out), "--plot-script"])
    assert code == 0
    assert out.read_text().startswith("rho_db,sop1:ClosedForm")
    assert (tmp_path / "s.csv.meta").exists() and (tmp_path / "s.csv.plot.py").exists()


def test_cli_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("a1=0.6\n")
    assert main(["stats", "--config", str(bad)]) == 2
    assert main(["stats", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["sweep", "--values", "10", "--metrics", "nope"]) == 2
    assert main(["figure", "fig7"]) == 2
    assert main(["stats", "--override", "N=0"]) == 2


def test_cli_mc(capsys):
    assert main(["mc", "--trials", "20000", "--seed", "3"]) == 0
    assert "sop1" in capsys.readouterr().out


def test_cli_figure_deterministic_across_threads(tmp_path, monkeypatch):
    outs = []
    for i, threads in enumerate(("1", "4")):
        monkeypatch.setenv(THREADS_ENV, threads)
        path = tmp_path / f"f{i}.csv"
        assert main(["figure", "fig2", "--seed", "42", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_cli_validate_exit_codes(capsys):
    assert main(["validate", "--only", "1,9"]) == 0
    assert main(["validate", "--only", "6"]) == 1
    out = capsys.readouterr().out
    assert "[PASS] C01" in out and "[FAIL] C06" in out


def test_validate_catches_broken_moment():
    from irs_noma_pls.acceptance import Budget, Hooks, validate_report
    from irs_noma_pls.channel import expected_gain_squared

    broken = Hooks(expected_gain_squared=lambda p, n: expected_gain_squared(p, n) * 1.01)
    status, text, results = validate_report(Budget.QUICK, broken, only=[1, 2])
    assert status != 0
    assert "[FAIL] C01" in text and "[FAIL] C02" in text
    status, _, _ = validate_report(Budget.QUICK, only=[1, 2])
    assert status == 0
