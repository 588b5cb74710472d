import csv
import datetime as dt
import hashlib
import textwrap

import numpy as np
import pytest

from hybridload.cli import ConfigError, load_config, main
from hybridload.fileio import read_forecast_csv, read_load_csv, write_forecast_csv
from hybridload.pipeline import ForecastResult


def _write_config(d, scenario="years = 3\nseed = 7", start="1998-03-02", end="1998-03-11",
                  extra=""):
    text = textwrap.dedent(f"""\
        [paths]
        load_csv = data/load.csv
        weather_csv = data/weather.csv
        holidays = data/holidays.txt
        model_store = out/store.json
        output_dir = out

        [model]
        variant = H2
        cadence = per-week
        {extra}
        [evaluation]
        start = {start}
        end = {end}
        horizon = 1

        [scenario]
        """) + scenario + "\n"
    p = d / "run.ini"
    p.write_text(text)
    return p


def _sha(p):
    return hashlib.sha256(p.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = _write_config(d)
    for cmd in ("simulate", "fit", "forecast"):
        assert main([cmd, str(cfg)]) == 0
    return d, cfg


def test_simulate_row_count(tmp_path):
    cfg = _write_config(tmp_path, scenario="years = 2\nseed = 3")
    assert main(["simulate", str(cfg)]) == 0
    lines = (tmp_path / "data/load.csv").read_text().splitlines()
    assert len(lines) == 1 + (366 + 365) * 48
    assert (tmp_path / "out/truth.json").exists()
    first = _sha(tmp_path / "data/load.csv")
    assert main(["simulate", str(cfg)]) == 0
    assert _sha(tmp_path / "data/load.csv") == first
    assert main(["simulate", str(cfg), "--seed", "4"]) == 0
    assert _sha(tmp_path / "data/load.csv") != first


def test_missing_seed_names_field(tmp_path, capsys):
    cfg = _write_config(tmp_path, scenario="years = 2")
    assert main(["simulate", str(cfg)]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_key_reports_line(tmp_path):
    cfg = _write_config(tmp_path, extra="colour = blue\n")
    with pytest.raises(ConfigError, match=r"run\.ini:11: unknown key 'colour'"):
        load_config(cfg)


def test_bad_values_rejected(tmp_path):
    for extra, msg in (("d = many\n", "cannot parse"), ("cadence = hourly\n", "cadence"),
                       ("variant = H9\n", "variant")):
        cfg = _write_config(tmp_path, extra=extra)
        with pytest.raises(ConfigError, match=msg):
            load_config(cfg)


def test_overrides_apply(tmp_path):
    cfg = load_config(_write_config(tmp_path), {"variant": "H4", "horizon": 2, "workers": None})
    assert cfg.variant == "H4" and cfg.horizon == 2 and cfg.workers == 1
    assert cfg.load_csv == tmp_path / "data/load.csv"


def test_missing_input_file(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["fit", str(cfg)]) == 2
    assert "load_csv: file not found" in capsys.readouterr().err


def test_insufficient_history(tmp_path, capsys):
    cfg = _write_config(tmp_path, scenario="years = 3\nseed = 7", start="1997-03-03",
                        end="1997-03-05")
    assert main(["simulate", str(cfg)]) == 0
    assert main(["fit", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "730 days of history" in err


def test_forecast_rows_per_kind(run):
    d, _ = run
    rows = list(csv.DictReader((d / "out/forecast.csv").open()))
    kinds = {}
    for r in rows:
        kinds[r["kind"]] = kinds.get(r["kind"], 0) + 1
    assert kinds["hybrid"] == kinds["baseline"] == 480
    # the oracle needs a fitted pair model: exactly the days without a fallback
    fitted = {r["date"] for r in rows if r["kind"] == "hybrid" and "fallback" not in r["flags"]}
    assert {r["date"] for r in rows if r["kind"] == "oracle"} == fitted
    assert kinds["oracle"] == 48 * len(fitted)
    dates = sorted({r["date"] for r in rows})
    assert dates[0] == "1998-03-02" and dates[-1] == "1998-03-11"


def test_audit_clean(run, capsys):
    d, cfg = run
    assert main(["audit", str(cfg)]) == 0
    assert "violations: 0" in capsys.readouterr().out


def test_forecast_deterministic(run):
    d, cfg = run
    before = _sha(d / "out/forecast.csv")
    assert main(["fit", str(cfg)]) == 0
    assert main(["forecast", str(cfg)]) == 0
    assert _sha(d / "out/forecast.csv") == before


def test_variant_mismatch(run, capsys):
    d, cfg = run
    assert main(["forecast", str(cfg), "--variant", "H4"]) == 2
    assert "fitted for H2" in capsys.readouterr().err


def test_evaluate_outputs(run, tmp_path):
    d, _ = run
    assert main(["evaluate", str(d / "out/forecast.csv"), str(d / "data/load.csv"),
                 "-o", str(tmp_path / "ev")]) == 0
    for name in ("overall.csv", "by_month.csv", "by_day_type.csv", "per_day.csv", "report.txt"):
        assert (tmp_path / "ev" / name).exists()
    overall = list(csv.DictReader((tmp_path / "ev/overall.csv").open()))
    assert [r["kind"] for r in overall] == ["hybrid", "oracle", "baseline"]
    days = {r["kind"]: int(r["days"]) for r in overall}
    assert days["hybrid"] == days["baseline"] == 10 and 0 < days["oracle"] <= 10


def test_evaluate_perfect_forecast_is_zero(run, tmp_path):
    d, _ = run
    series = read_load_csv(d / "data/load.csv")
    days = [dt.date(1998, 3, 2) + dt.timedelta(days=k) for k in range(5)]
    res = [ForecastResult(x, series.day(x), 0.0, series.day(x), np.zeros(48), "hybrid", 1, 1)
           for x in days]
    write_forecast_csv(tmp_path / "f.csv", res)
    assert main(["evaluate", str(tmp_path / "f.csv"), str(d / "data/load.csv"),
                 "-o", str(tmp_path / "ev")]) == 0
    row = next(csv.DictReader((tmp_path / "ev/overall.csv").open()))
    assert float(row["mape"]) == 0.0 and float(row["rmse_mw"]) < 1e-5


def test_evaluate_misaligned(run, tmp_path, capsys):
    d, _ = run
    res = [ForecastResult(dt.date(2010, 1, 4), np.ones(48), 0.0, np.ones(48), np.zeros(48),
                          "hybrid", 1, 1)]
    write_forecast_csv(tmp_path / "f.csv", res)
    assert main(["evaluate", str(tmp_path / "f.csv"), str(d / "data/load.csv")]) == 2
    assert "2010-01-04" in capsys.readouterr().err
    assert read_forecast_csv(tmp_path / "f.csv")[0].date == dt.date(2010, 1, 4)


def test_inline_comments_allowed(tmp_path):
    cfg = _write_config(tmp_path)
    text = cfg.read_text().replace("variant = H2", "preset = trend1   ; simpler trend\nK = 8 # fewer")
    cfg.write_text(text)
    c = load_config(cfg)
    assert c.preset == "trend1" and c.K == 8
