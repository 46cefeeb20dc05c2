import csv
import json

import numpy as np
import pytest

import switchlevy as sl
from switchlevy.cli import main
from switchlevy.data_io import save_model

from conftest import rn_regime, synthetic_price_history, write_price_csv


@pytest.fixture
def model_file(tmp_path):
    prms = (
        rn_regime(0.3, 2.5, 2.0, sl.Family.INVERSE_GAUSSIAN, 0.04),
        rn_regime(0.5, 4.0, 3.0, sl.Family.INVERSE_GAUSSIAN, 0.04),
    )
    model = sl.SwitchingModel(prms, 2.5, 1.0, sl.Family.INVERSE_GAUSSIAN, 20.0, 0.04)
    f = tmp_path / "model.json"
    save_model(model, f)
    return f, model


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestPriceCommand:
    def test_cos_prices_match_library(self, tmp_path, model_file):
        mf, model = model_file
        grid = tmp_path / "grid.csv"
        grid.write_text("maturity,strike,kind\n1.0,18,call\n1.0,22,put\n0.5,20,call\n")
        out = tmp_path / "prices.csv"
        assert main(["price", "--model", str(mf), "--grid", str(grid), "--out", str(out)]) == 0
        header, rows = _read_csv(out)
        assert header == ["maturity", "strike", "kind", "price", "method"]
        assert len(rows) == 3
        expected = sl.price_table(
            model,
            [
                sl.ContractSpec(18.0, 1.0, sl.OptionKind.CALL),
                sl.ContractSpec(22.0, 1.0, sl.OptionKind.PUT),
                sl.ContractSpec(20.0, 0.5, sl.OptionKind.CALL),
            ],
        )
        np.testing.assert_allclose([float(r[3]) for r in rows], expected, rtol=1e-12)

    def test_mc_is_seed_deterministic(self, tmp_path, model_file):
        mf, _ = model_file
        grid = tmp_path / "grid.csv"
        grid.write_text("maturity,strike,kind\n0.5,20,call\n")
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            code = main(
                ["price", "--model", str(mf), "--grid", str(grid), "--out", str(out),
                 "--method", "mc", "--paths", "5000", "--seed", "11"]
            )
            assert code == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]
        header, rows = _read_csv(tmp_path / "a.csv")
        assert header[:6] == ["maturity", "strike", "kind", "price", "method", "std_error"]
        assert float(rows[0][6]) <= float(rows[0][3]) <= float(rows[0][7])

    def test_missing_model_file_exits_2(self, tmp_path):
        grid = tmp_path / "grid.csv"
        grid.write_text("maturity,strike,kind\n1.0,20,call\n")
        code = main(["price", "--model", str(tmp_path / "nope.json"), "--grid", str(grid),
                     "--out", str(tmp_path / "o.csv")])
        assert code == 2


class TestSimulateCommand:
    def test_deterministic_and_well_formed(self, tmp_path, model_file):
        mf, _ = model_file
        texts = []
        for name in ("p1.csv", "p2.csv"):
            out = tmp_path / name
            assert main(["simulate", "--model", str(mf), "--out", str(out), "--seed", "1"]) == 0
            texts.append(out.read_text())
        assert texts[0] == texts[1]
        header, rows = _read_csv(tmp_path / "p1.csv")
        assert header == ["time", "log_price", "regime"]
        times = np.array([float(r[0]) for r in rows])
        assert times[0] == 0.0 and times[-1] == 1.0
        assert np.all(np.diff(times) > 0)
        assert {r[2] for r in rows} <= {"1", "2"}


class TestPlotCfCommand:
    def test_grid_and_unit_value_at_zero(self, tmp_path, model_file):
        mf, model = model_file
        out = tmp_path / "cf.csv"
        code = main(["plot-cf", "--model", str(mf), "--out", str(out),
                     "--umin", "-2", "--umax", "2", "--n", "5"])
        assert code == 0
        header, rows = _read_csv(out)
        assert header == ["u", "re", "im"]
        assert len(rows) == 5
        mid = rows[2]
        assert float(mid[0]) == 0.0
        assert float(mid[1]) == pytest.approx(1.0, abs=1e-12)
        assert float(mid[2]) == pytest.approx(0.0, abs=1e-12)


class TestEstimateCommand:
    def test_threshold_rule(self, tmp_path):
        dates, prices = synthetic_price_history()
        pf = tmp_path / "prices.csv"
        write_price_csv(pf, dates, prices)
        out = tmp_path / "fit.json"
        code = main(["estimate", "--prices", str(pf), "--out", str(out),
                     "--method", "mom", "--family", "gamma",
                     "--regime-rule", "threshold:0.02"])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["family"] == "gamma" and doc["method"] == "mom"
        assert len(doc["regimes"]) == 2
        assert doc["intensities"]["lambda12"] > 0
        assert doc["n_returns"]["regime1"] + doc["n_returns"]["regime2"] == len(dates) - 1

    def test_windows_rule(self, tmp_path):
        dates, prices = synthetic_price_history()
        pf = tmp_path / "prices.csv"
        write_price_csv(pf, dates, prices)
        wf = tmp_path / "windows.json"
        wf.write_text('[["2012-11-16", "2014-11-16"], ["2017-02-06", "2018-06-05"]]')
        out = tmp_path / "fit.json"
        code = main(["estimate", "--prices", str(pf), "--out", str(out),
                     "--method", "mom", "--family", "ig",
                     "--regime-rule", f"windows:{wf}"])
        assert code == 0
        doc = json.loads(out.read_text())
        b = sl.ParamBounds()
        for blk in doc["regimes"]:
            assert b.contains(sl.RegimeParams(blk["mu"], blk["sigma"], blk["alpha"], blk["beta"]))

    def test_bad_rule_exits_2(self, tmp_path):
        dates, prices = synthetic_price_history()
        pf = tmp_path / "prices.csv"
        write_price_csv(pf, dates, prices)
        code = main(["estimate", "--prices", str(pf), "--out", str(tmp_path / "o.json"),
                     "--regime-rule", "sorcery:13"])
        assert code == 2


class TestCalibrateCommand:
    def test_round_trip_json(self, tmp_path, model_file):
        mf, model = model_file
        rows = ["maturity,strike,kind,mid"]
        for t in (0.75, 1.25):
            for k in (19.0, 20.0, 21.0):
                p = sl.price_table(model, [sl.ContractSpec(k, t, sl.OptionKind.CALL)])[0]
                rows.append(f"{t},{k},call,{float(p)!r}")
        qf = tmp_path / "quotes.csv"
        qf.write_text("\n".join(rows) + "\n")
        market = tmp_path / "market.json"
        market.write_text(json.dumps({"s0": 20.0, "r": 0.04, "lambda12": 2.5, "lambda21": 1.0}))
        init = tmp_path / "init.json"
        init.write_text(json.dumps({"regimes": [
            {"mu": p.mu * 1.05, "sigma": p.sigma * 1.05, "alpha": p.alpha * 1.05, "beta": p.beta * 1.05}
            for p in model.regimes
        ]}))
        out = tmp_path / "calib.json"
        code = main(["calibrate", "--quotes", str(qf), "--market", str(market),
                     "--out", str(out), "--family", "ig", "--init", str(init),
                     "--max-iters", "40"])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["iterations"] <= 40
        assert doc["objective_rmse"] < 0.05
        assert len(doc["regimes"]) == 2

    def test_market_file_missing_fields_exits_2(self, tmp_path):
        qf = tmp_path / "quotes.csv"
        qf.write_text("maturity,strike,kind,mid\n1.0,20,call,2.0\n")
        market = tmp_path / "market.json"
        market.write_text(json.dumps({"s0": 20.0}))
        code = main(["calibrate", "--quotes", str(qf), "--market", str(market),
                     "--out", str(tmp_path / "o.json")])
        assert code == 2


class TestBsCheckCommand:
    def test_cos_column_matches_closed_form(self, capsys):
        assert main(["bs-check", "--seed", "7", "--paths", "20000"]) == 0
        lines = [
            l for l in capsys.readouterr().out.splitlines()
            if l.strip().startswith("(") and l.strip()[1].isdigit()
        ]
        assert len(lines) == 3
        for line in lines:
            cells = [c.strip() for c in line.split("|")]
            cos_price, bs_price = float(cells[1]), float(cells[2])
            assert abs(cos_price - bs_price) < 1e-3


class TestPayoffSurfaceCommand:
    def test_surface_grid(self, tmp_path, model_file):
        mf, _ = model_file
        out = tmp_path / "surface.csv"
        code = main(["payoff-surface", "--model", str(mf), "--out", str(out),
                     "--tmin", "0.5", "--tmax", "1.5", "--nt", "3",
                     "--kmin", "16", "--kmax", "24", "--nk", "5"])
        assert code == 0
        header, rows = _read_csv(out)
        assert header == ["maturity", "strike", "price"]
        assert len(rows) == 15
        # calls decrease in strike within one maturity
        by_t = {}
        for r in rows:
            by_t.setdefault(r[0], []).append(float(r[2]))
        for prices in by_t.values():
            assert all(a >= b - 1e-9 for a, b in zip(prices, prices[1:]))


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 2

    def test_missing_required_flag(self):
        assert main(["price", "--model", "m.json"]) == 2

    def test_no_arguments(self):
        assert main([]) == 2
