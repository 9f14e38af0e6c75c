import csv
import json

import numpy as np
import pytest
import yaml

from bitrade import __version__
from bitrade.cli import (PORTRAIT_COLUMNS, SWEEP_COLUMNS, TRAJECTORY_COLUMNS, fmt, main,
                         parse_config)
from bitrade.equilibrium import is_fixed_point, lemma_violations
from bitrade.errors import ConfigError
from bitrade.model import ModelParams, PriceState, StrategyProfile
from bitrade.zones import NONDEGENERATE_ZONES

P_III = {"Y1": 4, "Y2": 6, "q1": 2, "q2": 3, "rho": 0.5}
P_II2 = {"Y1": 2, "Y2": 4, "q1": 2, "q2": 3, "rho": 0.5}


def _run(tmp_path, mode, doc, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    out = tmp_path / "out"
    code = main([mode, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestGoldenHeaders:
    def test_trajectory(self, tmp_path):
        _, out = _run(tmp_path, "discrete", {"params": P_II2, "initial_prices": {"p1": 2, "p2": 1}})
        assert _rows(out / "trajectory.csv")[0] == ["t", "p1", "p2", "alpha", "beta", "gamma",
                                                    "delta", "zone", "event"]
        assert TRAJECTORY_COLUMNS == tuple(_rows(out / "trajectory.csv")[0])

    def test_portrait(self):
        assert PORTRAIT_COLUMNS == ("p1", "p2", "f1", "f2", "zone")

    def test_sweep(self):
        assert SWEEP_COLUMNS[:8] == ("index", "Y1", "Y2", "q1", "q2", "rho", "p1", "p2")


def test_equilibrium_zone_iii(tmp_path):
    code, out = _run(tmp_path, "equilibrium",
                     {"params": P_III, "initial_prices": {"p1": 1, "p2": 1}})
    s = _summary(out)
    assert code == 0
    assert s["profile"] == [2, 0, 0, 3]
    assert s["zone"] == "III"
    assert s["version"] == __version__
    assert s["config"]["params"]["Y1"] == 4


def test_discrete_degenerate_l4(tmp_path):
    code, out = _run(tmp_path, "discrete", {"params": P_II2, "initial_prices": {"p1": 2, "p2": 1}})
    s = _summary(out)
    assert code == 0
    assert s["class"] == "DegenerateL4"
    assert s["k"] == pytest.approx(1.3660254, abs=1e-7)


def test_ode_portrait(tmp_path):
    doc = {"params": P_II2, "initial_prices": {"p1": 2, "p2": 1},
           "options": {"horizon": 1.0, "dt": 0.01},
           "portrait": {"p1_min": 0.1, "p1_max": 3, "p2_min": 0.1, "p2_max": 3, "n1": 50, "n2": 50}}
    code, out = _run(tmp_path, "ode", doc)
    assert code == 0
    rows = _rows(out / "portrait.csv")
    assert len(rows) == 2501
    data = rows[1:]
    # rows with a table field carry finite numbers and a zone label
    assert all(np.isfinite(float(r[2])) and np.isfinite(float(r[3])) for r in data)
    assert {r[4] for r in data} >= {"III", "II-2"}


def test_floats_have_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3


class TestExitCodes:
    def test_config_error(self, tmp_path):
        code, _ = _run(tmp_path, "equilibrium",
                       {"params": P_III, "initial_prices": {"p1": 1, "p2": 1}, "bogus": 1})
        assert code == 2

    def test_missing_prices(self, tmp_path):
        code, _ = _run(tmp_path, "zones", {"params": P_III})
        assert code == 2

    def test_orientation(self, tmp_path):
        code, _ = _run(tmp_path, "zones", {"params": {"Y1": 1, "Y2": 1, "q1": 2, "q2": 3, "rho": 0.5},
                                           "initial_prices": {"p1": 1, "p2": 1}})
        assert code == 3

    def test_unresolved(self, tmp_path):
        doc = {"params": {"Y1": 3.6, "Y2": 1.8, "q1": 0.5, "q2": 4.9, "rho": 0.5},
               "initial_prices": {"p1": 1.3, "p2": 1.3}, "options": {"max_steps": 1}}
        code, out = _run(tmp_path, "discrete", doc)
        assert code == 4
        assert _summary(out)["class"] == "Unresolved"


class TestParseConfig:
    def test_unknown_option(self):
        with pytest.raises(ConfigError):
            parse_config({"mode": "ode", "params": P_III, "initial_prices": {"p1": 1, "p2": 1},
                          "options": {"stepsize": 1}})

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            parse_config({"mode": "ode", "params": {**P_III, "rho": -1},
                          "initial_prices": {"p1": 1, "p2": 1}})

    def test_seed_override(self):
        cfg = parse_config({"mode": "sde", "params": P_III, "initial_prices": {"p1": 1, "p2": 1}},
                           seed=9)
        assert cfg.options["seed"] == 9

    def test_sweep_limits(self):
        with pytest.raises(ConfigError):
            parse_config({"mode": "sweep", "sweep": {"draws": 10**6 + 1}})
        with pytest.raises(ConfigError):
            parse_config({"mode": "sweep", "sweep": {"ranges": {"Y1": [2, 1]}}})


def test_sde_seed_changes_path(tmp_path):
    doc = {"params": P_III, "initial_prices": {"p1": 1, "p2": 1},
           "options": {"sigma": [0.05, 0.05], "dt": 0.01, "horizon": 2.0}}
    _, a = _run(tmp_path / "a", "sde", doc, "--seed", "1")
    _, b = _run(tmp_path / "b", "sde", doc, "--seed", "1")
    _, c = _run(tmp_path / "c", "sde", doc, "--seed", "2")
    ta, tb, tc = ((x / "trajectory.csv").read_bytes() for x in (a, b, c))
    assert ta == tb != tc


class TestSweep:
    def test_deterministic_across_thread_counts(self, tmp_path, monkeypatch):
        doc = {"sweep": {"draws": 300}, "options": {"seed": 5}}
        monkeypatch.setenv("BITRADE_THREADS", "1")
        _, a = _run(tmp_path / "a", "sweep", doc)
        monkeypatch.setenv("BITRADE_THREADS", "4")
        _, b = _run(tmp_path / "b", "sweep", doc)
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()

    def test_zero_width_ranges(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BITRADE_THREADS", "1")
        point = {"Y1": 4, "Y2": 6, "q1": 2, "q2": 3, "rho": 0.5, "p1": 1, "p2": 1}
        doc = {"sweep": {"draws": 20, "ranges": {k: [v, v] for k, v in point.items()}}}
        code, out = _run(tmp_path, "sweep", doc)
        rows = _rows(out / "sweep.csv")[1:]
        assert code == 0 and len(rows) == 20
        assert len({tuple(r[1:]) for r in rows}) == 1

    def test_stratification(self, tmp_path):
        code, out = _run(tmp_path, "sweep", {"sweep": {"draws": 10_000}})
        counts = _summary(out)["zone_counts"]
        assert all(counts.get(str(z), 0) >= 50 for z in NONDEGENERATE_ZONES)

    def test_round_trip(self, tmp_path):
        code, out = _run(tmp_path, "sweep", {"sweep": {"draws": 500}, "options": {"seed": 2}})
        s = _summary(out)
        assert s["fixed_point_failures"] == 0 and s["lemma_failures"] == 0
        # re-validate every reported equilibrium from the serialized text
        for r in _rows(out / "sweep.csv")[1:]:
            Y1, Y2, q1, q2, rho, p1, p2 = map(float, r[1:8])
            prof = StrategyProfile(*map(float, r[10:14]))
            params, prices = ModelParams(Y1, Y2, q1, q2, rho), PriceState(p1, p2)
            assert is_fixed_point(prof, prices, params)
            assert lemma_violations(prof, prices, params) == []
