"""Configuration parsing, experiment runners and the command-line interface."""
import csv
import json
import os
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavelab.cli import main
from wavelab.config import ConfigError, parse_config
from wavelab.data import make_data
from wavelab.experiments import (
    Divergence,
    Refusal,
    classify_trend,
    fit_log_lifespan,
    run_experiment,
)
from wavelab.linear import StrichartzQuery, estimate_strichartz_ratio
from wavelab.timestepper import EvolveConfig, evolve

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def base(**over):
    d = {
        "experiment": "picard_contraction",
        "grid": {"n": 1, "points_per_axis": 64, "period": 40.0},
        "nonlinearity": "k = 5\nn = 1\nalpha = (5, 0), coeff = 1.0\n",
        "profile": {"shape": "gaussian", "width": 1.0, "u0_weight": 1.0, "u1_weight": 1.0},
        "s": 1.25,
        "q": 4,
        "T": 1.0,
        "steps": 16,
        "eps": [0.1, 0.3],
        "override_gate": True,
    }
    d.update(over)
    return d


def cfg_of(**over):
    return parse_config(json.dumps(base(**over)))


def read_rows(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def header_lines(path):
    with open(path) as fh:
        return [line.rstrip("\n") for line in fh if line.startswith("#")]


class TestParse:
    def test_syntax_error_location(self):
        with pytest.raises(ConfigError) as err:
            parse_config('{\n  "experiment": "picard_contraction",\n  "grid": }\n')
        assert (err.value.line, err.value.column) == (3, 11)

    def test_schema_error_location(self):
        text = json.dumps(base(steps="many"), indent=2)
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert "steps" in str(err.value)
        assert text.splitlines()[err.value.line - 1].strip().startswith('"steps"')

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            cfg_of(bogus=1)

    def test_bad_nonlinearity_text(self):
        with pytest.raises(ConfigError, match="nonlinearity"):
            cfg_of(nonlinearity="k = 2\nn = 1\nalpha = oops\n")

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="n=2"):
            cfg_of(grid={"n": 2, "points_per_axis": 8, "period": 40.0})

    def test_round_trip(self):
        cfg = cfg_of()
        assert parse_config(cfg.to_json()) == cfg

    @settings(max_examples=25, deadline=None)
    @given(
        eps=st.lists(st.floats(0, 10), max_size=4),
        seed=st.integers(0, 2**31),
        s=st.floats(0.5, 3.0),
        width=st.floats(0.1, 2.0),
    )
    def test_round_trip_property(self, eps, seed, s, width):
        cfg = cfg_of(eps=eps, seed=seed, s=s, profile={"shape": "bump", "width": width, "radial": True})
        again = parse_config(cfg.to_json())
        assert again == cfg
        assert again.digest() == cfg.digest()

    def test_shipped_configs_parse(self):
        names = sorted(os.listdir(CONFIGS))
        assert len(names) >= 5
        for name in names:
            with open(os.path.join(CONFIGS, name)) as fh:
                parse_config(fh.read())


class TestPicardRunner:
    def test_zero_eps_trivial(self, tmp_path):
        report = run_experiment(cfg_of(eps=[0.0]), str(tmp_path))
        rows = read_rows(tmp_path / "summary.csv")
        assert rows[0]["converged_at"] == "1"
        trace = read_rows(tmp_path / "trace_000.csv")
        assert all(float(r["diff_norm"]) == 0.0 for r in trace)
        assert report.summary["worst_ratio_below_eps0"] == 0.0

    def test_zero_nonlinearity(self, tmp_path):
        run_experiment(cfg_of(nonlinearity="k = 5\nn = 1\n"), str(tmp_path))
        assert {r["converged_at"] for r in read_rows(tmp_path / "summary.csv")} == {"1"}

    def test_gate_refusal_without_override(self, tmp_path):
        with pytest.raises(Refusal, match="gate"):
            run_experiment(cfg_of(override_gate=False), str(tmp_path))

    def test_single_run_divergence(self, tmp_path):
        with pytest.raises(Divergence):
            run_experiment(cfg_of(eps=[1e6], m_max=20), str(tmp_path))

    def test_sweep_keeps_going_after_divergence(self, tmp_path):
        run_experiment(cfg_of(eps=[0.1, 1e6], m_max=20), str(tmp_path))
        rows = read_rows(tmp_path / "summary.csv")
        assert rows[1]["stop_reason"].startswith("diverged")

    def test_header(self, tmp_path):
        cfg = cfg_of(eps=[0.1])
        run_experiment(cfg, str(tmp_path))
        head = header_lines(tmp_path / "summary.csv")
        assert head[0] == "# wavelab-csv v1 picard_contraction"
        assert head[1] == f"# config_sha256={cfg.digest()}"
        assert "# override_gate=true" in head
        assert any(line.startswith("# validity_horizon=") for line in head)
        assert any("outside all theorem hypotheses" in line for line in head)


class TestLifespanRunner:
    def test_linear_3d_inconclusive(self, tmp_path):
        cfg = cfg_of(
            experiment="lifespan_sweep",
            grid={"n": 3, "points_per_axis": 8, "period": 24.0},
            nonlinearity="k = 3\nn = 3\n",
            profile={"shape": "bump", "width": 4.0},
            s=2.1, eps=[0.5, 0.4], dt=0.1, T_max=1.0,
        )
        report = run_experiment(cfg, str(tmp_path))
        rows = read_rows(tmp_path / "lifespan.csv")
        assert all(float(r["T_star"]) == 1.0 for r in rows)
        assert report.summary["fit"]["status"] == "inconclusive"

    def test_fit_disabled_off_3_3(self, tmp_path):
        with open(os.path.join(CONFIGS, "riccati_k3.json")) as fh:
            cfg = parse_config(fh.read())
        report = run_experiment(cfg, str(tmp_path))
        assert report.summary["fit"]["status"] == "disabled"

    def test_fit_sign(self):
        eps = [0.9, 0.7, 0.5]
        T = [np.exp(0.3 / e**2) for e in eps]
        fit = fit_log_lifespan(eps, T, ["blowup"] * 3)
        assert fit["sign"] == "positive"
        assert fit["slope"] == pytest.approx(0.3)
        assert fit_log_lifespan(eps, T, ["blowup", "hit_horizon", "hit_horizon"])["status"] == "inconclusive"


class TestStrichartzRunner:
    def strichartz(self, **over):
        d = dict(
            experiment="strichartz_ensemble",
            grid={"n": 2, "points_per_axis": 16, "period": 24.0},
            nonlinearity="k = 3\nn = 2\n",
            profile={"shape": "gaussian", "width": 1.0, "radial": True},
            s=2.0, q=4, T=2.0, steps=8, override_gate=False,
        )
        d.update(over)
        return cfg_of(**d)

    def test_single_datum_matches_estimate(self, tmp_path):
        cfg = self.strichartz(n_seeds=1, seed=5)
        report = run_experiment(cfg, str(tmp_path))
        data = make_data(replace(cfg.profile, seed=5), cfg.grid, 1.0, cfg.s)
        expected = estimate_strichartz_ratio(data, StrichartzQuery.uniform(4, 2.0, 2.0, 8))
        assert report.summary["ratios"] == [expected]

    def test_running_max_monotone(self, tmp_path):
        run_experiment(self.strichartz(n_seeds=5), str(tmp_path))
        running = [float(r["running_max"]) for r in read_rows(tmp_path / "ratios.csv")]
        assert running == sorted(running)

    def test_radial_range_refusals(self, tmp_path):
        with pytest.raises(Refusal):
            run_experiment(self.strichartz(q=1.9), str(tmp_path))
        with pytest.raises(Refusal):
            run_experiment(self.strichartz(q=2), str(tmp_path))
        run_experiment(self.strichartz(q=2.1, n_seeds=1), str(tmp_path))


class TestRadialRunner:
    def radial(self, **over):
        d = dict(
            experiment="radial_compare",
            grid={"n": 2, "points_per_axis": 32, "period": 32.0},
            nonlinearity="k = 4\nn = 2\nalpha = (4, 0, 0), coeff = 1.0\n",
            profile={"shape": "gaussian", "width": 1.0, "radial": True},
            eps=[0.05], dt=0.05, T_max=1.0, override_gate=False,
        )
        d.update(over)
        return cfg_of(**d)

    def test_non_radial_refused_with_witness(self, tmp_path):
        cfg = self.radial(nonlinearity="k = 2\nn = 2\nalpha = (0, 2, 0), coeff = 1.0\n")
        with pytest.raises(Refusal, match="witness"):
            run_experiment(cfg, str(tmp_path))

    def test_zero_data_flat(self, tmp_path):
        run_experiment(self.radial(eps=[0.0]), str(tmp_path))
        hist = read_rows(tmp_path / "history_000.csv")
        assert {float(r["sup"]) for r in hist} == {0.0}

    def test_small_data_bounded(self, tmp_path):
        report = run_experiment(self.radial(), str(tmp_path))
        assert report.summary["rows"][0][-1] is True
        assert report.summary["s"] == pytest.approx(5 / 3)


class TestIllposednessRunner:
    def probe(self, **over):
        d = dict(
            experiment="illposedness_probe",
            grid={"n": 1, "points_per_axis": 512, "period": 32.0},
            nonlinearity="k = 5\nn = 1\nalpha = (5, 0), coeff = 100.0\n",
            profile={"shape": "gaussian", "width": 1.0, "u0_weight": 0.0, "u1_weight": 1.0},
            s_list=[0.75, 1.75], j=[0, 1], dt=0.002, T_max=0.05,
        )
        d.update(over)
        return cfg_of(**d)

    def test_linear_is_vacuous(self, tmp_path):
        report = run_experiment(self.probe(nonlinearity="k = 5\nn = 1\n"), str(tmp_path))
        assert report.summary["verdict"] == "vacuous"
        assert all(r[5] == 0.05 for r in report.summary["rows"])

    def test_must_straddle(self, tmp_path):
        with pytest.raises(Refusal, match="straddle"):
            run_experiment(self.probe(s_list=[0.5, 0.75]), str(tmp_path))

    def test_under_resolved_skipped(self, tmp_path):
        report = run_experiment(self.probe(j=[0, 5]), str(tmp_path))
        assert {r[1] for r in report.summary["rows"]} == {0}

    def test_j0_matches_plain_run(self, tmp_path):
        cfg = self.probe(j=[0])
        report = run_experiment(cfg, str(tmp_path))
        data = make_data(cfg.profile, cfg.grid, 1.0, 0.75)
        _, rec = evolve(data, cfg.nonlinearity, EvolveConfig(dt=0.002, T_max=0.05, horizon=16 - 8.029), s=0.75)
        assert report.summary["rows"][0][5] == rec.T_star

    def test_classify_trend(self):
        assert classify_trend([1.0, 0.5, 0.2], ["blowup"] * 3, below=True) == "decreasing"
        assert classify_trend([1.0, 1.0], ["blowup"] * 2, below=True) == "violated"
        assert classify_trend([0.1, 1.0], ["blowup", "survived_to_Tmax"], below=False) == "non_decreasing"
        assert classify_trend([1.0, 1.0], ["hit_horizon"] * 2, below=False) == "horizon_limited"


class TestCli:
    def test_gate(self, capsys):
        assert main(["gate", "--n", "3", "--k", "3", "--s", "2.1"]) == 0
        assert "almost_global_3_3" in capsys.readouterr().out

    def test_radial_check(self, capsys):
        assert main(["radial-check", "--spec-text", "k = 2\nn = 2\nalpha = (0, 2, 0), coeff = 1\n"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("not radial") and "witness" in out
        assert main(["radial-check", "--spec-text", "k = 2\nn = 2\nalpha = (2, 0, 0), coeff = 1\n"]) == 0
        assert capsys.readouterr().out.strip() == "radial"

    def test_radial_check_bad_spec(self):
        assert main(["radial-check", "--spec-text", "nonsense"]) == 1

    def write(self, tmp_path, d):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(d))
        return str(path)

    def test_exit_codes(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["picard-contraction", "--config", self.write(tmp_path, base(eps=[0.1])), "--out", out]) == 0
        assert main(["lifespan-sweep", "--config", self.write(tmp_path, base()), "--out", out]) == 1
        assert main(["picard-contraction", "--config", self.write(tmp_path, {"grid": 1}), "--out", out]) == 1
        refused = base(eps=[0.1], override_gate=False)
        assert main(["picard-contraction", "--config", self.write(tmp_path, refused), "--out", out]) == 2
        assert main(["picard-contraction", "--config", self.write(tmp_path, refused), "--out", out,
                     "--override-gate"]) == 0
        diverging = base(eps=[1e6], m_max=20)
        assert main(["picard-contraction", "--config", self.write(tmp_path, diverging), "--out", out]) == 3

    def test_seed_flag_stamped(self, tmp_path):
        out = tmp_path / "out"
        main(["picard-contraction", "--config", self.write(tmp_path, base(eps=[0.1])), "--out", str(out),
              "--seed", "42"])
        assert "# seed=42" in header_lines(out / "summary.csv")

    def test_threads_match_serial(self, tmp_path):
        path = self.write(tmp_path, base(eps=[0.05, 0.1, 0.2]))
        main(["picard-contraction", "--config", path, "--out", str(tmp_path / "a")])
        main(["picard-contraction", "--config", path, "--out", str(tmp_path / "b"), "--threads", "3"])
        for name in ("summary.csv", "trace_000.csv", "trace_002.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
