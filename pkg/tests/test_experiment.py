import csv
import json

import pytest

from tailcausal import experiment as ex
from tailcausal.exceptions import ConfigError
from tailcausal.experiment import (ExperimentConfig, aggregate_rows, load_experiment, preset,
                                   replicate_seed, resolve_conf_s, run_experiment, run_replicate)


def small(**kw):
    base = {"name": "tiny", "sim": {"n": 400, "p": 8, "q_conf_count": 1, "conf_s": 3},
            "replicates": 3}
    return ExperimentConfig.from_dict(ex._merge(base, kw))


class TestConfSParsing:
    @pytest.mark.parametrize("value,p,expected", [("0.2p", 100, 20), ("p", 50, 50), ("0.5p", 20, 10),
                                                  (7, 20, 7), ("7", 20, 7), ("1.0p", 100, 100)])
    def test_values(self, value, p, expected):
        assert resolve_conf_s(value, p) == expected

    @pytest.mark.parametrize("value", ["abc", 0.5])
    def test_invalid(self, value):
        with pytest.raises(ConfigError):
            resolve_conf_s(value, 10)


class TestConfig:
    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({"bogus": 1})

    def test_bad_values_become_config_errors(self):
        for bad in ({"sim": {"p": 1}}, {"proxy_mode": "x"}, {"replicates": 0},
                    {"screen": {"tau_ratio": 2.0}}):
            with pytest.raises(ConfigError):
                ExperimentConfig.from_dict(bad)

    def test_hash_stable_and_sensitive(self):
        a, b = small(), small()
        assert a.config_hash() == b.config_hash()
        b.output_dir = "/elsewhere"
        assert a.config_hash() == b.config_hash()
        assert small(beta=0.6).config_hash() != a.config_hash()

    def test_presets(self):
        assert set(ex.PRESETS) >= {"exp1-p20", "exp1-p200", "exp2-confs-0", "exp2-confs-1.0",
                                   "appendixF", "appendixG", "appendixG-er-m2", "appendixG-ba-m2"}
        (cfg,) = preset("exp1-p50")
        assert cfg.sim.q_conf_count == 5 and cfg.sim.conf_s == 10
        assert cfg.screen.lambda_multiplier == 1.0 and cfg.proxy_mode == "observed_proxy"
        (cfg,) = preset("exp2-confs-0.5")
        assert cfg.sim.conf_s == 50 and cfg.proxy_mode == "latent_oracle" and cfg.no_proxy_ablation
        betas = [c.beta for c in preset("appendixF")]
        assert betas == [0.5, 0.6, 0.7, 0.8, 0.9]
        (cfg,) = preset("appendixG")
        assert cfg.sim.graph_kind == "erdos-renyi"
        with pytest.raises(ConfigError):
            preset("nope")

    def test_load_file_with_preset_and_suite(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"preset": "exp1-p20", "replicates": 2}))
        (cfg,) = load_experiment(path)
        assert cfg.replicates == 2 and cfg.sim.p == 20
        path.write_text(json.dumps({"replicates": 1, "suite": [{"name": "a"}, {"name": "b", "beta": 0.6}]}))
        cfgs = load_experiment(path)
        assert [c.name for c in cfgs] == ["a", "b"] and cfgs[1].beta == 0.6
        assert all(c.replicates == 1 for c in cfgs)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_experiment(bad)


class TestRun:
    def test_seeds_depend_only_on_index(self):
        assert replicate_seed(0, 3) == replicate_seed(0, 3) != replicate_seed(0, 4)
        assert replicate_seed(1, 3) != replicate_seed(0, 3)

    def test_rows_shape(self):
        rows, seconds = run_replicate(small(no_proxy_ablation=True), 0)
        assert seconds >= 0
        assert [(r["variant"], r["stage"]) for r in rows] == [
            ("observed_proxy", "skeleton"), ("observed_proxy", "dag"),
            ("no_proxy", "skeleton"), ("no_proxy", "dag")]
        assert all(r["status"] == "ok" and r["conf_fp"] is not None for r in rows)

    def test_variants_share_panel(self, monkeypatch):
        seen = []
        real = ex.build_tail_sample

        def spy(view, *args, **kwargs):
            seen.append(view.x.copy())
            return real(view, *args, **kwargs)

        monkeypatch.setattr(ex, "build_tail_sample", spy)
        run_replicate(small(no_proxy_ablation=True, proxy_mode="latent_oracle"), 1)
        assert len(seen) == 2 and (seen[0] == seen[1]).all()

    def test_worker_count_does_not_change_output(self, tmp_path):
        cfg = small()
        run_experiment([cfg], workers=1, output_dir=tmp_path / "a")
        run_experiment([cfg], workers=2, output_dir=tmp_path / "b")
        for name in ("replicates.csv", "aggregate.csv", "config.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        header = next(csv.reader(open(tmp_path / "a" / "replicates.csv")))
        assert header == list(ex.ROW_FIELDS)
        assert (tmp_path / "a" / "movelogs" / "tiny_r000_observed_proxy.json").exists()

    def test_partial_failure_recorded(self, monkeypatch):
        real = ex.screen
        calls = {"n": 0}

        def flaky(sample, config):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("boom")
            return real(sample, config)

        monkeypatch.setattr(ex, "screen", flaky)
        result = run_experiment([small()])
        assert result.failures == 1
        bad = [r for r in result.rows if r["status"] == "error"]
        assert bad[0]["replicate"] == 1 and "boom" in bad[0]["error"]
        assert result.aggregate[0]["replicates"] == 2

    def test_aggregate(self):
        rows = [{"config": "c", "beta": 0.7, "variant": "v", "stage": "dag", "status": "ok",
                 "k": 10, "precision": x, "recall": 1.0, "f1": 1.0, "shd": 0, "conf_fp": None,
                 "conf_fp_frac": None} for x in (0.2, 0.4)]
        (agg,) = aggregate_rows(rows)
        assert agg["precision_mean"] == pytest.approx(0.3)
        assert agg["precision_sd"] == pytest.approx(0.1414213, abs=1e-6)
        assert agg["conf_fp_mean"] == ""
