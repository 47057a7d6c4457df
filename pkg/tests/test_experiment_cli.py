import dataclasses

import numpy as np
import pytest

from clubcascade import cli
from clubcascade import experiment as ex
from clubcascade.replay import RatingsMatrix, make_clustered_ratings, write_ratings

SMALL = dict(u=8, m=2, L=20, K=3, d=4, T=300, stride=50, seeds=[0, 1], alpha=1.0, beta=1.0)


def small(**kw):
    return ex.ExperimentConfig(**{**SMALL, **kw})


@pytest.fixture(scope="module")
def ratings_file(tmp_path_factory):
    M, _ = make_clustered_ratings(60, 80, 3, rng_seed=0)
    path = tmp_path_factory.mktemp("data") / "ratings.csv"
    write_ratings(path, M)
    return path


class TestConfig:
    def test_defaults_follow_experiment_protocol(self):
        c = ex.ExperimentConfig()
        assert (c.u, c.L, c.K, c.d) == (40, 200, 4, 20)
        assert c.seeds == list(range(10)) and c.stride == 100

    def test_parse_text(self):
        vals = ex.parse_config_text("# comment\nu = 12\nseeds = 0-2, 7\nalgorithms = club,per_user\n"
                                    "alpha = none\nbeta = auto  # inline\n\n")
        assert vals == {"u": 12, "seeds": [0, 1, 2, 7], "algorithms": ["club", "per_user"],
                        "alpha": None, "beta": "auto"}

    @pytest.mark.parametrize("text", ["u 12", "colour = red", "u = twelve", "seeds = a-b"])
    def test_parse_errors(self, text):
        with pytest.raises(ex.ConfigError):
            ex.parse_config_text(text)

    def test_overrides_win(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("u = 12\nK = 2\n")
        c = ex.load_config(p, K="3", T="5")
        assert (c.u, c.K, c.T) == (12, 3, 5)

    @pytest.mark.parametrize("kw", [dict(K=30, L=20), dict(algorithms=["linucb"]), dict(m=9, u=8),
                                    dict(theta_mode="gap"), dict(pool_size=2), dict(seeds=[]),
                                    dict(delta=1.0), dict(algorithms=["club", "club"])])
    def test_validation(self, kw):
        with pytest.raises(ex.ConfigError):
            small(**kw)

    def test_shipped_configs_load(self):
        from pathlib import Path
        root = Path(__file__).resolve().parents[1] / "configs"
        synth = ex.load_config(root / "synth.conf")
        assert synth.m == 5 and synth.T == 20_000 and synth.pool_mode == "fixed"
        replay = ex.load_config(root / "replay.conf")
        assert replay.scenario == "replay" and replay.T == 50_000


class TestSynth:
    def test_zero_rounds(self):
        assert ex.run_synth(small(T=0)) == []

    def test_deterministic(self):
        cfg = small(algorithms=["club", "per_user"])
        assert ex.format_records(ex.run_synth(cfg)) == ex.format_records(ex.run_synth(cfg))

    def test_records_shape(self):
        recs = ex.run_synth(small(T=230, algorithms=["club"]))
        by_seed = {}
        for r in recs:
            by_seed.setdefault(r.seed, []).append(r)
        for rows in by_seed.values():
            ts = [r.t for r in rows]
            assert ts == [50, 100, 150, 200, 230]
            metrics = [r.metric for r in rows]
            assert all(b >= a for a, b in zip(metrics, metrics[1:]))
            assert all(b - a <= 50 for a, b in zip(metrics, metrics[1:]))

    def test_per_round_increment_at_most_one(self):
        recs = ex.run_synth(small(T=200, stride=1, seeds=[3]))
        for alg in ("club", "single_cluster", "per_user"):
            m = [0.0] + [r.metric for r in recs if r.algorithm == alg]
            inc = np.diff(m)
            assert np.all(inc >= 0) and np.all(inc <= 1)

    def test_single_cluster_degeneracy(self):
        cfg = small(m=1, T=400, alpha=float("inf"), algorithms=["club", "single_cluster"])
        recs = ex.run_synth(cfg)
        club = [(r.t, r.seed, r.metric) for r in recs if r.algorithm == "club"]
        base = [(r.t, r.seed, r.metric) for r in recs if r.algorithm == "single_cluster"]
        assert club == base

    def test_fresh_pool_mode(self):
        recs = ex.run_synth(small(pool_mode="fresh", seeds=[0]))
        assert len(recs) == 3 * 6

    def test_gap_mode(self):
        assert ex.run_synth(small(theta_mode="gap", gamma=0.5, seeds=[0], algorithms=["club"]))

    def test_glm_runs(self):
        recs = ex.run_synth(small(T=100, seeds=[0], algorithms=["club_glm"]))
        assert recs[-1].t == 100

    def test_infeasible_clusters(self):
        with pytest.raises(ex.ConfigError):
            ex.run_synth(small(m=6, d=4, u=8))

    def test_workers_do_not_change_output(self):
        cfg = small(T=150, algorithms=["club", "per_user"])
        one = ex.format_records(ex.run_synth(cfg))
        two = ex.format_records(ex.run_synth(dataclasses.replace(cfg, workers=2)))
        assert one == two


def replay_cfg(path, **kw):
    base = dict(scenario="replay", ratings=str(path), feature_users=20, u=40, L=80, d=5, K=3,
                T=300, stride=100, seeds=[0, 1], alpha=1.0, beta=1.0)
    base.update(kw)
    return ex.ExperimentConfig(**base)


class TestReplay:
    def test_pipeline(self, ratings_file):
        recs = ex.run_replay(replay_cfg(ratings_file))
        assert len(recs) == 3 * 2 * 3
        assert all(r.metric <= r.t for r in recs)

    def test_ratings_path_argument(self, ratings_file):
        cfg = replay_cfg(ratings_file)
        assert ex.run_replay(cfg) == ex.run_replay(dataclasses.replace(cfg, ratings="elsewhere"),
                                                   ratings_file)

    def test_all_zero_replay_rows(self):
        data = ex.ReplayData(np.eye(4), RatingsMatrix(3, 4, frozenset()))
        cfg = replay_cfg("unused", u=3, L=4, d=4, T=50, stride=10)
        assert {r.metric for r in ex.replay_cell(cfg, "club", 0, data)} == {0.0}

    def test_single_positive_full_list(self):
        data = ex.ReplayData(np.eye(3), RatingsMatrix(1, 3, frozenset({(0, 2)})))
        cfg = replay_cfg("unused", u=1, L=3, d=3, K=3, T=5, stride=1)
        recs = ex.replay_cell(cfg, "club", 0, data)
        assert recs[0].t == 1 and recs[0].metric == 1.0

    def test_pool_subsample(self, ratings_file):
        recs = ex.run_replay(replay_cfg(ratings_file, pool_size=10, algorithms=["club"]))
        assert recs and all(r.metric <= r.t for r in recs)

    def test_deterministic_across_workers(self, ratings_file):
        cfg = replay_cfg(ratings_file, T=200)
        one = ex.format_records(ex.run_replay(cfg))
        assert one == ex.format_records(ex.run_replay(cfg))
        assert one == ex.format_records(ex.run_replay(dataclasses.replace(cfg, workers=3)))


class TestBoundsRunner:
    def test_zero_scale(self):
        rows = ex.run_bounds_check(ex.ExperimentConfig(scenario="bounds_check", bounds_scale=0))
        assert rows == []


class TestOutput:
    def test_roundtrip_and_aggregate(self, tmp_path):
        recs = [ex.RunRecord(10, "club", 0, 1.5), ex.RunRecord(10, "club", 1, 2.5),
                ex.RunRecord(20, "club", 0, 3.0), ex.RunRecord(10, "per_user", 0, 0.1 + 0.2)]
        path = tmp_path / "r.csv"
        ex.write_records(recs, path)
        back = ex.read_records(path)
        assert back == recs
        rows = ex.aggregate(back)
        assert rows == [(10, "club", 2, 2.0), (20, "club", 1, 3.0), (10, "per_user", 1, 0.1 + 0.2)]
        assert ex.final_metric(back, "club") == {0: 3.0, 1: 2.5}

    def test_header_required(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n")
        with pytest.raises(ex.ConfigError):
            ex.read_records(p)


class TestCli:
    def test_synth_stdout(self, capsys):
        code = cli.main(["synth", "--u", "6", "--m", "2", "--L", "10", "--K", "2", "--d", "3",
                         "--T", "40", "--stride", "20", "--seed", "0,1", "--algorithms", "club"])
        out = capsys.readouterr().out.splitlines()
        assert code == 0 and out[0] == ex.CSV_HEADER and len(out) == 1 + 2 * 2

    def test_synth_config_file_and_out(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("u = 6\nm = 2\nL = 10\nK = 2\nd = 3\nT = 30\nstride = 10\nseeds = 4\n")
        out = tmp_path / "o.csv"
        assert cli.main(["synth", "--config", str(conf), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ex.CSV_HEADER and len(lines) == 1 + 3 * 3

    @pytest.mark.parametrize("argv", [["synth", "--K", "500"], ["synth", "--algorithms", "nope"],
                                      ["synth", "--config", "/no/such/file"],
                                      ["replay"], ["synth", "--u", "x"]])
    def test_invalid_exits_2(self, argv, capsys):
        assert cli.main(argv) == 2
        assert "error" in capsys.readouterr().err

    def test_bounds_check_exit_codes(self, capsys):
        assert cli.main(["bounds-check", "--bounds-scale", "0"]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "overall,0,0,,pass,,"
        assert cli.main(["bounds-check", "--bounds-scale", "0.02", "--invert"]) == 3
        assert ",fail," in capsys.readouterr().out

    def test_replay_features_aggregate(self, tmp_path, ratings_file):
        out = tmp_path / "run.csv"
        assert cli.main(["replay", "--ratings", str(ratings_file), "--feature-users", "20",
                         "--u", "40", "--L", "80", "--d", "5", "--K", "3", "--T", "60",
                         "--stride", "30", "--seed", "0-1", "--out", str(out)]) == 0
        agg = tmp_path / "agg.csv"
        assert cli.main(["aggregate", str(out), "--out", str(agg)]) == 0
        rows = agg.read_text().splitlines()
        assert rows[0] == "t,algorithm,n_seeds,mean" and rows[1].startswith("30,club,2,")

        feat = tmp_path / "feat"
        assert cli.main(["features", "--ratings", str(ratings_file), "--feature-users", "20",
                         "-d", "5", "--out", str(feat)]) == 0
        assert sorted(p.name for p in feat.iterdir()) == [
            "features.csv", "items.csv", "replay_users.csv", "users.csv"]
        assert (feat / "features.csv").read_text().splitlines()[0] == "item_id,v1,v2,v3,v4,v5"

    def test_gen_ratings(self, tmp_path):
        out = tmp_path / "g.csv"
        assert cli.main(["gen-ratings", "--users", "20", "--items", "30", "--clusters", "2",
                         "--out", str(out)]) == 0
        assert out.read_text().startswith("user,item\n")
