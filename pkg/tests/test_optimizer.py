"""Search space, EI, surrogate, suggest, search loops, trial log."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import planted_corpus
from w2vtuner.budget import fit_cost_model, measure_default
from w2vtuner.corpus import split_last_token
from w2vtuner.errors import ValidationError
from w2vtuner.optimizer import (SearchSpace, StopConfig, Surrogate,
                                TrialLog, TrialRecord, derive_seed,
                                expected_improvement, make_report, run_search,
                                sobol_points, suggest)
from w2vtuner.trainer import HyperParams


class TestSearchSpace:
    def test_presets_match_published_bounds(self):
        unc = {d.name: (d.lo, d.hi) for d in SearchSpace.unconstrained().dims}
        assert unc == {"dim": (10, 500), "window": (1, 200),
                       "ns_exponent": (-1.0, 1.0), "lr": (0.001, 0.1),
                       "negatives": (1, 200)}
        con = {d.name: (d.lo, d.hi) for d in SearchSpace.constrained().dims}
        assert con == {"dim": (10, 200), "window": (1, 40),
                       "ns_exponent": (-1.0, 1.0), "lr": (0.001, 0.1),
                       "negatives": (1, 40)}

    def test_unit_roundtrip_integers(self):
        space = SearchSpace.constrained()
        hp = HyperParams(model="sg", dim=37, window=13, ns_exponent=-0.4,
                         lr=0.017, negatives=8)
        hp2 = space.from_unit(space.to_unit(hp), "sg")
        assert (hp2.dim, hp2.window, hp2.negatives) == (37, 13, 8)
        assert hp2.ns_exponent == pytest.approx(-0.4, abs=1e-9)
        assert hp2.lr == pytest.approx(0.017, rel=1e-9)

    def test_corners_stay_in_bounds(self):
        space = SearchSpace.unconstrained()
        lo = space.from_unit(np.zeros(5), "cbow")
        hi = space.from_unit(np.ones(5) - 1e-12, "cbow")
        assert (lo.dim, lo.window, lo.negatives) == (10, 1, 1)
        assert (hi.dim, hi.window, hi.negatives) == (500, 200, 200)
        assert lo.lr == pytest.approx(0.001)
        assert hi.lr == pytest.approx(0.1)

    def test_log_transform_on_lr(self):
        space = SearchSpace.constrained()
        mid = space.from_unit(np.full(5, 0.5), "sg")
        assert mid.lr == pytest.approx(np.sqrt(0.001 * 0.1), rel=1e-6)

    def test_dict_roundtrip(self):
        space = SearchSpace.constrained()
        again = SearchSpace.from_dict(space.to_dict())
        assert again.dims == space.dims


class TestExpectedImprovement:
    def test_zero_at_no_improvement_no_uncertainty(self):
        assert expected_improvement(1.0, 0.0, 1.0) == 0.0

    def test_standard_normal_density_at_zero(self):
        assert expected_improvement(2.0, 1.0, 2.0) == pytest.approx(0.3989422804, abs=1e-5)

    def test_certain_improvement(self):
        assert expected_improvement(3.0, 0.0, 2.0) == pytest.approx(1.0)

    @given(st.floats(-50, 50), st.floats(0, 20), st.floats(-50, 50))
    @settings(max_examples=500, deadline=None)
    def test_nonnegative(self, mu, sigma, best):
        assert expected_improvement(mu, sigma, best) >= 0.0

    @given(st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=200, deadline=None)
    def test_continuous_at_sigma_zero(self, mu, best):
        limit = expected_improvement(mu, 1e-12, best)
        assert limit == pytest.approx(max(mu - best, 0.0), abs=1e-6)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValidationError):
            expected_improvement(0.0, -1.0, 0.0)


class TestSurrogate:
    def test_posterior_mean_reproduces_observations(self):
        rng = np.random.default_rng(8)
        x = rng.random((30, 3))
        y = 10 * np.sin(3 * x[:, 0]) + x[:, 1] ** 2 + rng.normal(0, 0.05, 30)
        sur = Surrogate(3, seed=0).fit(x, y)
        mean, _ = sur.predict(x)
        tol = 3 * max(sur.noise_std, 1e-3)
        assert np.max(np.abs(mean - y)) < max(tol, 0.3)

    def test_variance_nonnegative(self):
        rng = np.random.default_rng(9)
        x = rng.random((12, 2))
        y = x[:, 0] * 2
        sur = Surrogate(2, seed=1).fit(x, y)
        _, std = sur.predict(rng.random((50, 2)))
        assert (std >= 0).all()


def _record(t, hp, obj, model="sg", status="ok", over=False):
    return TrialRecord(trial_index=t, model=model, hp=hp, objective=obj,
                       ndcg=0.0, runtime_s=0.1, over_budget=over, seed=0,
                       timestamp="", status=status)


class TestSuggest:
    def test_cold_start_consumes_sobol(self):
        space = SearchSpace.constrained()
        hp, source = suggest([], space, "sg", seed=3, trial_index=0)
        assert source == "sobol"
        pts = sobol_points(space.n_dims, 1, seed=derive_seed(3, "sg", "sobol"))
        assert hp == space.from_unit(pts[0], "sg")

    def test_in_bounds_integral(self):
        space = SearchSpace.constrained()
        rng = np.random.default_rng(2)
        history = []
        for t in range(10):
            hp = space.from_unit(rng.random(5), "sg")
            history.append(_record(t, hp, float(rng.random() * 20)))
        hp, source = suggest(history, space, "sg", seed=5, trial_index=10)
        assert source in ("ei", "fallback")
        assert 10 <= hp.dim <= 200 and isinstance(hp.dim, int)
        assert 1 <= hp.window <= 40 and isinstance(hp.window, int)
        assert 1 <= hp.negatives <= 40 and isinstance(hp.negatives, int)
        assert -1 <= hp.ns_exponent <= 1
        assert 0.001 <= hp.lr <= 0.1

    def test_duplicate_suggestion_perturbed(self):
        space = SearchSpace.constrained()
        # saturate the GP with one repeated point: EI will re-suggest it,
        # and the dedup rule must move to an unevaluated integer neighbor
        hp0 = HyperParams(model="sg", dim=50, window=5, ns_exponent=0.0,
                          lr=0.01, negatives=5)
        history = [_record(t, hp0, 10.0) for t in range(6)]
        hp, _ = suggest(history, space, "sg", seed=7, trial_index=6)
        key = (hp.dim, hp.window, round(hp.ns_exponent, 6), round(hp.lr, 9),
               hp.negatives)
        assert key != (50, 5, 0.0, 0.01, 5)

    def test_synthetic_objective_localized(self):
        # all signal in one dimension; the loop must concentrate there
        space = SearchSpace.constrained()
        history = []
        for t in range(25):
            if t < 9:
                pts = sobol_points(space.n_dims, t + 1,
                                   seed=derive_seed(1, "sg", "sobol"))
                hp = space.from_unit(pts[-1], "sg")
            else:
                hp, _ = suggest(history, space, "sg", seed=1, trial_index=t)
            obj = 100.0 - 100.0 * (hp.ns_exponent - 0.3) ** 2
            history.append(_record(t, hp, obj))
        best = max(history, key=lambda r: r.objective)
        assert abs(best.hp.ns_exponent - 0.3) < 0.05


class TestTrialLog:
    def test_roundtrip(self, tmp_path):
        cfg = {"mode": "constrained", "seed": 1}
        log = TrialLog(tmp_path / "t.jsonl", cfg)
        hp = HyperParams()
        log.append(_record(0, hp, 5.0))
        log.append(_record(1, hp, None, status="failed"))
        again = TrialLog(tmp_path / "t.jsonl", cfg)
        assert len(again.records) == 2
        assert again.records[0].objective == 5.0
        assert again.records[1].status == "failed"

    def test_config_mismatch_refused(self, tmp_path):
        TrialLog(tmp_path / "t.jsonl", {"mode": "constrained"})
        with pytest.raises(ValidationError, match="different configuration"):
            TrialLog(tmp_path / "t.jsonl", {"mode": "unconstrained"})


@pytest.fixture(scope="module")
def search_setup():
    corpus = planted_corpus(n_communities=12, community_size=8,
                            n_sequences=700, seq_len=10, noise=0.05, seed=5)
    return corpus, split_last_token(corpus)


def _hp_seq(history, model="sg"):
    return [r.hp.to_dict() for r in history if r.model == model]


class TestRunSearch:
    def test_unconstrained_deterministic(self, search_setup, tmp_path):
        corpus, split = search_setup
        space = SearchSpace.constrained()
        stop = StopConfig(trial_cap=4, epoch_cap=3, conv_window=2)
        kwargs = dict(space=space, mode="unconstrained", model_types=("sg",),
                      workers=1, seed=42, stop=stop)
        a = run_search(split.train, split, **kwargs)
        b = run_search(split.train, split, **kwargs)
        assert _hp_seq(a.history) == _hp_seq(b.history)
        assert [r.objective for r in a.history] == [r.objective for r in b.history]

    def test_resume_matches_uninterrupted(self, search_setup, tmp_path):
        corpus, split = search_setup
        space = SearchSpace.constrained()
        base = dict(space=space, mode="unconstrained", model_types=("sg",),
                    workers=1, seed=9)
        full = run_search(split.train, split,
                          stop=StopConfig(trial_cap=11, epoch_cap=2, conv_window=2),
                          **base)
        cfg = {"seed": 9}
        log = TrialLog(tmp_path / "resume.jsonl", cfg)
        run_search(split.train, split,
                   stop=StopConfig(trial_cap=10, epoch_cap=2, conv_window=2),
                   trial_log=log, **base)
        log2 = TrialLog(tmp_path / "resume.jsonl", cfg)
        assert len(log2.records) == 10
        resumed = run_search(split.train, split,
                             stop=StopConfig(trial_cap=11, epoch_cap=2, conv_window=2),
                             trial_log=log2, **base)
        assert _hp_seq(resumed.history) == _hp_seq(full.history)
        assert [r.objective for r in resumed.history] == \
               [r.objective for r in full.history]

    def test_constrained_respects_budget(self):
        # budgets only mean something when epochs are well above timer and
        # per-epoch-overhead noise, so this needs a mid-sized corpus
        from conftest import zipf_corpus
        corpus = zipf_corpus(n_vocab=8_000, n_sequences=20_000, seq_len=20, seed=2)
        split = split_last_token(corpus)
        budget = measure_default(split.train, workers=1)
        cost = fit_cost_model(split.train, workers=1)
        res = run_search(split.train, split, SearchSpace.constrained(),
                         "constrained", budget=budget, cost_model=cost,
                         model_types=("sg",), workers=1, seed=3,
                         stop=StopConfig(trial_cap=4))
        assert len(res.history) == 4
        for rec in res.history:
            if rec.eligible:
                assert rec.runtime_s <= budget.budget_s
        assert res.best["sg"] is not None
        assert res.best["sg"].epochs_run >= 1

    def test_constrained_needs_budget(self, search_setup):
        corpus, split = search_setup
        with pytest.raises(ValidationError, match="RuntimeBudget"):
            run_search(split.train, split, SearchSpace.constrained(),
                       "constrained", budget=None)

    def test_unconstrained_dominates_constrained(self, search_setup):
        # nested feasible sets: convergence training can only beat a
        # two-epoch budget on a learnable corpus (same seed pool)
        corpus, split = search_setup
        from w2vtuner.budget import CostModel, RuntimeBudget
        from w2vtuner.trainer import DEFAULT_HP

        space = SearchSpace.constrained()
        # synthetic cost model: every config is planned for exactly 2 epochs
        budget = RuntimeBudget(budget_s=1000.0, workers=1, hardware_tag="test",
                               default_hp=DEFAULT_HP.to_dict(), measured_at="")
        pred = 1000.0 / 2.2  # floor(0.95 * 1000 / pred) == 2
        cost = CostModel(
            coeff={"sg": [pred / split.train.total_tokens, 0.0, 0.0],
                   "cbow": [pred / split.train.total_tokens, 0.0, 0.0, 0.0]},
            corpus_stats={"t_raw": float(split.train.total_tokens),
                          "t_eff": 1.0, "mean_seq_len": 10.0})
        con = run_search(split.train, split, space, "constrained",
                         budget=budget, cost_model=cost, model_types=("sg",),
                         workers=1, seed=21, stop=StopConfig(trial_cap=10))
        unc = run_search(split.train, split, space, "unconstrained",
                         model_types=("sg",), workers=1, seed=21,
                         stop=StopConfig(trial_cap=10, epoch_cap=16,
                                         conv_window=5))
        assert con.best["sg"] is not None and unc.best["sg"] is not None
        assert all(r.hp.epochs == 2 for r in con.history)
        assert unc.best["sg"].objective >= con.best["sg"].objective

    def test_holdout_frac_reports_separately(self, search_setup):
        corpus, split = search_setup
        res = run_search(split.train, split, SearchSpace.constrained(),
                         "unconstrained", model_types=("sg",), workers=1,
                         seed=4, stop=StopConfig(trial_cap=2, epoch_cap=2,
                                                 conv_window=1),
                         holdout_frac=0.3)
        assert res.holdout is not None and "sg" in res.holdout
        held = res.holdout["sg"]
        assert 0 <= held["hr_at_10"] <= 100
        assert held["n_pairs"] < len(split.test_pairs)

    def test_report_lists_both_model_types(self, search_setup):
        corpus, split = search_setup
        res = run_search(split.train, split, SearchSpace.constrained(),
                         "unconstrained", model_types=("sg", "cbow"),
                         workers=1, seed=2,
                         stop=StopConfig(trial_cap=2, epoch_cap=2, conv_window=1))
        md = make_report(res)
        assert "| sg |" in md or "| sg " in md
        assert "cbow" in md
        assert "HR@10" in md
