import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahsc import hpo
from ahsc.data import Dataset, synthetic_blobs
from ahsc.errors import AllDiscardedError

SMALL = hpo.HyperSpace(depth=(1, 2), width=(8, 32), batch_size=(16, 64), learning_rate=(1e-3, 3e-2))


@pytest.fixture(scope="module")
def small_data():
    return synthetic_blobs(30, 3, 4, 2.0, 1.0, seed=5)


class TestSampling:
    def test_empty(self):
        assert hpo.sample_configs(hpo.HyperSpace(), 0, seed=1) == []

    def test_ranges_and_ids(self):
        space = hpo.HyperSpace()
        cfgs = hpo.sample_configs(space, 10_000, seed=0)
        assert [c.config_id for c in cfgs] == list(range(10_000))
        for name in ("depth", "width", "batch_size", "learning_rate"):
            lo, hi = getattr(space, name)
            vals = [getattr(c, name) for c in cfgs]
            assert lo <= min(vals) and max(vals) <= hi
        assert {c.depth for c in cfgs} == {1, 2, 3, 4}

    def test_learning_rate_median(self):
        lrs = [c.learning_rate for c in hpo.sample_configs(hpo.HyperSpace(), 10_000, seed=3)]
        assert 10**-2.7 <= float(np.median(lrs)) <= 10**-2.3

    def test_width_is_log_uniform(self):
        w = np.array([c.width for c in hpo.sample_configs(hpo.HyperSpace(), 10_000, seed=4)])
        # log2 range [4, 10]: each unit-width octave holds about a sixth of the mass
        frac = np.mean((w >= 32) & (w < 64))
        assert abs(frac - 1 / 6) < 0.02

    def test_deterministic(self):
        assert hpo.sample_configs(SMALL, 20, 9) == hpo.sample_configs(SMALL, 20, 9)

    def test_bad_space(self):
        with pytest.raises(ValueError):
            hpo.HyperSpace(width=(0, 8))
        with pytest.raises(ValueError):
            hpo.HyperSpace(depth=(3, 2))

    def test_layer_dims(self):
        assert hpo.HyperConfig(0, 3, 16, 8, 0.1).layer_dims(4, 3) == [4, 16, 16, 16, 3]


def test_config_seed_independent_of_order():
    a = [hpo.config_seed(7, i) for i in range(5)]
    b = [hpo.config_seed(7, i) for i in reversed(range(5))][::-1]
    assert a == b and len(set(a)) == 5


class TestLowestK:
    def test_examples(self):
        assert hpo.lowest_k({1: 0.5, 2: 0.2, 3: 0.9}, 2) == [2, 1]
        assert hpo.lowest_k({1: 0.3, 2: 0.3}, 1) == [1]
        assert hpo.lowest_k({5: 0.1, 2: 0.3, 9: 0.1}, 10) == [5, 9, 2]
        assert hpo.lowest_k({1: 1.0}, 0) == []

    @given(st.dictionaries(st.integers(0, 100), st.floats(0, 1e6), min_size=1), st.integers(0, 20))
    def test_invariant_under_increasing_transform(self, scores, k):
        moved = {c: math.log1p(v) * 3.0 + 2.0 for c, v in scores.items()}
        # log1p is strictly increasing but can merge close floats, so compare on distinct inputs only
        if len(set(moved.values())) == len(set(scores.values())):
            assert hpo.lowest_k(moved, k) == hpo.lowest_k(scores, k)

    @given(st.dictionaries(st.integers(0, 100), st.floats(0, 1e6)), st.integers(0, 20))
    def test_selects_smallest(self, scores, k):
        sel = hpo.lowest_k(scores, k)
        assert len(sel) == min(k, len(scores))
        rest = set(scores) - set(sel)
        if sel and rest:
            assert max(scores[c] for c in sel) <= min(scores[c] for c in rest)


class TestAHSC:
    def test_budget_and_structure(self, small_data):
        res = hpo.ahsc(SMALL, small_data, n1=8, n2=3, seed=2, epochs_full=6)
        assert len(res.records) == 8
        full = [r for r in res.records if r.full_score is not None]
        assert len(full) == res.n_full_runs <= 3
        assert res.budget_epochs == 8 + sum(r.epochs_used - 1 for r in full)
        assert all(r.epochs_used == 1 for r in res.records if r.full_score is None)
        assert res.best.config_id in res.selected
        assert res.best_score == max(r.full_score for r in full)
        discarded = {r.config.config_id for r in res.records if r.convexity.discarded}
        assert not discarded & set(res.selected)
        kept = {r.config.config_id: r.convexity.mu_max for r in res.records if not r.convexity.discarded}
        assert res.selected == hpo.lowest_k(kept, 3)

    def test_deterministic(self, small_data):
        a = hpo.ahsc(SMALL, small_data, n1=5, n2=2, seed=4, epochs_full=4)
        b = hpo.ahsc(SMALL, small_data, n1=5, n2=2, seed=4, epochs_full=4)
        assert a.jsonl() == b.jsonl()
        assert (a.best, a.best_score, a.budget_epochs) == (b.best, b.best_score, b.budget_epochs)

    def test_equals_exhaustive_when_n1_equals_n2(self, small_data):
        a = hpo.ahsc(SMALL, small_data, n1=6, n2=6, seed=8, epochs_full=5)
        assert not any(r.convexity.discarded for r in a.records)
        ex = hpo.random_search(SMALL, small_data, n=6, seed=8, epochs_full=5)
        assert a.best == ex.best and a.best_score == ex.best_score
        assert [r.full_score for r in a.records] == [r.full_score for r in ex.records]

    def test_all_discarded_on_zero_features(self):
        ds = Dataset(np.zeros((40, 3)), np.arange(40) % 2, 2)
        with pytest.raises(AllDiscardedError, match="all 4"):
            hpo.ahsc(SMALL, ds, n1=4, n2=2, seed=0, epochs_full=3)

    def test_rejects_bad_counts(self, small_data):
        for n1, n2 in [(2, 3), (3, 0)]:
            with pytest.raises(ValueError):
                hpo.ahsc(SMALL, small_data, n1=n1, n2=n2)

    def test_continue_from_probe_keeps_probe_phase(self, small_data):
        a = hpo.ahsc(SMALL, small_data, n1=4, n2=2, seed=1, epochs_full=3)
        b = hpo.ahsc(SMALL, small_data, n1=4, n2=2, seed=1, epochs_full=3, continue_from_probe=True)
        assert a.selected == b.selected
        assert [r.convexity.mu_max for r in a.records] == [r.convexity.mu_max for r in b.records]

    def test_auc_metric(self, small_data):
        res = hpo.ahsc(SMALL, small_data, n1=3, n2=1, seed=0, epochs_full=2, metric="auc")
        assert 0.0 <= res.best_score <= 1.0


class TestRandomSearch:
    def test_single_config(self, small_data):
        res = hpo.random_search(SMALL, small_data, n=1, seed=3, epochs_full=2)
        assert res.best == hpo.sample_configs(SMALL, 1, 3)[0]

    def test_deterministic(self, small_data):
        a = hpo.random_search(SMALL, small_data, n=3, seed=1, epochs_full=3)
        b = hpo.random_search(SMALL, small_data, n=3, seed=1, epochs_full=3)
        assert a.jsonl() == b.jsonl()

    def test_budget_dominates_ahsc(self, small_data):
        rs = hpo.random_search(SMALL, small_data, n=6, seed=2, epochs_full=5)
        ah = hpo.ahsc(SMALL, small_data, n1=6, n2=2, seed=2, epochs_full=5)
        assert rs.budget_epochs == sum(r.epochs_used for r in rs.records)
        assert rs.budget_epochs >= ah.budget_epochs


class TestRecords:
    def test_json_lines_fields(self, small_data):
        res = hpo.ahsc(SMALL, small_data, n1=3, n2=1, seed=0, epochs_full=2)
        rows = [json.loads(l) for l in res.jsonl().splitlines()]
        assert len(rows) == 3
        assert set(rows[0]) == {"config_id", "hyperparams", "mu_max", "discarded", "full_score", "epochs_used"}
        timed = json.loads(res.jsonl(timing=True).splitlines()[0])
        assert timed["wall_ms"] >= 0

    def test_dump(self, small_data, tmp_path):
        res = hpo.random_search(SMALL, small_data, n=2, seed=0, epochs_full=1)
        p = tmp_path / "log.jsonl"
        text = hpo.dump_records(res, str(p))
        assert p.read_text() == text
