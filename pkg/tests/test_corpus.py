"""Corpus ingestion, downsampling, splits, and sequence sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from w2vtuner.corpus import (Corpus, DownsampleConfig, build_corpus, downsample,
                             ingest, keep_probability, keep_probability_table,
                             load_split, sample_sequences, split_last_token,
                             split_temporal, write_split)
from w2vtuner.errors import DataFormatError, EmptyTestSetError, ValidationError


class TestIngest:
    def test_plain_counts(self, tmp_path):
        f = tmp_path / "seqs.txt"
        f.write_text("a b c\na b\n", encoding="utf-8")
        corp = ingest(f, format="plain", min_count=1)
        assert corp.vocab.size == 3
        assert corp.n_sequences == 2
        assert corp.vocab.total_tokens == 5

    def test_min_count_filters_tokens_and_sequences(self, tmp_path):
        f = tmp_path / "seqs.txt"
        f.write_text("a b c\na b\n", encoding="utf-8")
        corp = ingest(f, format="plain", min_count=2)
        assert set(corp.vocab.token_to_id) == {"a", "b"}
        assert [corp.tokens_of(s) for s in corp.sequences] == [["a", "b"], ["a", "b"]]
        assert corp.vocab.total_tokens == 4

    def test_ids_descending_frequency(self, tmp_path):
        f = tmp_path / "seqs.txt"
        f.write_text("c c c b b a\n", encoding="utf-8")
        corp = ingest(f)
        assert corp.vocab.id_to_token[0] == "c"
        assert list(corp.vocab.counts) == sorted(corp.vocab.counts, reverse=True)

    def test_timestamped_grouping_and_sorting(self, tmp_path):
        f = tmp_path / "ev.tsv"
        f.write_text("u1\tx\t30\nu2\ty\t10\nu1\tz\t20\n", encoding="utf-8")
        corp = ingest(f, format="timestamped")
        assert corp.n_sequences == 2
        assert corp.tokens_of(corp.sequences[0]) == ["z", "x"]  # sorted by time
        assert list(corp.timestamps[0]) == [20, 30]

    def test_timestamped_malformed_line_number(self, tmp_path):
        f = tmp_path / "ev.tsv"
        f.write_text("u1\tx\t30\nu1\tbroken\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="line 2"):
            ingest(f, format="timestamped")

    def test_timestamp_parse_failure(self, tmp_path):
        f = tmp_path / "ev.tsv"
        f.write_text("u1\tx\tnotatime\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="line 1"):
            ingest(f, format="timestamped")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="does not exist"):
            ingest(tmp_path / "nope.txt")

    def test_every_id_in_range(self, small_planted):
        for seq in small_planted.sequences:
            assert (seq < small_planted.vocab.size).all()
            assert (seq >= 0).all()


class TestKeepProbability:
    def test_at_threshold(self):
        assert keep_probability(1000.0, 1000.0) == pytest.approx(2.0)

    def test_four_times_threshold(self):
        assert keep_probability(4000.0, 1000.0) == pytest.approx(0.75)

    def test_below_threshold_always_kept(self):
        # the raw rule already exceeds 1 below the threshold
        assert keep_probability(10.0, 1000.0) > 1.0
        table = keep_probability_table(
            build_corpus([["a"] * 10 + ["b"] * 99990]).vocab, t_ratio=1e-3)
        # f(a)=10 < t=100 -> always kept
        assert table[1] == 1.0

    def test_zero_threshold_disables(self):
        assert keep_probability(5.0, 0.0) == float("inf")

    @given(st.floats(min_value=1.0, max_value=1e6),
           st.floats(min_value=1.0, max_value=1e6))
    @settings(max_examples=200, deadline=None)
    def test_strictly_decreasing_above_threshold(self, t, f):
        if f < t:
            return
        eps = max(f * 1e-6, 1e-3)
        assert keep_probability(f + eps, t) < keep_probability(f, t)


class TestDownsample:
    def test_disabled_is_identity(self, small_planted):
        out = downsample(small_planted, DownsampleConfig(t_ratio=0.0, seed=1))
        assert out is small_planted

    def test_keep_rate_converges(self):
        # one token at 4x threshold among rare fillers: keep rate -> 0.75
        n_hot = 100_000
        hot = ["hot"] * n_hot
        fillers = [f"f{i}" for i in range(25_000)]
        seqs = [hot[i:i + 20] for i in range(0, n_hot, 20)]
        seqs += [fillers[i:i + 20] for i in range(0, len(fillers), 20)]
        corp = build_corpus(seqs)
        t_ratio = 25_000 / corp.vocab.total_tokens  # t=25k, f_hot=100k=4t
        out = downsample(corp, DownsampleConfig(t_ratio=t_ratio, seed=9))
        hot_id = corp.vocab.token_to_id["hot"]
        survived = sum(int((s == hot_id).sum()) for s in out.sequences)
        assert survived / n_hot == pytest.approx(0.75, abs=0.02)

    def test_shares_vocabulary(self, small_planted):
        out = downsample(small_planted, DownsampleConfig(t_ratio=1e-2, seed=1))
        assert out.vocab is small_planted.vocab

    def test_expected_survival_positive(self, small_planted):
        # no token type can be deterministically wiped out
        keep = keep_probability_table(small_planted.vocab, 1e-3)
        expected = small_planted.vocab.counts * keep
        assert (expected > 0).all()


class TestSplitLastToken:
    def test_three_token_sequence(self):
        corp = build_corpus([["a", "b", "c"]])
        sp = split_last_token(corp)
        assert corp.tokens_of(sp.train.sequences[0]) == ["a", "b"]
        v = corp.vocab.token_to_id
        assert sp.test_pairs.tolist() == [[v["b"], v["c"]]]

    def test_single_token_sequence_kept_in_train(self):
        corp = build_corpus([["a"], ["b", "c"]])
        sp = split_last_token(corp)
        assert len(sp.train.sequences) == 2
        assert len(sp.test_pairs) == 1

    def test_mixed_lengths(self):
        corp = build_corpus([["a", "b"], ["c", "d", "e"]])
        sp = split_last_token(corp)
        texts = [corp.tokens_of(s) for s in sp.train.sequences]
        assert texts == [["a"], ["c", "d"]]
        v = corp.vocab.token_to_id
        assert sp.test_pairs.tolist() == [[v["a"], v["b"]], [v["d"], v["e"]]]

    def test_empty_test_set_errors(self):
        corp = build_corpus([["a"], ["b"]])
        with pytest.raises(EmptyTestSetError, match="empty test set"):
            split_last_token(corp)

    def test_every_query_occurs_in_train(self, small_planted):
        sp = split_last_token(small_planted)
        train_ids = set()
        for s in sp.train.sequences:
            train_ids.update(s.tolist())
        for q, _ in sp.test_pairs:
            assert int(q) in train_ids


class TestSplitTemporal:
    def _corpus(self):
        return build_corpus(
            [["a", "b", "c", "d"], ["b", "c"]],
            timestamp_sequences=[[10, 20, 30, 40], [5, 15]])

    def test_all_before_start(self):
        sp = split_temporal(self._corpus(), test_start=100)
        assert len(sp.test_pairs) == 0
        assert len(sp.train.sequences) == 2

    def test_mid_split(self):
        corp = self._corpus()
        sp = split_temporal(corp, test_start=25)
        # user 1: train [a, b], test pair (c, d)
        assert corp.tokens_of(sp.train.sequences[0]) == ["a", "b"]
        v = corp.vocab.token_to_id
        assert [v["c"], v["d"]] in sp.test_pairs.tolist()

    def test_query_unseen_in_train_is_dropped(self):
        corp = build_corpus([["a", "b"], ["x", "y", "z"]],
                            timestamp_sequences=[[1, 2], [50, 60, 70]])
        # second user is entirely in the test period: query y never trains
        sp = split_temporal(corp, test_start=40)
        assert sp.test_pairs.tolist() == []

    def test_requires_timestamps(self):
        with pytest.raises(ValidationError, match="timestamp"):
            split_temporal(build_corpus([["a", "b"]]), test_start=1)


class TestSampleSequences:
    def test_identity_fraction(self, small_planted):
        out = sample_sequences(small_planted, 1.0, seed=5)
        assert out.n_sequences == small_planted.n_sequences
        assert [small_planted.tokens_of(a) for a in small_planted.sequences] == \
               [out.tokens_of(b) for b in out.sequences]

    def test_exact_floor_count(self, small_planted):
        out = sample_sequences(small_planted, 0.1, seed=5)
        assert out.n_sequences == int(np.floor(0.1 * small_planted.n_sequences))

    def test_deterministic(self, small_planted):
        a = sample_sequences(small_planted, 0.2, seed=7)
        b = sample_sequences(small_planted, 0.2, seed=7)
        assert [a.tokens_of(s) for s in a.sequences] == [b.tokens_of(s) for s in b.sequences]

    def test_vocab_rebuilt(self, small_planted):
        out = sample_sequences(small_planted, 0.05, seed=5)
        assert out.vocab.size <= small_planted.vocab.size
        assert out.vocab.total_tokens == sum(len(s) for s in out.sequences)

    def test_zero_sample_errors(self, small_planted):
        with pytest.raises(ValidationError, match="empty sample"):
            sample_sequences(small_planted, 1e-9, seed=5)

    def test_overlap_matches_hypergeometric(self):
        # overlap of two independent k-of-n samples ~ Hypergeometric(n, k, k)
        n, frac = 400, 0.25
        corp = build_corpus([[f"t{i}", f"u{i}"] for i in range(n)])
        k = int(frac * n)
        mean_expected = k * k / n
        sd = np.sqrt(k * (k / n) * (1 - k / n) * (n - k) / (n - 1))
        overlaps = []
        for s in range(40):
            a = sample_sequences(corp, frac, seed=2 * s)
            b = sample_sequences(corp, frac, seed=2 * s + 1)
            sa = {a.tokens_of(x)[0] for x in a.sequences}
            sb = {b.tokens_of(x)[0] for x in b.sequences}
            overlaps.append(len(sa & sb))
        # mean of 40 draws within 4 standard errors of the hypergeometric mean
        se = sd / np.sqrt(len(overlaps))
        assert abs(np.mean(overlaps) - mean_expected) < 4 * se


class TestSplitRoundTrip:
    def test_write_and_load(self, tmp_path, small_planted):
        sp = split_last_token(small_planted)
        manifest = write_split(sp, tmp_path / "split", seed=3)
        assert manifest["protocol"] == "last-token"
        loaded = load_split(tmp_path / "split" / "split.json")
        assert len(loaded.test_pairs) == len(sp.test_pairs)
        # query/target token strings are preserved through the round trip
        orig = {(small_planted.vocab.id_to_token[q], small_planted.vocab.id_to_token[t])
                for q, t in sp.test_pairs}
        got = set()
        for q, t in loaded.test_pairs:
            qt = loaded.train.vocab.id_to_token[q]
            tt = loaded.train.vocab.id_to_token[t] if t >= 0 else None
            got.add((qt, tt))
        assert {g[0] for g in got} == {o[0] for o in orig}
