import functools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basr import vocab as voc
from basr.errors import BasrError
from basr.metrics import cer, edit_distance, ser, EvalReport


@functools.lru_cache(maxsize=None)
def brute_force_distance(a: tuple, b: tuple) -> int:
    """Plain recursive definition of edit distance; the independent oracle."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    if a[0] == b[0]:
        return brute_force_distance(a[1:], b[1:])
    return 1 + min(
        brute_force_distance(a[1:], b),
        brute_force_distance(a, b[1:]),
        brute_force_distance(a[1:], b[1:]),
    )


seqs = st.lists(st.integers(0, 3), max_size=6).map(tuple)


class TestEditDistance:
    def test_identity(self):
        assert edit_distance("abc", "abc") == 0

    def test_single_deletion(self):
        # DP table by hand: delete "c" from "abcd" to reach "abd"
        assert edit_distance("abcd", "abd") == 1

    def test_pure_insertion(self):
        assert edit_distance("", "ab") == 2

    @given(seqs, seqs)
    def test_matches_brute_force(self, a, b):
        assert edit_distance(a, b) == brute_force_distance(a, b)

    @given(seqs, seqs)
    def test_symmetry(self, a, b):
        assert edit_distance(a, b) == edit_distance(b, a)

    @given(seqs)
    def test_identity_of_indiscernibles(self, a):
        assert edit_distance(a, a) == 0

    @settings(max_examples=60)
    @given(seqs, seqs, seqs)
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestCer:
    def test_exact_matches(self):
        assert cer(["abc", "d"], ["abc", "d"]) == 0.0

    def test_quarter(self):
        assert cer(["abcd"], ["abd"]) == 0.25

    def test_can_exceed_one(self):
        assert cer(["a"], ["bcd"]) > 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(BasrError):
            cer([], [])
        with pytest.raises(BasrError):
            cer([""], [""])

    def test_length_mismatch_rejected(self):
        with pytest.raises(BasrError):
            cer(["a"], [])


class TestSer:
    @pytest.fixture
    def vocab(self):
        return voc.build_vocabulary([["a", "b", "c", "d"]], homophone_groups=[["a", "b"]])

    def test_homophone_substitutions_vanish(self, vocab):
        ref = [voc.encode(["a", "c"], vocab).token_ids]
        hyp = [voc.encode(["b", "c"], vocab).token_ids]
        assert cer(ref, hyp) == 0.5
        assert ser(ref, hyp, vocab) == 0.0

    def test_identity_classes_equal_cer(self):
        v = voc.build_vocabulary([["a", "b", "c"]])
        ref = [voc.encode(["a", "b"], v).token_ids]
        hyp = [voc.encode(["a", "c"], v).token_ids]
        assert ser(ref, hyp, v) == cer(ref, hyp)

    @settings(max_examples=200)
    @given(
        st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8), min_size=1, max_size=4),
        st.data(),
    )
    def test_ser_never_exceeds_cer(self, vocab, ref_texts, data):
        hyp_texts = [
            data.draw(st.lists(st.sampled_from("abcd"), max_size=8)) for _ in ref_texts
        ]
        refs = [voc.encode(t, vocab).token_ids for t in ref_texts]
        hyps = [voc.encode(t, vocab).token_ids for t in hyp_texts]
        assert ser(refs, hyps, vocab) <= cer(refs, hyps) + 1e-12


class TestEvalReport:
    def test_json_round_trip(self):
        report = EvalReport(fingerprint="abc123")
        row = report.row("lm", "-")
        row.ppl = {"dev": 12.5, "test": 13.0}
        row = report.row("asr", "average")
        row.ppl = {"dev": 4.0}
        row.cer_oracle = {"dev": 0.31}
        restored = EvalReport.from_json(report.to_json())
        assert restored.fingerprint == "abc123"
        assert restored.row("asr", "average").cer_oracle == {"dev": 0.31}

    def test_table_renders_all_columns(self):
        report = EvalReport(fingerprint="x")
        row = report.row("asr", "average")
        row.ppl = {"dev": 5.877}
        row.cer_oracle = {"dev": 0.658}
        table = report.to_table()
        assert "PPL Dev" in table and "CER (Orac.) Dev" in table
        assert "5.88" in table and "65.8" in table
        # unset cells render as dashes
        assert " -" in table
