import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermoembed.corpus import NUM_TOKEN, Vocabulary, build_vocabulary, segments, tokenize
from thermoembed.errors import DataFormatError, InvalidInputError


@pytest.mark.parametrize("line, expected", [
    ("It stinks.", ["it", "stinks"]),
    ("", []),
    ("110mm was recorded", ["110mm", "was", "recorded"]),
    ("On January 15, 2008, a rainfall", ["on", "january", NUM_TOKEN, NUM_TOKEN, "a", "rainfall"]),
    ("  -- ... !! ", []),
    ("\"Grave\" man's", ["grave", "man's"]),
    ("3.14 1,000 v2", [NUM_TOKEN, NUM_TOKEN, "v2"]),
])
def test_tokenize(line, expected):
    assert tokenize(line) == expected


class TestVocabulary:
    def test_direct_count(self):
        v = build_vocabulary(["a b a"], min_count=1)
        assert v.index == {"a": 0, "b": 1}
        assert v.counts == (2, 1)

    def test_threshold(self):
        v = build_vocabulary(["a b a"], min_count=2)
        assert v.tokens == ("a",)

    def test_lexicographic_tie_break(self):
        v = build_vocabulary(["z y x", "y z x"])
        assert v.tokens == ("x", "y", "z")

    def test_empty_stream(self):
        v = build_vocabulary([])
        assert len(v) == 0

    def test_bad_min_count(self):
        with pytest.raises(InvalidInputError):
            build_vocabulary(["a"], min_count=0)

    def test_tsv_round_trip(self, tmp_path):
        v = build_vocabulary(["the cat sat on the mat", "the end"])
        p = tmp_path / "v.tsv"
        v.save(p)
        assert p.read_text().splitlines()[0] == "the\t0\t3"
        w = Vocabulary.load(p)
        assert w == v and w.digest() == v.digest()

    def test_load_rejects_garbage(self, tmp_path):
        p = tmp_path / "v.tsv"
        p.write_text("the\t0\t3\ncat\t5\t1\n")
        with pytest.raises(DataFormatError, match="v.tsv:2"):
            Vocabulary.load(p)

    @given(st.lists(st.text(alphabet="abcde 12.", max_size=30), max_size=20), st.integers(1, 3))
    def test_determinism_and_round_trip(self, lines, min_count):
        v1 = build_vocabulary(lines, min_count)
        v2 = build_vocabulary(list(lines), min_count)
        assert v1 == v2
        assert list(v1.index.values()) == list(range(len(v1)))
        for t in v1.tokens:
            assert v1.token(v1.id(t)) == t
        assert all(c >= min_count for c in v1.counts)
        assert list(v1.counts) == sorted(v1.counts, reverse=True)


def test_segments_skip_oov():
    v = build_vocabulary(["a b a c"], min_count=2)
    segs = list(segments(["a x b a", "", "c"], v))
    assert [s.ids.tolist() for s in segs] == [[0, 0], [], []]
    assert [s.index for s in segs] == [0, 1, 2]
