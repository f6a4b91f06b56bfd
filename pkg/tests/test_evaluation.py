import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoembed.errors import DataFormatError
from thermoembed.evaluation import (
    AnalogySet,
    evaluate,
    load_analogy_dir,
    nearest_neighbors,
    solve_3cosadd,
    write_analogy_dir,
)
from thermoembed.project import EmbeddingMatrix


def emb(words, vecs):
    return EmbeddingMatrix(np.asarray(vecs, dtype=float), tuple(words))


class TestLoad:
    def test_parse(self, tmp_path):
        (tmp_path / "noun_plural.txt").write_text("cat\tcats\nColor\tcolour/colors\n\n")
        (sets,) = load_analogy_dir(tmp_path)
        assert sets.name == "noun_plural"
        assert sets.pairs == (("cat", ("cats",)), ("color", ("colour", "colors")))

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.txt").write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            load_analogy_dir(tmp_path)

    def test_malformed_line_cites_location(self, tmp_path):
        (tmp_path / "bad.txt").write_text("cat\tcats\ndog dogs\n")
        with pytest.raises(DataFormatError, match=r"bad.txt:2"):
            load_analogy_dir(tmp_path)

    def test_duplicate_source(self, tmp_path):
        (tmp_path / "dup.txt").write_text("cat\tcats\nCAT\tkitties\n")
        with pytest.raises(DataFormatError, match="duplicate"):
            load_analogy_dir(tmp_path)

    def test_round_trip(self, tmp_path):
        s = AnalogySet("cat1", (("a", ("b", "c")), ("d", ("e",))))
        write_analogy_dir(tmp_path, [s])
        assert load_analogy_dir(tmp_path)[0].pairs == s.pairs


class TestSolve:
    def test_parallelogram(self):
        e = emb(["a", "a2", "b", "b2", "x", "y"], [[1, 0], [1, 2], [3, 0], [3, 2], [-1, 0.5], [0, -1]])
        (best,) = solve_3cosadd(e, "a", "a2", "b")
        assert best[0] == "b2" and best[1] == pytest.approx(1.0)

    def test_zero_offset_is_nearest_neighbour(self):
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(30)]
        e = emb(words, rng.normal(size=(30, 5)))
        got = [w for w, _ in solve_3cosadd(e, "w1", "w1", "w2", topn=5)]
        nn = [w for w, _ in nearest_neighbors(e, "w2", 6) if w != "w1"][:5]
        assert got == nn

    def test_oov_is_skip(self):
        e = emb(["a", "b", "c"], np.eye(3))
        assert solve_3cosadd(e, "a", "zzz", "b") is None
        z = emb(["a", "b", "c", "d"], [[1, 0], [0, 1], [0, 0], [1, 1]])
        assert solve_3cosadd(z, "a", "b", "c") is None

    def test_extra_exclusions(self):
        e = emb(["a", "a2", "b", "b2", "c"], [[1, 0], [1, 2], [3, 0], [3, 2], [3, 2.1]])
        assert solve_3cosadd(e, "a", "a2", "b", exclude={"b2"})[0][0] == "c"

    def test_ties_prefer_lower_id(self):
        e = emb(["q", "t1", "t2"], [[1, 0], [0, 1], [0, 1]])
        assert [w for w, _ in nearest_neighbors(e, "q", 2)] == ["t1", "t2"]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_rankings_scale_invariant_and_exclusive(self, seed, c):
        rng = np.random.default_rng(seed)
        words = [f"w{i}" for i in range(25)]
        vecs = rng.normal(size=(25, 6))
        a, a2, b = (f"w{i}" for i in rng.choice(25, 3, replace=False))
        r1 = solve_3cosadd(emb(words, vecs), a, a2, b, topn=24)
        r2 = solve_3cosadd(emb(words, vecs * c), a, a2, b, topn=24)
        assert [w for w, _ in r1] == [w for w, _ in r2]
        assert not {a, a2, b} & {w for w, _ in r1}
        n1 = nearest_neighbors(emb(words, vecs), b, 24)
        n2 = nearest_neighbors(emb(words, vecs * c), b, 24)
        assert [w for w, _ in n1] == [w for w, _ in n2]
        assert b not in {w for w, _ in n1}


class TestNeighbors:
    def test_n_zero(self):
        assert nearest_neighbors(emb(["a", "b"], np.eye(2)), "a", 0) == []

    def test_duplicate_ranked_first(self):
        e = emb(["a", "b", "c"], [[1, 0.2], [0.5, 1], [2, 0.4]])
        assert nearest_neighbors(e, "a", 1)[0][0] == "c"
        assert nearest_neighbors(e, "a", 1)[0][1] == pytest.approx(1.0)

    def test_oov_names_word(self):
        with pytest.raises(KeyError, match="nope"):
            nearest_neighbors(emb(["a"], [[1.0]]), "nope", 3)


# p:P, q:Q, r:R plus distractor d. Hand enumeration of the six questions:
#  p:P::q:?  target (0,1,1) = Q exactly                       -> Q  correct
#  p:P::r:?  target (1,1,1); R .870, Q .816, P excluded         -> R  correct
#  q:Q::p:?  target (1,0,1) = P exactly                       -> P  correct
#  q:Q::r:?  target (1,1,1); R .870, P .816                     -> R  correct
#  r:R::p:?  target (1,0,3); d .949 beats P .894                -> d  wrong
#  r:R::q:?  target (0,1,3); d .949 beats Q .894                -> d  wrong
TOY_WORDS = ["p", "P", "q", "Q", "r", "R", "d"]
TOY_VECS = [[1, 0, 0], [1, 0, 1], [0, 1, 0], [0, 1, 1], [1, 1, 0], [1, 1, 3], [0, 0, 1]]
TOY_SET = AnalogySet("toy", (("p", ("P",)), ("q", ("Q",)), ("r", ("R",))))
TOY_TOP1 = ["Q", "R", "P", "R", "d", "d"]


def _brute_top1(words, vecs, a, a2, b):
    vecs = np.asarray(vecs, dtype=float)
    t = vecs[words.index(a2)] - vecs[words.index(a)] + vecs[words.index(b)]
    best, best_s = None, -2.0
    for w, v in zip(words, vecs):
        if w in (a, a2, b):
            continue
        s = float(v @ t / np.linalg.norm(v) / np.linalg.norm(t))
        if s > best_s:
            best, best_s = w, s
    return best


class TestEvaluate:
    def test_hand_scored_category(self):
        e = emb(TOY_WORDS, TOY_VECS)
        questions = [(i, j) for i in range(3) for j in range(3) if i != j]
        got = [solve_3cosadd(e, TOY_SET.pairs[i][0], TOY_SET.pairs[i][1][0], TOY_SET.pairs[j][0])[0][0]
               for i, j in questions]
        assert got == TOY_TOP1
        assert got == [_brute_top1(TOY_WORDS, TOY_VECS, TOY_SET.pairs[i][0], TOY_SET.pairs[i][1][0],
                                   TOY_SET.pairs[j][0]) for i, j in questions]
        (r,) = evaluate(e, [TOY_SET]).results
        assert (r.attempted, r.skipped, r.correct) == (6, 0, 4)
        assert r.accuracy == pytest.approx(4 / 6)

    def test_two_pairs_two_questions(self):
        e = emb(["a", "b", "c", "d"], np.eye(4))
        (r,) = evaluate(e, [AnalogySet("x", (("a", ("b",)), ("c", ("d",))))]).results
        assert r.attempted + r.skipped == 2

    def test_all_oov(self):
        e = emb(["a"], [[1.0]])
        rep = evaluate(e, [AnalogySet("x", (("u", ("v",)), ("w", ("z",))))])
        (r,) = rep.results
        assert (r.attempted, r.skipped, r.accuracy) == (0, 2, None)
        assert rep.macro_accuracy is None
        assert "NA" in rep.to_tsv()

    def test_multiple_answers_and_macro_average(self):
        e = emb(TOY_WORDS, TOY_VECS)
        lenient = AnalogySet("lenient", (("p", ("P",)), ("q", ("Q",)), ("r", ("R", "d"))))
        rep = evaluate(e, [TOY_SET, lenient])
        assert [r.correct for r in rep.results] == [4, 4]
        rep2 = evaluate(e, [TOY_SET, AnalogySet("alt", (("r", ("zz", "R")), ("p", ("P",))))])
        assert rep2.results[1].attempted == 2
        assert rep2.macro_accuracy == pytest.approx((4 / 6 + rep2.results[1].accuracy) / 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(0, 4))
    def test_skip_accounting(self, seed, n_pairs, n_oov):
        rng = np.random.default_rng(seed)
        words = [f"w{i}" for i in range(20)]
        e = emb(words, rng.normal(size=(20, 4)))
        pool = words + [f"oov{i}" for i in range(n_oov)]
        picks = rng.choice(len(pool), size=2 * n_pairs, replace=False)
        pairs = tuple((pool[picks[2 * k]], (pool[picks[2 * k + 1]],)) for k in range(n_pairs))
        (r,) = evaluate(e, [AnalogySet("c", pairs)]).results
        assert r.attempted + r.skipped == n_pairs * (n_pairs - 1)
        assert 0 <= r.correct <= r.attempted
