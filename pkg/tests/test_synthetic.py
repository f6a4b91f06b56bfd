import pytest

from thermoembed.cooccur import WindowConfig, count
from thermoembed.corpus import build_vocabulary, segments
from thermoembed.evaluation import nearest_neighbors
from thermoembed.project import ProjectionSpec, build_projection, embed
from thermoembed.synthetic import planted_pair_corpus
from thermoembed.weighting import to_ppmi


class TestGenerator:
    def test_deterministic(self):
        assert planted_pair_corpus(5_000, seed=3).lines == planted_pair_corpus(5_000, seed=3).lines
        assert planted_pair_corpus(5_000, seed=3).lines != planted_pair_corpus(5_000, seed=4).lines

    def test_size_and_structure(self):
        c = planted_pair_corpus(20_000, n_families=21)
        assert abs(c.n_tokens - 20_000) < 500
        assert len(c.synonyms) == 21
        assert {a.name for a in c.analogies} == {"plural", "diminutive"}
        assert all(len(a.pairs) == 21 for a in c.analogies)

    def test_every_planted_word_occurs(self):
        c = planted_pair_corpus(20_000)
        seen = set(" ".join(c.lines).split())
        for a in c.analogies:
            for src, answers in a.pairs:
                assert src in seen and answers[0] in seen


@pytest.fixture(scope="module")
def planted_vectors():
    c = planted_pair_corpus(seed=11)
    vocab = build_vocabulary(c.lines)
    a = to_ppmi(count(segments(c.lines, vocab), vocab, WindowConfig(2)))
    e = embed(a, build_projection(ProjectionSpec(len(vocab), 300, seed=1)), vocab.tokens)
    return c, e


def test_planted_synonyms_are_close(planted_vectors):
    c, e = planted_vectors
    hits = sum(syn in [t for t, _ in nearest_neighbors(e, w, 3)] for w, syn in c.synonyms.items())
    assert hits >= 0.9 * len(c.synonyms)
