"""Synthetic corpora with planted analogy and synonym structure.

Every family ``f`` has a base word, a plural, a diminutive and a synonym of
the base. All four share the family's topic words; plural and diminutive
forms are additionally introduced by their own marker words. The offset
plural - base is therefore the same marker contrast in every family, which
is what 3CosAdd should recover.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import AnalogySet

SINGULAR_MARKERS = ("one", "this", "each")
PLURAL_MARKERS = ("many", "these", "several")
DIMINUTIVE_MARKERS = ("little", "tiny", "small")


@dataclass(frozen=True)
class PlantedCorpus:
    lines: tuple[str, ...]
    analogies: tuple[AnalogySet, ...]
    synonyms: dict[str, str]

    @property
    def n_tokens(self) -> int:
        return sum(len(line.split()) for line in self.lines)


def _family_words(f: int) -> dict[str, str]:
    return {
        "base": f"thing{f:02d}",
        "plural": f"thing{f:02d}s",
        "diminutive": f"thing{f:02d}let",
        "synonym": f"item{f:02d}",
    }


def planted_pair_corpus(
    n_tokens: int = 200_000,
    n_families: int = 24,
    topics_per_family: int = 4,
    n_fillers: int = 400,
    seed: int = 0,
) -> PlantedCorpus:
    """Generate roughly ``n_tokens`` tokens of one-sentence-per-line text."""
    rng = np.random.default_rng(seed)
    families = [_family_words(f) for f in range(n_families)]
    topics = [[f"topic{f:02d}{chr(97 + t)}" for t in range(topics_per_family)] for f in range(n_families)]
    fillers = np.array([f"w{i:03d}" for i in range(n_fillers)])
    zipf = 1.0 / np.arange(1, n_fillers + 1)
    zipf /= zipf.sum()

    forms = ("base", "synonym", "plural", "diminutive")
    markers = {
        "base": SINGULAR_MARKERS,
        "synonym": SINGULAR_MARKERS,
        "plural": PLURAL_MARKERS,
        "diminutive": DIMINUTIVE_MARKERS,
    }
    lines = []
    total = 0
    while total < n_tokens:
        f = int(rng.integers(n_families))
        form = forms[int(rng.integers(len(forms)))]
        marker = markers[form][int(rng.integers(3))]
        t1, t2 = rng.choice(topics[f], size=2, replace=False)
        core = [marker, families[f][form], str(t1), str(t2)]
        pre = list(rng.choice(fillers, size=int(rng.integers(0, 4)), p=zipf))
        post = list(rng.choice(fillers, size=int(rng.integers(0, 4)), p=zipf))
        sent = pre + core + post
        lines.append(" ".join(sent))
        total += len(sent)

    plural = AnalogySet("plural", tuple((fw["base"], (fw["plural"],)) for fw in families))
    diminutive = AnalogySet("diminutive", tuple((fw["base"], (fw["diminutive"],)) for fw in families))
    synonyms = {fw["base"]: fw["synonym"] for fw in families}
    return PlantedCorpus(tuple(lines), (plural, diminutive), synonyms)
