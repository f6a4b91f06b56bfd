"""Reference implementations kept independent of the package's fast paths."""

from collections import Counter
from math import log

import numpy as np


def naive_pair_counts(token_lines, index, window, symmetric=True, context_size=None):
    """Enumerate every in-window pair of in-vocabulary tokens, line by line."""
    n_ctx = len(index) if context_size is None else context_size
    counts = Counter()
    for toks in token_lines:
        ids = [index[t] for t in toks if t in index]
        for d in range(1, window + 1):
            for t, c in zip(ids, ids[d:]):
                if c < n_ctx:
                    counts[(t, c)] += 1
                if symmetric and t < n_ctx:
                    counts[(c, t)] += 1
    return dict(counts)


def dense_ppmi(w, alpha=0.75, shift_k=1.0):
    """Shifted, smoothed PPMI straight from the definition on a dense array."""
    w = np.asarray(w, dtype=np.float64)
    total = w.sum()
    p_tc = w / total
    p_t = w.sum(axis=1) / total
    col = w.sum(axis=0)
    p_c = col**alpha / (col**alpha).sum()
    out = np.zeros_like(w)
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            if w[i, j] > 0:
                out[i, j] = max(0.0, log(p_tc[i, j] / (p_t[i] * p_c[j])) - log(shift_k))
    return out


def cosine_matrix(x):
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x, axis=1)
    y = x / n[:, None]
    return y @ y.T
