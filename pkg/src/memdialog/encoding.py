"""Utterance encodings: multi-hot BOW vectors, position weights, embeddings."""

import numpy as np

BOW = "bow"
POSITION = "position"
MODES = (BOW, POSITION)


def bow_vector(token_ids, vocab_size):
    """Active-index form of the V-dimensional 0/1 bag-of-words vector."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        raise ValueError("token id out of range [0, %d)" % vocab_size)
    return np.unique(ids).astype(np.int32)


def position_weights(max_len, dim, dtype=np.float64):
    """Per-position, per-dimension weights; 1-based k in [1,d], j in [1,J]:
    l[k][j] = (1 - j/J) - (k/d) * (1 - 2j/J)."""
    if max_len < 1 or dim < 1:
        raise ValueError("max_len and dim must be >= 1")
    j = np.arange(1, max_len + 1, dtype=np.float64)[None, :]
    k = np.arange(1, dim + 1, dtype=np.float64)[:, None]
    l = (1 - j / max_len) - (k / dim) * (1 - 2 * j / max_len)
    return l.astype(dtype)


def embed_utterance(token_ids, A, mode, weights=None):
    """Embed one utterance as a d-vector.

    bow: sum of A columns over distinct tokens (multiplicity ignored).
    position: sum over token positions of weights[:, j] * A[:, token_j],
    per occurrence, truncated to the weight matrix width.
    """
    if len(token_ids) == 0:
        raise ValueError("cannot embed an empty utterance")
    if mode == BOW:
        active = bow_vector(token_ids, A.shape[1])
        return A[:, active].sum(axis=1)
    if mode == POSITION:
        if weights is None:
            raise ValueError("position mode requires a weight matrix")
        ids = np.asarray(token_ids, dtype=np.int64)[: weights.shape[1]]
        return (A[:, ids] * weights[:, : ids.size]).sum(axis=1)
    raise ValueError("unknown encoding mode %r" % mode)
