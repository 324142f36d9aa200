"""Response generation heads: candidate selection and word-by-word decoding."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .numerics import cross_entropy, softmax

CANDIDATES = "candidates"
WORDBYWORD = "wordbyword"
HEADS = (CANDIDATES, WORDBYWORD)

ACTIVATIONS = ("tanh", "sigmoid", "relu")


@dataclass
class CandidateHead:
    """Scores q against every candidate's 0/1 bag-of-words encoding."""

    W: np.ndarray          # (d, V)
    cand_toks: np.ndarray  # (C, L) distinct token ids per candidate, -1 padded
    cand_lens: np.ndarray  # (C,)
    responses: list        # candidate id -> token tuple

    @property
    def n_candidates(self):
        return len(self.responses)


def build_candidate_head(W, candidates, vocab):
    rows = [np.unique(vocab.encode(r)) for r in candidates.responses]
    toks, lens = kernels.pack_token_rows(rows)
    return CandidateHead(W=W, cand_toks=toks, cand_lens=lens,
                         responses=list(candidates.responses))


def score_candidates(q, head):
    """Softmax over q^T W Phi(y_i); ties go to the lowest candidate id."""
    if head.n_candidates == 0:
        raise ValueError("empty candidate set")
    u = head.W.T @ q
    scores = np.zeros(head.n_candidates, dtype=q.dtype)
    kernels.candidate_scores(u, head.cand_toks, head.cand_lens, scores)
    a_hat = softmax(scores)
    return a_hat, int(np.argmax(a_hat))


def candidate_loss_grads(q, head, gold_id, scale=1.0):
    """Cross-entropy loss of the gold candidate plus gradients (dW, dq)."""
    a_hat, _ = score_candidates(q, head)
    loss = cross_entropy(a_hat, gold_id)
    dscores = (a_hat * scale).astype(q.dtype)
    dscores[gold_id] -= scale
    du = np.zeros(head.W.shape[1], dtype=q.dtype)
    kernels.candidate_grad(dscores, head.cand_toks, head.cand_lens, du)
    dW = np.outer(q, du)
    dq = head.W @ du
    return loss * scale, dW, dq


@dataclass
class WordByWordHead:
    """Feedforward decoder emitting one token per step.

    Input per step: encoder output q plus the embeddings of the last
    ctx_words emitted tokens; output is a distribution over the vocabulary.
    """

    E: np.ndarray    # (d, V) decoder word embeddings
    U_q: np.ndarray  # (H, d)
    U_w: np.ndarray  # (H, ctx_words * d)
    O: np.ndarray    # (V, H)
    b: np.ndarray    # (V,)
    ctx_words: int
    activation: str = "tanh"


def _activate(a, kind):
    if kind == "tanh":
        return np.tanh(a)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-a))
    if kind == "relu":
        return np.maximum(a, 0)
    raise ValueError("unknown activation %r" % kind)


def _activate_grad_from_output(h, kind):
    if kind == "tanh":
        return 1.0 - h * h
    if kind == "sigmoid":
        return h * (1.0 - h)
    if kind == "relu":
        return (h > 0).astype(h.dtype)
    raise ValueError("unknown activation %r" % kind)


def decoder_step(q, context_ids, head):
    """One decoder step; returns (probs, cache for backprop)."""
    ids = np.asarray(context_ids, dtype=np.int64)
    if ids.shape[0] != head.ctx_words:
        raise ValueError("context must hold exactly %d ids" % head.ctx_words)
    x = head.E[:, ids].T.reshape(-1)
    a = head.U_q @ q + head.U_w @ x
    h = _activate(a, head.activation)
    z = head.O @ h + head.b
    probs = softmax(z).astype(q.dtype)
    return probs, (ids, x, h, probs)


def decoder_step_backward(q, head, cache, dz, grads, dq):
    """Backprop one step given dloss/dz; accumulates into grads and dq."""
    ids, x, h, _ = cache
    grads["b"] += dz
    grads["O"] += np.outer(dz, h)
    dh = head.O.T @ dz
    da = dh * _activate_grad_from_output(h, head.activation)
    grads["U_q"] += np.outer(da, q)
    dq += head.U_q.T @ da
    grads["U_w"] += np.outer(da, x)
    dx = head.U_w.T @ da
    d = head.E.shape[0]
    dxc = dx.reshape(head.ctx_words, d)
    for j in range(head.ctx_words):
        grads["E"][:, ids[j]] += dxc[j]


def _shift_context(context, new_id):
    return np.concatenate([context[1:], [new_id]]) if context.shape[0] > 1 \
        else np.array([new_id], dtype=context.dtype)


def initial_context(head, start_id):
    return np.full(head.ctx_words, start_id, dtype=np.int64)


def decode_greedy(q, head, start_id, end_id, max_len):
    """Greedy decode: argmax per step (ties to lowest id), feed the emitted
    token's embedding back as context, stop at the end token or max_len."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    context = initial_context(head, start_id)
    out = []
    for _ in range(max_len):
        probs, _ = decoder_step(q, context, head)
        tok = int(np.argmax(probs))
        if tok == end_id:
            break
        out.append(tok)
        context = _shift_context(context, tok)
    return out


def teacher_forced_loss(q, gold_ids, head, start_id, end_id, grads=None, scale=1.0):
    """Summed per-step cross entropy with gold-prefix contexts.

    Targets are gold_1..gold_L then the end-of-response token. When grads is
    given, decoder gradients are accumulated and (loss, dq) returned;
    otherwise just the loss.
    """
    gold = np.asarray(gold_ids, dtype=np.int64)
    if gold.size == 0:
        raise ValueError("gold response must be non-empty")
    context = initial_context(head, start_id)
    targets = list(gold) + [end_id]
    loss = 0.0
    dq = np.zeros_like(q)
    for target in targets:
        probs, cache = decoder_step(q, context, head)
        loss += cross_entropy(probs, target) * scale
        if grads is not None:
            dz = (probs * scale).astype(q.dtype)
            dz[target] -= scale
            decoder_step_backward(q, head, cache, dz, grads, dq)
        context = _shift_context(context, target)
    if grads is not None:
        return loss, dq
    return loss
