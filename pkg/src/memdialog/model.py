"""End-to-end dialog model: encoder plus one response head, with analytic
backprop over every trainable tensor."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import corpus, encoding, kernels, memnet, nlg
from .numerics import init_normal, init_uniform

logger = logging.getLogger(__name__)


@dataclass
class PackedExample:
    """A subdialog encoded against a fixed vocabulary, ready for the kernels."""

    mem_toks: np.ndarray    # (M, L) int32, -1 padded
    mem_lens: np.ndarray    # (M,)
    query_toks: np.ndarray  # (Lq,) int32
    gold_tokens: tuple      # raw gold token strings (exact-match reference)
    gold_ids: np.ndarray    # (Lg,) int64
    gold_candidate_id: Optional[int] = None


@dataclass
class Prediction:
    tokens: tuple
    attention: list
    candidate_id: Optional[int] = None


def _encode_rows(utterances, vocab, mode, max_len):
    rows = []
    for utt in utterances:
        ids = vocab.encode(utt.tokens)
        if mode == encoding.BOW:
            rows.append(np.unique(ids))
        else:
            if len(ids) > max_len:
                logger.warning("utterance truncated from %d to %d tokens",
                               len(ids), max_len)
                ids = ids[:max_len]
            rows.append(np.asarray(ids, dtype=np.int32))
    return rows


def pack_subdialog(sd, vocab, config):
    """Attach temporal keywords, encode, and pack one subdialog."""
    t = config.time_keywords
    history = corpus.attach_time_keywords(sd.history, t)
    query = sd.query
    if config.query_time_keyword:
        query = corpus.Utterance(
            query.tokens + (corpus.time_token(min(len(sd.history), t - 1)),),
            query.speaker)
    max_len = config.max_utterance_len
    rows = _encode_rows(history, vocab, config.encoding, max_len)
    mem_toks, mem_lens = kernels.pack_token_rows(rows)
    qrow = _encode_rows([query], vocab, config.encoding, max_len)[0]
    return PackedExample(
        mem_toks=mem_toks,
        mem_lens=mem_lens,
        query_toks=np.asarray(qrow, dtype=np.int32),
        gold_tokens=tuple(sd.gold_tokens),
        gold_ids=np.asarray(vocab.encode(sd.gold_tokens), dtype=np.int64),
        gold_candidate_id=sd.gold_candidate_id,
    )


class DialogModel:
    """Holds parameters for the encoder and the configured response head.

    config must be resolved and carry time_keywords, max_utterance_len and
    max_response_len (the training pipeline fills these from the data).
    """

    def __init__(self, config, vocab, candidates=None, dtype=np.float32,
                 params=None):
        for field in ("time_keywords", "max_utterance_len", "max_response_len"):
            if getattr(config, field) is None:
                raise ValueError("config.%s must be set before building a model" % field)
        self.config = config
        self.vocab = vocab
        self.dtype = dtype
        d, V = config.d, vocab.size
        self.n_A = config.n_hops if config.untied_A else 1
        if config.encoding == encoding.POSITION:
            self.lweights = encoding.position_weights(
                config.max_utterance_len, d, dtype=dtype)
        else:
            self.lweights = None
        if params is None:
            params = self._init_params(d, V)
        self.params = params
        self.candidates = candidates
        if config.nlg == nlg.CANDIDATES:
            if candidates is None:
                raise ValueError("candidates head requires a candidate set")
            self._head = nlg.build_candidate_head(params["W"], candidates, vocab)
        else:
            self._head = None

    def _init_params(self, d, V):
        cfg = self.config
        seed = cfg.seed
        mean, std = cfg.init_mean, cfg.init_std
        params = {
            "A": init_normal((self.n_A, d, V), mean, std, seed, "A", self.dtype),
            "R": init_normal((cfg.n_hops, d, d), mean, std, seed, "R", self.dtype),
        }
        if cfg.nlg == nlg.CANDIDATES:
            params["W"] = init_normal((d, V), mean, std, seed, "W", self.dtype)
        else:
            H, m = cfg.hidden, cfg.ctx_words
            params["E"] = init_uniform((d, V), -1, 1, seed, "E", self.dtype)
            params["U_q"] = init_uniform((H, d), -1, 1, seed, "U_q", self.dtype)
            params["U_w"] = init_uniform((H, m * d), -1, 1, seed, "U_w", self.dtype)
            params["O"] = init_uniform((V, H), -1, 1, seed, "O", self.dtype)
            params["b"] = init_uniform((V,), -1, 1, seed, "b", self.dtype)
        return params

    # -- heads ------------------------------------------------------------

    @property
    def candidate_head(self):
        if self._head is None:
            raise ValueError("model has no candidates head")
        self._head.W = self.params["W"]
        return self._head

    @property
    def wordbyword_head(self):
        if self.config.nlg != nlg.WORDBYWORD:
            raise ValueError("model has no word-by-word head")
        p = self.params
        return nlg.WordByWordHead(E=p["E"], U_q=p["U_q"], U_w=p["U_w"],
                                  O=p["O"], b=p["b"],
                                  ctx_words=self.config.ctx_words,
                                  activation=self.config.activation)

    # -- encoder ----------------------------------------------------------

    def _embed_rows(self, A2d, toks, lens):
        out = np.zeros((toks.shape[0], A2d.shape[0]), dtype=A2d.dtype)
        if self.config.encoding == encoding.BOW:
            kernels.embed_bow(A2d, toks, lens, out)
        else:
            kernels.embed_pos(A2d, self.lweights, toks, lens, out)
        return out

    def _scatter_rows(self, dM, toks, lens, dA2d):
        if self.config.encoding == encoding.BOW:
            kernels.scatter_bow(dM, toks, lens, dA2d)
        else:
            kernels.scatter_pos(dM, self.lweights, toks, lens, dA2d)

    def _query_pack(self, ex):
        return (ex.query_toks[None, :],
                np.array([ex.query_toks.shape[0]], dtype=np.int32))

    def encode_forward(self, ex):
        """Embed memory and query, run the hop stack.

        Returns (q_final, attention trace, cache for backprop).
        """
        A = self.params["A"]
        if self.n_A == 1:
            memory = self._embed_rows(A[0], ex.mem_toks, ex.mem_lens)
        else:
            memory = [self._embed_rows(A[h], ex.mem_toks, ex.mem_lens)
                      for h in range(self.n_A)]
        qtoks, qlens = self._query_pack(ex)
        q1 = self._embed_rows(A[0], qtoks, qlens)[0]
        q_final, trace, hop_cache = memnet.forward_hops(q1, memory, self.params["R"])
        return q_final, trace, (memory, hop_cache)

    def encode_backward(self, ex, dq_final, cache, grads):
        memory, hop_cache = cache
        dq1, dmemory, dR = memnet.backward_hops(
            dq_final, memory, self.params["R"], hop_cache)
        grads["R"] += dR
        dA = grads["A"]
        if self.n_A == 1:
            self._scatter_rows(dmemory, ex.mem_toks, ex.mem_lens, dA[0])
        else:
            for h in range(self.n_A):
                self._scatter_rows(dmemory[h], ex.mem_toks, ex.mem_lens, dA[h])
        qtoks, qlens = self._query_pack(ex)
        self._scatter_rows(dq1[None, :], qtoks, qlens, dA[0])

    # -- inference --------------------------------------------------------

    def predict(self, ex):
        q_final, trace, _ = self.encode_forward(ex)
        if self.config.nlg == nlg.CANDIDATES:
            _, pred = nlg.score_candidates(q_final, self.candidate_head)
            return Prediction(tokens=tuple(self._head.responses[pred]),
                              attention=trace, candidate_id=pred)
        head = self.wordbyword_head
        ids = nlg.decode_greedy(q_final, head, self.vocab.start_ctx_id,
                                self.vocab.end_resp_id,
                                self.config.max_response_len)
        return Prediction(tokens=self.vocab.decode(ids), attention=trace)

    # -- training ---------------------------------------------------------

    def zero_grads(self):
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def loss_and_grads(self, batch):
        """Mean loss over a batch plus gradients for every parameter.

        Candidates head: mean over examples. Word-by-word head: mean over
        all token positions in the batch.
        """
        if not batch:
            raise ValueError("empty batch")
        grads = self.zero_grads()
        total = 0.0
        if self.config.nlg == nlg.CANDIDATES:
            head = self.candidate_head
            scale = 1.0 / len(batch)
            for ex in batch:
                if ex.gold_candidate_id is None:
                    raise ValueError("example lacks a gold candidate id")
                q_final, _, cache = self.encode_forward(ex)
                loss, dW, dq = nlg.candidate_loss_grads(
                    q_final, head, ex.gold_candidate_id, scale=scale)
                total += loss
                grads["W"] += dW
                self.encode_backward(ex, dq, cache, grads)
        else:
            head = self.wordbyword_head
            positions = sum(ex.gold_ids.shape[0] + 1 for ex in batch)
            scale = 1.0 / positions
            for ex in batch:
                q_final, _, cache = self.encode_forward(ex)
                loss, dq = nlg.teacher_forced_loss(
                    q_final, ex.gold_ids, head, self.vocab.start_ctx_id,
                    self.vocab.end_resp_id, grads=grads, scale=scale)
                total += loss
                self.encode_backward(ex, dq, cache, grads)
        return total, grads

    def loss(self, batch):
        return self.loss_and_grads(batch)[0]
