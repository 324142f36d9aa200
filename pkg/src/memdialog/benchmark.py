"""Latency and space study: response-head cost as a function of the
candidate-set size, plus a kernel backend (numba vs numpy) comparison."""

import hashlib
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from . import corpus, kernels, nlg


def gen_dummy_candidates(n, candidates, vocab=None):
    """Extend a candidate set with n unique synthetic responses.

    Each dummy is the single token "dummy_<i>"; new tokens are appended to
    the vocabulary when one is given. Deterministic.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    out = corpus.CandidateSet(candidates.responses)
    for i in range(n):
        word = "dummy_%d" % i
        out.add((word,))
        if vocab is not None and word not in vocab.word_to_id:
            vocab.add_word(word)
    return out


def _machine_descriptor():
    return "%s / %s / python %s / kernels=%s" % (
        platform.platform(), platform.processor() or platform.machine(),
        platform.python_version(), kernels.BACKEND)


def _params_checksum(model):
    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name]).tobytes())
    return h.hexdigest()


def _candidate_head_at_size(model, c_total):
    """Candidate head inflated to c_total candidates with dummies.

    Dummy tokens get zero-initialized scoring columns; timing is what
    matters here, the model itself is untouched.
    """
    base = model.candidates
    if c_total < len(base):
        raise ValueError("cannot shrink candidate set below %d" % len(base))
    vocab = corpus.Vocabulary.from_words(model.vocab.id_to_word,
                                         model.vocab.n_time)
    cands = gen_dummy_candidates(c_total - len(base), base, vocab)
    d = model.config.d
    W = model.params["W"]
    extra = vocab.size - W.shape[1]
    W_ext = np.concatenate([W, np.zeros((d, extra), dtype=W.dtype)], axis=1)
    return nlg.build_candidate_head(W_ext, cands, vocab)


@dataclass
class LatencyReport:
    head: str
    machine: str = field(default_factory=_machine_descriptor)
    rows: list = field(default_factory=list)   # {"c", "median_s", "p95_s"}

    def records(self):
        return [dict(head=self.head, machine=self.machine, **row)
                for row in self.rows]


def measure_prediction_latency(model, examples, c_values, trials=100,
                               warmup=10):
    """Median/p95 wall-clock seconds per prediction for each candidate-set
    size. For the word-by-word head the candidate set is loaded but unused
    (its decoding cost does not depend on it). Model parameters are
    checksummed before and after."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    before = _params_checksum(model)
    report = LatencyReport(head=model.config.nlg)
    is_candidates = model.config.nlg == nlg.CANDIDATES
    for c in sorted(c_values):
        if is_candidates:
            head = _candidate_head_at_size(model, c)

            def predict(ex, head=head):
                q, _, _ = model.encode_forward(ex)
                nlg.score_candidates(q, head)
        else:
            # candidate set of the requested size is present but unused
            base = model_candidates_or_empty(model)
            gen_dummy_candidates(max(0, c - len(base)), base)

            def predict(ex):
                model.predict(ex)

        for i in range(warmup):
            predict(examples[i % len(examples)])
        times = []
        for i in range(trials):
            ex = examples[i % len(examples)]
            t0 = time.perf_counter()
            predict(ex)
            times.append(time.perf_counter() - t0)
        times = np.sort(times)
        report.rows.append({
            "c": int(c),
            "median_s": float(np.median(times)),
            "p95_s": float(times[min(len(times) - 1, int(0.95 * len(times)))]),
        })
    if _params_checksum(model) != before:
        raise RuntimeError("benchmark mutated model parameters")
    return report


def model_candidates_or_empty(model):
    return model.candidates if model.candidates is not None else corpus.CandidateSet()


def fit_linear(xs, ys):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def measure_space(model, c_total=None):
    """Parameter bytes and candidate-encoding bytes, reported separately."""
    param_bytes = sum(int(v.nbytes) for v in model.params.values())
    cand_bytes = 0
    n_candidates = 0
    if model.config.nlg == nlg.CANDIDATES:
        head = (model.candidate_head if c_total is None
                else _candidate_head_at_size(model, c_total))
        cand_bytes = int(head.cand_toks.nbytes + head.cand_lens.nbytes)
        n_candidates = head.n_candidates
    return {"head": model.config.nlg, "param_bytes": param_bytes,
            "candidate_bytes": cand_bytes, "n_candidates": n_candidates}


def compare_kernel_backends(d=64, vocab_size=4000, n_rows=200, row_len=12,
                            n_candidates=4212, trials=50, seed=0):
    """Time each kernel under every available backend on synthetic data."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, vocab_size)).astype(np.float32)
    lw = rng.normal(size=(d, row_len)).astype(np.float32)
    toks = rng.integers(0, vocab_size, size=(n_rows, row_len)).astype(np.int32)
    lens = np.full(n_rows, row_len, dtype=np.int32)
    dM = rng.normal(size=(n_rows, d)).astype(np.float32)
    u = rng.normal(size=vocab_size).astype(np.float32)
    ctoks = rng.integers(0, vocab_size, size=(n_candidates, row_len)).astype(np.int32)
    clens = np.full(n_candidates, row_len, dtype=np.int32)
    dscores = rng.normal(size=n_candidates).astype(np.float32)
    calls = {
        "embed_bow": lambda f: f(A, toks, lens, np.zeros((n_rows, d), np.float32)),
        "embed_pos": lambda f: f(A, lw, toks, lens, np.zeros((n_rows, d), np.float32)),
        "scatter_bow": lambda f: f(dM, toks, lens, np.zeros_like(A)),
        "scatter_pos": lambda f: f(dM, lw, toks, lens, np.zeros_like(A)),
        "candidate_scores": lambda f: f(u, ctoks, clens,
                                        np.zeros(n_candidates, np.float32)),
        "candidate_grad": lambda f: f(dscores, ctoks, clens,
                                      np.zeros(vocab_size, np.float32)),
    }
    rows = []
    for name, impls in kernels.implementations().items():
        for backend, fn in impls.items():
            call = calls[name]
            call(fn)  # warmup / jit compile
            t0 = time.perf_counter()
            for _ in range(trials):
                call(fn)
            elapsed = (time.perf_counter() - t0) / trials
            rows.append({"kernel": name, "backend": backend,
                         "mean_s": float(elapsed)})
    return {"machine": _machine_descriptor(), "rows": rows}
