"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

Set MEMDIALOG_NO_NUMBA=1 to force the numpy path. Both implementations are
kept importable so the kernel benchmark can compare them directly.

Token matrices are int32, padded with -1 past each row's length.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco

USE_NUMBA = HAVE_NUMBA and os.environ.get("MEMDIALOG_NO_NUMBA", "") not in ("1", "true")


def pack_token_rows(rows, pad=-1):
    """Pack variable-length id lists into a (n, max_len) int32 matrix + lengths."""
    n = len(rows)
    width = max((len(r) for r in rows), default=0)
    toks = np.full((n, max(width, 1)), pad, dtype=np.int32)
    lens = np.zeros(n, dtype=np.int32)
    for i, r in enumerate(rows):
        lens[i] = len(r)
        if len(r):
            toks[i, : len(r)] = r
    return toks, lens


# ---------------------------------------------------------------------------
# numba implementations (plain loops, njit-compiled below)


def _embed_bow_loops(A, toks, lens, out):
    d = A.shape[0]
    for i in range(toks.shape[0]):
        for j in range(lens[i]):
            w = toks[i, j]
            for k in range(d):
                out[i, k] += A[k, w]


def _embed_pos_loops(A, lw, toks, lens, out):
    d = A.shape[0]
    for i in range(toks.shape[0]):
        for j in range(lens[i]):
            w = toks[i, j]
            for k in range(d):
                out[i, k] += lw[k, j] * A[k, w]


def _scatter_bow_loops(dM, toks, lens, dA):
    d = dA.shape[0]
    for i in range(toks.shape[0]):
        for j in range(lens[i]):
            w = toks[i, j]
            for k in range(d):
                dA[k, w] += dM[i, k]


def _scatter_pos_loops(dM, lw, toks, lens, dA):
    d = dA.shape[0]
    for i in range(toks.shape[0]):
        for j in range(lens[i]):
            w = toks[i, j]
            for k in range(d):
                dA[k, w] += lw[k, j] * dM[i, k]


def _candidate_scores_loops(u, toks, lens, out):
    for c in range(toks.shape[0]):
        s = 0.0
        for j in range(lens[c]):
            s += u[toks[c, j]]
        out[c] = s


def _candidate_grad_loops(dscores, toks, lens, du):
    for c in range(toks.shape[0]):
        g = dscores[c]
        for j in range(lens[c]):
            du[toks[c, j]] += g


# ---------------------------------------------------------------------------
# numpy implementations


def _embed_bow_numpy(A, toks, lens, out):
    for i in range(toks.shape[0]):
        n = lens[i]
        if n:
            out[i] += A[:, toks[i, :n]].sum(axis=1)


def _embed_pos_numpy(A, lw, toks, lens, out):
    for i in range(toks.shape[0]):
        n = lens[i]
        if n:
            out[i] += (A[:, toks[i, :n]] * lw[:, :n]).sum(axis=1)


def _scatter_bow_numpy(dM, toks, lens, dA):
    cols = []
    vals = []
    for i in range(toks.shape[0]):
        n = lens[i]
        if n:
            cols.append(toks[i, :n])
            vals.append(np.repeat(dM[i : i + 1], n, axis=0))
    if cols:
        cols = np.concatenate(cols)
        vals = np.concatenate(vals, axis=0).T
        np.add.at(dA, (slice(None), cols), vals)


def _scatter_pos_numpy(dM, lw, toks, lens, dA):
    cols = []
    vals = []
    for i in range(toks.shape[0]):
        n = lens[i]
        if n:
            cols.append(toks[i, :n])
            vals.append(lw[:, :n] * dM[i][:, None])
    if cols:
        cols = np.concatenate(cols)
        vals = np.concatenate(vals, axis=1)
        np.add.at(dA, (slice(None), cols), vals)


def _candidate_scores_numpy(u, toks, lens, out):
    mask = np.arange(toks.shape[1]) < lens[:, None]
    safe = np.where(mask, toks, 0)
    np.sum(u[safe] * mask, axis=1, out=out)


def _candidate_grad_numpy(dscores, toks, lens, du):
    mask = np.arange(toks.shape[1]) < lens[:, None]
    flat = toks[mask]
    np.add.at(du, flat, np.repeat(dscores, lens))


_NUMPY_IMPLS = {
    "embed_bow": _embed_bow_numpy,
    "embed_pos": _embed_pos_numpy,
    "scatter_bow": _scatter_bow_numpy,
    "scatter_pos": _scatter_pos_numpy,
    "candidate_scores": _candidate_scores_numpy,
    "candidate_grad": _candidate_grad_numpy,
}

if HAVE_NUMBA:
    _NUMBA_IMPLS = {
        "embed_bow": njit(cache=True)(_embed_bow_loops),
        "embed_pos": njit(cache=True)(_embed_pos_loops),
        "scatter_bow": njit(cache=True)(_scatter_bow_loops),
        "scatter_pos": njit(cache=True)(_scatter_pos_loops),
        "candidate_scores": njit(cache=True)(_candidate_scores_loops),
        "candidate_grad": njit(cache=True)(_candidate_grad_loops),
    }
else:
    _NUMBA_IMPLS = {}

BACKEND = "numba" if USE_NUMBA else "numpy"
_ACTIVE = _NUMBA_IMPLS if USE_NUMBA else _NUMPY_IMPLS

embed_bow = _ACTIVE["embed_bow"]
embed_pos = _ACTIVE["embed_pos"]
scatter_bow = _ACTIVE["scatter_bow"]
scatter_pos = _ACTIVE["scatter_pos"]
candidate_scores = _ACTIVE["candidate_scores"]
candidate_grad = _ACTIVE["candidate_grad"]


def implementations():
    """name -> {backend: fn} for every kernel, for benchmarking/testing."""
    out = {}
    for name, fn in _NUMPY_IMPLS.items():
        out[name] = {"numpy": fn}
        if HAVE_NUMBA:
            out[name]["numba"] = _NUMBA_IMPLS[name]
    return out
