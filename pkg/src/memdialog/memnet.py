"""Memory Network encoder: attention over embedded history, stacked hops."""

import numpy as np

from .numerics import softmax


def hop(q, memory, R_h):
    """One attention pass: p = softmax(q . m_i), o = R_h @ sum_i p_i m_i.

    Empty memory yields o = 0 and an empty relevance vector (the additive
    stack makes 0 the neutral output).
    """
    if memory.shape[0] == 0:
        return np.zeros_like(q), np.zeros(0, dtype=q.dtype)
    p = softmax(memory @ q).astype(q.dtype)
    c = p @ memory
    return R_h @ c, p


def _memory_at(memory, h):
    return memory[h] if isinstance(memory, (list, tuple)) else memory


def forward_hops(q1, memory, R):
    """Stack hops: q_{h+1} = q_h + o_h.

    memory is one (M, d) matrix shared by all hops, or a list with one
    matrix per hop (untied embeddings). Returns (q_final, relevances, cache).
    """
    q = q1
    trace = []
    cache = []
    for h in range(R.shape[0]):
        mem = _memory_at(memory, h)
        if mem.shape[0] == 0:
            p = np.zeros(0, dtype=q.dtype)
            c = np.zeros_like(q)
            o = np.zeros_like(q)
        else:
            p = softmax(mem @ q).astype(q.dtype)
            c = p @ mem
            o = R[h] @ c
        cache.append((q, p, c))
        trace.append(p)
        q = q + o
    return q, trace, cache


def backward_hops(dq_final, memory, R, cache):
    """Backprop through the hop stack.

    Returns (dq1, dmemory, dR); dmemory mirrors the structure of memory
    (single matrix, or one per hop). Memory gradients cover both the
    attended values and the attention scores.
    """
    n_hops = R.shape[0]
    tied = not isinstance(memory, (list, tuple))
    dR = np.zeros_like(R)
    if tied:
        dmemory = np.zeros_like(memory)
    else:
        dmemory = [np.zeros_like(m) for m in memory]
    dq = dq_final
    for h in range(n_hops - 1, -1, -1):
        mem = _memory_at(memory, h)
        if mem.shape[0] == 0:
            continue
        dmem = dmemory if tied else dmemory[h]
        q_h, p, c = cache[h]
        # q_{h+1} = q_h + R_h c
        dR[h] += np.outer(dq, c)
        dc = R[h].T @ dq
        # c = sum_i p_i m_i
        dp = mem @ dc
        dmem += np.outer(p, dc)
        # softmax over scores s_i = q_h . m_i
        ds = p * (dp - p @ dp)
        dmem += np.outer(ds, q_h)
        dq = dq + mem.T @ ds
    return dq, dmemory, dR
