"""Numeric building blocks: softmax, cross entropy, Adam, seeded inits,
finite-difference gradient checking."""

import zlib

import numpy as np

PROB_FLOOR = 1e-12


def softmax(v):
    """Stable softmax (max subtraction)."""
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("softmax of empty vector")
    shifted = v - v.max()
    e = np.exp(shifted)
    return e / e.sum()


def cross_entropy(probs, target):
    """-ln(probs[target]) with a floor so near-zero gold probability stays finite."""
    probs = np.asarray(probs)
    if not 0 <= target < probs.shape[0]:
        raise IndexError("target %d out of range for %d classes" % (target, probs.shape[0]))
    return float(-np.log(max(float(probs[target]), PROB_FLOOR)))


def tensor_rng(seed, name):
    """Deterministic per-tensor stream derived from (seed, tensor name)."""
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def init_uniform(shape, lo, hi, seed, name="w", dtype=np.float32):
    if not lo < hi:
        raise ValueError("need lo < hi")
    return tensor_rng(seed, name).uniform(lo, hi, size=shape).astype(dtype)


def init_normal(shape, mean, std, seed, name="w", dtype=np.float32):
    if std <= 0:
        raise ValueError("std must be positive")
    return tensor_rng(seed, name).normal(mean, std, size=shape).astype(dtype)


class Adam:
    """Adam over a dict of named parameter arrays, with bias correction."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads, lr):
        self.step_count += 1
        t = self.step_count
        for key, p in params.items():
            g = grads[key]
            if g.shape != p.shape:
                raise ValueError("gradient shape mismatch for %r: %s vs %s"
                                 % (key, g.shape, p.shape))
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p -= (lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype)


def finite_diff_grad(loss_fn, params, epsilon=1e-4):
    """Central-difference gradient of loss_fn(params) per coordinate.

    Meant for small float64 parameter sets; loss_fn must be deterministic.
    """
    grads = {}
    for key, p in params.items():
        g = np.zeros_like(p, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            hi = loss_fn(params)
            flat[i] = orig - epsilon
            lo = loss_fn(params)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise FloatingPointError("non-finite loss during gradient check")
            gflat[i] = (hi - lo) / (2 * epsilon)
        grads[key] = g
    return grads


def relative_grad_error(analytic, numeric):
    """max_i |a_i - n_i| / max(1e-8, max |n|) over all tensors."""
    worst = 0.0
    for key, a in analytic.items():
        n = numeric[key]
        scale = max(1e-8, float(np.max(np.abs(n))), float(np.max(np.abs(a))))
        worst = max(worst, float(np.max(np.abs(a - n))) / scale)
    return worst
