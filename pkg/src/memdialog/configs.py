"""Experiment configuration with per-head defaults."""

import dataclasses
from dataclasses import dataclass
from typing import Optional

from . import encoding as enc
from . import nlg

# Defaults per response head: lr, embedding size, hop count, eval cadence.
HEAD_DEFAULTS = {
    nlg.CANDIDATES: {"lr": 0.0058, "d": 44, "n_hops": 1, "eval_every": 5},
    nlg.WORDBYWORD: {"lr": 0.0022, "d": 59, "n_hops": 3, "eval_every": 1},
}


@dataclass
class TrainConfig:
    task: int = 1
    nlg: str = nlg.CANDIDATES
    encoding: str = enc.POSITION
    lr: Optional[float] = None
    d: Optional[int] = None
    n_hops: Optional[int] = None
    hidden: int = 50
    ctx_words: int = 1
    batch_size: int = 32
    epochs: int = 100
    eval_every: Optional[int] = None
    seed: int = 0
    runs: int = 1
    init_mean: float = 1.0
    init_std: float = 0.1
    activation: str = "tanh"
    hidden_bias: bool = False
    untied_A: bool = False
    query_time_keyword: bool = False
    time_keywords: Optional[int] = None      # t; None = max train history length
    max_utterance_len: Optional[int] = None  # J; None = computed from train split
    max_response_len: Optional[int] = None   # decode cap; None = train max + 5
    dummy_candidates: int = 0
    stop_at_perfect: bool = False

    def resolved(self):
        """Fill in per-head defaults for unset fields."""
        if self.nlg not in HEAD_DEFAULTS:
            raise ValueError("unknown nlg head %r" % self.nlg)
        if self.encoding not in enc.MODES:
            raise ValueError("unknown encoding %r" % self.encoding)
        defaults = HEAD_DEFAULTS[self.nlg]
        updates = {k: v for k, v in defaults.items()
                   if getattr(self, k) is None}
        cfg = dataclasses.replace(self, **updates)
        for name in ("lr", "d", "n_hops", "hidden", "ctx_words", "batch_size",
                     "epochs", "eval_every"):
            if getattr(cfg, name) <= 0:
                raise ValueError("%s must be positive" % name)
        return cfg

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})
