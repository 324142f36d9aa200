"""Training loop: batching, shuffling, validation-based model selection,
checkpoint persistence."""

import dataclasses
import hashlib
import io
import json
import logging
import struct
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import corpus, nlg
from .configs import TrainConfig
from .model import DialogModel, pack_subdialog
from .numerics import Adam

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MDCK"
CHECKPOINT_VERSION = 1
_DTYPE_CODES = {0: np.float32, 1: np.float64}
_DTYPE_IDS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class TrainingDiverged(Exception):
    pass


class CheckpointError(Exception):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class HeadMismatchError(CheckpointError):
    pass


@dataclass
class EvalPoint:
    epoch: int
    train_loss: float
    val_accuracy: float

    def to_json(self):
        return json.dumps({"epoch": self.epoch, "train_loss": self.train_loss,
                           "val_accuracy": self.val_accuracy})


@dataclass
class Checkpoint:
    config: TrainConfig
    vocab_words: list
    n_time: int
    candidates: list            # candidate id -> token list ([] for wordbyword)
    params: dict
    epoch: int
    metrics: dict
    version: int = CHECKPOINT_VERSION


@dataclass
class PreparedTask:
    config: TrainConfig
    vocab: corpus.Vocabulary
    candidates: corpus.CandidateSet
    train_examples: list = field(default_factory=list)
    val_examples: list = field(default_factory=list)


def resolve_data_defaults(config, train_dialogs):
    """Fill t, J and the decode cap from the training split."""
    cfg = config.resolved()
    updates = {}
    if cfg.time_keywords is None:
        updates["time_keywords"] = corpus.max_history_length(train_dialogs)
    if cfg.max_utterance_len is None:
        updates["max_utterance_len"] = corpus.max_utterance_length(train_dialogs)
    if cfg.max_response_len is None:
        updates["max_response_len"] = corpus.max_response_length(train_dialogs) + 5
    return dataclasses.replace(cfg, **updates)


def prepare_task(config, train_dialogs, val_dialogs, candidates):
    """Resolve config against the data, build vocabulary and packed examples."""
    cfg = resolve_data_defaults(config, train_dialogs)
    if cfg.dummy_candidates > 0 and cfg.nlg == nlg.CANDIDATES:
        from .benchmark import gen_dummy_candidates

        candidates = gen_dummy_candidates(cfg.dummy_candidates, candidates)
    vocab = corpus.build_vocabulary(train_dialogs, candidates,
                                    t=cfg.time_keywords)
    train_sds = [sd for d in train_dialogs for sd in corpus.split_subdialogs(d)]
    val_sds = [sd for d in val_dialogs for sd in corpus.split_subdialogs(d)]
    if cfg.nlg == nlg.CANDIDATES:
        train_sds = corpus.attach_gold_candidate_ids(train_sds, candidates)
    prepared = PreparedTask(config=cfg, vocab=vocab, candidates=candidates)
    prepared.train_examples = [pack_subdialog(sd, vocab, cfg) for sd in train_sds]
    prepared.val_examples = [pack_subdialog(sd, vocab, cfg) for sd in val_sds]
    return prepared


def _examples_correct(model, examples):
    return sum(1 for ex in examples
               if model.predict(ex).tokens == ex.gold_tokens)


def validation_accuracy(model, examples):
    if not examples:
        return 0.0
    return _examples_correct(model, examples) / len(examples)


def train(config, train_dialogs, val_dialogs, candidates, log_stream=None):
    """Train one run; returns (best-epoch Checkpoint, eval history).

    Model selection: highest validation per-response accuracy, ties to the
    earlier epoch. With config.stop_at_perfect, training stops once
    validation accuracy reaches 1.0 (no later epoch can be selected).
    """
    prepared = prepare_task(config, train_dialogs, val_dialogs, candidates)
    cfg = prepared.config
    model = DialogModel(cfg, prepared.vocab, prepared.candidates)
    optimizer = Adam(model.params)
    n = len(prepared.train_examples)
    if n == 0 or not prepared.val_examples:
        raise ValueError("training and validation sets must be non-empty")
    history = []
    best = None  # (accuracy, epoch, params snapshot)
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        rng = np.random.default_rng([cfg.seed, 7919, epoch])
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            batch = [prepared.train_examples[i]
                     for i in order[start : start + cfg.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    "non-finite loss at epoch %d batch %d"
                    % (epoch, start // cfg.batch_size))
            optimizer.step(model.params, grads, cfg.lr)
            losses.append(loss)
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            val_acc = validation_accuracy(model, prepared.val_examples)
            point = EvalPoint(epoch=epoch, train_loss=float(np.mean(losses)),
                              val_accuracy=val_acc)
            history.append(point)
            if log_stream is not None:
                log_stream.write(point.to_json() + "\n")
                log_stream.flush()
            logger.info("epoch %d: train loss %.5f, val accuracy %.4f (%.1fs)",
                        epoch, point.train_loss, val_acc,
                        time.perf_counter() - t0)
            if best is None or val_acc > best[0]:
                best = (val_acc, epoch,
                        {k: v.copy() for k, v in model.params.items()})
            if cfg.stop_at_perfect and val_acc >= 1.0:
                break
    acc, epoch, params = best
    ckpt = Checkpoint(
        config=cfg,
        vocab_words=list(prepared.vocab.id_to_word),
        n_time=prepared.vocab.n_time,
        candidates=[list(r) for r in prepared.candidates.responses]
        if cfg.nlg == nlg.CANDIDATES else [],
        params=params,
        epoch=epoch,
        metrics={"val_accuracy": acc},
    )
    return ckpt, history


def train_runs(config, train_dialogs, val_dialogs, candidates, log_stream=None):
    """The multi-run protocol: run seeds seed+i, report every run, return
    them ordered as executed plus the index of the best validation run."""
    results = []
    for i in range(config.runs):
        run_cfg = dataclasses.replace(config, seed=config.seed + i)
        ckpt, history = train(run_cfg, train_dialogs, val_dialogs, candidates,
                              log_stream=log_stream)
        results.append((ckpt, history))
        logger.info("run %d/%d: best val accuracy %.4f at epoch %d",
                    i + 1, config.runs, ckpt.metrics["val_accuracy"], ckpt.epoch)
    best_idx = max(range(len(results)),
                   key=lambda i: (results[i][0].metrics["val_accuracy"], -i))
    return results, best_idx


# ---------------------------------------------------------------------------
# checkpoint serialization: magic, version, json metadata, raw tensor blocks,
# trailing sha256 over everything before it.


def save_checkpoint(path, ckpt):
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", ckpt.version))
    meta = {
        "config": ckpt.config.to_dict(),
        "vocab_words": ckpt.vocab_words,
        "n_time": ckpt.n_time,
        "candidates": ckpt.candidates,
        "epoch": ckpt.epoch,
        "metrics": ckpt.metrics,
    }
    meta_bytes = json.dumps(meta).encode("utf-8")
    buf.write(struct.pack("<Q", len(meta_bytes)))
    buf.write(meta_bytes)
    buf.write(struct.pack("<I", len(ckpt.params)))
    for name in sorted(ckpt.params):
        tensor = np.ascontiguousarray(ckpt.params[name])
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", _DTYPE_IDS[tensor.dtype]))
        buf.write(struct.pack("<B", tensor.ndim))
        for dim in tensor.shape:
            buf.write(struct.pack("<I", dim))
        buf.write(tensor.astype(tensor.dtype.newbyteorder("<")).tobytes())
    payload = buf.getvalue()
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as f:
        f.write(payload)
        f.write(digest)


def load_checkpoint(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 4 + 32:
        raise CheckpointCorruptError("file too short to be a checkpoint")
    payload, digest = blob[:-32], blob[-32:]
    if payload[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError("bad magic bytes")
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointCorruptError("checksum mismatch")
    view = io.BytesIO(payload)
    view.read(len(CHECKPOINT_MAGIC))
    (version,) = struct.unpack("<I", view.read(4))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError("unsupported checkpoint version %d" % version)
    try:
        (meta_len,) = struct.unpack("<Q", view.read(8))
        meta = json.loads(view.read(meta_len).decode("utf-8"))
        (n_tensors,) = struct.unpack("<I", view.read(4))
        params = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<H", view.read(2))
            name = view.read(name_len).decode("utf-8")
            (dtype_id,) = struct.unpack("<B", view.read(1))
            (ndim,) = struct.unpack("<B", view.read(1))
            shape = struct.unpack("<%dI" % ndim, view.read(4 * ndim))
            dtype = np.dtype(_DTYPE_CODES[dtype_id]).newbyteorder("<")
            count = int(np.prod(shape)) if shape else 1
            raw = view.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise CheckpointCorruptError("truncated tensor block %r" % name)
            params[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(
                _DTYPE_CODES[dtype_id])
    except (struct.error, KeyError, json.JSONDecodeError) as e:
        raise CheckpointCorruptError("malformed checkpoint: %s" % e) from None
    return Checkpoint(
        config=TrainConfig.from_dict(meta["config"]),
        vocab_words=meta["vocab_words"],
        n_time=meta["n_time"],
        candidates=meta["candidates"],
        params=params,
        epoch=meta["epoch"],
        metrics=meta["metrics"],
    )


def model_from_checkpoint(ckpt):
    vocab = corpus.Vocabulary.from_words(ckpt.vocab_words, ckpt.n_time)
    candidates = None
    if ckpt.config.nlg == nlg.CANDIDATES:
        candidates = corpus.CandidateSet(ckpt.candidates)
    dtype = next(iter(ckpt.params.values())).dtype.type
    return DialogModel(ckpt.config, vocab, candidates, dtype=dtype,
                       params={k: v.copy() for k, v in ckpt.params.items()})


def ensure_head(ckpt, expected):
    if ckpt.config.nlg != expected:
        raise HeadMismatchError(
            "checkpoint was trained with the %r head, expected %r"
            % (ckpt.config.nlg, expected))
