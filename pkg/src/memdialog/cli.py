"""Command-line entry point wiring every module together."""

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import benchmark, corpus, evaluation, nlg, simulate, training
from .configs import TrainConfig

logger = logging.getLogger("memdialog")


def _add_train_flags(p):
    p.add_argument("--task", type=int, default=1, choices=range(1, 7))
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--nlg", choices=nlg.HEADS, default=nlg.CANDIDATES)
    p.add_argument("--encoding", choices=("bow", "position"), default="position")
    p.add_argument("--lr", type=float)
    p.add_argument("--dim", type=int, help="embedding size d")
    p.add_argument("--hops", type=int, help="stacked memory networks N")
    p.add_argument("--hidden", type=int, help="decoder hidden layer size")
    p.add_argument("--ctx-words", type=int, help="decoder context words m")
    p.add_argument("--epochs", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--dummy-candidates", type=int)
    p.add_argument("--init-mean", type=float)
    p.add_argument("--stop-at-perfect", action="store_true", default=None)
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--metrics-log", help="line-delimited metrics output path")


_FLAG_TO_FIELD = {
    "task": "task", "nlg": "nlg", "encoding": "encoding", "lr": "lr",
    "dim": "d", "hops": "n_hops", "hidden": "hidden", "ctx_words": "ctx_words",
    "epochs": "epochs", "eval_every": "eval_every", "batch": "batch_size",
    "seed": "seed", "runs": "runs", "dummy_candidates": "dummy_candidates",
    "init_mean": "init_mean", "stop_at_perfect": "stop_at_perfect",
}


def _config_from_args(args):
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            base = json.load(f)
    for flag, field in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            base[field] = value
    return TrainConfig.from_dict(base)


def _echo_config(cfg):
    print("config: %s" % json.dumps(cfg.to_dict(), sort_keys=True))


def cmd_fetch_data(args):
    corpus.fetch_archive(args.url, args.out, args.sha256)
    print("fetched and unpacked into %s" % args.out)


def cmd_simulate_data(args):
    paths = simulate.generate_corpus(args.out, seed=args.seed,
                                     dialogs_per_split=(args.dialogs,) * 3)
    for name, path in paths.items():
        print("%s: %s" % (name, path))


def cmd_train(args):
    cfg = _config_from_args(args)
    splits, candidates = corpus.load_task(args.data, cfg.task)
    _echo_config(cfg.resolved())
    log_stream = open(args.metrics_log, "w") if args.metrics_log else sys.stderr
    try:
        results, best = training.train_runs(cfg, splits["trn"], splits["dev"],
                                            candidates, log_stream=log_stream)
    finally:
        if args.metrics_log:
            log_stream.close()
    for i, (ckpt, _) in enumerate(results):
        print("run %d: best val accuracy %.4f at epoch %d"
              % (i, ckpt.metrics["val_accuracy"], ckpt.epoch))
    training.save_checkpoint(args.out, results[best][0])
    print("saved best run (%d) to %s" % (best, args.out))


def cmd_eval(args):
    ckpt = training.load_checkpoint(args.model)
    model = training.model_from_checkpoint(ckpt)
    task = args.task if args.task else ckpt.config.task
    splits, _ = corpus.load_task(args.data, task)
    report = evaluation.evaluate(model, splits[args.split], task=task)
    if args.per_dialog:
        print("task %d %s: %s" % (task, args.split, report.formatted()))
    else:
        print("task %d %s: %.2f" % (task, args.split,
                                    100 * report.response_accuracy))


def cmd_table(args):
    budget = {}
    if args.budget:
        for part in args.budget.split(","):
            key, _, value = part.partition("=")
            field_types = {f.name: f for f in dataclasses.fields(TrainConfig)}
            if key not in field_types:
                raise SystemExit("unknown budget field %r" % key)
            budget[key] = json.loads(value)
    text, records = evaluation.results_table(args.data, budget=budget)
    print(text)
    if args.records:
        with open(args.records, "w", encoding="utf-8") as f:
            for rec in records:
                f.write(json.dumps(rec) + "\n")


def cmd_perturb(args):
    ckpt = training.load_checkpoint(args.model)
    model = training.model_from_checkpoint(ckpt)
    spec = evaluation.PerturbationSpec.load_default()
    dialogs = evaluation.generate_perturbed_dialogs(spec)
    report = evaluation.perturbation_eval(model, dialogs)
    print("modified-utterance dialogs: %d" % len(dialogs))
    print("per-dialog accuracy: %.2f%%" % (100 * report.dialog_accuracy))
    print("per-response accuracy: %.2f%%" % (100 * report.response_accuracy))


def cmd_bench(args):
    if args.kernels:
        result = benchmark.compare_kernel_backends(trials=args.trials)
        print("machine: %s" % result["machine"])
        for row in result["rows"]:
            print("%-18s %-6s %.6fs" % (row["kernel"], row["backend"],
                                        row["mean_s"]))
        return
    ckpt = training.load_checkpoint(args.model)
    model = training.model_from_checkpoint(ckpt)
    splits, _ = corpus.load_task(args.data, ckpt.config.task)
    examples = [ex for d in splits["tst"][:50]
                for ex in [evaluation.pack_dialog(model, d)[-1]]]
    c_values = [int(c) for c in args.candidates.split(",")]
    report = benchmark.measure_prediction_latency(model, examples, c_values,
                                                  trials=args.trials)
    print("machine: %s" % report.machine)
    for row in report.rows:
        print("C=%-7d median %.6fs  p95 %.6fs"
              % (row["c"], row["median_s"], row["p95_s"]))
    for c in c_values:
        space = benchmark.measure_space(
            model, c if model.config.nlg == nlg.CANDIDATES else None)
        print("C=%-7d params %d bytes, candidate encodings %d bytes"
              % (c, space["param_bytes"], space["candidate_bytes"]))


def cmd_serve(args):
    from . import service

    model_path = args.model or os.environ.get("MODEL_PATH")
    if not model_path:
        raise SystemExit("--model or MODEL_PATH required")
    addr = args.addr or os.environ.get("SERVE_ADDR", "127.0.0.1:8080")
    ckpt = training.load_checkpoint(model_path)
    model = training.model_from_checkpoint(ckpt)
    service.serve(model, os.path.basename(model_path), addr=addr,
                  log_path=args.log)


def cmd_chat(args):
    ckpt = training.load_checkpoint(args.model)
    model = training.model_from_checkpoint(ckpt)
    history = []
    print("chat REPL: /silence sends the silence token, /reset restarts, "
          "/quit exits")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            break
        if line == "/quit":
            break
        if line == "/reset":
            history = []
            print("(new dialog)")
            continue
        if line == "/silence":
            line = "<SILENCE>"
        if not line:
            continue
        from .model import pack_subdialog

        query = corpus.Utterance(corpus.tokenize(line), corpus.USER)
        sd = corpus.Subdialog(history=tuple(history), query=query,
                              gold_tokens=())
        pred = model.predict(pack_subdialog(sd, model.vocab, model.config))
        reply = corpus.Utterance(pred.tokens, corpus.SYSTEM)
        print("bot> %s" % reply.text())
        history.extend([query, reply])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="memdialog",
        description="Goal-oriented dialog system: training, evaluation, "
                    "benchmarks, and chat service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch-data", help="download and unpack the dataset")
    p.add_argument("--url", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sha256", required=True)
    p.set_defaults(fn=cmd_fetch_data)

    p = sub.add_parser("simulate-data",
                       help="generate a synthetic slot-filling corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dialogs", type=int, default=1000,
                   help="dialogs per split")
    p.set_defaults(fn=cmd_simulate_data)

    p = sub.add_parser("train", help="train a model")
    _add_train_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", type=int)
    p.add_argument("--split", choices=corpus.SPLITS, default="tst")
    p.add_argument("--per-dialog", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("table", help="train and evaluate the full results grid")
    p.add_argument("--data", required=True)
    p.add_argument("--budget", help="comma-separated config overrides, "
                                    "e.g. epochs=20,runs=1")
    p.add_argument("--records", help="write one JSON record per cell")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("perturb", help="run the modified-utterance experiment")
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("bench", help="latency/space benchmarks")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--candidates", default="4212,35000")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--kernels", action="store_true",
                   help="compare numba vs numpy kernel backends")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the chat HTTP service")
    p.add_argument("--model")
    p.add_argument("--addr")
    p.add_argument("--log", help="append-only session log path")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("chat", help="terminal chat REPL")
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_chat)

    return parser


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except (corpus.CorpusError, training.CheckpointError,
            FileNotFoundError) as e:
        logger.error("%s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
