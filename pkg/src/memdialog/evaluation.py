"""Accuracy metrics, the results table, and the modified-utterance
robustness experiment."""

import itertools
import json
import logging
from dataclasses import dataclass, field
from importlib import resources

from . import corpus
from .model import pack_subdialog

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    response_accuracy: float   # fraction in [0, 1]
    dialog_accuracy: float
    n_responses: int
    n_dialogs: int
    task: int = 0
    config_summary: str = ""

    def formatted(self):
        """"R (D)" percentages as used in the results table."""
        return "%.2f (%.2f)" % (100 * self.response_accuracy,
                                100 * self.dialog_accuracy)


def pack_dialog(model, dialog):
    return [pack_subdialog(sd, model.vocab, model.config)
            for sd in corpus.split_subdialogs(dialog)]


def response_accuracy(model, dialogs):
    """Fraction of subdialogs whose predicted response exactly matches gold."""
    report = evaluate(model, dialogs)
    return report.response_accuracy


def dialog_accuracy(model, dialogs):
    """Fraction of dialogs with every system response predicted exactly."""
    report = evaluate(model, dialogs)
    return report.dialog_accuracy


def evaluate(model, dialogs, task=0):
    """Per-response and per-dialog exact-match accuracy in one pass."""
    n_resp = 0
    n_resp_ok = 0
    n_dialog_ok = 0
    for dialog in dialogs:
        all_ok = True
        for ex in pack_dialog(model, dialog):
            pred = model.predict(ex)
            ok = pred.tokens == ex.gold_tokens
            n_resp += 1
            n_resp_ok += ok
            all_ok = all_ok and ok
        n_dialog_ok += all_ok
    n_dialogs = len(dialogs)
    cfg = model.config
    return EvalReport(
        response_accuracy=n_resp_ok / n_resp if n_resp else 0.0,
        dialog_accuracy=n_dialog_ok / n_dialogs if n_dialogs else 0.0,
        n_responses=n_resp,
        n_dialogs=n_dialogs,
        task=task,
        config_summary="%s/%s d=%d N=%d" % (cfg.nlg, cfg.encoding, cfg.d, cfg.n_hops),
    )


# ---------------------------------------------------------------------------
# results table


@dataclass
class TableCell:
    row: str
    column: str
    report: EvalReport = None
    skipped: str = ""

    def text(self):
        return self.report.formatted() if self.report else "skipped: %s" % self.skipped

    def record(self):
        rec = {"row": self.row, "column": self.column}
        if self.report:
            rec.update(response_accuracy=self.report.response_accuracy,
                       dialog_accuracy=self.report.dialog_accuracy)
        else:
            rec["skipped"] = self.skipped
        return rec


def format_table(cells, rows, columns):
    """Aligned text table from TableCell entries."""
    by_key = {(c.row, c.column): c for c in cells}
    widths = [max(len(r) for r in rows + [""])]
    for col in columns:
        w = len(col)
        for r in rows:
            cell = by_key.get((r, col))
            if cell:
                w = max(w, len(cell.text()))
        widths.append(w)
    lines = []
    header = [" " * widths[0]] + [c.ljust(w) for c, w in zip(columns, widths[1:])]
    lines.append(" | ".join(header))
    for r in rows:
        parts = [r.ljust(widths[0])]
        for col, w in zip(columns, widths[1:]):
            cell = by_key.get((r, col))
            parts.append((cell.text() if cell else "-").ljust(w))
        lines.append(" | ".join(parts))
    return "\n".join(lines)


def results_table(data_dir, budget=None, tasks=(1, 2, 3, 4, 5, 6),
                  dummy_row=True):
    """Train + evaluate every (task, head, encoding) cell.

    budget is a dict of TrainConfig overrides (epochs, runs, ...). Cells
    whose dataset files are missing are skipped with the reason recorded.
    Returns (text table, cell records).
    """
    import dataclasses

    from . import nlg as nlg_mod
    from .configs import TrainConfig
    from .training import model_from_checkpoint, train_runs

    budget = dict(budget or {})
    columns = ["%s/%s" % (h, e)
               for h in (nlg_mod.CANDIDATES, nlg_mod.WORDBYWORD)
               for e in ("position", "bow")]
    rows = ["task %d" % t for t in tasks]
    specs = [(t, "task %d" % t, 0) for t in tasks]
    if dummy_row:
        rows.append("task 1 *")
        specs.append((1, "task 1 *", 30788))
    cells = []
    for task, row, dummies in specs:
        try:
            splits, candidates = corpus.load_task(data_dir, task)
        except (FileNotFoundError, corpus.CorpusError) as e:
            for col in columns:
                cells.append(TableCell(row=row, column=col, skipped=str(e)))
            continue
        for col in columns:
            head, enc = col.split("/")
            cfg = TrainConfig(task=task, nlg=head, encoding=enc,
                              dummy_candidates=dummies)
            cfg = dataclasses.replace(cfg, **budget)
            try:
                cand = corpus.CandidateSet(candidates.responses)
                results, best = train_runs(cfg, splits["trn"], splits["dev"], cand)
                model = model_from_checkpoint(results[best][0])
                report = evaluate(model, splits["tst"], task=task)
                cells.append(TableCell(row=row, column=col, report=report))
            except Exception as e:  # keep filling the rest of the table
                logger.exception("cell %s %s failed", row, col)
                cells.append(TableCell(row=row, column=col, skipped=str(e)))
    return format_table(cells, rows, columns), [c.record() for c in cells]


# ---------------------------------------------------------------------------
# modified-utterance experiment


@dataclass
class PerturbationSpec:
    dialog: list                    # (user, system) template pairs
    slots: dict                     # slot name -> value list
    modified_utterances: dict       # 1-based pair index -> replacement user text

    @classmethod
    def load_default(cls):
        text = resources.files("memdialog.data").joinpath(
            "perturbation.json").read_text()
        raw = json.loads(text)
        return cls(dialog=[tuple(p) for p in raw["dialog"]],
                   slots=raw["slots"],
                   modified_utterances={int(k): v
                                        for k, v in raw["modified_utterances"].items()})


def generate_perturbed_dialogs(spec):
    """Every slot combination x every single-utterance modification.

    Deterministic order, one modified user utterance per dialog.
    """
    names = ["cuisine", "number", "location", "price"]
    out = []
    for values in itertools.product(*(spec.slots[n] for n in names)):
        subs = dict(zip(names, values))
        for idx in sorted(spec.modified_utterances):
            dialog = corpus.Dialog()
            for pos, (user_text, system_text) in enumerate(spec.dialog, start=1):
                if pos == idx:
                    user_text = spec.modified_utterances[idx]
                user = corpus.Utterance(
                    corpus.tokenize(user_text.format(**subs)), corpus.USER)
                system = corpus.Utterance(
                    corpus.tokenize(system_text.format(**subs)), corpus.SYSTEM)
                dialog.events.append(corpus.Turn(user, system))
            out.append(dialog)
    return out


def perturbation_eval(model, dialogs, task=1):
    """Per-dialog accuracy of a task-1 model over the generated dialogs."""
    return evaluate(model, dialogs, task=task)
