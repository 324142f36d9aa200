import numpy as np
import pytest

from memdialog import corpus, simulate
from memdialog.configs import TrainConfig
from memdialog.model import DialogModel, pack_subdialog
from memdialog.training import prepare_task

TINY_TEXT = """1 hello there\thi how can i help
2 book a table in rome\ti'm on it
3 <SILENCE>\tapi_call rome

1 good morning\thi how can i help
2 table for two in paris please\ti'm on it
3 <SILENCE>\tapi_call paris
"""

TINY_CANDIDATES = "1 hi how can i help\n1 i'm on it\n1 api_call rome\n1 api_call paris\n"


@pytest.fixture
def tiny_dialogs():
    return corpus.parse_dialog_file(TINY_TEXT)


@pytest.fixture
def tiny_candidates():
    return corpus.load_candidates(TINY_CANDIDATES)


def make_tiny_model(head="candidates", enc="bow", hops=1, seed=0, dtype=np.float64,
                    dialogs=None, candidates=None, **cfg_kwargs):
    dialogs = dialogs or corpus.parse_dialog_file(TINY_TEXT)
    candidates = candidates or corpus.load_candidates(TINY_CANDIDATES)
    cfg_kwargs.setdefault("init_mean", 0.0)
    cfg_kwargs.setdefault("d", 6)
    cfg_kwargs.setdefault("hidden", 5)
    cfg_kwargs.setdefault("ctx_words", 1)
    cfg = TrainConfig(nlg=head, encoding=enc, n_hops=hops, seed=seed,
                      **cfg_kwargs)
    prepared = prepare_task(cfg, dialogs, dialogs, candidates)
    model = DialogModel(prepared.config, prepared.vocab, prepared.candidates,
                        dtype=dtype)
    return model, prepared


@pytest.fixture(scope="session")
def sim_corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim-corpus")
    simulate.generate_corpus(str(out), seed=0, dialogs_per_split=(60, 30, 30))
    return str(out)


# --- acceptance criteria reporting -----------------------------------------
# Each acceptance test records one line; they are echoed together at the end
# of the run so the verdict per criterion is visible even when tests pass.

ACCEPTANCE_RESULTS = []


def record_acceptance(criterion, verdict, detail=""):
    line = "%s: %s" % (verdict, criterion)
    if detail:
        line += " -- %s" % detail
    ACCEPTANCE_RESULTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
