"""Dialog corpus handling: bAbI-format parsing, vocabularies, training examples."""

import hashlib
import logging
import os
import tarfile
import tempfile
from dataclasses import dataclass, field, replace
from typing import Optional

logger = logging.getLogger(__name__)

USER = "user"
SYSTEM = "system"
KB_FACT = "kb_fact"

# Reserved control tokens. Angle brackets keep them out of the corpus token
# space (corpus text is lowercased; "<silence>" is a dataset token, not ours).
START_CTX = "<ctx>"
END_RESP = "<eor>"
UNK = "<unk>"
SILENCE = "<silence>"


def time_token(n):
    return "<time%d>" % n


class CorpusError(Exception):
    pass


def tokenize(text):
    """Lowercase + whitespace split; bAbI files are pre-tokenized."""
    return tuple(text.lower().split())


@dataclass(frozen=True)
class Utterance:
    tokens: tuple
    speaker: str

    def text(self):
        return " ".join(self.tokens)


@dataclass(frozen=True)
class Turn:
    user: Utterance
    system: Utterance


@dataclass
class Dialog:
    """Ordered events: Turn (user/system pair) or a kb_fact Utterance."""

    events: list = field(default_factory=list)

    def turns(self):
        return [e for e in self.events if isinstance(e, Turn)]


@dataclass(frozen=True)
class Subdialog:
    """One training example: history, last user utterance, gold response."""

    history: tuple
    query: Utterance
    gold_tokens: tuple
    gold_candidate_id: Optional[int] = None


def parse_dialog_file(text):
    """Parse bAbI dialog file content into dialogs.

    Blocks separated by blank lines are dialogs. Lines are
    "<n> user\\tsystem"; lines without a tab are kb facts.
    """
    dialogs = []
    current = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if not line:
            if current is not None and current.events:
                dialogs.append(current)
            current = None
            continue
        num, _, rest = line.partition(" ")
        if not num.isdigit():
            raise CorpusError("line %d: missing line number: %r" % (lineno, line))
        if not rest:
            raise CorpusError("line %d: empty line body" % lineno)
        if current is None:
            current = Dialog()
        if "\t" in rest:
            user_text, _, system_text = rest.partition("\t")
            user = Utterance(tokenize(user_text), USER)
            system = Utterance(tokenize(system_text), SYSTEM)
            if not user.tokens or not system.tokens:
                raise CorpusError("line %d: empty utterance side" % lineno)
            current.events.append(Turn(user, system))
        else:
            current.events.append(Utterance(tokenize(rest), KB_FACT))
    if current is not None and current.events:
        dialogs.append(current)
    return dialogs


def split_subdialogs(dialog):
    """One Subdialog per (user, system) pair; history accumulates all
    preceding events, kb facts included."""
    subdialogs = []
    history = []
    for event in dialog.events:
        if isinstance(event, Turn):
            subdialogs.append(
                Subdialog(
                    history=tuple(history),
                    query=event.user,
                    gold_tokens=event.system.tokens,
                )
            )
            history.append(event.user)
            history.append(event.system)
        else:
            history.append(event)
    return subdialogs


def attach_time_keywords(history, t):
    """Append one temporal keyword per history utterance.

    The utterance with n earlier history utterances gets <time_min(n, t-1)>;
    the last keyword saturates for everything beyond t-1.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    out = []
    for n, utt in enumerate(history):
        kw = time_token(min(n, t - 1))
        out.append(replace(utt, tokens=utt.tokens + (kw,)))
    return tuple(out)


class Vocabulary:
    """Bijection word <-> id with the reserved control tokens at the end."""

    def __init__(self, corpus_words, n_time):
        if n_time < 1:
            raise ValueError("n_time must be >= 1")
        reserved = [time_token(i) for i in range(n_time)]
        reserved += [START_CTX, END_RESP, UNK]
        clash = set(corpus_words) & set(reserved)
        if clash:
            raise CorpusError("corpus tokens collide with reserved: %s" % clash)
        self.id_to_word = list(corpus_words) + reserved
        self.word_to_id = {w: i for i, w in enumerate(self.id_to_word)}
        if len(self.word_to_id) != len(self.id_to_word):
            raise CorpusError("duplicate words in vocabulary input")
        self.n_time = n_time

    @classmethod
    def from_words(cls, id_to_word, n_time):
        """Rebuild from a serialized word list (reserved tokens included)."""
        obj = cls.__new__(cls)
        obj.id_to_word = list(id_to_word)
        obj.word_to_id = {w: i for i, w in enumerate(obj.id_to_word)}
        obj.n_time = n_time
        if len(obj.word_to_id) != len(obj.id_to_word):
            raise CorpusError("duplicate words in serialized vocabulary")
        return obj

    @property
    def size(self):
        return len(self.id_to_word)

    @property
    def start_ctx_id(self):
        return self.word_to_id[START_CTX]

    @property
    def end_resp_id(self):
        return self.word_to_id[END_RESP]

    @property
    def unk_id(self):
        return self.word_to_id[UNK]

    def time_id(self, n):
        return self.word_to_id[time_token(min(n, self.n_time - 1))]

    def encode(self, tokens, allow_unknown=True):
        if allow_unknown:
            unk = self.unk_id
            return [self.word_to_id.get(t, unk) for t in tokens]
        try:
            return [self.word_to_id[t] for t in tokens]
        except KeyError as e:
            raise CorpusError("unknown token %s" % e) from None

    def decode(self, ids):
        return tuple(self.id_to_word[i] for i in ids)

    def unknown_words(self, tokens):
        return [t for t in tokens if t not in self.word_to_id]

    def add_word(self, word):
        """Append a new word (used for synthetic benchmark candidates)."""
        if word in self.word_to_id:
            raise CorpusError("word already present: %r" % word)
        self.word_to_id[word] = len(self.id_to_word)
        self.id_to_word.append(word)
        return self.word_to_id[word]


def _dialog_token_stream(dialog):
    for event in dialog.events:
        if isinstance(event, Turn):
            yield from event.user.tokens
            yield from event.system.tokens
        else:
            yield from event.tokens


def build_vocabulary(dialogs, candidates=None, t=1):
    """Corpus words in order of first occurrence, then candidate words,
    then the reserved control tokens."""
    seen = {}
    for dialog in dialogs:
        for tok in _dialog_token_stream(dialog):
            if tok not in seen:
                seen[tok] = True
    if candidates is not None:
        for response in candidates.responses:
            for tok in response:
                if tok not in seen:
                    seen[tok] = True
    return Vocabulary(list(seen), n_time=t)


class CandidateSet:
    """Ordered response candidates; index is the candidate id."""

    def __init__(self, responses=()):
        self.responses = []
        self._index = {}
        for r in responses:
            self.add(tuple(r))

    def __len__(self):
        return len(self.responses)

    def add(self, tokens):
        tokens = tuple(tokens)
        key = " ".join(tokens)
        if key in self._index:
            raise CorpusError("duplicate candidate: %r" % key)
        self._index[key] = len(self.responses)
        self.responses.append(tokens)
        return self._index[key]

    def lookup(self, tokens):
        return self._index.get(" ".join(tokens))

    def lookup_or_add(self, tokens):
        cid = self.lookup(tokens)
        if cid is None:
            cid = self.add(tokens)
            logger.warning("gold response missing from candidate file, appended: %r",
                           " ".join(tokens))
        return cid


def load_candidates(text):
    """Parse a bAbI candidate file ("1 <response>" per line)."""
    cands = CandidateSet()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        num, _, rest = line.partition(" ")
        if not num.isdigit() or not rest:
            raise CorpusError("candidate line %d malformed: %r" % (lineno, line))
        tokens = tokenize(rest)
        if cands.lookup(tokens) is not None:
            raise CorpusError("duplicate candidate at line %d: %r" % (lineno, line))
        cands.add(tokens)
    return cands


def attach_gold_candidate_ids(subdialogs, candidates):
    """Resolve gold responses to candidate ids; unknown golds are appended."""
    out = []
    for sd in subdialogs:
        cid = candidates.lookup_or_add(sd.gold_tokens)
        out.append(replace(sd, gold_candidate_id=cid))
    return out


SPLITS = ("trn", "dev", "tst")


def find_task_file(data_dir, task, split):
    if split not in SPLITS:
        raise ValueError("split must be one of %s" % (SPLITS,))
    for name in sorted(os.listdir(data_dir)):
        if name.startswith("dialog-babi-task%d-" % task) and name.endswith("-%s.txt" % split):
            return os.path.join(data_dir, name)
    raise FileNotFoundError(
        "no dialog-babi-task%d-*-%s.txt under %s" % (task, split, data_dir))


def find_candidates_file(data_dir, task):
    # Task 6 (DSTC2) ships its own candidate file.
    if task == 6:
        path = os.path.join(data_dir, "dialog-babi-task6-dstc2-candidates.txt")
        if os.path.exists(path):
            return path
    path = os.path.join(data_dir, "dialog-babi-candidates.txt")
    if os.path.exists(path):
        return path
    raise FileNotFoundError("no candidate file for task %d under %s" % (task, data_dir))


def load_task(data_dir, task):
    """Load one task's splits and its candidate set from a data directory."""
    splits = {}
    for split in SPLITS:
        with open(find_task_file(data_dir, task, split), encoding="utf-8") as f:
            splits[split] = parse_dialog_file(f.read())
    with open(find_candidates_file(data_dir, task), encoding="utf-8") as f:
        candidates = load_candidates(f.read())
    return splits, candidates


def fetch_archive(url, out_dir, sha256):
    """Download a .tgz archive, verify its digest, and unpack it."""
    import requests

    os.makedirs(out_dir, exist_ok=True)
    resp = requests.get(url, timeout=120)
    resp.raise_for_status()
    digest = hashlib.sha256(resp.content).hexdigest()
    if digest != sha256:
        raise CorpusError("archive digest mismatch: got %s want %s" % (digest, sha256))
    with tempfile.NamedTemporaryFile(suffix=".tgz") as tmp:
        tmp.write(resp.content)
        tmp.flush()
        with tarfile.open(tmp.name, "r:gz") as tar:
            tar.extractall(out_dir)
    return out_dir


def max_history_length(dialogs):
    """Longest history (utterance count) over all subdialogs; >= 1."""
    longest = 1
    for dialog in dialogs:
        for sd in split_subdialogs(dialog):
            longest = max(longest, len(sd.history))
    return longest


def max_utterance_length(dialogs, with_time_keyword=True):
    """Longest utterance (token count) over all subdialog parts.

    Temporal keywords add one token to every history utterance, so the
    default includes that slot.
    """
    longest = 1
    extra = 1 if with_time_keyword else 0
    for dialog in dialogs:
        for event in dialog.events:
            if isinstance(event, Turn):
                longest = max(longest, len(event.user.tokens) + extra,
                              len(event.system.tokens) + extra)
            else:
                longest = max(longest, len(event.tokens) + extra)
    return longest


def max_response_length(dialogs):
    longest = 1
    for dialog in dialogs:
        for turn in dialog.turns():
            longest = max(longest, len(turn.system.tokens))
    return longest
