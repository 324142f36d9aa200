"""Synthetic restaurant-booking corpus generator in the bAbI dialog format.

Produces the slot-filling task (issue an api_call from four user-supplied
parameters) with train/dev/test splits whose api_call combinations are
disjoint, so the test set probes unseen parameter combinations while every
utterance pattern is seen in training.
"""

import itertools
import os
import zlib

import numpy as np

CUISINES = ["british", "cantonese", "french", "indian", "italian",
            "japanese", "korean", "spanish", "thai", "vietnamese"]
LOCATIONS = ["bangkok", "beijing", "bombay", "hanoi", "london",
             "madrid", "paris", "rome", "seoul", "tokyo"]
NUMBERS = ["two", "four", "six", "eight"]
PRICES = ["cheap", "moderate", "expensive"]

SLOT_ORDER = ("cuisine", "location", "number", "price")
SLOT_VALUES = {"cuisine": CUISINES, "location": LOCATIONS,
               "number": NUMBERS, "price": PRICES}

GREETING_REPLY = "hello what can i help you with today"
ACK = "i'm on it"
OPTIONS = "ok let me look into some options for you"
SILENCE = "<SILENCE>"

GREETINGS = ["hello", "hi", "good morning", "hey"]
REQUEST_BASES = ["can you book a table",
                 "can you make a restaurant reservation",
                 "i'd like to book a table",
                 "may i have a table"]
REQUEST_SLOT_PHRASES = {
    "cuisine": ["with {} food", "with {} cuisine"],
    "location": ["in {}"],
    "number": ["for {} people", "for {}"],
    "price": ["in a {} price range"],
}
QUESTIONS = {
    "cuisine": "any preference on a type of cuisine",
    "location": "where should it be",
    "number": "how many people would be in your party",
    "price": "which price range are looking for",
}
ANSWER_PATTERNS = {
    "cuisine": ["with {} food", "i love {} food"],
    "location": ["in {}", "somewhere in {}"],
    "number": ["we will be {} people", "for {} people please"],
    "price": ["in a {} price range please", "i am looking for a {} restaurant"],
}


def all_combos():
    return list(itertools.product(CUISINES, LOCATIONS, NUMBERS, PRICES))


def api_call(combo):
    return "api_call %s %s %s %s" % combo


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def generate_dialog(rng, combo):
    """One dialog as (user, system) text pairs for a slot combination."""
    slots = dict(zip(SLOT_ORDER, combo))
    pairs = [(_pick(rng, GREETINGS), GREETING_REPLY)]
    n_given = int(rng.integers(0, 5))
    given = sorted(rng.choice(len(SLOT_ORDER), size=n_given, replace=False))
    request = _pick(rng, REQUEST_BASES)
    for i in given:
        name = SLOT_ORDER[i]
        request += " " + _pick(rng, REQUEST_SLOT_PHRASES[name]).format(slots[name])
    pairs.append((request, ACK))
    missing = [SLOT_ORDER[i] for i in range(len(SLOT_ORDER)) if i not in given]
    prev_user = SILENCE
    for name in missing:
        pairs.append((prev_user, QUESTIONS[name]))
        prev_user = _pick(rng, ANSWER_PATTERNS[name]).format(slots[name])
    pairs.append((prev_user, OPTIONS))
    pairs.append((SILENCE, api_call(combo)))
    return pairs


def format_babi(dialog_pairs):
    return "\n".join("%d %s\t%s" % (i, u, s)
                     for i, (u, s) in enumerate(dialog_pairs, start=1))


def candidate_lines():
    """All possible system responses, fixed phrases first, then api_calls."""
    responses = [GREETING_REPLY, ACK, OPTIONS]
    responses += [QUESTIONS[name] for name in SLOT_ORDER]
    responses += [api_call(c) for c in all_combos()]
    return responses


def generate_corpus(out_dir, seed=0, dialogs_per_split=(1000, 1000, 1000)):
    """Write trn/dev/tst dialog files plus the candidate file.

    The 1200 api_call combinations are partitioned 600/300/300 across the
    splits so test-time api_calls never occur in training.
    """
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng([seed, 31337])
    combos = all_combos()
    perm = rng.permutation(len(combos))
    pools = {
        "trn": [combos[i] for i in perm[:600]],
        "dev": [combos[i] for i in perm[600:900]],
        "tst": [combos[i] for i in perm[900:]],
    }
    paths = {}
    for split, count in zip(("trn", "dev", "tst"), dialogs_per_split):
        split_rng = np.random.default_rng([seed, 77, zlib.crc32(split.encode())])
        blocks = []
        pool = pools[split]
        for _ in range(count):
            combo = _pick(split_rng, pool)
            blocks.append(format_babi(generate_dialog(split_rng, combo)))
        path = os.path.join(out_dir, "dialog-babi-task1-API-calls-%s.txt" % split)
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n\n".join(blocks) + "\n")
        paths[split] = path
    cand_path = os.path.join(out_dir, "dialog-babi-candidates.txt")
    with open(cand_path, "w", encoding="utf-8") as f:
        for resp in candidate_lines():
            f.write("1 %s\n" % resp)
    paths["candidates"] = cand_path
    return paths
