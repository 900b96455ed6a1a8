"""Random label/prediction generators shared by metric and acceptance tests."""

import random

from slumix import Entity, SemanticLabel
from slumix.corpus import UNPARSEABLE

SAFE_CHARS = ("abcdefghijklmnopqrstuvwxyz"
              "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 '-_.")


def safe_text(rng, max_len=24, lower=False):
    while True:
        raw = "".join(rng.choice(SAFE_CHARS) for _ in range(rng.randint(1, max_len)))
        out = " ".join(raw.split())
        if out:
            return out.lower() if lower else out


def fuzz_label(rng, max_entities=4):
    """A valid normalized label over the delimiter-free alphabet."""
    entities = tuple(
        Entity(safe_text(rng, 12, lower=True), safe_text(rng, 16))
        for _ in range(rng.randint(0, max_entities))
    )
    return SemanticLabel(safe_text(rng, lower=True), safe_text(rng, lower=True),
                         entities)


SCENARIOS = ["alarm", "music", "weather", "iot"]
ACTIONS = ["set", "play", "query", "on"]
ETYPES = ["time", "artist", "place", "device", "scenario"]
WORDS = ["seven", "am", "queen", "new", "york", "kitchen", "lights", "nine"]


def random_gold(rng, max_entities=5):
    """Gold label as a plain triple (scenario, action, [(etype, filler)])."""
    ents = []
    for _ in range(rng.randint(0, max_entities)):
        filler = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 3)))
        ents.append((rng.choice(ETYPES), filler))
    return (rng.choice(SCENARIOS), rng.choice(ACTIONS), ents)


def random_pred(rng, gold, max_entities=5):
    """A plausible prediction: exact, perturbed, or None (unparseable)."""
    roll = rng.random()
    if roll < 0.1:
        return None
    if roll < 0.3:
        return gold
    scenario, action, ents = gold
    if rng.random() < 0.4:
        scenario = rng.choice(SCENARIOS + ["other"])
    kept = [e for e in ents if rng.random() < 0.7]
    extra = random_gold(rng, max_entities=min(2, max_entities))[2]
    return (scenario, action, (kept + extra)[:max_entities])


def to_label(triple):
    if triple is None:
        return UNPARSEABLE
    scenario, action, ents = triple
    return SemanticLabel(scenario, action,
                         tuple(Entity(t, f) for t, f in ents))
