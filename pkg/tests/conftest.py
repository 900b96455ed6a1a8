import pytest

from slumix import Corpus, Entity, SemanticLabel, Utterance, validate_corpus


def make_utt(uid, text, scenario="alarm", action="set", entities=(),
             split="train", speech=False, lang="en"):
    return Utterance(
        id=uid, lang=lang, split=split, text=text,
        speech_ref=f"sim://{uid}" if speech else None,
        label=SemanticLabel(scenario=scenario, action=action,
                            entities=tuple(Entity(t, f) for t, f in entities)),
    )


def make_corpus(records, name="tiny", lang="en"):
    corpus = Corpus(name=name, lang=lang, records=list(records))
    validate_corpus(corpus)
    return corpus


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        make_utt("u1", "wake me at seven am", entities=[("time", "seven am")]),
        make_utt("u2", "play queen", "music", "play", [("artist", "queen")],
                 speech=True),
        make_utt("u3", "what is the weather", "weather", "query", [], split="dev"),
        make_utt("u4", "cancel my alarm", "alarm", "cancel", [], split="dev",
                 speech=True),
        make_utt("u5", "order sushi", "takeaway", "order", [("food", "sushi")],
                 split="test", speech=True),
    ])
