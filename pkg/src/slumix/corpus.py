"""Corpus records for intent/slot-annotated utterances.

The canonical on-disk format is JSONL, one utterance per line:

    {"id": ..., "lang": ..., "split": "train|dev|test", "text": ...,
     "speech_ref": ...,              # optional; present iff a speech-label pair
     "scenario": ..., "action": ..., "entities": [{"type": ..., "filler": ...}]}

Import profiles translate SLURP-style and MASSIVE-style source files into this
format. A record with ``speech_ref`` counts as a speech-label pair; every
record carries a transcript. For SLURP-style sources, each audio recording
becomes its own record (sharing the transcript), so the number of distinct
transcripts and the number of speech records differ.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .errors import CorpusFormatError

SPLITS = ("train", "dev", "test")

_SPLIT_ALIASES = {"train": "train", "dev": "dev", "validation": "dev", "val": "dev",
                  "devel": "dev", "test": "test"}

# Characters reserved by the label serialization grammar; forbidden in any
# label field after normalization.
DELIMITER_CHARS = "|;:[]"

_WS_RE = re.compile(r"\s+")


def normalize_space(value: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS_RE.sub(" ", value.strip())


def normalize_key(value: str) -> str:
    """Normalization for scenario/action/entity-type fields: also lowercased."""
    return normalize_space(value).lower()


def normalize_filler(value: str) -> str:
    """Normalization for filler strings: whitespace only, case preserved."""
    return normalize_space(value)


def has_delimiter(value: str) -> bool:
    return any(ch in value for ch in DELIMITER_CHARS)


@dataclass(frozen=True)
class Entity:
    """One slot: an entity-type name and the surface string filling it."""

    etype: str
    filler: str

    def normalized(self) -> "Entity":
        return Entity(normalize_key(self.etype), normalize_filler(self.filler))

    def to_dict(self) -> dict:
        return {"type": self.etype, "filler": self.filler}

    @classmethod
    def from_dict(cls, obj: dict) -> "Entity":
        return cls(etype=str(obj["type"]), filler=str(obj["filler"]))


@dataclass(frozen=True)
class SemanticLabel:
    """Scenario/action intent plus an ordered entity list.

    ``unparseable`` marks predictions that could not be recovered from a raw
    model output; such labels score as fully wrong but flow through scoring
    without raising.
    """

    scenario: str
    action: str
    entities: tuple[Entity, ...] = ()
    unparseable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))

    @property
    def intent(self) -> tuple[str, str]:
        return (self.scenario, self.action)

    def normalized(self) -> "SemanticLabel":
        if self.unparseable:
            return self
        return SemanticLabel(
            scenario=normalize_key(self.scenario),
            action=normalize_key(self.action),
            entities=tuple(e.normalized() for e in self.entities),
        )

    def to_dict(self) -> dict:
        if self.unparseable:
            return {"unparseable": True}
        return {
            "scenario": self.scenario,
            "action": self.action,
            "entities": [e.to_dict() for e in self.entities],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SemanticLabel":
        if obj.get("unparseable"):
            return UNPARSEABLE
        return cls(
            scenario=str(obj.get("scenario", "")),
            action=str(obj.get("action", "")),
            entities=tuple(Entity.from_dict(e) for e in obj.get("entities", [])),
        )


UNPARSEABLE = SemanticLabel(scenario="", action="", entities=(), unparseable=True)


@dataclass(frozen=True)
class Utterance:
    """One corpus record: transcript, optional speech reference, gold label."""

    id: str
    lang: str
    split: str
    text: str
    label: SemanticLabel
    speech_ref: Optional[str] = None

    @property
    def has_speech(self) -> bool:
        return self.speech_ref is not None

    def to_dict(self) -> dict:
        obj = {
            "id": self.id,
            "lang": self.lang,
            "split": self.split,
            "text": self.text,
        }
        if self.speech_ref is not None:
            obj["speech_ref"] = self.speech_ref
        obj["scenario"] = self.label.scenario
        obj["action"] = self.label.action
        obj["entities"] = [e.to_dict() for e in self.label.entities]
        return obj

    @classmethod
    def from_dict(cls, obj: dict) -> "Utterance":
        return cls(
            id=str(obj["id"]),
            lang=str(obj["lang"]),
            split=str(obj["split"]),
            text=str(obj["text"]),
            speech_ref=None if obj.get("speech_ref") is None else str(obj["speech_ref"]),
            label=SemanticLabel(
                scenario=str(obj.get("scenario", "")),
                action=str(obj.get("action", "")),
                entities=tuple(Entity.from_dict(e) for e in obj.get("entities", [])),
            ),
        )


@dataclass
class Corpus:
    name: str
    lang: str
    records: list[Utterance] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_id(self) -> dict[str, Utterance]:
        return {r.id: r for r in self.records}


def _validate_record(utt: Utterance, path=None, line=None) -> None:
    if not utt.id:
        raise CorpusFormatError("record id is empty", path, line)
    if not utt.lang:
        raise CorpusFormatError(f"record {utt.id!r}: language code is empty", path, line)
    if utt.split not in SPLITS:
        raise CorpusFormatError(
            f"record {utt.id!r}: split {utt.split!r} not in {SPLITS}", path, line)
    if not utt.text.strip():
        raise CorpusFormatError(f"record {utt.id!r}: transcript is empty", path, line)
    label = utt.label
    if label.unparseable:
        raise CorpusFormatError(f"record {utt.id!r}: gold label is unparseable", path, line)
    if not normalize_key(label.scenario) or not normalize_key(label.action):
        raise CorpusFormatError(
            f"record {utt.id!r}: scenario/action must be non-empty", path, line)
    for fld in (label.scenario, label.action):
        if has_delimiter(normalize_key(fld)):
            raise CorpusFormatError(
                f"record {utt.id!r}: delimiter character in intent field {fld!r}",
                path, line)
    for ent in label.entities:
        if not normalize_key(ent.etype) or not normalize_filler(ent.filler):
            raise CorpusFormatError(
                f"record {utt.id!r}: entity type/filler must be non-empty", path, line)
        if has_delimiter(normalize_key(ent.etype)) or has_delimiter(normalize_filler(ent.filler)):
            raise CorpusFormatError(
                f"record {utt.id!r}: delimiter character in entity {ent!r}", path, line)


def validate_corpus(corpus: Corpus, require_same_lang: bool = True) -> None:
    """Check corpus invariants: unique ids, valid splits/labels, one language.

    Combined multilingual training corpora use lang "mul" and skip the
    same-language check.
    """
    seen: set[str] = set()
    for utt in corpus.records:
        _validate_record(utt)
        if utt.id in seen:
            raise CorpusFormatError(f"duplicate record id {utt.id!r}")
        seen.add(utt.id)
        if require_same_lang and corpus.lang != "mul" and utt.lang != corpus.lang:
            raise CorpusFormatError(
                f"record {utt.id!r}: lang {utt.lang!r} != corpus lang {corpus.lang!r}")


def _normalize_label(label: SemanticLabel) -> SemanticLabel:
    return label.normalized()


def _map_split(raw: str, path, line) -> str:
    split = _SPLIT_ALIASES.get(str(raw).strip().lower())
    if split is None:
        raise CorpusFormatError(f"unknown split/partition {raw!r}", path, line)
    return split


_BRACKET_SLOT_RE = re.compile(r"\[\s*([^\[\]:]+?)\s*:\s*([^\[\]]+?)\s*\]")


def _entities_from_annotation(annotated: str) -> tuple[Entity, ...]:
    """Extract (type, filler) pairs from ``[type : filler]`` bracket markup."""
    return tuple(Entity(etype=m.group(1), filler=m.group(2))
                 for m in _BRACKET_SLOT_RE.finditer(annotated))


def _entities_from_list(raw, annotated: str) -> tuple[Entity, ...]:
    ents = []
    fallback = None
    for item in raw or []:
        etype = str(item.get("type", "")).strip()
        filler = item.get("filler")
        if filler is None:
            # Span-only entity lists (real SLURP): recover fillers from the
            # annotated sentence, in order.
            if fallback is None:
                fallback = list(_entities_from_annotation(annotated))
            match = next((f for f in fallback if normalize_key(f.etype) == normalize_key(etype)), None)
            if match is None:
                continue
            fallback.remove(match)
            filler = match.filler
        ents.append(Entity(etype=etype, filler=str(filler)))
    return tuple(ents)


def _split_intent(intent: str, scenario: str) -> tuple[str, str]:
    intent = str(intent or "").strip()
    scenario = str(scenario or "").strip()
    if scenario and intent.startswith(scenario + "_"):
        return scenario, intent[len(scenario) + 1:]
    if "_" in intent:
        s, a = intent.split("_", 1)
        return scenario or s, a
    return scenario, intent


def _load_jsonl(path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", path, lineno) from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError("record is not a JSON object", path, lineno)
            yield lineno, obj


def _canonical_records(path) -> Iterable[Utterance]:
    for lineno, obj in _load_jsonl(path):
        try:
            utt = Utterance.from_dict(obj)
        except KeyError as exc:
            raise CorpusFormatError(f"missing field {exc.args[0]!r}", path, lineno) from exc
        utt = replace(utt, split=_map_split(utt.split, path, lineno),
                      label=_normalize_label(utt.label))
        _validate_record(utt, path, lineno)
        yield utt


def _slurp_records(path, pairing: str, default_lang: str) -> Iterable[Utterance]:
    if pairing not in ("all", "one"):
        raise CorpusFormatError(f"unknown recording pairing {pairing!r} (use 'all' or 'one')")
    for lineno, obj in _load_jsonl(path):
        base_id = obj.get("slurp_id", obj.get("id"))
        if base_id is None:
            raise CorpusFormatError("missing 'slurp_id'/'id'", path, lineno)
        base_id = str(base_id)
        text = str(obj.get("sentence", obj.get("text", "")))
        annotated = str(obj.get("sentence_annotation", obj.get("annotated", "")))
        scenario = str(obj.get("scenario", ""))
        action = obj.get("action")
        if action is None:
            scenario, action = _split_intent(obj.get("intent", ""), scenario)
        label = _normalize_label(SemanticLabel(
            scenario=scenario, action=str(action),
            entities=_entities_from_list(obj.get("entities"), annotated)))
        split = _map_split(obj.get("partition", obj.get("split", "train")), path, lineno)
        lang = str(obj.get("lang", obj.get("locale", default_lang)))
        text_utt = Utterance(id=base_id, lang=lang, split=split, text=text, label=label)
        _validate_record(text_utt, path, lineno)
        yield text_utt
        recordings = obj.get("recordings") or []
        if pairing == "one":
            recordings = recordings[:1]
        for i, rec in enumerate(recordings):
            ref = rec.get("file") if isinstance(rec, dict) else rec
            if not ref:
                raise CorpusFormatError(
                    f"record {base_id!r}: recording #{i} has no file", path, lineno)
            yield replace(text_utt, id=f"{base_id}#r{i}", speech_ref=str(ref))


def _massive_records(path, default_lang: str) -> Iterable[Utterance]:
    for lineno, obj in _load_jsonl(path):
        rec_id = obj.get("id")
        if rec_id is None:
            raise CorpusFormatError("missing 'id'", path, lineno)
        text = str(obj.get("utt", obj.get("text", "")))
        annotated = str(obj.get("annot_utt", ""))
        scenario, action = _split_intent(obj.get("intent", ""), obj.get("scenario", ""))
        label = _normalize_label(SemanticLabel(
            scenario=scenario, action=action,
            entities=_entities_from_annotation(annotated)))
        split = _map_split(obj.get("partition", obj.get("split", "train")), path, lineno)
        lang = str(obj.get("locale", obj.get("lang", default_lang)))
        ref = obj.get("path") or obj.get("audio_path") or obj.get("file")
        utt = Utterance(id=str(rec_id), lang=lang, split=split, text=text,
                        label=label, speech_ref=None if ref is None else str(ref))
        _validate_record(utt, path, lineno)
        yield utt


PROFILES = ("canonical", "slurp", "massive")


def load_corpus(path, profile: str = "canonical", *, name: Optional[str] = None,
                pairing: str = "all", default_lang: str = "en") -> Corpus:
    """Load and validate a corpus file under the given format profile.

    ``pairing`` applies to SLURP-style sources only: "all" keeps every
    recording as its own speech record, "one" keeps only the first.
    """
    if profile == "canonical":
        records = list(_canonical_records(path))
    elif profile == "slurp":
        records = list(_slurp_records(path, pairing, default_lang))
    elif profile == "massive":
        records = list(_massive_records(path, default_lang))
    else:
        raise CorpusFormatError(f"unknown profile {profile!r} (expected one of {PROFILES})")
    if not records:
        raise CorpusFormatError("empty corpus file", path)
    lang = records[0].lang
    corpus = Corpus(name=name or str(path), lang=lang, records=records)
    validate_corpus(corpus)
    return corpus


def save_corpus(corpus: Corpus, path) -> None:
    """Write the canonical JSONL representation."""
    with open(path, "w", encoding="utf-8") as f:
        for utt in corpus.records:
            f.write(json.dumps(utt.to_dict(), ensure_ascii=False) + "\n")


def filter_split(corpus: Corpus, split: str) -> Corpus:
    """View of one split, record order preserved."""
    if split not in SPLITS:
        raise CorpusFormatError(f"split {split!r} not in {SPLITS}")
    return Corpus(name=corpus.name, lang=corpus.lang,
                  records=[r for r in corpus.records if r.split == split])


def text_items(corpus: Corpus) -> list[Utterance]:
    """One record per distinct transcript: the text-label pairs.

    Records without a speech reference are preferred as representatives, so
    SLURP-style corpora (text record + N recording records per sentence)
    yield exactly the text records.
    """
    chosen: dict[str, Utterance] = {}
    for utt in corpus.records:
        prev = chosen.get(utt.text)
        if prev is None or (prev.has_speech and not utt.has_speech):
            chosen[utt.text] = utt
    return list(chosen.values())


def speech_items(corpus: Corpus) -> list[Utterance]:
    """Records carrying a speech reference: the speech-label pairs."""
    return [r for r in corpus.records if r.has_speech]


def corpus_stats(corpus: Corpus) -> dict[str, dict[str, int]]:
    """Per-split counts of text-label and speech-label pairs."""
    stats = {split: {"text": 0, "speech": 0} for split in SPLITS}
    for split in SPLITS:
        view = filter_split(corpus, split)
        stats[split]["text"] = len(text_items(view))
        stats[split]["speech"] = len(speech_items(view))
    return stats
