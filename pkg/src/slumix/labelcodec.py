"""Serialization between semantic labels and flat target strings.

Canonical grammar (normative EBNF, one line per label):

    target   = "scenario: " value " | action: " value " | entities: " entlist
    entlist  = "[]" | "[" entity { "; " entity } "]"
    entity   = etype ": " filler
    value, etype, filler = one or more characters excluding "|", ";", ":",
                           "[", "]" and newlines

Example: ``scenario: music | action: play | entities: [artist: queen; song:
bohemian rhapsody]``. Fields are normalized before serialization: whitespace
trimmed and collapsed; scenario, action and entity types lowercased; fillers
keep their case. Parsing is deliberately tolerant (case-insensitive keys,
flexible whitespace, trailing junk ignored, "entity"/"slots" accepted for
"entities") because it has to consume free-form model output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import (
    UNPARSEABLE,
    Entity,
    SemanticLabel,
    has_delimiter,
    normalize_filler,
    normalize_key,
)
from .errors import LabelFormatError, PromptError

PAYLOAD_PLACEHOLDER = "{payload}"
SPEECH_PLACEHOLDER = "<speech>"


def _checked(value: str, what: str) -> str:
    if not value:
        raise LabelFormatError(f"{what} is empty after normalization")
    if has_delimiter(value):
        raise LabelFormatError(f"{what} {value!r} contains a reserved delimiter character")
    return value


def serialize_label(label: SemanticLabel) -> str:
    """Render the canonical target string for a label."""
    if label.unparseable:
        raise LabelFormatError("cannot serialize an unparseable label")
    scenario = _checked(normalize_key(label.scenario), "scenario")
    action = _checked(normalize_key(label.action), "action")
    parts = []
    for ent in label.entities:
        etype = _checked(normalize_key(ent.etype), "entity type")
        filler = _checked(normalize_filler(ent.filler), "entity filler")
        parts.append(f"{etype}: {filler}")
    return f"scenario: {scenario} | action: {action} | entities: [{'; '.join(parts)}]"


_KEYS = r"(?:scenario|action|entities|entity|slots)"
# Value runs until a pipe, newline, bracket, or the start of another key.
_VALUE = r"((?:(?!\b%s\s*:)[^|\n\[\]])*)" % _KEYS
_SCENARIO_RE = re.compile(r"\bscenario\s*:\s*" + _VALUE, re.IGNORECASE)
_ACTION_RE = re.compile(r"\baction\s*:\s*" + _VALUE, re.IGNORECASE)
_ENTITIES_RE = re.compile(r"\b(?:entities|entity|slots)\s*:\s*\[", re.IGNORECASE)


def parse_label(text) -> SemanticLabel:
    """Recover a label from raw model output; never raises.

    Accepts ``str`` or ``bytes`` of any content. Returns an
    unparseable-flagged label when no scenario/action can be found, so a bad
    generation scores as fully wrong instead of aborting evaluation.
    """
    try:
        if isinstance(text, (bytes, bytearray)):
            text = bytes(text).decode("utf-8", errors="replace")
        text = str(text)
        m_s = _SCENARIO_RE.search(text)
        m_a = _ACTION_RE.search(text)
        if m_s is None or m_a is None:
            return UNPARSEABLE
        scenario = normalize_key(m_s.group(1))
        action = normalize_key(m_a.group(1))
        if not scenario or not action:
            return UNPARSEABLE
        entities = []
        m_e = _ENTITIES_RE.search(text)
        if m_e is not None:
            closing = text.find("]", m_e.end())
            body = text[m_e.end():closing] if closing != -1 else text[m_e.end():]
            for chunk in body.split(";"):
                if ":" not in chunk:
                    continue
                etype, filler = chunk.split(":", 1)
                etype = normalize_key(etype)
                filler = normalize_filler(filler)
                if etype and filler:
                    entities.append(Entity(etype=etype, filler=filler))
        return SemanticLabel(scenario=scenario, action=action, entities=tuple(entities))
    except Exception:
        return UNPARSEABLE


DEFAULT_OUTPUT_CONTRACT = (
    "Reply with one line of the form "
    "`scenario: <value> | action: <value> | entities: [<type>: <filler>; ...]` "
    "(use `[]` when there are no slots)."
)


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction text plus the description of the expected output fields.

    The combined prompt wording must name scenario, action and entities
    exactly once each, so the output contract is unambiguous; the instruction
    must contain the ``{payload}`` slot for the transcript or speech
    placeholder.
    """

    instruction: str
    output_contract: str = DEFAULT_OUTPUT_CONTRACT

    def __post_init__(self):
        combined = f"{self.instruction}\n{self.output_contract}"
        for word in ("scenario", "action", "entities"):
            n = len(re.findall(rf"\b{word}\b", combined, re.IGNORECASE))
            if n != 1:
                raise PromptError(
                    f"template must name {word!r} exactly once (found {n})")

    def render(self) -> str:
        return f"{self.instruction}\n{self.output_contract}"


DEFAULT_TEMPLATE = PromptTemplate(
    instruction=(
        "Extract the meaning of the following utterance into the structured "
        "form below.\nUtterance: {payload}"
    ),
)


def build_prompt(template: PromptTemplate, payload: str) -> str:
    """Fill the payload slot; the instruction text is modality-independent."""
    rendered = template.render()
    if PAYLOAD_PLACEHOLDER not in rendered:
        raise PromptError(f"template has no {PAYLOAD_PLACEHOLDER} placeholder")
    return rendered.replace(PAYLOAD_PLACEHOLDER, payload)
