"""Mixed-language training corpora for zero-shot and few-shot transfer.

Modes compose three ingredients: the source-language training data, a small
seeded few-shot sample per target language (transcripts only, or paired
transcripts+speech), and optionally the full target-language text-only NLU
corpus. ``no_source_*`` variants drop the source data entirely, and
``zero_shot`` uses the source alone (no target-language exposure at all).

Few-shot samples are the first ``fewshot_pairs`` items of one seeded
permutation per target language over its speech-paired training records, so
the T and T+S variants use the same underlying sample and repeated builds
with one seed are prefix-nested.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence, Union

from .corpus import Corpus, Utterance, filter_split, validate_corpus
from .errors import ConfigError
from .scheduler import derive_seed, nested_permutation

CROSSLINGUAL_MODES = (
    "zero_shot",
    "T", "T_S", "T_M", "T_S_M",
    "no_source_T", "no_source_T_S", "no_source_T_M", "no_source_T_S_M",
)

DEFAULT_FEWSHOT_PAIRS = 115


def _namespaced(corpus_name: str, records) -> list[Utterance]:
    return [replace(r, id=f"{corpus_name}/{r.id}") for r in records]


def _fewshot_records(target: Corpus, fewshot_pairs: int, seed: int,
                     keep_speech: bool) -> list[Utterance]:
    train = filter_split(target, "train")
    paired = [r for r in train.records if r.has_speech]
    if len(paired) < fewshot_pairs:
        raise ConfigError(
            f"target {target.name!r} has only {len(paired)} speech-paired train "
            f"records (need {fewshot_pairs})")
    order = nested_permutation([r.id for r in paired],
                               derive_seed(seed, "fewshot", target.lang))
    by_id = {r.id: r for r in paired}
    chosen = [by_id[i] for i in order[:fewshot_pairs]]
    if not keep_speech:
        chosen = [replace(r, speech_ref=None) for r in chosen]
    return chosen


def make_crosslingual_corpus(source: Corpus, targets: Sequence[Corpus],
                             massive_text: Union[Corpus, Sequence[Corpus], None] = None,
                             mode: str = "zero_shot",
                             fewshot_pairs: int = DEFAULT_FEWSHOT_PAIRS,
                             seed: int = 0) -> Corpus:
    """Combined training corpus for one cross-lingual mode.

    Only train splits are taken; evaluation always runs against the target
    corpora's own test splits. Record ids are namespaced by corpus name so
    same-numbered ids across languages cannot collide.
    """
    if mode not in CROSSLINGUAL_MODES:
        raise ConfigError(f"unknown cross-lingual mode {mode!r} "
                          f"(expected one of {CROSSLINGUAL_MODES})")
    langs = [source.lang] + [t.lang for t in targets]
    if len(set(langs)) != len(langs):
        raise ConfigError(f"source/target languages must be distinct (got {langs})")

    base = mode
    use_source = not mode.startswith("no_source_")
    if not use_source:
        base = mode[len("no_source_"):]
    use_targets = base != "zero_shot"
    use_speech = base in ("T_S", "T_S_M")
    use_massive = base in ("T_M", "T_S_M")

    if use_targets and not targets:
        raise ConfigError(f"mode {mode!r} requires target corpora")

    records: list[Utterance] = []
    if use_source:
        records += _namespaced(source.name, filter_split(source, "train").records)

    if use_targets:
        for target in targets:
            records += _namespaced(
                target.name,
                _fewshot_records(target, fewshot_pairs, seed, keep_speech=use_speech))

    if use_massive:
        if massive_text is None:
            raise ConfigError(f"mode {mode!r} requires target-language text corpora")
        massive = [massive_text] if isinstance(massive_text, Corpus) else list(massive_text)
        by_lang = {c.lang: c for c in massive}
        for target in targets:
            extra = by_lang.get(target.lang)
            if extra is None:
                raise ConfigError(
                    f"mode {mode!r}: no text-only corpus for target lang {target.lang!r}")
            text_only = [replace(r, speech_ref=None)
                         for r in filter_split(extra, "train").records]
            records += _namespaced(extra.name, text_only)

    combined = Corpus(name=f"xl-{mode}", lang="mul", records=records)
    validate_corpus(combined)
    return combined
