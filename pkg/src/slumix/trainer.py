"""Desk-scale execution of mix plans, plus manifests for external trainers.

The reference learner is intentionally small: a multinomial linear intent
classifier over hashed token n-gram features trained by SGD under the cosine
schedule, plus a filler lexicon that accumulates gold (filler -> entity type)
counts from every item consumed. It exists to exercise plans, schemes and
metrics end to end with bit-for-bit determinism, not to approximate a real
audio LM; the real-model settings (optimizer, precision, beams, frozen
modules) travel only in the exported manifest.

Speech inputs are simulated by a seeded per-token corruption of the
transcript (substitution/deletion), so speech items contribute systematically
noisier features than their text counterparts.
"""

from __future__ import annotations

import base64
import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import UNPARSEABLE, Corpus, Entity, SemanticLabel
from .errors import TrainError
from .scheduler import MixPlan, derive_rng, epoch_batches, plan_to_dict, plan_totals
from .trainer_recipes import TrainRecipe, check_recipe_for_scheme, lr_at

FEATURE_DIM = 2 ** 18  # hashed feature space; crc32 keeps it platform-stable
_SUB_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SpeechSimConfig:
    """Seeded token corruption standing in for the speech modality."""

    substitution_rate: float = 0.15
    deletion_rate: float = 0.10
    seed: int = 0

    def __post_init__(self):
        for name in ("substitution_rate", "deletion_rate"):
            rate = getattr(self, name)
            if not 0 <= rate <= 1:
                raise TrainError(f"{name} must be in [0, 1] (got {rate})")
        if self.substitution_rate + self.deletion_rate > 1:
            raise TrainError("substitution_rate + deletion_rate must be <= 1")


def tokenize(text: str) -> list[str]:
    return text.split()


def simulate_speech(text: str, cfg: SpeechSimConfig) -> list[str]:
    """Corrupted token sequence for a transcript; a pure function of
    (text, cfg), so the same utterance always renders the same way."""
    rng = derive_rng(cfg.seed, "speech-sim", text)
    out = []
    for token in tokenize(text):
        u = rng.random()
        if u < cfg.substitution_rate:
            out.append("".join(rng.choice(_SUB_ALPHABET)
                               for _ in range(rng.randint(2, 7))))
        elif u < cfg.substitution_rate + cfg.deletion_rate:
            continue
        else:
            out.append(token)
    return out


def hashed_features(tokens: Sequence[str]) -> dict[int, float]:
    """Unigram + bigram counts hashed into the fixed feature space."""
    feats: dict[int, float] = {}
    lowered = [t.lower() for t in tokens]
    grams = lowered + [f"{a} {b}" for a, b in zip(lowered, lowered[1:])]
    for gram in grams:
        idx = zlib.crc32(gram.encode("utf-8")) % FEATURE_DIM
        feats[idx] = feats.get(idx, 0.0) + 1.0
    return feats


@dataclass
class ModelState:
    """Learned state: intent weights, filler lexicon, and the training trace."""

    classes: tuple[tuple[str, str], ...] = ()
    bias: Optional[np.ndarray] = None
    weights: dict[int, np.ndarray] = field(default_factory=dict)
    filler_lexicon: dict[str, dict[str, int]] = field(default_factory=dict)
    prior_intent: Optional[tuple[str, str]] = None
    train_log: list[dict] = field(default_factory=list)
    feature_dim: int = FEATURE_DIM

    @property
    def trained(self) -> bool:
        return bool(self.classes)


def _best_etype(counts: dict[str, int]) -> str:
    return min(counts, key=lambda t: (-counts[t], t))


def _lexicon_index(lexicon) -> tuple[dict[tuple[str, ...], str], int]:
    index = {}
    max_len = 0
    for filler, counts in lexicon.items():
        toks = tuple(tokenize(filler))
        if not toks:
            continue
        index[toks] = _best_etype(counts)
        max_len = max(max_len, len(toks))
    return index, max_len


def predict(model: ModelState, tokens: Sequence[str]) -> SemanticLabel:
    """Intent by argmax over the linear model; entities by longest-match scan
    of the input against the learned filler lexicon (left to right,
    non-overlapping)."""
    if not model.trained:
        return UNPARSEABLE
    feats = hashed_features(tokens)
    if not feats:
        scenario, action = model.prior_intent
        return SemanticLabel(scenario=scenario, action=action, entities=())
    logits = model.bias.copy()
    for idx, count in feats.items():
        w = model.weights.get(idx)
        if w is not None:
            logits += count * w
    best = logits.max()
    winner = min(c for c, l in zip(model.classes, logits) if l == best)

    index, max_len = _lexicon_index(model.filler_lexicon)
    entities = []
    i, n = 0, len(tokens)
    while i < n:
        hit = None
        for length in range(min(max_len, n - i), 0, -1):
            span = tuple(tokens[i:i + length])
            if span in index:
                hit = (index[span], " ".join(span), length)
                break
        if hit is None:
            i += 1
        else:
            entities.append(Entity(etype=hit[0], filler=hit[1]))
            i += hit[2]
    return SemanticLabel(scenario=winner[0], action=winner[1], entities=tuple(entities))


def _item_tokens(utt, modality: str, sim: SpeechSimConfig) -> list[str]:
    if modality == "speech":
        return simulate_speech(utt.text, sim)
    return tokenize(utt.text)


def train(plan: MixPlan, corpus: Corpus, recipe: TrainRecipe,
          sim: SpeechSimConfig) -> ModelState:
    """Run the plan through the reference learner.

    Consumes epochs and batches exactly as ``epoch_batches`` dictates; the
    per-epoch item counts in the training log therefore match ``plan_totals``
    identically. Fully deterministic in (plan, corpus, recipe, sim).
    """
    check_recipe_for_scheme(recipe, plan.config.scheme)
    by_id = corpus.by_id()
    all_batches = [epoch_batches(plan, e, recipe.batch_size, plan.config.seed)
                   for e in range(1, plan.config.epochs + 1)]
    if not any(batch for epoch in all_batches for batch in epoch):
        raise TrainError("plan contains no training items")
    for epoch in all_batches:
        for batch in epoch:
            for item_id, _ in batch:
                if item_id not in by_id:
                    raise TrainError(f"plan item {item_id!r} not found in corpus")

    class_set = sorted({by_id[i].label.normalized().intent
                        for epoch in all_batches for batch in epoch for i, _ in batch})
    classes = tuple(class_set)
    class_idx = {c: k for k, c in enumerate(classes)}
    n_classes = len(classes)
    model = ModelState(classes=classes, bias=np.zeros(n_classes))

    # Phase 2 (curriculum only) covers the final epoch; each phase runs its
    # own warmup+decay over its own step span.
    if plan.config.scheme == "curriculum" and plan.config.epochs > 1:
        phase_of_epoch = [1] * (plan.config.epochs - 1) + [2]
    else:
        phase_of_epoch = [1] * plan.config.epochs
    phase_steps = {1: 0, 2: 0}
    for e0, epoch in enumerate(all_batches):
        phase_steps[phase_of_epoch[e0]] += len(epoch)

    intent_counts: dict[tuple[str, str], int] = {}
    step_in_phase = {1: 0, 2: 0}
    for e0, batches in enumerate(all_batches):
        phase = phase_of_epoch[e0]
        n_text = n_speech = 0
        loss_sum = 0.0
        hits = 0
        n_items = 0
        for batch in batches:
            lr = lr_at(recipe, step_in_phase[phase], phase_steps[phase], phase)
            step_in_phase[phase] += 1
            grad: dict[int, np.ndarray] = {}
            grad_bias = np.zeros(n_classes)
            for item_id, modality in batch:
                utt = by_id[item_id]
                if modality == "speech":
                    n_speech += 1
                else:
                    n_text += 1
                label = utt.label.normalized()
                intent_counts[label.intent] = intent_counts.get(label.intent, 0) + 1
                for ent in label.entities:
                    slots = model.filler_lexicon.setdefault(ent.filler, {})
                    slots[ent.etype] = slots.get(ent.etype, 0) + 1

                feats = hashed_features(_item_tokens(utt, modality, sim))
                logits = model.bias.copy()
                for idx, count in feats.items():
                    w = model.weights.get(idx)
                    if w is not None:
                        logits += count * w
                logits -= logits.max()
                probs = np.exp(logits)
                probs /= probs.sum()
                target = class_idx[label.intent]
                loss_sum += -math.log(max(probs[target], 1e-300))
                hits += int(int(np.argmax(logits)) == target)
                n_items += 1
                dlogits = probs.copy()
                dlogits[target] -= 1.0
                grad_bias += dlogits
                for idx, count in feats.items():
                    g = grad.get(idx)
                    if g is None:
                        grad[idx] = count * dlogits
                    else:
                        g += count * dlogits
            scale = lr / len(batch)
            model.bias -= scale * grad_bias
            for idx, g in grad.items():
                w = model.weights.get(idx)
                if w is None:
                    model.weights[idx] = -scale * g
                else:
                    w -= scale * g
        model.train_log.append({
            "epoch": e0 + 1,
            "text_items": n_text,
            "speech_items": n_speech,
            "mean_loss": loss_sum / n_items if n_items else 0.0,
            "train_intent_accuracy": hits / n_items if n_items else 0.0,
        })
    model.prior_intent = min(
        (c for c in intent_counts),
        key=lambda c: (-intent_counts[c], c),
    )
    totals = plan_totals(plan)
    logged = [(rec["text_items"], rec["speech_items"]) for rec in model.train_log]
    planned = list(zip(totals["per_epoch_text"], totals["per_epoch_speech"]))
    assert logged == planned, "consumed item counts diverged from the plan"
    return model


class ReferenceLearner:
    """Estimator-style wrapper: configure once, fit a corpus, predict tokens.

    Follows the scikit-learn parameter protocol (get_params/set_params) so
    the learner drops into pipelines and grid utilities that expect it.
    """

    def __init__(self, plan: Optional[MixPlan] = None,
                 recipe: Optional[TrainRecipe] = None,
                 sim: Optional[SpeechSimConfig] = None):
        self.plan = plan
        self.recipe = recipe
        self.sim = sim

    def get_params(self, deep: bool = True) -> dict:
        return {"plan": self.plan, "recipe": self.recipe, "sim": self.sim}

    def set_params(self, **params) -> "ReferenceLearner":
        for key, value in params.items():
            if key not in ("plan", "recipe", "sim"):
                raise TrainError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, corpus: Corpus) -> "ReferenceLearner":
        if self.plan is None or self.recipe is None or self.sim is None:
            raise TrainError("plan, recipe and sim must be set before fit")
        self.state_ = train(self.plan, corpus, self.recipe, self.sim)
        return self

    def predict(self, token_seqs: Sequence[Sequence[str]]) -> list[SemanticLabel]:
        if not hasattr(self, "state_"):
            raise TrainError("fit must be called before predict")
        return [predict(self.state_, toks) for toks in token_seqs]


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).decode()


def _unb64(blob: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(blob), dtype=np.float64).reshape(shape).copy()


def model_to_dict(model: ModelState) -> dict:
    features = sorted(model.weights)
    stacked = (np.stack([model.weights[f] for f in features])
               if features else np.zeros((0, len(model.classes))))
    return {
        "kind": "model_state",
        "model_version": 1,
        "feature_dim": model.feature_dim,
        "classes": [list(c) for c in model.classes],
        "bias": None if model.bias is None else _b64(model.bias),
        "features": features,
        "weights": _b64(stacked),
        "filler_lexicon": model.filler_lexicon,
        "prior_intent": None if model.prior_intent is None else list(model.prior_intent),
        "train_log": model.train_log,
    }


def model_from_dict(obj: dict) -> ModelState:
    classes = tuple(tuple(c) for c in obj["classes"])
    features = obj["features"]
    stacked = _unb64(obj["weights"], (len(features), len(classes)))
    return ModelState(
        classes=classes,
        bias=None if obj["bias"] is None else _unb64(obj["bias"], (len(classes),)),
        weights={f: stacked[i] for i, f in enumerate(features)},
        filler_lexicon={k: dict(v) for k, v in obj["filler_lexicon"].items()},
        prior_intent=None if obj["prior_intent"] is None else tuple(obj["prior_intent"]),
        train_log=list(obj["train_log"]),
        feature_dim=obj["feature_dim"],
    )


def save_model(model: ModelState, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, ensure_ascii=False)


def load_model(path) -> ModelState:
    with open(path, "r", encoding="utf-8") as f:
        return model_from_dict(json.load(f))


FREEZE_HINT_TEXT_ONLY = ("audio_encoder", "adapter")


def export_manifest(plan: MixPlan, recipe: TrainRecipe, corpus_ref: str,
                    path=None) -> dict:
    """Replayable description of the run for external (real-model) trainers:
    per-epoch item lists, per-phase LR schedule, batching and decode hints."""
    check_recipe_for_scheme(recipe, plan.config.scheme)
    epochs = list(range(1, plan.config.epochs + 1))
    if plan.config.scheme == "curriculum" and plan.config.epochs > 1:
        phases = [
            {"phase": 1, "schedule": recipe.schedule_kind, "peak_lr": recipe.peak_lr,
             "warmup_ratio": recipe.warmup_ratio, "epochs": epochs[:-1]},
            {"phase": 2, "schedule": recipe.schedule_kind,
             "peak_lr": recipe.phase2_peak_lr,
             "warmup_ratio": recipe.phase2_warmup_ratio, "epochs": epochs[-1:]},
        ]
    else:
        phases = [
            {"phase": 1, "schedule": recipe.schedule_kind, "peak_lr": recipe.peak_lr,
             "warmup_ratio": recipe.warmup_ratio, "epochs": epochs},
        ]
    manifest = {
        "kind": "train_manifest",
        "manifest_version": 1,
        "scheme": plan.config.scheme,
        "speech_proportion": plan.config.p,
        "seed": plan.config.seed,
        "corpus_ref": str(corpus_ref),
        "batch_size": recipe.batch_size,
        "grad_accum": recipe.grad_accum,
        "optimizer_hint": "adamw",
        "precision_hint": "bfloat16",
        "decode_hint": {"strategy": "beam_search", "beams": recipe.beams},
        "freeze": list(FREEZE_HINT_TEXT_ONLY) if plan.config.scheme == "text_only" else [],
        "lr_phases": phases,
        "epochs": plan_to_dict(plan)["epochs"],
        "totals": plan_totals(plan),
    }
    if path is not None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, ensure_ascii=False, indent=2)
    return manifest
