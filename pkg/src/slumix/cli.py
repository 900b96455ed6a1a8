"""Command-line entry points.

Exit codes: 0 success, 1 data/processing error, 2 usage error (argparse).
With ``--json``, progress and result lines are emitted as JSON objects.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import grid as gridmod
from .corpus import PROFILES, SPLITS, filter_split, load_corpus, save_corpus
from .errors import MetricsError, SlumixError
from .grid import (
    load_manifest,
    read_rows_csv,
    recipe_from_config,
    run_grid,
    score_prediction_rows,
    write_rows_csv,
)
from .metrics import report_to_dict
from .report import REPORT_STYLES, render_report
from .scheduler import load_plan, save_plan
from .synthetic import make_synthetic_corpus
from .trainer import SpeechSimConfig, export_manifest, model_from_dict, model_to_dict, train


class _Log:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, event: str, **fields):
        if self.as_json:
            print(json.dumps({"event": event, **fields}, ensure_ascii=False,
                             sort_keys=True))
        else:
            detail = " ".join(f"{k}={v}" for k, v in fields.items())
            print(f"{event}: {detail}" if detail else event)


def _read_jsonl(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _cmd_ingest(args, log: _Log) -> int:
    corpus = load_corpus(args.infile, args.profile, name=args.name,
                         pairing=args.pairing, default_lang=args.lang)
    save_corpus(corpus, args.out)
    log.emit("ingested", records=len(corpus), lang=corpus.lang, out=str(args.out))
    return 0


def _cmd_synth(args, log: _Log) -> int:
    corpus = make_synthetic_corpus(n=args.n, seed=args.seed, lang=args.lang)
    save_corpus(corpus, args.out)
    log.emit("synthesized", records=len(corpus), out=str(args.out))
    return 0


def _cmd_plan(args, log: _Log) -> int:
    corpus = load_corpus(args.corpus, "canonical")
    plan = gridmod.make_plan_for_corpus(corpus, args.scheme, args.p, args.seed, args.epochs)
    save_plan(plan, args.out)
    log.emit("planned", scheme=args.scheme, p=args.p, epochs=args.epochs,
             budget=plan.config.budget, out=str(args.out))
    return 0


def _sim_from_args(args, seed: int) -> SpeechSimConfig:
    return SpeechSimConfig(substitution_rate=args.sim_substitution,
                           deletion_rate=args.sim_deletion, seed=seed)


def _cmd_train(args, log: _Log) -> int:
    plan = load_plan(args.plan)
    corpus = load_corpus(args.corpus, "canonical")
    recipe = recipe_from_config({"profile": args.recipe_profile},
                                plan.config.scheme, plan.config.epochs)
    sim = _sim_from_args(args, args.sim_seed)
    model = train(plan, corpus, recipe, sim)
    obj = model_to_dict(model)
    obj["sim"] = {"substitution_rate": sim.substitution_rate,
                  "deletion_rate": sim.deletion_rate, "seed": sim.seed}
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False)
    log.emit("trained", epochs=len(model.train_log),
             classes=len(model.classes), out=str(args.out))
    return 0


def _cmd_predict(args, log: _Log) -> int:
    with open(args.model, "r", encoding="utf-8") as f:
        obj = json.load(f)
    model = model_from_dict(obj)
    sim_cfg = obj.get("sim")
    if sim_cfg is not None:
        sim = SpeechSimConfig(**sim_cfg)
    else:
        sim = _sim_from_args(args, args.sim_seed)
    corpus = load_corpus(args.corpus, "canonical")
    view = filter_split(corpus, args.split)
    records = gridmod.eval_records(corpus) if args.split == "test" else view.records
    rows = gridmod.predict_records(model, records, sim,
                                    oracle_transcripts=args.oracle_transcripts)
    with open(args.out, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    log.emit("predicted", records=len(rows), out=str(args.out))
    return 0


def _cmd_evaluate(args, log: _Log) -> int:
    corpus = load_corpus(args.gold, "canonical")
    gold_by_id = corpus.by_id()
    rows = _read_jsonl(args.pred)
    if not rows:
        raise MetricsError("empty record list")
    for row in rows:
        utt = gold_by_id.get(row["utt_id"])
        if utt is None:
            raise MetricsError(f"prediction for unknown utterance {row['utt_id']!r}")
        row["gold"] = utt.label.to_dict()
    report = score_prediction_rows(rows)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, ensure_ascii=False, sort_keys=True,
                  indent=2)
    log.emit("evaluated", n=report.counts["n_utts"],
             intent_accuracy=round(report.intent_accuracy, 6),
             entity_f1=round(report.entity_f1, 6),
             slu_f1=round(report.slu_f1, 6), out=str(args.out))
    return 0


def _cmd_aggregate(args, log: _Log) -> int:
    rows = gridmod.aggregate_results(args.runs)
    write_rows_csv(rows, args.out)
    log.emit("aggregated", rows=len(rows), out=str(args.out))
    return 0


def _cmd_report(args, log: _Log) -> int:
    rows = read_rows_csv(args.agg)
    rendered = render_report(rows, args.style)
    md_path = Path(f"{args.out_prefix}.md")
    csv_path = Path(f"{args.out_prefix}.csv")
    md_path.write_text(rendered["markdown"], encoding="utf-8")
    csv_path.write_text(rendered["csv"], encoding="utf-8")
    log.emit("reported", style=args.style, markdown=str(md_path), csv=str(csv_path))
    return 0


def _cmd_grid(args, log: _Log) -> int:
    manifest = load_manifest(args.config)
    outcome = run_grid(manifest, args.out)
    log.emit("grid", cells_run=outcome.cells_run,
             cells_skipped=outcome.cells_skipped, failures=len(outcome.failures),
             out=str(args.out))
    for failure in outcome.failures:
        log.emit("cell_failed", **failure)
    return 0 if outcome.ok else 1


def _cmd_export_manifest(args, log: _Log) -> int:
    plan = load_plan(args.plan)
    recipe = recipe_from_config({"profile": args.recipe_profile},
                                plan.config.scheme, plan.config.epochs)
    export_manifest(plan, recipe, args.corpus_ref, args.out)
    log.emit("exported", scheme=plan.config.scheme, out=str(args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slumix",
        description="Speech/text mix scheduling, desk-scale training, and "
                    "SLU evaluation toolkit.")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a source corpus to canonical JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--profile", choices=PROFILES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pairing", choices=("all", "one"), default="all",
                   help="SLURP recordings per transcript to keep")
    p.add_argument("--name", default=None)
    p.add_argument("--lang", default="en")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate the bundled synthetic corpus")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lang", default="xx")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("plan", help="build a deterministic mix plan")
    p.add_argument("--scheme", choices=("text_only", "direct", "curriculum"),
                   required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("train", help="run a plan through the reference learner")
    p.add_argument("--plan", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--recipe-profile", choices=("desk", "published"), default="desk")
    p.add_argument("--sim-substitution", type=float, default=0.15)
    p.add_argument("--sim-deletion", type=float, default=0.10)
    p.add_argument("--sim-seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels for a corpus split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle-transcripts", action="store_true",
                   help="feed gold transcripts instead of simulated speech")
    p.add_argument("--sim-substitution", type=float, default=0.15)
    p.add_argument("--sim-deletion", type=float, default=0.10)
    p.add_argument("--sim-seed", type=int, default=0)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("aggregate", help="aggregate grid cell reports to CSV")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("report", help="render aggregate results as tables")
    p.add_argument("--agg", required=True)
    p.add_argument("--style", choices=REPORT_STYLES, required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("grid", help="run a full experiment grid from a manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("export-manifest",
                       help="export a replayable train manifest for a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--recipe-profile", choices=("desk", "published"), default="published")
    p.add_argument("--corpus-ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_manifest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    log = _Log(args.json)
    try:
        return args.func(args, log)
    except SlumixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
