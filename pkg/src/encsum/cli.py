"""Command-line surface tying dataset construction, baselines, pipeline plumbing,
and evaluation together.

Exit codes: 0 success, 1 fatal error, 2 usage error. All logging goes to
standard error; ``--quiet`` suppresses nonfatal warnings.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from pathlib import Path
from statistics import fmean

from . import dataset as ds
from .corpus import source_sentences
from .faithfulness import (
    DEFAULT_BETA,
    EntitySet,
    Gazetteer,
    aggregate_scores,
    extract_entities_gazetteer,
    ingest_entity_annotations,
    load_default_gazetteer,
    score_sets,
)
from .jsonl import read_jsonl, write_jsonl
from .labeling import build_pseudo_pairs, oracle_extract
from .pipeline import (
    ChunkConfig,
    ScoredSentence,
    Segment,
    apply_cutoff,
    chunk_encounter,
    merge_scores,
    summary_text,
    sweep_threshold,
)
from .reports import MetricReport, ReportRow, write_report
from .rouge import rouge_l, rouge_n
from .sections import SectionName, load_rules, rule_based_extract_from_priors
from .synthetic import write_corpus
from .textproc import split_sentences, tokenize

logger = logging.getLogger("encsum")

ORACLE_SYSTEM = "oracle_ext"
RULE_SYSTEM = "rule_based_ext"


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        logger.error("%s", exc)
        return 1


def _sections_arg(value: str) -> list[SectionName]:
    if value == "all":
        return list(SectionName)
    return [SectionName(value)]


def _ratios_arg(value: str) -> tuple[float, float, float]:
    parts = [float(p) for p in value.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated fractions")
    return (parts[0], parts[1], parts[2])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encsum",
        description="Clinical-encounter summarization datasets, pipeline plumbing, and evaluation.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress nonfatal warnings")
    parser.add_argument("--mask-deid", action="store_true",
                        help="collapse bracketed de-identification placeholders to one token")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", help="write a deterministic synthetic notes file")
    p.add_argument("--out", required=True)
    p.add_argument("--encounters", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_synth_corpus)

    p = sub.add_parser("build-dataset", help="ingest notes and build a dataset directory")
    p.add_argument("--notes", required=True)
    p.add_argument("--rules", default=None, help="header rules JSON (default: packaged rules)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", type=_ratios_arg, default=(0.8, 0.1, 0.1))
    p.add_argument("--require-admission", action="store_true")
    p.set_defaults(func=_cmd_build_dataset)

    for name, helptext in (
        ("oracle", "oracle extractive summaries (system oracle_ext)"),
        ("pseudo-labels", "pseudo sentence-pair training labels"),
        ("rule-baseline", "rule-based section extraction from prior notes (system rule_based_ext)"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--dataset", required=True)
        p.add_argument("--section", type=_sections_arg, default="all",
                       help="section name or 'all'")
        p.add_argument("--split", default="train" if name == "pseudo-labels" else "test",
                       choices=ds.SPLITS)
        p.add_argument("--out", required=True)
        if name == "rule-baseline":
            p.add_argument("--rules", default=None)
    sub.choices["oracle"].set_defaults(func=_cmd_oracle)
    sub.choices["pseudo-labels"].set_defaults(func=_cmd_pseudo_labels)
    sub.choices["rule-baseline"].set_defaults(func=_cmd_rule_baseline)

    p = sub.add_parser("chunk", help="split encounters into token-bounded segments")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test", choices=ds.SPLITS)
    p.add_argument("--max-tokens", type=int, default=1024)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_chunk)

    p = sub.add_parser("merge-scores", help="merge per-segment scores back into source order")
    p.add_argument("--segments", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_merge_scores)

    p = sub.add_parser("sweep", help="sweep the score cutoff on validation ROUGE-L")
    p.add_argument("--dataset", required=True)
    p.add_argument("--section", type=SectionName, required=True)
    p.add_argument("--split", default="validation", choices=ds.SPLITS)
    p.add_argument("--merged", required=True, help="merged scored-sentence JSONL")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("cutoff", help="apply a score cutoff and emit system summaries")
    p.add_argument("--merged", required=True)
    p.add_argument("--section", type=SectionName, required=True)
    p.add_argument("--system", default="external_ext")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--threshold", type=float)
    group.add_argument("--sweep", dest="sweep_file", help="sweep result JSON to take the threshold from")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cutoff)

    p = sub.add_parser("evaluate", help="score system summaries with ROUGE and faithfulness")
    p.add_argument("--dataset", required=True)
    p.add_argument("--systems", required=True, help="glob of system summary JSONL files")
    p.add_argument("--split", default="test", choices=ds.SPLITS)
    p.add_argument("--section", type=_sections_arg, default="all")
    p.add_argument("--entity-backend", choices=("gazetteer", "annotations"), default="gazetteer")
    p.add_argument("--gazetteer", default=None, help="term file (default: packaged gazetteer)")
    p.add_argument("--annotations", default=None, help="entity annotations JSONL")
    p.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def _cmd_synth_corpus(args) -> int:
    count = write_corpus(args.out, n_encounters=args.encounters, seed=args.seed)
    logger.info("wrote %d notes to %s", count, args.out)
    return 0


def _cmd_build_dataset(args) -> int:
    rules = load_rules(args.rules)
    manifest = ds.build_dataset(
        args.notes,
        rules,
        args.out,
        seed=args.seed,
        ratios=args.ratios,
        require_admission=args.require_admission,
        mask_deid=args.mask_deid,
    )
    logger.info(
        "built dataset: %d encounters, subjects %s",
        manifest["encounters"],
        manifest["subjects"],
    )
    return 0


def _iter_instances(args, sections):
    """Yield (encounter, section, instance) for the requested dataset slice."""
    encounters = ds.load_encounters(args.dataset)
    for section in sections:
        for instance in ds.load_section_instances(args.dataset, section, args.split):
            encounter = encounters.get(instance.encounter_id)
            if encounter is None:
                logger.warning("no encounter record for %s; skipping", instance.encounter_id)
                continue
            yield encounter, section, instance


def _cmd_oracle(args) -> int:
    rows = []
    for encounter, section, instance in _iter_instances(args, args.section):
        refs = split_sentences(instance.reference_text, mask_deid=args.mask_deid)
        pool = source_sentences(encounter, mask_deid=args.mask_deid)
        if not refs or not pool:
            logger.warning(
                "skipping %s/%s: empty %s",
                instance.encounter_id, section.value,
                "reference" if not refs else "source pool",
            )
            continue
        extraction = oracle_extract(refs, pool)
        rows.append(
            ds.summary_record(instance.encounter_id, section, ORACLE_SYSTEM, extraction.summary_text)
        )
    write_jsonl(args.out, rows)
    logger.info("wrote %d oracle summaries to %s", len(rows), args.out)
    return 0


def _cmd_pseudo_labels(args) -> int:
    rows = []
    for encounter, section, instance in _iter_instances(args, args.section):
        refs = split_sentences(instance.reference_text, mask_deid=args.mask_deid)
        pool = source_sentences(encounter, mask_deid=args.mask_deid)
        if not refs or not pool:
            logger.warning("skipping %s/%s: nothing to align", instance.encounter_id, section.value)
            continue
        pairs = build_pseudo_pairs(refs, pool)
        rows.append(pairs.to_record(instance.encounter_id, section.value))
    write_jsonl(args.out, rows)
    logger.info("wrote %d label records to %s", len(rows), args.out)
    return 0


def _cmd_rule_baseline(args) -> int:
    rules = load_rules(args.rules)
    rows = []
    for encounter, section, instance in _iter_instances(args, args.section):
        text = rule_based_extract_from_priors(encounter, section, rules)
        if text is None:
            continue
        rows.append(ds.summary_record(instance.encounter_id, section, RULE_SYSTEM, text))
    write_jsonl(args.out, rows)
    logger.info("wrote %d rule-based summaries to %s", len(rows), args.out)
    return 0


def _cmd_chunk(args) -> int:
    encounters = ds.load_encounters(args.dataset)
    splits = ds.load_splits(args.dataset)
    cfg = ChunkConfig(max_tokens=args.max_tokens)
    rows = []
    for encounter_id in sorted(encounters):
        encounter = encounters[encounter_id]
        if splits.get(encounter.subject_id) != args.split:
            continue
        pool = source_sentences(encounter, mask_deid=args.mask_deid)
        for segment in chunk_encounter(pool, cfg, encounter_id):
            rows.append(segment.to_record())
    write_jsonl(args.out, rows)
    logger.info("wrote %d segments to %s", len(rows), args.out)
    return 0


def _read_segments(path: str | Path) -> list[Segment]:
    segments = []
    for row in read_jsonl(path):
        sentences = tuple((s["doc"], s["sent"]) for s in row["sentences"])
        texts = tuple(s["text"] for s in row["sentences"])
        token_count = sum(len(tokenize(t)) for t in texts)
        segments.append(
            Segment(row["segment_id"], row["encounter_id"], sentences, token_count, texts)
        )
    return segments


def _cmd_merge_scores(args) -> int:
    segments = _read_segments(args.segments)
    score_rows = read_jsonl(args.scores)
    per_segment = {
        row["segment_id"]: [
            ScoredSentence((s["doc"], s["sent"]), s["score"], "") for s in row["scores"]
        ]
        for row in score_rows
    }
    by_encounter: dict[str, list[Segment]] = {}
    for segment in segments:
        by_encounter.setdefault(segment.encounter_id, []).append(segment)
    rows = []
    for encounter_id in sorted(by_encounter):
        merged = merge_scores(by_encounter[encounter_id], per_segment)
        rows.append(
            {
                "encounter_id": encounter_id,
                "sentences": [
                    {"doc": s.key[0], "sent": s.key[1], "score": s.score, "text": s.text}
                    for s in merged
                ],
            }
        )
    write_jsonl(args.out, rows)
    logger.info("merged scores for %d encounters to %s", len(rows), args.out)
    return 0


def _read_merged(path: str | Path) -> dict[str, list[ScoredSentence]]:
    out = {}
    for row in read_jsonl(path):
        out[row["encounter_id"]] = [
            ScoredSentence((s["doc"], s["sent"]), s["score"], s["text"])
            for s in row["sentences"]
        ]
    return out


def _cmd_sweep(args) -> int:
    merged = _read_merged(args.merged)
    instances = []
    for instance in ds.load_section_instances(args.dataset, args.section, args.split):
        scored = merged.get(instance.encounter_id)
        if scored is None:
            logger.warning("no scores for encounter %s; skipping", instance.encounter_id)
            continue
        instances.append(
            (scored, split_sentences(instance.reference_text, mask_deid=args.mask_deid))
        )
    if not instances:
        raise ValueError("no validation instances with scores to sweep")
    result = sweep_threshold(instances, mask_deid=args.mask_deid)
    record = {"section": args.section.value, **result.to_record()}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(
        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    logger.info(
        "chose threshold %.6f over %d candidates", result.chosen_threshold, len(result.thresholds)
    )
    return 0


def _cmd_cutoff(args) -> int:
    if args.threshold is not None:
        threshold = args.threshold
    else:
        threshold = json.loads(Path(args.sweep_file).read_text("utf-8"))["chosen_threshold"]
    merged = _read_merged(args.merged)
    rows = []
    for encounter_id in sorted(merged):
        kept = apply_cutoff(merged[encounter_id], threshold)
        rows.append(
            ds.summary_record(encounter_id, args.section, args.system, summary_text(kept))
        )
    write_jsonl(args.out, rows)
    logger.info("wrote %d cutoff summaries (threshold %.6f) to %s", len(rows), threshold, args.out)
    return 0


def _cmd_evaluate(args) -> int:
    summary_files = sorted(glob.glob(args.systems))
    if not summary_files:
        raise ValueError(f"no summary files match {args.systems!r}")
    summaries = ds.read_system_summaries(summary_files)
    systems = sorted({system for _, _, system in summaries})
    if not systems:
        raise ValueError("summary files contain no records")

    encounters = ds.load_encounters(args.dataset)
    backend = _entity_backend(args, systems)

    rows = []
    for section in args.section:
        instances = ds.load_section_instances(args.dataset, section, args.split)
        instances = sorted(instances, key=lambda i: i.encounter_id)
        if not instances:
            logger.warning("no %s instances in split %s", section.value, args.split)
            continue
        ref_tokens = {
            i.encounter_id: [t.surface for t in tokenize(i.reference_text, mask_deid=args.mask_deid)]
            for i in instances
        }
        mean_words = fmean(len(v) for v in ref_tokens.values())
        mean_sents = fmean(
            len(split_sentences(i.reference_text, mask_deid=args.mask_deid)) for i in instances
        )
        for system in systems:
            rows.append(
                _evaluate_rows(
                    section, system, instances, ref_tokens, summaries,
                    encounters, backend, args.beta, mean_words, mean_sents,
                    mask_deid=args.mask_deid,
                )
            )
    if not rows:
        raise ValueError("nothing to evaluate: no instances in the requested sections/split")
    report = MetricReport(tuple(rows))
    paths = write_report(report, args.out)
    logger.info("wrote report to %s", paths["table"].parent)
    return 0


def _entity_backend(args, systems):
    if args.entity_backend == "gazetteer":
        if args.gazetteer is None:
            gaz = load_default_gazetteer()
        else:
            gaz = Gazetteer.from_file(args.gazetteer)
        return ("gazetteer", gaz)
    if args.annotations is None:
        raise ValueError("--entity-backend annotations requires --annotations")
    return ("annotations", ingest_entity_annotations(args.annotations))


def _entity_sets(backend, encounter, instance, system, system_text):
    kind, payload = backend
    encounter_id = instance.encounter_id
    section = instance.section.value
    if kind == "gazetteer":
        source: set[str] = set()
        for note in encounter.prior_notes:
            source |= extract_entities_gazetteer(note.text, payload).entities
        return (
            EntitySet(frozenset(source), "source"),
            extract_entities_gazetteer(instance.reference_text, payload, "reference"),
            extract_entities_gazetteer(system_text, payload, "system"),
        )
    empty = lambda origin: EntitySet(frozenset(), origin)
    return (
        payload.get(f"enc:{encounter_id}:src", empty("source")),
        payload.get(f"enc:{encounter_id}:{section}:ref", empty("reference")),
        payload.get(f"enc:{encounter_id}:{section}:sys:{system}", empty("system")),
    )


def _evaluate_rows(
    section, system, instances, ref_tokens, summaries, encounters, backend, beta,
    mean_words, mean_sents, mask_deid=False,
) -> ReportRow:
    r1, r2, rl = [], [], []
    faith = []
    for instance in instances:
        system_text = summaries.get((instance.encounter_id, section.value, system), "")
        cand = [t.surface for t in tokenize(system_text, mask_deid=mask_deid)]
        ref = ref_tokens[instance.encounter_id]
        r1.append(rouge_n(cand, ref, 1))
        r2.append(rouge_n(cand, ref, 2))
        rl.append(rouge_l(cand, ref))
        encounter = encounters.get(instance.encounter_id)
        if encounter is None:
            raise KeyError(f"dataset has no encounter record for {instance.encounter_id}")
        source_set, ref_set, sys_set = _entity_sets(
            backend, encounter, instance, system, system_text
        )
        faith.append(score_sets(source_set, ref_set, sys_set, beta))
    agg = aggregate_scores(faith, beta)

    def prf(scores):
        return (
            fmean(s.precision for s in scores),
            fmean(s.recall for s in scores),
            fmean(s.f1 for s in scores),
        )

    return ReportRow(
        section=section.value,
        system=system,
        instances=len(instances),
        rouge1=prf(r1),
        rouge2=prf(r2),
        rouge_l=prf(rl),
        fa_precision=agg.fa_precision,
        fa_recall=agg.fa_recall,
        fa_f_beta=agg.fa_f_beta,
        beta=beta,
        incorrect_hallucination_rate=agg.incorrect_hallucination_rate,
        empty_system=agg.empty_system_count,
        empty_relevant=agg.empty_relevant_count,
        mean_output_words=mean_words,
        mean_output_sentences=mean_sents,
    )


if __name__ == "__main__":
    sys.exit(main())
