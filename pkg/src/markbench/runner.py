"""Run orchestration: parallel trial execution, caching, and persistence.

A run directory contains plan.json, the (possibly generated) corpus, a cache
of per-(clip, transform) trial results keyed by content hash, the flat trial
records, and the rendered reports:

    <run>/plan.json
    <run>/corpus/...            (synthetic corpora only)
    <run>/cache/<key>.json
    <run>/records/trials.jsonl
    <run>/reports/report.csv
    <run>/reports/report.json

Re-runs skip cached trials, so interrupted runs resume where they stopped,
and reports are byte-identical regardless of worker count or scheduling.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .corpus import CorpusManifest
from .errors import MarkbenchError
from .evaluation import (
    EvaluationPlan,
    TrialRecord,
    aggregate,
    load_plan_corpus,
    records_from_jsonl,
    records_to_jsonl,
    run_clip_trials,
    sort_records,
)

__all__ = ["run_evaluation", "render_reports", "rerender_from_records", "trial_cache_key"]


def trial_cache_key(plan: EvaluationPlan, clip_hash: str, transform_entry: dict) -> str:
    """Content hash identifying one (clip, transform) trial pair."""
    payload = json.dumps(
        {
            "clip": clip_hash,
            "transform": transform_entry,
            "watermark": plan.watermark,
            "metrics": plan.metrics,
            "seed": plan.seed,
        },
        sort_keys=True,
    )
    return hashlib.blake2b(payload.encode(), digest_size=16).hexdigest()


def _clip_hash(path: Path) -> str:
    return hashlib.blake2b(path.read_bytes(), digest_size=16).hexdigest()


def _clip_task(plan_dict: dict, manifest_path: str, clip_id: str, cache_dir: str):
    """Worker entry: compute (or load) every transform's trials for one clip."""
    from .corpus import load_manifest

    plan = EvaluationPlan.from_dict(plan_dict)
    corpus = load_manifest(manifest_path)
    entry = next(e for e in corpus.entries if e.clip_id == clip_id)
    chash = _clip_hash(corpus.root / entry.wav_path)

    cache = Path(cache_dir)
    wanted = {}
    for t in plan.transforms:
        wanted[t["label"]] = cache / f"{trial_cache_key(plan, chash, t)}.json"

    missing = [t for t in plan.transforms if not wanted[t["label"]].exists()]
    records = []
    hits = len(plan.transforms) - len(missing)
    if missing:
        sub_plan_dict = dict(plan_dict)
        sub_plan_dict["transforms"] = missing
        sub_plan = EvaluationPlan.from_dict(sub_plan_dict)
        fresh = run_clip_trials(sub_plan, corpus, clip_id)
        by_label = {}
        for r in fresh:
            by_label.setdefault(r.transform_id, []).append(r)
        for label, recs in by_label.items():
            wanted[label].write_text(
                json.dumps([r.to_dict() for r in recs], sort_keys=True) + "\n"
            )
    for t in plan.transforms:
        records.extend(
            TrialRecord.from_dict(d) for d in json.loads(wanted[t["label"]].read_text())
        )
    return clip_id, hits, [r.to_dict() for r in records]


def run_evaluation(plan: EvaluationPlan, run_dir=None, progress=None):
    """Execute the plan with plan.workers processes; returns (run_dir, report).

    MARKBENCH_WORKERS overrides plan.workers when set. Trials already in the
    run cache are skipped; the cache hit count goes to the progress stream.
    """
    run_dir = Path(run_dir or plan.output_dir or "markbench-run")
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "plan.json").write_text(plan.to_json())
    cache_dir = run_dir / "cache"
    cache_dir.mkdir(exist_ok=True)

    corpus = load_plan_corpus(plan, base_dir=run_dir)
    manifest_path = str(corpus.manifest_path())

    workers = int(os.environ.get("MARKBENCH_WORKERS", plan.workers or 1))
    plan_dict = plan.to_dict()
    clip_ids = corpus.clip_ids()

    if progress is None:
        progress = sys.stderr
    results = []
    total_hits = 0
    if workers <= 1:
        for i, cid in enumerate(clip_ids, start=1):
            cid, hits, recs = _clip_task(plan_dict, manifest_path, cid, str(cache_dir))
            total_hits += hits
            results.extend(recs)
            print(f"[markbench] clip {i}/{len(clip_ids)} done", file=progress)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_clip_task, plan_dict, manifest_path, cid, str(cache_dir))
                for cid in clip_ids
            ]
            for i, fut in enumerate(futures, start=1):
                cid, hits, recs = fut.result()
                total_hits += hits
                results.extend(recs)
                print(f"[markbench] clip {i}/{len(clip_ids)} done", file=progress)
    print(
        f"[markbench] cache hits: {total_hits}/{len(clip_ids) * len(plan.transforms)} trial pairs",
        file=progress,
    )

    records = sort_records([TrialRecord.from_dict(d) for d in results], plan)
    report = aggregate(records, plan, corpus_size=len(corpus))
    _write_outputs(run_dir, records, report)
    return run_dir, report


def _write_outputs(run_dir: Path, records, report):
    records_dir = run_dir / "records"
    reports_dir = run_dir / "reports"
    records_dir.mkdir(exist_ok=True)
    reports_dir.mkdir(exist_ok=True)
    (records_dir / "trials.jsonl").write_text(records_to_jsonl(records))
    (reports_dir / "report.csv").write_text(report.to_csv())
    (reports_dir / "report.json").write_text(report.to_json())


def rerender_from_records(run_dir) -> "tuple[Path, object]":
    """Rebuild the reports purely from persisted records and the saved plan."""
    run_dir = Path(run_dir)
    plan_path = run_dir / "plan.json"
    records_path = run_dir / "records" / "trials.jsonl"
    if not plan_path.exists() or not records_path.exists():
        raise MarkbenchError(
            f"{run_dir} is not a completed run directory (need plan.json and records/trials.jsonl)"
        )
    plan = EvaluationPlan.from_json(plan_path.read_text())
    records = sort_records(records_from_jsonl(records_path.read_text()), plan)
    corpus_size = len({r.clip_id for r in records})
    report = aggregate(records, plan, corpus_size=corpus_size)
    _write_outputs(run_dir, records, report)
    return run_dir, report


def render_plot_data(run_dir) -> str:
    """Tidy CSV for sweep plots: one row per transform carrying metadata.

    Plan transforms may carry optional "group" and "bitrate" fields; rows
    without a bitrate are skipped (the sweep axis is bitrate).
    """
    run_dir = Path(run_dir)
    plan = EvaluationPlan.from_json((run_dir / "plan.json").read_text())
    report_rows = json.loads((run_dir / "reports" / "report.json").read_text())["rows"]
    by_label = {r["transform_id"]: r for r in report_rows}
    lines = ["codec,bitrate_kbps,watermark,tpr,sim"]
    meta = json.loads((run_dir / "reports" / "report.json").read_text())["metadata"]
    for t in plan.transforms:
        if "bitrate" not in t:
            continue
        row = by_label.get(t["label"])
        if row is None:
            continue
        sim = row["quality"].get("sim")
        lines.append(
            ",".join(
                [
                    str(t.get("group", t["label"])),
                    f"{float(t['bitrate']):g}",
                    meta["watermark_id"],
                    f"{row['tpr_at_fpr']:.6f}",
                    "" if sim is None else f"{sim:.6f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_reports(run_dir) -> str:
    """Return the CSV text of a run's report (rendering it if needed)."""
    run_dir = Path(run_dir)
    path = run_dir / "reports" / "report.csv"
    if not path.exists():
        rerender_from_records(run_dir)
    return path.read_text()
