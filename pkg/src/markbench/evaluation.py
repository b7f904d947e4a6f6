"""Evaluation plans, trial execution, and robustness reports.

A plan names a corpus, a watermark, a list of labeled transformations, metric
configuration, and a master seed. Every (clip, transformation) pair yields two
trials (watermarked and clean); per transformation, the detection threshold is
calibrated on that transformation's clean scores only, and quality metrics
compare the watermarked clip before and after the transformation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import CascadeSpec, apply_cascade
from .audio import AudioBuffer, measure_snr
from .bandsplit import BandedWatermark
from .corpus import CorpusManifest, generate_synthetic_corpus, load_manifest
from .errors import MarkbenchError, ParameterError
from .metrics import calibrate_threshold, cosine_sim, log_spectral_distance, mfcc_embedding
from .plugins import PluginError, PluginSpec, PluginWatermark, run_metric_plugin
from .rng import derive_seed
from .transforms import TransformSpec
from .watermark import SpreadSpectrumWatermark, WatermarkKey

__all__ = [
    "TrialRecord",
    "RobustnessReport",
    "EvaluationPlan",
    "evaluate",
    "build_watermark",
    "load_plan_corpus",
    "run_clip_trials",
    "aggregate",
    "records_to_jsonl",
    "records_from_jsonl",
]

CONDITIONS = ("watermarked", "clean")
# report layout: quality columns first, then detection columns
QUALITY_COLUMNS = ("asr_cer", "sim", "snr_db", "lsd_db")


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


@dataclass(frozen=True)
class TrialRecord:
    """One (clip, transform, condition) observation."""

    clip_id: str
    watermark_id: str
    transform_id: str
    condition: str
    score: float | None
    quality: dict | None = None
    error: str | None = None

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ParameterError(f"condition must be one of {CONDITIONS}")
        if self.score is not None and not math.isfinite(self.score):
            raise ParameterError("trial score must be finite")

    def to_dict(self) -> dict:
        d = {
            "clip_id": self.clip_id,
            "watermark_id": self.watermark_id,
            "transform_id": self.transform_id,
            "condition": self.condition,
            "score": self.score,
        }
        if self.quality is not None:
            d["quality"] = self.quality
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(
            clip_id=d["clip_id"],
            watermark_id=d["watermark_id"],
            transform_id=d["transform_id"],
            condition=d["condition"],
            score=d.get("score"),
            quality=d.get("quality"),
            error=d.get("error"),
        )


@dataclass(frozen=True)
class EvaluationPlan:
    """Everything needed to reproduce a run; serializes losslessly to JSON."""

    corpus: dict
    watermark: dict
    transforms: tuple
    metrics: dict = field(default_factory=lambda: {"proxies": True})
    fpr: float = 0.01
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.fpr < 1.0:
            raise ParameterError(f"fpr must be in (0, 1), got {self.fpr}")
        labels = [t["label"] for t in self.transforms]
        if len(labels) != len(set(labels)):
            raise ParameterError("transform labels must be unique")
        object.__setattr__(self, "transforms", tuple(dict(t) for t in self.transforms))

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "watermark": self.watermark,
            "transforms": list(self.transforms),
            "metrics": self.metrics,
            "fpr": self.fpr,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationPlan":
        return cls(
            corpus=d["corpus"],
            watermark=d["watermark"],
            transforms=tuple(d["transforms"]),
            metrics=d.get("metrics", {"proxies": True}),
            fpr=float(d.get("fpr", 0.01)),
            seed=int(d.get("seed", 0)),
            output_dir=d.get("output_dir"),
            workers=int(d.get("workers", 1)),
        )

    @classmethod
    def from_json(cls, text: str) -> "EvaluationPlan":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RobustnessReport:
    rows: tuple
    metadata: dict

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "rows": list(self.rows)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def quality_columns(self) -> list:
        extras = sorted(
            {k for row in self.rows for k in row["quality"] if k not in QUALITY_COLUMNS}
        )
        return list(QUALITY_COLUMNS) + extras

    def to_csv(self) -> str:
        cols = self.quality_columns()
        header = ["transform"] + cols + ["threshold", "tpr_at_fpr"]
        lines = [",".join(header)]
        for row in self.rows:
            cells = [row["transform_id"]]
            for c in cols:
                v = row["quality"].get(c)
                cells.append("" if v is None else _fmt(v))
            cells.append(f"{row['threshold']:.9g}")
            cells.append(_fmt(row["tpr_at_fpr"]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def build_watermark(watermark_cfg: dict):
    """Construct the embed/detect handle a plan describes."""
    if "builtin" in watermark_cfg:
        handle = SpreadSpectrumWatermark(WatermarkKey.from_dict(watermark_cfg["builtin"]))
    elif "plugin" in watermark_cfg:
        p = watermark_cfg["plugin"]
        handle = PluginWatermark(
            embed_spec=PluginSpec.from_dict({"role": "embedder", **p["embed"]}),
            detect_spec=PluginSpec.from_dict({"role": "detector", **p["detect"]}),
            native_rate=int(p["native_rate"]),
        )
    else:
        raise ParameterError("watermark config needs a 'builtin' or 'plugin' section")
    if watermark_cfg.get("bandsplit", False):
        handle = BandedWatermark(handle)
    return handle


def load_plan_corpus(plan: EvaluationPlan, base_dir=None) -> CorpusManifest:
    cfg = plan.corpus
    if "manifest" in cfg:
        return load_manifest(cfg["manifest"])
    if "synthetic" in cfg:
        s = cfg["synthetic"]
        n = int(s.get("n_clips", 200))
        dur = float(s.get("duration_s", 5.0))
        rate = int(s.get("sample_rate", 44100))
        seed = int(s.get("seed", plan.seed))
        out = s.get("dir")
        if out is None:
            root = Path(base_dir or plan.output_dir or ".")
            out = root / f"corpus-s{seed}-n{n}-r{rate}-d{dur:g}"
        out = Path(out)
        # the directory name pins the generator parameters, so an existing
        # complete manifest can be reused as-is
        if s.get("dir") is None and (out / "manifest.jsonl").exists():
            existing = load_manifest(out)
            if len(existing) == n:
                return existing
        return generate_synthetic_corpus(
            out, n_clips=n, duration_s=dur, sample_rate=rate, seed=seed
        )
    raise ParameterError("corpus config needs a 'manifest' or 'synthetic' section")


def _transform_for(entry: dict, plan_seed: int, clip_id: str):
    """Materialize a plan transform entry for one clip, with derived seeds."""
    label = entry["label"]
    if "cascade" in entry:
        stages = tuple(
            TransformSpec.from_dict(s).with_seed(derive_seed(plan_seed, label, i, clip_id))
            for i, s in enumerate(entry["cascade"])
        )
        return CascadeSpec(stages=stages)
    spec = TransformSpec(kind=entry["kind"], params=dict(entry.get("params", {})))
    return spec.with_seed(derive_seed(plan_seed, label, clip_id))


def _apply_any(t, buffer: AudioBuffer) -> AudioBuffer:
    if isinstance(t, CascadeSpec):
        return apply_cascade(t, buffer)
    from .transforms import apply as apply_transform

    return apply_transform(t, buffer)


def _quality_metrics(plan: EvaluationPlan, before: AudioBuffer, after: AudioBuffer) -> dict:
    out = {}
    metrics_cfg = plan.metrics or {}
    if metrics_cfg.get("proxies", True):
        try:
            out["sim"] = cosine_sim(mfcc_embedding(before), mfcc_embedding(after))
        except MarkbenchError:
            pass
        if len(before) == len(after):
            # alignment-dependent proxies are skipped for length-changing transforms
            try:
                out["snr_db"] = measure_snr(before, after)
            except MarkbenchError:
                pass
            out["lsd_db"] = log_spectral_distance(before, after)
    for _name, spec_dict in sorted((metrics_cfg.get("plugins") or {}).items()):
        spec = PluginSpec.from_dict({"role": "metric", **spec_dict})
        out.update(run_metric_plugin(spec, before, after, seed=plan.seed))
    if "snr_db" in out and math.isinf(out["snr_db"]):
        out["snr_db"] = 999.0  # keep records JSON-safe; +inf means identical
    return out


def run_clip_trials(plan: EvaluationPlan, corpus: CorpusManifest, clip_id: str) -> list:
    """All trials for one clip: embed once, then run every transformation."""
    entry = next(e for e in corpus.entries if e.clip_id == clip_id)
    clean = corpus.load_clip(entry)
    wm = build_watermark(plan.watermark)
    wm_id = getattr(wm, "watermark_id", "watermark")
    records = []
    try:
        marked = wm.embed(clean)
    except MarkbenchError as exc:
        msg = f"embed failed: {exc}"
        for t in plan.transforms:
            for cond in CONDITIONS:
                records.append(
                    TrialRecord(clip_id, wm_id, t["label"], cond, None, error=msg)
                )
        return records

    for t in plan.transforms:
        label = t["label"]
        transform = _transform_for(t, plan.seed, clip_id)
        try:
            marked_t = _apply_any(transform, marked)
            clean_t = _apply_any(transform, clean)
            quality = _quality_metrics(plan, marked, marked_t)
            records.append(
                TrialRecord(
                    clip_id, wm_id, label, "watermarked", float(wm.detect(marked_t)), quality
                )
            )
            records.append(
                TrialRecord(clip_id, wm_id, label, "clean", float(wm.detect(clean_t)))
            )
        except (PluginError, MarkbenchError) as exc:
            msg = f"{type(exc).__name__}: {exc}"
            for cond in CONDITIONS:
                records.append(TrialRecord(clip_id, wm_id, label, cond, None, error=msg))
    return records


def aggregate(records, plan: EvaluationPlan, corpus_size: int | None = None) -> RobustnessReport:
    """Reduce trial records to the per-transformation report."""
    by_transform = {}
    for r in records:
        by_transform.setdefault(r.transform_id, []).append(r)

    rows = []
    total_failures = 0
    for t in plan.transforms:
        label = t["label"]
        recs = by_transform.get(label, [])
        ok = [r for r in recs if r.error is None and r.score is not None]
        failures = len(recs) - len(ok)
        total_failures += failures
        pos = [r.score for r in ok if r.condition == "watermarked"]
        neg = [r.score for r in ok if r.condition == "clean"]
        if not pos or not neg:
            rows.append(
                {
                    "transform_id": label,
                    "n_clips": 0,
                    "n_failures": failures,
                    "quality": {},
                    "threshold": float("nan"),
                    "tpr_at_fpr": float("nan"),
                }
            )
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tau = calibrate_threshold(neg, plan.fpr)
        tpr = float(np.mean(np.asarray(pos) >= tau))
        quality_values = {}
        for r in ok:
            if r.condition == "watermarked" and r.quality:
                for k, v in r.quality.items():
                    quality_values.setdefault(k, []).append(v)
        quality = {k: float(np.mean(v)) for k, v in sorted(quality_values.items())}
        for col in QUALITY_COLUMNS:
            quality.setdefault(col, None)
        rows.append(
            {
                "transform_id": label,
                "n_clips": len(pos),
                "n_failures": failures,
                "quality": quality,
                "threshold": tau,
                "tpr_at_fpr": tpr,
            }
        )

    wm_ids = sorted({r.watermark_id for r in records}) or ["watermark"]
    metadata = {
        "watermark_id": wm_ids[0],
        "fpr": plan.fpr,
        "seed": plan.seed,
        "corpus_size": corpus_size if corpus_size is not None else len({r.clip_id for r in records}),
        "n_transforms": len(plan.transforms),
        "n_failures": total_failures,
    }
    return RobustnessReport(rows=tuple(rows), metadata=metadata)


def evaluate(plan: EvaluationPlan, corpus: CorpusManifest | None = None, mapper=map):
    """Run the whole plan serially (or via `mapper`); returns (records, report).

    `mapper` must behave like the built-in map over clip ids, yielding record
    lists; the orchestrator passes a pool-backed implementation.
    """
    if corpus is None:
        corpus = load_plan_corpus(plan)
    all_records = []
    for recs in mapper(lambda cid: run_clip_trials(plan, corpus, cid), corpus.clip_ids()):
        all_records.extend(recs)
    all_records = sort_records(all_records, plan)
    return all_records, aggregate(all_records, plan, corpus_size=len(corpus))


def sort_records(records, plan: EvaluationPlan):
    """Deterministic order: plan's transform order, then clip, then condition."""
    order = {t["label"]: i for i, t in enumerate(plan.transforms)}
    return sorted(
        records,
        key=lambda r: (order.get(r.transform_id, len(order)), r.clip_id, r.condition),
    )


def records_to_jsonl(records) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def records_from_jsonl(text: str):
    return [TrialRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
