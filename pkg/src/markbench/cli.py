"""Command-line entry point.

Subcommands: gen-corpus, embed, detect, transform, evaluate, attack-search,
report. Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attacks import AttackSearchConfig, search_cascade
from .corpus import generate_synthetic_corpus, load_manifest
from .errors import MarkbenchError
from .evaluation import EvaluationPlan, build_watermark
from .runner import render_plot_data, rerender_from_records, run_evaluation
from .transforms import TransformSpec, apply
from .watermark import WatermarkKey
from .wavio import read_wav, write_wav

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _key_from_args(args) -> WatermarkKey:
    if args.key_file:
        return WatermarkKey.from_json(Path(args.key_file).read_text())
    if args.key is None:
        raise MarkbenchError("either --key or --key-file is required")
    return WatermarkKey(
        key=args.key,
        band_lo_hz=args.band_lo,
        band_hi_hz=args.band_hi,
        strength_db=args.strength,
        native_rate=args.native_rate,
    )


def _add_key_args(p):
    p.add_argument("--key", type=int, default=None, help="watermark key (64-bit integer)")
    p.add_argument("--key-file", default=None, help="JSON key record (overrides other key flags)")
    p.add_argument("--band-lo", type=float, default=300.0)
    p.add_argument("--band-hi", type=float, default=3400.0)
    p.add_argument("--strength", type=float, default=-30.0, help="watermark-to-signal ratio in dB")
    p.add_argument("--native-rate", type=int, default=16000)


def build_parser() -> _Parser:
    parser = _Parser(prog="markbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate the synthetic speech-like corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-clips", type=int, default=200)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--rate", type=int, default=44100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("embed", help="embed the built-in watermark into a WAV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    _add_key_args(p)
    p.add_argument("--save-key", default=None, help="write the key record to this path")

    p = sub.add_parser("detect", help="print the detection score for a WAV")
    p.add_argument("--in", dest="infile", required=True)
    _add_key_args(p)

    p = sub.add_parser("transform", help="apply one transformation to a WAV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--params", default="{}", help="JSON object of kind-specific parameters")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="run an evaluation plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default=None, help="run directory (overrides plan.output_dir)")
    p.add_argument("--workers", type=int, default=None, help="override plan.workers")
    p.add_argument("--seed", type=int, default=None, help="override plan.seed")

    p = sub.add_parser("attack-search", help="search for a quality-floored removal cascade")
    p.add_argument("--plan", required=True, help="JSON search plan")
    p.add_argument("--out", required=True, help="output JSON artifact")

    p = sub.add_parser("report", help="re-render reports from persisted trial records")
    p.add_argument("--records", required=True, help="run directory")
    p.add_argument("--format", choices=("csv", "json", "plot-data"), default="csv")
    return parser


def _cmd_gen_corpus(args):
    manifest = generate_synthetic_corpus(
        args.out,
        n_clips=args.n_clips,
        duration_s=args.duration,
        sample_rate=args.rate,
        seed=args.seed,
    )
    print(f"wrote {len(manifest)} clips under {manifest.root}")
    return 0


def _cmd_embed(args):
    key = _key_from_args(args)
    from .bandsplit import BandedWatermark
    from .watermark import SpreadSpectrumWatermark

    buf = read_wav(args.infile)
    handle = SpreadSpectrumWatermark(key)
    out = (
        handle.embed(buf)
        if buf.sample_rate == key.native_rate
        else BandedWatermark(handle).embed(buf)
    )
    write_wav(out, args.outfile, encoding="float32")
    if args.save_key:
        Path(args.save_key).write_text(key.to_json() + "\n")
    print(f"embedded key {key.key} into {args.outfile}")
    return 0


def _cmd_detect(args):
    key = _key_from_args(args)
    from .bandsplit import BandedWatermark
    from .watermark import SpreadSpectrumWatermark

    buf = read_wav(args.infile)
    handle = SpreadSpectrumWatermark(key)
    score = (
        handle.detect(buf)
        if buf.sample_rate == key.native_rate
        else BandedWatermark(handle).detect(buf)
    )
    print(f"{score:.6f}")
    return 0


def _cmd_transform(args):
    spec = TransformSpec(kind=args.kind, params=json.loads(args.params), seed=args.seed)
    out = apply(spec, read_wav(args.infile))
    write_wav(out, args.outfile, encoding="float32")
    print(f"applied {args.kind} -> {args.outfile}")
    return 0


def _cmd_evaluate(args):
    plan = EvaluationPlan.from_json(Path(args.plan).read_text())
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        plan = EvaluationPlan.from_dict({**plan.to_dict(), **overrides})
    run_dir, report = run_evaluation(plan)
    csv_path = run_dir / "reports" / "report.csv"
    print(csv_path.read_text(), end="")
    print(f"\nrun directory: {run_dir}", file=sys.stderr)
    return 0


def _cmd_attack_search(args):
    cfg_dict = json.loads(Path(args.plan).read_text())
    candidates = tuple(TransformSpec.from_dict(d) for d in cfg_dict["candidates"])
    cfg = AttackSearchConfig(
        candidates=candidates,
        quality_floor=cfg_dict.get("quality_floor", {}),
        max_stages=int(cfg_dict.get("max_stages", 2)),
        beam_width=int(cfg_dict.get("beam_width", 4)),
        fpr=float(cfg_dict.get("fpr", 0.01)),
        seed=int(cfg_dict.get("seed", 0)),
    )
    watermark = build_watermark(cfg_dict["watermark"])
    manifest = load_manifest(cfg_dict["corpus"])
    clips = [(e.clip_id, manifest.load_clip(e)) for e in manifest.entries]
    result = search_cascade(cfg, watermark, clips)
    artifact = {"config": cfg_dict, "result": result.to_dict()}
    Path(args.out).write_text(json.dumps(artifact, indent=2, sort_keys=True) + "\n")
    print(f"best cascade TPR {result.tpr:.4f} ({len(result.cascade)} stages) -> {args.out}")
    return 0


def _cmd_report(args):
    if args.format == "plot-data":
        print(render_plot_data(args.records), end="")
        return 0
    run_dir, report = rerender_from_records(args.records)
    if args.format == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.to_json(), end="")
    return 0


_COMMANDS = {
    "gen-corpus": _cmd_gen_corpus,
    "embed": _cmd_embed,
    "detect": _cmd_detect,
    "transform": _cmd_transform,
    "evaluate": _cmd_evaluate,
    "attack-search": _cmd_attack_search,
    "report": _cmd_report,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except MarkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


def main():
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
