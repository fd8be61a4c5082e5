"""Command-line surface: refine, map, degrade, eval.

Exit codes: 0 on success, 1 on pipeline/runtime errors, 2 on usage or
configuration errors. All commands are deterministic for fixed flags and
seed; the env var ``QREFINE_BACKEND_URL`` supplies a default for
``--backend`` when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .backends.builtin import BuiltinBackend
from .backends.remote import BackendEndpoint, RemoteBackend
from .config_io import load_config_file, merge_config, parse_stage_list
from .corpus import DegradeSpec, apply_degradations
from .errors import BackendError, ConfigError, CorpusSpecError, QRefineError
from .evalrun import eval_csv_lines, run_ablation, run_eval
from .field import flatten_bicubic, mask_to_png
from .imaging import decode_gray_png, decode_image, encode_gray_png, encode_png
from .iqa import DefaultScorer, ScorerConfig, map_to_text
from .stages import run_pipeline

ENV_BACKEND_URL = "QREFINE_BACKEND_URL"


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrefine",
        description="Quality-aware image refinement driven by a patch quality map.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="refine one image through the staged pipeline")
    p.add_argument("--input", required=True, help="input PNG or JPEG path")
    p.add_argument("--output", required=True, help="output PNG path")
    p.add_argument("--prompt", default="", help="text prompt for guided backends")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--stages", default=None, help="comma list, e.g. 1,2,3")
    p.add_argument("--backend", default=None, help="backend URL or 'builtin'")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--emit-report", default=None, help="write the stage report here")
    p.add_argument("--emit-map", default=None, help="write the quality heatmap PNG here")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("map", help="emit the patch quality map for an image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--flattened", action="store_true",
                   help="emit the pixel-resolution heatmap PNG instead of the text grid")
    p.add_argument("--n", type=int, default=None, help="patches per side")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("degrade", help="build a degraded corpus from clean images")
    p.add_argument("--spec", required=True, help="degradation spec JSON")
    p.add_argument("--input", required=True, nargs="+", help="clean image paths")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("eval", help="run the pipeline over a corpus and emit CSV metrics")
    p.add_argument("--corpus", required=True, help="directory of PNGs (masks as *.mask.png)")
    p.add_argument("--output", required=True, help="CSV output path")
    p.add_argument("--config", default=None)
    p.add_argument("--stages", default=None)
    p.add_argument("--backend", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--prompt", default="")
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="worker pool size (default: logical cores)")
    p.add_argument("--ablation", action="store_true",
                   help="sweep the stage combinations and emit one summary each")
    p.set_defaults(func=cmd_eval)

    return parser


def _build_config(args):
    file_overrides = load_config_file(args.config) if args.config else {}
    cli_overrides = {}
    if getattr(args, "stages", None):
        cli_overrides["stages_enabled"] = parse_stage_list(args.stages)
    if getattr(args, "seed", None) is not None:
        cli_overrides["seed"] = args.seed
    return merge_config(file_overrides, cli_overrides)


def _resolve_backend(spec: str | None):
    spec = spec or os.environ.get(ENV_BACKEND_URL) or "builtin"
    if spec == "builtin":
        return BuiltinBackend()
    backend = RemoteBackend(BackendEndpoint(base_url=spec))
    backend.check()
    return backend


def _read_image(path: str) -> np.ndarray:
    return decode_image(Path(path).read_bytes())


def cmd_refine(args) -> int:
    if not Path(args.input).is_file():
        print(f"qrefine refine: input not found: {args.input}", file=sys.stderr)
        print("usage: qrefine refine --input PATH --output PATH [...]", file=sys.stderr)
        return 2
    cfg = _build_config(args)
    backend = _resolve_backend(args.backend)
    img = _read_image(args.input)
    refined, report = run_pipeline(img, args.prompt, cfg, backend)
    Path(args.output).write_bytes(encode_png(refined))
    if args.emit_report:
        Path(args.emit_report).write_text(report.to_text(), encoding="utf-8")
    if args.emit_map:
        scorer = DefaultScorer(cfg.scorer)
        quality_map = scorer.score_map(img)
        flattened = flatten_bicubic(quality_map, img.shape[0], img.shape[1])
        Path(args.emit_map).write_bytes(encode_gray_png(flattened))
    first, last = report.records[0], report.records[-1]
    print(
        f"refined {args.input} -> {args.output} "
        f"(q {first.q_before:.4f} -> {last.q_after:.4f}, "
        f"stages {report.executed_stages()})"
    )
    return 0


def cmd_map(args) -> int:
    if not Path(args.input).is_file():
        print(f"qrefine map: input not found: {args.input}", file=sys.stderr)
        print("usage: qrefine map --input PATH --output PATH [...]", file=sys.stderr)
        return 2
    scorer_cfg = ScorerConfig(n=args.n) if args.n else ScorerConfig()
    img = _read_image(args.input)
    quality_map = DefaultScorer(scorer_cfg).score_map(img)
    if args.flattened:
        flattened = flatten_bicubic(quality_map, img.shape[0], img.shape[1])
        Path(args.output).write_bytes(encode_gray_png(flattened))
    else:
        Path(args.output).write_text(map_to_text(quality_map), encoding="utf-8")
    print(f"quality map for {args.input} -> {args.output}")
    return 0


def cmd_degrade(args) -> int:
    spec = DegradeSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.input:
        img = _read_image(path)
        degraded, truth = apply_degradations(img, spec)
        stem = Path(path).stem
        (out_dir / f"{stem}.png").write_bytes(encode_png(degraded))
        (out_dir / f"{stem}.mask.png").write_bytes(mask_to_png(truth))
        print(f"degraded {path} -> {out_dir / (stem + '.png')}")
    return 0


def _load_corpus_dir(corpus_dir: str) -> list:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise OSError(f"corpus directory not found: {corpus_dir}")
    entries = []
    for path in sorted(root.glob("*.png")):
        if path.name.endswith(".mask.png"):
            continue
        img = decode_image(path.read_bytes())
        mask_path = root / f"{path.stem}.mask.png"
        truth = None
        if mask_path.is_file():
            truth = decode_gray_png(mask_path.read_bytes()) > 0.5
        entries.append((path.stem, img, truth))
    if not entries:
        raise OSError(f"no corpus images under {corpus_dir}")
    return entries


def cmd_eval(args) -> int:
    cfg = _build_config(args)
    backend = _resolve_backend(args.backend)
    entries = _load_corpus_dir(args.corpus)
    if args.ablation:
        lines, summaries = run_ablation(entries, cfg, backend, args.prompt, args.jobs)
        for combo, mean_q in summaries.items():
            print(f"stages {'+'.join(map(str, combo))}: mean q after = {mean_q:.4f}")
    else:
        records = run_eval(entries, cfg, backend, args.prompt, args.jobs)
        lines = eval_csv_lines(records, backend.name)
        mean_before = float(np.mean([r.q_before for r in records]))
        mean_after = float(np.mean([r.q_after for r in records]))
        print(
            f"evaluated {len(records)} images: mean q {mean_before:.4f} -> {mean_after:.4f}"
        )
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ConfigError, CorpusSpecError) as exc:
        print(f"qrefine {args.command}: {exc}", file=sys.stderr)
        print(f"usage: qrefine {args.command} [--help for flags]", file=sys.stderr)
        return 2
    except (QRefineError, BackendError, OSError) as exc:
        print(f"qrefine {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
