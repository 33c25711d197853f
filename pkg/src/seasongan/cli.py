"""``seasongan`` command line: synth, train, translate, match-eval, plot."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, RunConfig, load_config, render_config
from .data import decode_image, list_images, load_image_dir, save_image, split_dataset, stack_pixels, synthesize_paired_domains
from .features import extract_features
from .placerec import (
    GroundTruth,
    default_thresholds,
    match_sequences,
    matrix_heatmap_export,
    read_pr_curve,
    sweep_sequence_lengths,
    write_pr_curve,
)
from .plotting import plot_pr_curves
from .training import load_checkpoint, train

log = logging.getLogger("seasongan")

FAILED_MARKER = "FAILED"


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show every default once; flags whose default comes from the config say so in their help."""

    def _get_help_string(self, action):
        text = action.help or ""
        if action.required:
            return text + " (required)"
        if "default:" in text:
            return text
        return super()._get_help_string(action)


def _lengths(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("sequence lengths must be positive")
    return values


def _read_config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _write_json(path: Path, payload) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


def cmd_synth(args) -> None:
    cfg = _read_config(args.config)
    seed = cfg.training.seed if args.seed is None else args.seed
    count = args.count if args.count is not None else cfg.synth.count
    size = args.size if args.size is not None else cfg.synth.size
    runs = args.stationary_runs if args.stationary_runs is not None else cfg.synth.stationary_runs
    out = Path(args.out)
    seq_a, seq_b = synthesize_paired_domains(seed, count, size, cfg.synth.step or None, runs)
    rows = ["frame_index,domain,path,seed"]
    for domain, seq in (("A", seq_a), ("B", seq_b)):
        (out / domain).mkdir(parents=True, exist_ok=True)
        for rec in seq:
            rel = f"{domain}/{rec.frame_index:06d}.png"
            save_image(rec.pixels, out / rel)
            rows.append(f"{rec.frame_index},{domain},{rel},{seed}")
    (out / "manifest.csv").write_text("\n".join(rows) + "\n")
    log.info("wrote %d frames per domain to %s", count, out)


def cmd_train(args) -> None:
    cfg = _read_config(args.config)
    if args.seed is not None:
        cfg.training.seed = args.seed
    if args.steps is not None:
        cfg.training.total_steps = args.steps
    if args.stride is not None:
        cfg.data.stride = args.stride
    cfg.validate()
    if not cfg.data.domain_a_dir or not cfg.data.domain_b_dir:
        raise ConfigError("data.domain_a_dir and data.domain_b_dir must name image directories")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(render_config(cfg))
    size = cfg.data.image_size
    seq_a = load_image_dir(cfg.data.domain_a_dir, size, "A", cfg.data.stride)
    seq_b = load_image_dir(cfg.data.domain_b_dir, size, "B", cfg.data.stride)
    split = split_dataset(seq_a, seq_b, cfg.data.sampling_ratio)
    state = None
    if args.resume:
        state = load_checkpoint(args.resume)
        state.config.total_steps = cfg.training.total_steps
        log.info("resuming from %s at step %d", args.resume, state.step)
    state, records = train(cfg.training, split.train_A, split.train_B, state=state, gen_cfg=cfg.generator,
                           disc_cfg=cfg.discriminator, checkpoint_dir=out / "checkpoints",
                           log_path=out / "loss_log.csv", progress_every=args.log_every)
    log.info("trained to step %d (%d steps this run)", state.step, len(records))


def _direction_nets(state, direction: str):
    # A2B: queries in A, translated by G_B, judged by D_B
    if direction == "A2B":
        return state.G_B, state.D_B
    if direction == "B2A":
        return state.G_A, state.D_A
    raise ConfigError(f"direction must be A2B or B2A, got {direction!r}")


def cmd_translate(args) -> None:
    state = load_checkpoint(args.checkpoint)
    gen, _ = _direction_nets(state, args.direction)
    size = gen.config.input_size
    files = list_images(args.input)
    if not files:
        raise ValueError(f"no images in {args.input}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = []
    for f in files:
        rec = decode_image(f, size)
        start = time.perf_counter()
        translated = gen(rec[None].astype(gen.dtype))[0]
        timings.append(time.perf_counter() - start)
        save_image(translated, out / f.name)
    _write_json(out / "translate_summary.json", {
        "direction": args.direction, "images": len(files),
        "mean_ms_per_image": 1000 * float(np.mean(timings)), "max_ms_per_image": 1000 * float(np.max(timings)),
    })


def cmd_match_eval(args) -> None:
    cfg = _read_config(args.config)
    m = cfg.matching
    for key, value in (("direction", args.direction), ("lengths", args.lengths),
                       ("threshold_grid", args.threshold_grid), ("tolerance_frames", args.tolerance_frames)):
        if value is not None:
            setattr(m, key, value)
    if args.no_translate:
        m.translate_queries = False
    stride = args.stride if args.stride is not None else cfg.data.stride
    m.validate()
    state = load_checkpoint(args.checkpoint)
    gen, disc = _direction_nets(state, m.direction)
    size = gen.config.input_size
    dtype = disc.dtype
    queries = stack_pixels(load_image_dir(args.query_dir, size, "query", stride), dtype)
    database = stack_pixels(load_image_dir(args.db_dir, size, "db", stride), dtype)
    if m.max_frames:
        queries, database = queries[:m.max_frames], database[:m.max_frames]
    if len(queries) > len(database):
        raise ValueError(f"{len(queries)} query frames but only {len(database)} database frames to align with")
    start = time.perf_counter()
    if m.translate_queries:
        queries = np.concatenate([gen(queries[i:i + 32]) for i in range(0, len(queries), 32)])
    q_feat = extract_features(disc, queries)
    elapsed = time.perf_counter() - start
    db_feat = extract_features(disc, database)
    truth = GroundTruth.identity(len(q_feat), m.tolerance_frames)
    thresholds = default_thresholds(m.threshold_grid)
    curves = sweep_sequence_lengths(q_feat, db_feat, m.lengths, truth, thresholds, m.normalize_order)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"direction": m.direction, "queries": len(q_feat), "database": len(db_feat),
               "tolerance_frames": m.tolerance_frames,
               "ms_per_query_image": 1000 * elapsed / len(q_feat), "curves": {}}
    for c in curves:
        write_pr_curve(c, out / f"pr_n{c.sequence_length}.csv")
        summary["curves"][str(c.sequence_length)] = {
            "max_precision": c.max_precision(), "recall_at_full_precision": c.recall_at_full_precision(),
            "max_recall": c.max_recall(), "area": c.area(),
        }
    _, single = match_sequences(q_feat, db_feat, 1, m.normalize_order)
    matrix_heatmap_export(single, m.heatmap_clip, out / "distance_heatmap.png")
    _write_json(out / "summary.json", summary)


def cmd_plot(args) -> None:
    curves = [read_pr_curve(p) for p in args.pr_files]
    plot_pr_curves(curves, args.out)


def cmd_default_config(args) -> None:
    text = render_config(RunConfig())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = argparse.ArgumentParser(prog="seasongan", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", default=False, help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic two-domain sequence", formatter_class=fmt)
    p.add_argument("--config", default=None, help="run config (YAML); synth section supplies defaults (default: built-in config)")
    p.add_argument("--seed", type=int, default=None, help="generator seed (default: training.seed)")
    p.add_argument("--count", type=int, default=None, help=f"frames per domain (default: {cfgmod.SynthConfig.count})")
    p.add_argument("--size", type=int, default=None, help=f"image side in pixels (default: {cfgmod.SynthConfig.size})")
    p.add_argument("--stationary-runs", type=int, default=None, help="number of paused segments (default: 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the coupled networks", formatter_class=fmt)
    p.add_argument("--config", required=True, help="run config (YAML)")
    p.add_argument("--seed", type=int, default=None, help="override training.seed (default: from config)")
    p.add_argument("--steps", type=int, default=None, help="override training.total_steps (default: from config)")
    p.add_argument("--stride", type=int, default=None, help="override data.stride (default: from config)")
    p.add_argument("--resume", default=None, help="checkpoint to continue from (default: start fresh)")
    p.add_argument("--log-every", type=int, default=100, help="progress log interval in steps (0: silent)")
    p.add_argument("--out", required=True, help="output directory for checkpoints and loss log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="translate a directory of images", formatter_class=fmt)
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--direction", choices=["A2B", "B2A"], default="A2B", help="translation direction")
    p.add_argument("--in", dest="input", required=True, help="input image directory")
    p.add_argument("--out", required=True, help="output image directory")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("match-eval", help="place recognition and PR evaluation", formatter_class=fmt)
    p.add_argument("--config", default=None, help="run config (YAML); matching section supplies defaults (default: built-in config)")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--query-dir", required=True, help="query images (time-ordered)")
    p.add_argument("--db-dir", required=True, help="database images, frame-aligned with the queries")
    p.add_argument("--direction", choices=["A2B", "B2A"], default=None,
                   help=f"query domain to database domain (default: {cfgmod.MatchConfig.direction})")
    p.add_argument("--lengths", type=_lengths, default=None, help="comma list of sequence lengths (default: 1,2,5,10)")
    p.add_argument("--threshold-grid", type=int, default=None, help="number of thresholds over [0, 2] (default: 200)")
    p.add_argument("--tolerance-frames", type=int, default=None, help="ground-truth window in frames (default: 2)")
    p.add_argument("--stride", type=int, default=None, help="keep every stride-th image (default: data.stride)")
    p.add_argument("--no-translate", action="store_true", default=False,
                   help="match raw query features without translating")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_match_eval)

    p = sub.add_parser("plot", help="plot PR curve files as SVG", formatter_class=fmt)
    p.add_argument("pr_files", nargs="+", help="PR curve files written by match-eval")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("default-config", help="print the default run config", formatter_class=fmt)
    p.add_argument("--out", default=None, help="write to a file (default: stdout)")
    p.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = getattr(args, "out", None)
    marker = Path(out) / FAILED_MARKER if out else None
    if marker is not None and marker.exists():
        marker.unlink()
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, KeyError, FloatingPointError) as exc:
        print(f"seasongan {args.command}: error: {exc}", file=sys.stderr)
        if marker is not None and marker.parent.is_dir():
            marker.write_text(f"{exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
