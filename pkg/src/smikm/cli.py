"""``smikm`` command line: build an index, query it, evaluate it."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import Config, config_from_snapshot, load_config
from .errors import SmikmError
from .harness import bundle_for_image, build_index, evaluate_map, load_dataset
from .imagecore import read_image
from .retrieval import load_index, query, save_index


def _cmd_index(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    if args.skip_grayscale:
        cfg = replace(cfg, skip_grayscale=True)
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    manifest = load_dataset(args.data, args.train_list, cfg.skip_grayscale)
    run = build_index(manifest, cfg, dump_saliency=args.dump_saliency)
    save_index(run.index, args.out)
    times = ", ".join(f"{k} {v:.1f}s" for k, v in run.timings.items())
    print(f"indexed {len(run.index)} images ({len(run.failures)} skipped); {times}", file=sys.stderr)
    return 0


def _cmd_query(args) -> int:
    index = load_index(args.index)
    cfg = config_from_snapshot(index.config_snapshot)
    debug = Path(str(args.image) + ".saliency.png") if args.dump_saliency else None
    bundle = bundle_for_image(read_image(args.image), index.vocab, cfg, debug)
    exclude = None
    image = Path(args.image).resolve()
    for e in index.entries:
        if image.as_posix().endswith("/" + e.image_id):
            exclude = e.image_id
            break
    result = query(index, bundle, exclude_id=exclude)
    for rank, (image_id, dist) in enumerate(result.ranked[: args.top], 1):
        print(f"{rank}\t{image_id}\t{dist:.6f}")
    return 0


def _cmd_eval(args) -> int:
    index = load_index(args.index)
    queries = None
    if args.queries:
        queries = load_dataset(args.queries, args.test_list)
    report = evaluate_map(index, queries)
    Path(args.report).write_text(report.to_json() + "\n")
    for label, value in report.per_class_map.items():
        print(f"{label}\t{value:.4f}")
    print(f"mAP\t{report.overall_map:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smikm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="analyse a dataset and write an index file")
    p.add_argument("--data", required=True, help="Wang-style flat folder or class subdirectories")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value parameter file")
    p.add_argument("--train-list", help="file of root-relative image paths to index")
    p.add_argument("--skip-grayscale", action="store_true")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--dump-saliency", action="store_true", help="write <image>.saliency.png")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("query", help="rank indexed images against one query image")
    p.add_argument("--index", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--dump-saliency", action="store_true")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("eval", help="mean average precision of an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", help="query dataset; default: every indexed image")
    p.add_argument("--test-list", help="file of root-relative query paths")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (SmikmError, OSError) as exc:
        print(f"smikm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
