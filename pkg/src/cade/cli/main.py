"""Command-line entry point: gen-data, run, and table subcommands."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..features import save_stream, synth_task_stream
from .config import ConfigError, load_config
from .runner import run_matrix
from .tables import build_sections, read_records, write_tables


def _add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required,
                   help="experiment config file (YAML)")
    p.add_argument("--out", default=None,
                   help="output directory (CADE_OUT env var wins)")
    p.add_argument("--force", action="store_true",
                   help="overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cade",
        description="Continual-learning experiments for audio anti-spoofing")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data",
                       help="render the synthetic task stream to disk")
    _add_common(g, config_required=True)

    r = sub.add_parser("run", help="execute the method x memory x seed "
                                   "matrix")
    _add_common(r, config_required=True)
    r.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes (default: cpu count)")
    r.add_argument("--seed-offset", type=int, default=0,
                   help="added to every configured seed")

    t = sub.add_parser("table", help="summarize results as text, CSV, and "
                                     "figures")
    _add_common(t, config_required=False)
    return parser


def _resolve_out(args, cfg) -> Path:
    env = os.environ.get("CADE_OUT")
    if env:
        return Path(env)
    if args.out:
        return Path(args.out)
    if cfg is not None:
        return Path(cfg.out)
    return Path("runs")


def cmd_gendata(args) -> int:
    cfg = load_config(args.config)
    out = _resolve_out(args, cfg)
    data_dir = out / "data"
    if data_dir.exists() and any(data_dir.iterdir()) and not args.force:
        print(f"refusing to overwrite {data_dir} (use --force)",
              file=sys.stderr)
        return 1
    stream = synth_task_stream(cfg.stream, cfg.stream_seed)
    save_stream(stream, data_dir)
    n = sum(len(t.train) + len(t.eval) for t in stream.tasks)
    print(f"wrote {n} feature maps for {len(stream.tasks)} task(s) "
          f"to {data_dir}")
    print(f"fingerprint {stream.fingerprint}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _resolve_out(args, cfg)
    counts = run_matrix(cfg, out, jobs=args.jobs,
                        seed_offset=args.seed_offset, force=args.force)
    print(f"{counts['ok']} run(s) completed, {counts['failed']} failed, "
          f"{counts['skipped']} skipped")
    return 0 if counts["failed"] == 0 else 1


def cmd_table(args) -> int:
    cfg = load_config(args.config) if args.config else None
    out = _resolve_out(args, cfg)
    records = read_records(out / "results.jsonl")
    text_path, csv_path = write_tables(records, out)
    from .figures import render_figures   # matplotlib import kept lazy
    figure_paths = render_figures(build_sections(records), out)
    print(text_path.read_text(), end="")
    print(f"\nwrote {text_path}")
    print(f"wrote {csv_path}")
    for p in figure_paths:
        print(f"wrote {p}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-data":
            return cmd_gendata(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_table(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
