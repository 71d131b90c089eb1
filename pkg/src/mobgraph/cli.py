"""Command-line entry point wiring all pipeline stages.

Settings come from an optional JSON config file with per-flag overrides;
each stage writes its artifacts into the shared output directory.

Exit codes: 0 ok, 1 config error, 2 missing dependency artifact, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .geo import BoundingBox, GeoPoint
from .ingest import NightWindow, parse_utc_offset
from .pipeline import (EXIT_CONFIG, STAGES, PipelineConfig, PipelineError, run,
                       validate_config)

_CONFIG_KEYS = {
    "input", "format", "bbox", "night", "utc_offset", "min_pts", "home_epsilon",
    "mc_count", "mc_seed", "vi_sample_frac", "percentile", "select_order",
    "merge_radius", "cost_mode", "louvain_seed", "top_k", "synth_config",
}


def parse_bbox(text: str) -> BoundingBox:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("bbox needs four comma-separated numbers: swlat,swlon,nelat,nelon")
    return BoundingBox(GeoPoint(parts[0], parts[1]), GeoPoint(parts[2], parts[3]))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="worker threads for the Monte-Carlo runs")
    common.add_argument("--verbose", action="store_true", help="log stage progress")
    common.add_argument("--input", action="append", metavar="PATH",
                        help="input event file (repeatable)")
    common.add_argument("--format", choices=["ndjson", "csv"], help="input record layout")
    common.add_argument("--bbox", metavar="S,W,N,E",
                        help='capture box "swlat,swlon,nelat,nelon"')
    common.add_argument("--night", metavar="HH:MM-HH:MM", help='night window, e.g. "22:00-04:00"')
    common.add_argument("--utc-offset", metavar="±HH:MM", help='local offset, e.g. "-08:00"')
    common.add_argument("--min-pts", type=int, metavar="K", help="density threshold")
    common.add_argument("--home-epsilon", type=float, metavar="DEG",
                        help="home clustering radius in degrees")
    common.add_argument("--mc-count", type=int, metavar="N", help="number of radius pairs")
    common.add_argument("--mc-seed", type=int, metavar="SEED", help="Monte-Carlo seed")
    common.add_argument("--vi-sample-frac", type=float, metavar="F",
                        help="event fraction for the comparison sample")
    common.add_argument("--percentile", type=float, metavar="P",
                        help="top comparison percentile to keep")
    common.add_argument("--select-order", choices=["desc", "asc"],
                        help="rank comparisons by descending (default) or ascending distance")
    common.add_argument("--merge-radius", type=float, metavar="DEG",
                        help="node de-duplication radius in degrees")
    common.add_argument("--cost-mode", choices=["reciprocal", "uniform"],
                        help="edge traversal cost for betweenness")
    common.add_argument("--louvain-seed", type=int, metavar="SEED",
                        help="community detection seed")
    common.add_argument("--top-k", type=int, metavar="K", help="central nodes to report")
    common.add_argument("--synth-config", metavar="PATH",
                        help="flat key-value generator config (synth stage)")

    parser = argparse.ArgumentParser(
        prog="mobgraph",
        description="Build and analyze mobility graphs from geo-tagged event streams.")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common],
                       help=f"run the {stage} stage" if stage != "all"
                       else "run ingest, homes, select, graph, analyze and report in order")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise PipelineError(EXIT_CONFIG, f"config field 'config': no such file: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PipelineError(EXIT_CONFIG, f"config field 'config': invalid JSON: {exc}")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise PipelineError(EXIT_CONFIG,
                                f"config field '{sorted(unknown)[0]}': unknown key")
        _apply(cfg, data)
    overrides = {
        "input": args.input,
        "format": args.format,
        "bbox": args.bbox,
        "night": args.night,
        "utc_offset": args.utc_offset,
        "min_pts": args.min_pts,
        "home_epsilon": args.home_epsilon,
        "mc_count": args.mc_count,
        "mc_seed": args.mc_seed,
        "vi_sample_frac": args.vi_sample_frac,
        "percentile": args.percentile,
        "select_order": args.select_order,
        "merge_radius": args.merge_radius,
        "cost_mode": args.cost_mode,
        "louvain_seed": args.louvain_seed,
        "top_k": args.top_k,
        "synth_config": args.synth_config,
    }
    _apply(cfg, {k: v for k, v in overrides.items() if v is not None})
    if args.out:
        cfg.out_dir = args.out
    if args.threads:
        cfg.threads = args.threads
    return cfg


def _apply(cfg: PipelineConfig, data: dict) -> None:
    try:
        if "input" in data:
            value = data["input"]
            cfg.inputs = [str(p) for p in (value if isinstance(value, list) else [value])]
        if "format" in data:
            cfg.fmt = str(data["format"])
        if "bbox" in data:
            value = data["bbox"]
            cfg.bbox = parse_bbox(",".join(str(v) for v in value)
                                  if isinstance(value, list) else str(value))
        night = data.get("night")
        offset = data.get("utc_offset")
        if night is not None or offset is not None:
            window = night if night is not None else \
                f"{cfg.night.start_minute // 60:02d}:{cfg.night.start_minute % 60:02d}" \
                f"-{cfg.night.end_minute // 60:02d}:{cfg.night.end_minute % 60:02d}"
            cfg.night = NightWindow.parse(
                window,
                parse_utc_offset(offset) if offset is not None else cfg.night.utc_offset_minutes)
        for key, attr in (("min_pts", "min_pts"), ("mc_count", "mc_count"),
                          ("mc_seed", "mc_seed"), ("louvain_seed", "louvain_seed"),
                          ("top_k", "top_k")):
            if key in data:
                setattr(cfg, attr, int(data[key]))
        for key, attr in (("home_epsilon", "home_epsilon"),
                          ("vi_sample_frac", "vi_sample_frac"),
                          ("percentile", "percentile"), ("merge_radius", "merge_radius")):
            if key in data:
                setattr(cfg, attr, float(data[key]))
        if "select_order" in data:
            cfg.select_order = str(data["select_order"])
        if "cost_mode" in data:
            cfg.cost_mode = str(data["cost_mode"])
        if "synth_config" in data:
            cfg.synth_config = str(data["synth_config"])
    except (TypeError, ValueError) as exc:
        raise PipelineError(EXIT_CONFIG, f"config field: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        validate_config(cfg)
        return run(args.stage, cfg)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def run_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_main()
