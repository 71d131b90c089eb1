"""Stage orchestration with self-describing, reproducible artifacts.

Every stage reads its predecessor's files from the shared output directory,
verifies that they were produced under the same configuration (via an
embedded config hash) and writes its own artifact plus a ``*_meta.json``
sidecar. Nothing embeds wall-clock state, so identical configs and inputs
reproduce byte-identical trees.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, graph as graphmod, partition, synth
from .clustering import ClusterParams, HomeLocation, infer_home
from .geo import BoundingBox, GeoPoint
from .ingest import (FORMAT_CSV, FORMAT_NDJSON, GeoEvent, NightWindow, filter_bbox,
                     filter_night, group_by_user, parse_events, write_events_ndjson)
from .partition import NodeSet

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_DATA = 3

STAGES = ("ingest", "homes", "select", "graph", "analyze", "synth", "report", "all")
ALL_CHAIN = ("ingest", "homes", "select", "graph", "analyze", "report")

# capture region defaults, in decimal degrees
DEFAULT_BBOX = BoundingBox(GeoPoint(32.417845, -117.313752),
                           GeoPoint(33.098144, -116.821643))

EVENTS_FILE = "events.ndjson"
ISSUES_FILE = "ingest_issues.csv"
HOMES_FILE = "homes.csv"
SELECTION_FILE = "selection.csv"
NODES_FILE = "nodes.csv"
EDGES_FILE = "edges.csv"
GRAPH_NODES_FILE = "graph_nodes.csv"
NODE_TABLE_FILE = "node_table.csv"
GEOJSON_FILE = "nodes.geojson"
SYNTH_EVENTS_FILE = "synth_events.ndjson"
SYNTH_USERS_FILE = "synth_truth_users.csv"
SYNTH_ZONES_FILE = "synth_truth_zones.csv"
REPORT_TXT = "report.txt"
REPORT_CSV = "report_summary.csv"


class PipelineError(Exception):
    """A stage failure carrying its process exit code."""

    def __init__(self, exit_code: int, message: str) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    fmt: str = FORMAT_NDJSON
    out_dir: str = "out"
    bbox: BoundingBox = DEFAULT_BBOX
    night: NightWindow = field(default_factory=NightWindow)
    min_pts: int = 3
    home_epsilon: float = 0.65
    mc_count: int = 500
    mc_seed: int = 42
    vi_sample_frac: float = 0.01
    percentile: float = 5.0
    select_order: str = partition.SELECT_DESC
    merge_radius: float = 0.001
    cost_mode: str = analysis.COST_RECIPROCAL
    louvain_seed: int = 0
    top_k: int = 5
    threads: int = 1
    synth_config: str | None = None


def _config_error(name: str, detail: str) -> PipelineError:
    return PipelineError(EXIT_CONFIG, f"config field '{name}': {detail}")


def validate_config(cfg: PipelineConfig) -> None:
    """Range-check every numeric setting; raises with the offending field name."""
    if cfg.fmt not in (FORMAT_NDJSON, FORMAT_CSV):
        raise _config_error("format", f"unknown format {cfg.fmt!r}")
    if cfg.min_pts < 1:
        raise _config_error("min_pts", "must be >= 1")
    if cfg.home_epsilon <= 0:
        raise _config_error("home_epsilon", "must be positive")
    if cfg.mc_count < 2:
        raise _config_error("mc_count", "must be >= 2 so clusterings can be compared")
    if not 0.0 < cfg.vi_sample_frac <= 1.0:
        raise _config_error("vi_sample_frac", "must be in (0, 1]")
    if not 0.0 < cfg.percentile <= 100.0:
        raise _config_error("percentile", "must be in (0, 100]")
    if cfg.select_order not in (partition.SELECT_DESC, partition.SELECT_ASC):
        raise _config_error("select_order", f"unknown order {cfg.select_order!r}")
    if cfg.merge_radius < 0:
        raise _config_error("merge_radius", "must be >= 0")
    if cfg.cost_mode not in (analysis.COST_RECIPROCAL, analysis.COST_UNIFORM):
        raise _config_error("cost_mode", f"unknown mode {cfg.cost_mode!r}")
    if cfg.top_k < 1:
        raise _config_error("top_k", "must be >= 1")
    if cfg.threads < 1:
        raise _config_error("threads", "must be >= 1")


def config_hash(cfg: PipelineConfig) -> str:
    """Hash of the semantic settings; paths and parallelism are excluded."""
    payload = {
        "format": cfg.fmt,
        "bbox": [cfg.bbox.south_west.lat, cfg.bbox.south_west.lon,
                 cfg.bbox.north_east.lat, cfg.bbox.north_east.lon],
        "night": [cfg.night.start_minute, cfg.night.end_minute, cfg.night.utc_offset_minutes],
        "min_pts": cfg.min_pts,
        "home_epsilon": cfg.home_epsilon,
        "mc_count": cfg.mc_count,
        "mc_seed": cfg.mc_seed,
        "vi_sample_frac": cfg.vi_sample_frac,
        "percentile": cfg.percentile,
        "select_order": cfg.select_order,
        "merge_radius": cfg.merge_radius,
        "cost_mode": cfg.cost_mode,
        "louvain_seed": cfg.louvain_seed,
        "top_k": cfg.top_k,
        "schema_version": SCHEMA_VERSION,
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# artifact plumbing


def _out(cfg: PipelineConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def _meta_path(cfg: PipelineConfig, stage: str) -> Path:
    return _out(cfg, f"{stage}_meta.json")


def _write_meta(cfg: PipelineConfig, stage: str, payload: dict) -> None:
    meta = {"schema_version": SCHEMA_VERSION, "stage": stage,
            "config_hash": config_hash(cfg)}
    meta.update(payload)
    with open(_meta_path(cfg, stage), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_meta(cfg: PipelineConfig, stage: str, needed_by: str) -> dict:
    path = _meta_path(cfg, stage)
    if not path.exists():
        raise PipelineError(
            EXIT_MISSING_ARTIFACT,
            f"stage '{needed_by}' needs the '{stage}' artifact; run '{stage}' first")
    meta = json.loads(path.read_text(encoding="utf-8"))
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise PipelineError(
            EXIT_MISSING_ARTIFACT,
            f"artifact '{stage}' has schema {meta.get('schema_version')}, expected {SCHEMA_VERSION}")
    if meta.get("config_hash") != config_hash(cfg):
        raise PipelineError(
            EXIT_MISSING_ARTIFACT,
            f"artifact '{stage}' was built under config {meta.get('config_hash')}, "
            f"current config is {config_hash(cfg)}; re-run '{stage}'")
    return meta


def _require_file(cfg: PipelineConfig, name: str, needed_by: str) -> Path:
    path = _out(cfg, name)
    if not path.exists():
        raise PipelineError(EXIT_MISSING_ARTIFACT,
                            f"stage '{needed_by}' needs missing artifact {path}")
    return path


def _read_events_artifact(cfg: PipelineConfig, needed_by: str) -> list[GeoEvent]:
    path = _require_file(cfg, EVENTS_FILE, needed_by)
    with open(path, "r", encoding="utf-8") as fh:
        events, issues = parse_events(fh, FORMAT_NDJSON)
    if issues:
        raise PipelineError(EXIT_DATA,
                            f"canonical event artifact {path} is corrupt: {issues[0].message}")
    return events


def _read_homes_csv(path: Path) -> list[HomeLocation]:
    homes = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            homes.append(HomeLocation(row["user_id"],
                                      GeoPoint(float(row["lat"]), float(row["lon"])),
                                      int(row["support"])))
    return homes


def _read_node_set(path: Path, merge_radius: float) -> NodeSet:
    centers: list[GeoPoint] = []
    provenance: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            centers.append(GeoPoint(float(row["lat"]), float(row["lon"])))
            provenance.append((int(row["pair_id"]), int(row["cluster_id"])))
    return NodeSet(centers, provenance, merge_radius)


def _read_graph_artifacts(cfg: PipelineConfig, needed_by: str) \
        -> tuple[graphmod.MobilityGraph, list[int]]:
    nodes_path = _require_file(cfg, GRAPH_NODES_FILE, needed_by)
    edges_path = _require_file(cfg, EDGES_FILE, needed_by)
    coords: list[GeoPoint] = []
    components: list[int] = []
    source_ids: list[int] = []
    with open(nodes_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            coords.append(GeoPoint(float(row["lat"]), float(row["lon"])))
            components.append(int(row["component"]))
            source_ids.append(int(row["source_id"]))
    edges: dict[tuple[int, int], int] = {}
    with open(edges_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            edges[(int(row["src"]), int(row["dst"]))] = int(row["weight"])
    return graphmod.MobilityGraph.from_edges(coords, edges, source_ids), components


# ---------------------------------------------------------------------------
# stages


def stage_synth(cfg: PipelineConfig) -> dict:
    if not cfg.synth_config:
        raise _config_error("synth_config", "required by the synth stage")
    path = Path(cfg.synth_config)
    if not path.exists():
        raise _config_error("synth_config", f"no such file: {path}")
    try:
        synth_cfg = synth.parse_synth_config(path)
    except (ValueError, KeyError) as exc:
        raise PipelineError(EXIT_DATA, f"bad synth config {path}: {exc}") from exc
    events, truth = synth.generate(synth_cfg)
    count = write_events_ndjson(events, _out(cfg, SYNTH_EVENTS_FILE))
    with open(_out(cfg, SYNTH_USERS_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "zone"])
        for user in sorted(truth.user_zone):
            writer.writerow([user, truth.user_zone[user]])
    with open(_out(cfg, SYNTH_ZONES_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["zone", "lat", "lon", "community"])
        for z, center in enumerate(synth_cfg.zone_centers):
            writer.writerow([z, repr(center.lat), repr(center.lon), truth.zone_community[z]])
    summary = {"events": count, "users": len(truth.user_zone),
               "zones": len(synth_cfg.zone_centers)}
    _write_meta(cfg, "synth", summary)
    return summary


def stage_ingest(cfg: PipelineConfig) -> dict:
    if not cfg.inputs:
        raise _config_error("input", "at least one input file is required")
    for name in cfg.inputs:
        if not Path(name).exists():
            raise _config_error("input", f"no such file: {name}")
    events: list[GeoEvent] = []
    issues = []
    seen: set[str] = set()
    input_digests = []
    for name in cfg.inputs:
        digest = hashlib.sha256(Path(name).read_bytes()).hexdigest()[:16]
        input_digests.append({"name": Path(name).name, "sha256": digest})
        with open(name, "r", encoding="utf-8", newline="") as fh:
            got, bad = parse_events(fh, cfg.fmt, seen_ids=seen)
        events.extend(got)
        issues.extend(bad)
    kept = filter_bbox(events, cfg.bbox)
    write_events_ndjson(kept, _out(cfg, EVENTS_FILE))
    with open(_out(cfg, ISSUES_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "message"])
        for issue in issues:
            writer.writerow([issue.line, issue.message])
    summary = {"events_parsed": len(events), "events_kept": len(kept),
               "issues": len(issues), "inputs": input_digests}
    _write_meta(cfg, "ingest", summary)
    return summary


def stage_homes(cfg: PipelineConfig) -> dict:
    _require_meta(cfg, "ingest", "homes")
    events = _read_events_artifact(cfg, "homes")
    night = filter_night(events, cfg.night)
    by_user = group_by_user(night)
    params = ClusterParams(cfg.home_epsilon, cfg.min_pts)
    homes = []
    for user in sorted(by_user):
        home = infer_home(by_user[user], params)
        if home is not None:
            homes.append(home)
    with open(_out(cfg, HOMES_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "lat", "lon", "support"])
        for h in homes:
            writer.writerow([h.user_id, repr(h.center.lat), repr(h.center.lon), h.support])
    summary = {"night_events": len(night), "night_users": len(by_user),
               "homes": len(homes), "users_dropped": len(by_user) - len(homes)}
    _write_meta(cfg, "homes", summary)
    return summary


def stage_select(cfg: PipelineConfig) -> dict:
    _require_meta(cfg, "ingest", "select")
    events = _read_events_artifact(cfg, "select")
    sample = partition.sample_events(events, cfg.vi_sample_frac, cfg.mc_seed)
    night = filter_night(sample, cfg.night)
    by_user = group_by_user(night)
    pairs = partition.sample_pairs(cfg.mc_count, cfg.mc_seed)
    runs = partition.run_partitions(by_user, pairs, cfg.min_pts, cfg.threads)
    vi = partition.vi_matrix(runs)
    selected = partition.select_top(vi, cfg.percentile, cfg.select_order)
    selected_set = set(selected)

    candidates: list[tuple[GeoPoint, int, int]] = []
    for idx in selected:
        run = runs[idx]
        for cluster_id, center in enumerate(run.centers):
            candidates.append((center, run.pair.pair_id, cluster_id))
    if not candidates:
        raise PipelineError(EXIT_DATA,
                            "selected clusterings produced no neighborhood centers; "
                            "the sample is too sparse for home inference")
    node_set = partition.assemble_nodes(candidates, cfg.merge_radius)

    m = len(runs)
    with open(_out(cfg, SELECTION_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "eps1", "eps2", "n_homes", "n_neighborhoods",
                         "mean_vi", "selected"])
        for i, run in enumerate(runs):
            mean_vi = float(vi[i].sum() / (m - 1)) if m > 1 else 0.0
            writer.writerow([run.pair.pair_id, repr(run.pair.eps1), repr(run.pair.eps2),
                             run.n_homes, run.n_neighborhoods, repr(mean_vi),
                             "true" if i in selected_set else "false"])
    with open(_out(cfg, NODES_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "lat", "lon", "pair_id", "cluster_id"])
        for i, (center, (pair_id, cluster_id)) in enumerate(
                zip(node_set.centers, node_set.provenance)):
            writer.writerow([i, repr(center.lat), repr(center.lon), pair_id, cluster_id])
    summary = {"pairs": len(pairs), "sample_events": len(sample),
               "sample_night_events": len(night),
               "selected_clusterings": len(selected),
               "candidate_centers": len(candidates), "nodes": len(node_set.centers)}
    _write_meta(cfg, "select", summary)
    return summary


def stage_graph(cfg: PipelineConfig) -> dict:
    _require_meta(cfg, "homes", "graph")
    _require_meta(cfg, "select", "graph")
    events = _read_events_artifact(cfg, "graph")
    homes = _read_homes_csv(_require_file(cfg, HOMES_FILE, "graph"))
    node_set = _read_node_set(_require_file(cfg, NODES_FILE, "graph"), cfg.merge_radius)
    built = graphmod.build_graph(homes, node_set, events)
    pruned, removed = graphmod.prune_isolated(built)
    components, n_components = graphmod.weak_components(pruned)

    graphmod.write_edge_list_csv(pruned, _out(cfg, EDGES_FILE))
    with open(_out(cfg, GRAPH_NODES_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lat", "lon", "component", "source_id"])
        for i, p in enumerate(pruned.coords):
            writer.writerow([i, repr(p.lat), repr(p.lon), components[i], pruned.source_ids[i]])

    summary: dict = {
        "nodes_before_prune": built.n_nodes,
        "removed_isolated": removed,
        "nodes": pruned.n_nodes,
        "edges": pruned.n_edges,
        "total_weight": pruned.total_weight,
        "components": n_components,
        "homed_users": len(homes),
    }
    if pruned.n_nodes > 0:
        stats = graphmod.degree_stats(pruned)
        d, p_value = graphmod.ks_two_sample(stats.in_degree, stats.out_degree)
        summary["degrees"] = {
            "in": {"min": stats.in_summary.minimum, "max": stats.in_summary.maximum,
                   "median": stats.in_summary.median},
            "out": {"min": stats.out_summary.minimum, "max": stats.out_summary.maximum,
                    "median": stats.out_summary.median},
        }
        summary["ks"] = {"d": d, "p": p_value}
    else:
        summary["degrees"] = None
        summary["ks"] = None
    _write_meta(cfg, "graph", summary)
    return summary


def stage_analyze(cfg: PipelineConfig) -> dict:
    _require_meta(cfg, "graph", "analyze")
    g, components = _read_graph_artifacts(cfg, "analyze")
    if g.n_nodes > 0:
        communities = analysis.louvain(g, cfg.louvain_seed)
        central = analysis.betweenness(g, cfg.cost_mode)
        ranked = analysis.rank_nodes(g, central.scores, cfg.top_k)
        degrees = graphmod.degree_stats(g)
        community_labels = communities.labels
        betweenness_scores = central.scores
        summary: dict = {
            "communities": communities.count,
            "q": communities.q,
            "betweenness": {"min": central.minimum, "max": central.maximum,
                            "median": central.median},
            "top_central": [{"node": r.node_id, "lat": r.point.lat, "lon": r.point.lon,
                             "score": r.score} for r in ranked],
        }
    else:
        degrees = None
        community_labels = []
        betweenness_scores = []
        summary = {"communities": 0, "q": None, "betweenness": None, "top_central": []}
    summary["cost_mode"] = cfg.cost_mode
    summary["louvain_seed"] = cfg.louvain_seed

    graphmod.write_node_table_csv(g, components, community_labels, _out(cfg, NODE_TABLE_FILE))
    graphmod.write_geojson(g, _out(cfg, GEOJSON_FILE), components=components,
                           communities=community_labels, betweenness=betweenness_scores,
                           degrees=degrees)
    _write_meta(cfg, "analyze", summary)
    return summary


def stage_report(cfg: PipelineConfig) -> dict:
    graph_meta = _require_meta(cfg, "graph", "report")
    analysis_meta = _require_meta(cfg, "analyze", "report")
    from . import report as reportmod
    summary = reportmod.write_report(cfg, graph_meta, analysis_meta)
    _write_meta(cfg, "report", summary)
    return summary


_STAGE_FUNCS = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "homes": stage_homes,
    "select": stage_select,
    "graph": stage_graph,
    "analyze": stage_analyze,
    "report": stage_report,
}


def run(stage: str, cfg: PipelineConfig) -> int:
    """Run one stage (or the whole chain for ``"all"``); returns the exit code."""
    if stage not in STAGES:
        raise _config_error("stage", f"unknown stage {stage!r}")
    validate_config(cfg)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    chain = ALL_CHAIN if stage == "all" else (stage,)
    for name in chain:
        log.info("running stage %s", name)
        summary = _STAGE_FUNCS[name](cfg)
        log.info("stage %s done: %s", name,
                 json.dumps(summary, sort_keys=True, default=str)[:200])
    return EXIT_OK
