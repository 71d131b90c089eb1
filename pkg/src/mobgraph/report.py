"""Human-readable and machine-readable run summaries, with figures.

The report mirrors the statistics the mobility-graph analysis produces:
vertex/edge/component counts, weighted degree summaries, the in-vs-out
degree KS comparison, community count and modularity, and the most central
nodes with their coordinates. Figures are distribution plots rendered next
to the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURES_DIR = "figures"
FIGURE_DPI = 120


def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def write_report(cfg, graph_meta: dict, analysis_meta: dict) -> dict:
    """Write report.txt, report_summary.csv and the figure files."""
    out_dir = Path(cfg.out_dir)
    rows: list[tuple[str, object]] = []
    lines: list[str] = []

    def metric(name: str, value, text: str | None = None) -> None:
        rows.append((name, "" if value is None else value))
        if text is not None:
            lines.append(text)

    nodes = graph_meta["nodes"]
    lines.append("Mobility graph report")
    lines.append("=====================")
    lines.append(f"config hash: {graph_meta['config_hash']}")
    lines.append("")
    lines.append("Graph")
    metric("nodes", nodes, f"  nodes (isolated removed):   {nodes}")
    metric("nodes_before_prune", graph_meta["nodes_before_prune"],
           f"  nodes before pruning:       {graph_meta['nodes_before_prune']}")
    metric("removed_isolated", graph_meta["removed_isolated"],
           f"  isolated nodes removed:     {graph_meta['removed_isolated']}")
    metric("edges", graph_meta["edges"], f"  edges:                      {graph_meta['edges']}")
    metric("total_weight", graph_meta["total_weight"],
           f"  total edge weight:          {graph_meta['total_weight']}")
    metric("components", graph_meta["components"],
           f"  weak components:            {graph_meta['components']}")
    if nodes == 0:
        lines.append("")
        lines.append("The graph is empty (zero nodes); no degree, community or")
        lines.append("centrality statistics apply.")

    degrees = graph_meta.get("degrees")
    ks = graph_meta.get("ks")
    lines.append("")
    lines.append("Weighted degree")
    for direction in ("in", "out"):
        summary = degrees[direction] if degrees else None
        for stat in ("min", "max", "median"):
            metric(f"{direction}_degree_{stat}", summary[stat] if summary else None)
        text = (f"  {direction:<3} degree min/max/median:  "
                + (f"{summary['min']} / {summary['max']} / {summary['median']}"
                   if summary else "n/a"))
        lines.append(text)
    metric("ks_d", ks["d"] if ks else None)
    metric("ks_p", ks["p"] if ks else None)
    lines.append(f"  in vs out KS statistic:     D = {_fmt(ks['d'] if ks else None)}"
                 f"  (p = {_fmt(ks['p'] if ks else None)})")

    lines.append("")
    lines.append("Communities")
    metric("communities", analysis_meta["communities"],
           f"  count:        {analysis_meta['communities']}")
    metric("modularity_q", analysis_meta["q"],
           f"  modularity Q: {_fmt(analysis_meta['q'], 12)}")

    lines.append("")
    top = analysis_meta.get("top_central", [])
    lines.append(f"Top {len(top)} nodes by betweenness (cost mode: {analysis_meta['cost_mode']})")
    lines.append("  rank  node      lat          lon          score")
    for rank, entry in enumerate(top, start=1):
        metric(f"top_bc_{rank}_node", entry["node"])
        metric(f"top_bc_{rank}_lat", entry["lat"])
        metric(f"top_bc_{rank}_lon", entry["lon"])
        metric(f"top_bc_{rank}_score", entry["score"])
        lines.append(f"  {rank:<5} {entry['node']:<9} {entry['lat']:<12.6f} "
                     f"{entry['lon']:<12.6f} {entry['score']:.6g}")
    if not top:
        lines.append("  (none)")

    (out_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(out_dir / "report_summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, value if not isinstance(value, float) else repr(value)])

    figures = _write_figures(out_dir, nodes)
    return {"metrics": len(rows), "figures": figures}


def _write_figures(out_dir: Path, nodes: int) -> list[str]:
    if nodes == 0:
        return []
    fig_dir = out_dir / FIGURES_DIR
    fig_dir.mkdir(exist_ok=True)
    written = []

    in_deg, out_deg = _degrees_from_edges(out_dir / "edges.csv", nodes)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for values, label in ((in_deg, "weighted in-degree"), (out_deg, "weighted out-degree")):
        xs = np.sort(values)
        ys = np.arange(1, len(xs) + 1) / len(xs)
        ax.step(xs, ys, where="post", label=label)
    ax.set_xlabel("weighted degree")
    ax.set_ylabel("empirical CDF")
    ax.set_xscale("symlog")  # in-degree can legitimately be zero
    ax.legend(loc="lower right")
    ax.set_title("Degree distributions")
    _save(fig, fig_dir / "degree_distributions.png")
    written.append(f"{FIGURES_DIR}/degree_distributions.png")

    betweenness, communities = _node_properties(out_dir / "nodes.geojson")
    if betweenness:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        xs = np.sort(np.asarray(betweenness))[::-1]
        ax.plot(np.arange(1, len(xs) + 1), xs, marker=".", linestyle="none")
        ax.set_xlabel("node rank")
        ax.set_ylabel("betweenness")
        if xs.max() > 0:
            ax.set_yscale("symlog")
        ax.set_title("Betweenness centrality by rank")
        _save(fig, fig_dir / "betweenness_distribution.png")
        written.append(f"{FIGURES_DIR}/betweenness_distribution.png")

    if communities:
        sizes: dict[int, int] = {}
        for c in communities:
            sizes[c] = sizes.get(c, 0) + 1
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ids = sorted(sizes)
        ax.bar([str(i) for i in ids], [sizes[i] for i in ids])
        ax.set_xlabel("community")
        ax.set_ylabel("nodes")
        ax.set_title("Community sizes")
        _save(fig, fig_dir / "community_sizes.png")
        written.append(f"{FIGURES_DIR}/community_sizes.png")
    return written


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)


def _degrees_from_edges(path: Path, nodes: int) -> tuple[list[int], list[int]]:
    in_deg = [0] * nodes
    out_deg = [0] * nodes
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out_deg[int(row["src"])] += int(row["weight"])
            in_deg[int(row["dst"])] += int(row["weight"])
    return in_deg, out_deg


def _node_properties(path: Path) -> tuple[list[float], list[int]]:
    data = json.loads(path.read_text(encoding="utf-8"))
    betweenness = []
    communities = []
    for feature in data.get("features", []):
        props = feature.get("properties", {})
        if "betweenness" in props:
            betweenness.append(float(props["betweenness"]))
        if "community" in props:
            communities.append(int(props["community"]))
    return betweenness, communities
