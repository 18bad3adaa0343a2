"""Comparison figures rendered next to the report CSV."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport

METHOD_STYLES = {
    "exhaustive": {"color": "tab:gray", "marker": "s"},
    "naive": {"color": "tab:orange", "marker": "^"},
    "dnn": {"color": "tab:blue", "marker": "o"},
}


def plot_map_curves(report: EvalReport, path) -> None:
    """MAP@R against R, one curve per method."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for method in sorted(report.per_method):
        m = report.per_method[method]
        grid = sorted(m.map_at_r)
        style = METHOD_STYLES.get(method, {})
        ax.plot(grid, [m.map_at_r[r] for r in grid], label=method, **style)
    ax.set_xlabel("R (retrieved examples)")
    ax.set_ylabel("MAP@R")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    cfg = report.config
    ax.set_title(f"N={cfg.get('N')}  c={cfg.get('c')}  d={cfg.get('d')}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_cost_summary(report: EvalReport, path) -> None:
    """Accessed-reference-data percentage and median query latency."""
    methods = sorted(report.per_method)
    colors = [METHOD_STYLES.get(m, {}).get("color", "tab:blue") for m in methods]
    fig, (ax_ard, ax_ms) = plt.subplots(1, 2, figsize=(7.5, 3.4))

    ards = [report.per_method[m].ard_percent for m in methods]
    ax_ard.bar(methods, ards, color=colors)
    ax_ard.set_ylabel("ARD %")
    ax_ard.set_yscale("log")
    for i, v in enumerate(ards):
        ax_ard.annotate(f"{v:.3g}", (i, v), ha="center", va="bottom", fontsize=8)

    bottoms = [0.0] * len(methods)
    for phase, shade in (("predict_ms", 0.45), ("rank_ms", 0.7), ("rerank_ms", 1.0)):
        values = [getattr(report.per_method[m], phase) for m in methods]
        ax_ms.bar(methods, values, bottom=bottoms, alpha=shade,
                  color=colors, label=phase.removesuffix("_ms"))
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax_ms.set_ylabel("median ms / query")
    ax_ms.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(report: EvalReport, csv_path) -> list[Path]:
    """Write the standard figures next to a report CSV; returns the paths."""
    base = Path(csv_path)
    map_path = base.with_name(base.stem + "_map.png")
    cost_path = base.with_name(base.stem + "_cost.png")
    plot_map_curves(report, map_path)
    plot_cost_summary(report, cost_path)
    return [map_path, cost_path]
