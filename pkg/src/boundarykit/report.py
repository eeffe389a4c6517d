"""Simulation report rendering: delimited output plus figures.

Writes a long-format CSV of the analytic and empirical curves, a plain-text
summary, and two PNG figures (end-to-end decay across stages, error
filtering across catch layers) into the requested directory.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .reliability import SimulationReport


def write_report_csv(report: SimulationReport, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "index", "analytic", "empirical"])
        writer.writerow(
            ["end_to_end_success", report.params.n,
             f"{report.analytic_end_to_end_success:.10g}",
             f"{report.empirical_end_to_end_success:.10g}"]
        )
        writer.writerow(
            ["escape_rate", report.params.k,
             f"{report.analytic_escape_rate:.10g}",
             "" if report.empirical_escape_rate is None else f"{report.empirical_escape_rate:.10g}"]
        )
        for i, (ana, emp) in enumerate(zip(report.stage_decay_analytic, report.stage_decay_empirical), start=1):
            writer.writerow(["stage_decay", i, f"{ana:.10g}", f"{emp:.10g}"])
        for j, (ana, emp) in enumerate(zip(report.layer_filtering_analytic, report.layer_filtering_empirical)):
            writer.writerow(["layer_filtering", j, f"{ana:.10g}", f"{emp:.10g}"])
    return path


def write_figures(report: SimulationReport, out_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths: list[Path] = []
    p, n, q, k = report.params.p, report.params.n, report.params.q, report.params.k

    fig, ax = plt.subplots(figsize=(7, 4.5))
    stages = range(1, n + 1)
    ax.plot(stages, report.stage_decay_analytic, "-", color="tab:blue", label=f"analytic p^i (p={p})")
    ax.plot(stages, report.stage_decay_empirical, "o", color="tab:orange", ms=4, label="empirical")
    ax.set_xlabel("stages composed (i)")
    ax.set_ylabel("probability every stage succeeded")
    ax.set_title(f"End-to-end reliability decay over {report.trials} trials")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    decay_path = out_dir / "reliability_decay.png"
    fig.savefig(decay_path, dpi=120)
    plt.close(fig)
    paths.append(decay_path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    layers = range(0, k + 1)
    ax.plot(layers, report.layer_filtering_analytic, "-", color="tab:blue", label=f"analytic (1-q)^j (q={q})")
    ax.plot(layers, report.layer_filtering_empirical, "o", color="tab:red", ms=4, label="empirical (error-bearing trials)")
    ax.set_xlabel("catch layers passed (j)")
    ax.set_ylabel("fraction of errors still escaping")
    ax.set_title("Layered error filtering")
    if k > 0 and q > 0:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    filtering_path = out_dir / "escape_filtering.png"
    fig.savefig(filtering_path, dpi=120)
    plt.close(fig)
    paths.append(filtering_path)
    return paths


def write_simulation_outputs(report: SimulationReport, out_dir: str | Path) -> dict[str, list[str]]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_report_csv(report, out_dir / "simulation_report.csv")
    text_path = out_dir / "simulation_report.txt"
    text_path.write_text("\n".join(report.summary_lines()) + "\n", encoding="utf-8")
    figure_paths = write_figures(report, out_dir)
    return {
        "csv": [str(csv_path)],
        "text": [str(text_path)],
        "figures": [str(p) for p in figure_paths],
    }
