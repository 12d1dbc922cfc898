# ----------------------- report/charts.py -----------------------
"""Line charts of the sweep KPIs vs λ, drawn from the sweep summary CSV alone."""
from __future__ import annotations
import os
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from report.export import read_summary_csv  # noqa: E402

# stable element ids so identical sweeps give identical files
matplotlib.rcParams["svg.hashsalt"] = "hm-autotune"

CHARTS: Dict[str, Tuple[str, str]] = {
    "access_probability.svg": ("access_prob", "Access probability"),
    "holding_probability.svg": ("holding_prob", "Holding probability"),
    "mean_throughput.svg": ("mean_throughput", "Mean user throughput (bytes/s)"),
}
POLICY_STYLE = {"auto": ("tab:blue", "o", "auto-tuned HM"), "fixed": ("tab:orange", "s", "fixed HM")}


def plot_sweep_charts(summary_csv: str, out_dir: str) -> List[str]:
    df = read_summary_csv(summary_csv)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for filename, (column, label) in CHARTS.items():
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for policy in sorted(df["policy"].unique()):
            curve = df[df["policy"] == policy].groupby("lambda")[column].mean().sort_index()
            color, marker, name = POLICY_STYLE.get(policy, (None, "x", policy))
            ax.plot(curve.index, curve.values, marker=marker, color=color, label=name)
        ax.set_xlabel("Arrival rate λ (mobiles/s)")
        ax.set_ylabel(label)
        if column != "mean_throughput":
            ax.set_ylim(0.0, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, filename)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
# ----------------------- /report/charts.py -----------------------
