"""Optional SVG line plots (artifacts only, never acceptance inputs)."""

from __future__ import annotations

from pathlib import Path


def write_plots(out: Path, series: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "kpzlab"
    out.mkdir(parents=True, exist_ok=True)
    for name, fig_spec in sorted(series.items()):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, (xs, ys) in sorted(fig_spec["lines"].items()):
            ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel(fig_spec.get("xlabel", "x"))
        ax.set_ylabel(fig_spec.get("ylabel", "y"))
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / f"{name}.svg", format="svg", metadata={"Date": None})
        plt.close(fig)
