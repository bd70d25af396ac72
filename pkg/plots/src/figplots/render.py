"""Figure assembly: one styled curve per detector efficiency."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# Caption conventions: solid at unit efficiency, dashed at 0.8 / 0.95,
# dash-dot at 0.5; anything else falls back to dotted.
LINE_STYLES = {1.0: "-", 0.95: "--", 0.8: "--", 0.5: "-."}
FALLBACK_STYLE = ":"

FIGURE_LABELS = {
    1: "speed-up of the average-entropy decay under phase feedback",
    2: "speed-up in mean time to target entropy, no feedback over feedback",
    3: "speed-up in mean time to target entropy, aligned-axis over feedback",
}


def build_figure_spec(figure: int, curves: list[dict]) -> dict:
    """Pure description of the plot; rendering consumes only this."""
    if figure not in FIGURE_LABELS:
        raise ValueError(f"figure must be 1, 2 or 3, not {figure}")
    spec_curves = []
    for curve in curves:
        eta = curve.get("eta")
        style = LINE_STYLES.get(eta, FALLBACK_STYLE) if eta is not None else FALLBACK_STYLE
        label = f"$\\eta$ = {eta:g}" if eta is not None else curve.get("path", "curve")
        spec_curves.append(
            {
                "L": list(curve["L"]),
                "s": list(curve["s"]),
                "stderr_s": None if curve.get("stderr_s") is None else list(curve["stderr_s"]),
                "style": style,
                "label": label,
            }
        )
    return {
        "figure": figure,
        "title": FIGURE_LABELS[figure],
        "xlabel": "final linear entropy $L$",
        "ylabel": "speed-up $s$",
        "xscale": "log",
        "curves": spec_curves,
    }


def render(spec: dict, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for curve in spec["curves"]:
        if curve["stderr_s"] is not None:
            ax.errorbar(curve["L"], curve["s"], yerr=curve["stderr_s"],
                        fmt=curve["style"], color="black", capsize=2.0,
                        elinewidth=0.7, label=curve["label"])
        else:
            ax.plot(curve["L"], curve["s"], curve["style"], color="black",
                    label=curve["label"])
    ax.set_xscale(spec["xscale"])
    ax.set_xlabel(spec["xlabel"])
    ax.set_ylabel(spec["ylabel"])
    ax.set_title(spec["title"], fontsize=10)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
