"""Static SVG line charts of snapshot and sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed element ids keep repeated renders byte-identical
matplotlib.rcParams["svg.hashsalt"] = "fracks"
matplotlib.rcParams["svg.fonttype"] = "none"

PLOT_HALF_WIDTH = 4.0


def _panels(count: int):
    cols = min(count, 2)
    rows = (count + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(5.0 * cols, 3.6 * rows), squeeze=False)
    return fig, axes.ravel()


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_figure1(results, path: str | Path, half_width: float = PLOT_HALF_WIDTH) -> None:
    """Density (dotted), exact V_KS (dashed) and fractional V_KS (solid), one panel per time."""
    fig, axes = _panels(len(results))
    for ax, r in zip(axes, results):
        x = r.snapshot.grid.x
        w = abs(x) <= half_width
        ax.plot(x[w], r.values("n")[w], ":", label="n")
        ax.plot(x[w], r.values("V_KS")[w], "--", label="V_KS")
        ax.plot(x[w], r.values("V_KS_frac")[w], "-", label="fractional V_KS")
        ax.set_title(f"t = {r.t:.4g}")
        ax.set_xlabel("x (a.u.)")
        ax.legend(fontsize="small")
    for ax in axes[len(results):]:
        ax.set_visible(False)
    _save(fig, Path(path))


def plot_correlation(results, path: str | Path, *, label: str, half_width: float = PLOT_HALF_WIDTH) -> None:
    """Exact (dashed) and fractional (solid) correlation potentials per snapshot or sweep value."""
    fig, axes = _panels(len(results))
    for ax, r in zip(axes, results):
        x = r.snapshot.grid.x
        w = abs(x) <= half_width
        ax.plot(x[w], r.values("V_c")[w], "--", label="V_c")
        ax.plot(x[w], r.values("V_c_frac")[w], "-", label="fractional V_c")
        value = r.t if r.value is None else r.value
        ax.set_title(f"{label} = {value:.4g}")
        ax.set_xlabel("x (a.u.)")
        ax.legend(fontsize="small")
    for ax in axes[len(results):]:
        ax.set_visible(False)
    _save(fig, Path(path))
