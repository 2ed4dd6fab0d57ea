"""Static run-report figures: occupancy map with the planned path(s) and the
executed robot trail, rendered to SVG next to the delimited trace output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulator import SimTrace
from .world import FREE, OCCUPIED, OccupancyGrid

# Fixed hash salt so SVG element ids do not change between runs.
matplotlib.rcParams["svg.hashsalt"] = "hybridnav"


def render_run(trace: SimTrace, grid: OccupancyGrid, out_path,
               title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 7))
    img = np.full((grid.height, grid.width), 0.7)
    img[grid.states == FREE] = 1.0
    img[grid.states == OCCUPIED] = 0.0
    extent = (
        grid.origin[0], grid.origin[0] + grid.width * grid.resolution,
        grid.origin[1], grid.origin[1] + grid.height * grid.resolution,
    )
    ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0, origin="lower",
              extent=extent, interpolation="nearest")
    for i, plan in enumerate(trace.plans):
        color = "red" if i == 0 else "green"
        label = "initial plan" if i == 0 else ("re-plan" if i == 1 else None)
        ax.plot(plan["xs"], plan["ys"], color=color, linewidth=1.2,
                linestyle="-" if i == 0 else "--", label=label)
    if trace.records:
        xs = [r.x for r in trace.records]
        ys = [r.y for r in trace.records]
        ax.plot(xs, ys, color="blue", linewidth=1.6, label="executed")
        ax.plot(xs[0], ys[0], "o", color="blue", markersize=5)
        ax.plot(xs[-1], ys[-1], "s", color="blue", markersize=5)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    ax.set_aspect("equal")
    fig.tight_layout()
    # empty metadata keeps the SVG byte-identical across invocations
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
