"""Figure emission from episode logs and training curves."""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import InvalidArgumentError

_SUBTASK_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                   "tab:purple", "tab:brown", "tab:pink", "tab:olive",
                   "tab:cyan", "gold", "navy", "salmon")


def _color_for(label, palette_index):
    if label not in palette_index:
        palette_index[label] = _SUBTASK_COLORS[len(palette_index)
                                               % len(_SUBTASK_COLORS)]
    return palette_index[label]


def plot_trajectories(header, rows, out_path, layout=None):
    """Top-down robot trails, colored by each robot's decoded sub-task."""
    n = header["n_robots"]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    palette = {}
    if layout is not None:
        for wall in layout.walls:
            ax.add_patch(plt.Rectangle((wall.x0, wall.y0), wall.x1 - wall.x0,
                                       wall.y1 - wall.y0, color="black"))
        for s in layout.switches:
            ax.add_patch(plt.Circle(s.pos, s.radius, color=s.color, alpha=0.6))
        for f in layout.flags:
            ax.scatter(*f.pos, marker="^", s=90, color=f.color,
                       edgecolors="black", zorder=5)
        for g in layout.goals:
            ax.scatter(*g, marker="*", s=80, color="green", zorder=4)
        ax.set_xlim(0, layout.width)
        ax.set_ylim(0, layout.height)
    for r in range(n):
        xs = [row["world"]["positions"][r][0] for row in rows]
        ys = [row["world"]["positions"][r][1] for row in rows]
        labels = [row["decoded"][r] for row in rows]
        for k in range(1, len(xs)):
            ax.plot(xs[k - 1:k + 1], ys[k - 1:k + 1],
                    color=_color_for(labels[k], palette), linewidth=1.4)
        ax.scatter(xs[0], ys[0], marker="o", s=40, color="gray", zorder=6)
    handles = [plt.Line2D([0], [0], color=c, label=lbl)
               for lbl, c in palette.items()]
    ax.legend(handles=handles, fontsize=7, loc="upper right")
    ax.set_aspect("equal")
    ax.set_title(header.get("command", ""), fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_distances(header, rows, out_path, distances=None):
    """Per-robot distance-to-current-target timeline, Fig.-style."""
    n = header["n_robots"]
    fig, ax = plt.subplots(figsize=(8, 3))
    ticks = [row["tick"] for row in rows]
    if distances is None:
        raise InvalidArgumentError("distance series required (run metrics first)")
    for r in range(n):
        ax.plot(ticks, distances[r][:len(ticks)], label=f"robot {r}")
    for row in rows:
        for event in row["events"]:
            ax.axvline(row["tick"], color="gray", alpha=0.15, linewidth=0.6)
    ax.set_xlabel("tick")
    ax.set_ylabel("distance to current target [m]")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_curve(rows, out_path, x_key, y_keys, title=""):
    """Training-curve plot from delimited-text rows (list of dicts)."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = [float(r[x_key]) for r in rows]
    for key in y_keys:
        ys = [float(r[key]) for r in rows if key in r and r[key] != ""]
        ax.plot(xs[:len(ys)], ys, label=key)
    ax.set_xlabel(x_key)
    ax.legend(fontsize=8)
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
