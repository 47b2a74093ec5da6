"""Static SVG figures for diagrams and Betti curves."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# stable element ids so reruns write identical files
plt.rcParams["svg.hashsalt"] = "cechecg"

_COLORS = {0: "tab:blue", 1: "tab:orange", 2: "tab:green", 3: "tab:red"}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_diagram(diagram, path, dims=(0, 1, 2), title=""):
    fig, ax = plt.subplots(figsize=(4, 4))
    top = diagram.epsilon_max if np.isfinite(diagram.epsilon_max) else 1.0
    for k in dims:
        bars = diagram[k]
        if len(bars) == 0:
            continue
        death = np.where(np.isinf(bars[:, 1]), top * 1.05, bars[:, 1])
        ax.scatter(bars[:, 0], death, s=10, color=_COLORS.get(k), label=f"H{k}")
    ax.plot([0, top * 1.05], [0, top * 1.05], color="grey", lw=0.8)
    ax.axhline(top * 1.05, color="grey", lw=0.5, ls="--")
    ax.set_xlabel("birth (ε)")
    ax.set_ylabel("death (ε)")
    ax.set_title(title)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_betti_curves(curves, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 3))
    for c in curves:
        ax.step(c.grid, c.values, where="post", color=_COLORS.get(c.dimension),
                label=f"β{c.dimension}")
    ax.set_xlabel("ε")
    ax.set_ylabel("Betti number")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)
