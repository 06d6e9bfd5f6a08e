"""Optional figures (needs matplotlib). The core package never imports this module."""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("figures need matplotlib: pip install 'plcuts[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def rank_size_plot(sizes, path, title: str = "cluster sizes", reference=None) -> Path:
    """Log-log rank/size plot of ``sizes``; ``reference`` adds a second series (e.g. ground truth)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for label, s in (("found", sizes), ("truth", reference)):
        if s is None:
            continue
        s = sorted(s, reverse=True)
        ax.loglog(range(1, len(s) + 1), s, marker="o", ms=3, lw=1, label=label)
    ax.set_xlabel("rank")
    ax.set_ylabel("size")
    ax.set_title(title)
    if reference is not None:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def trace_plot(objective_trace, k_trace, path, title: str = "descent") -> Path:
    """Objective and cluster count per sweep on twin axes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(range(len(objective_trace)), objective_trace, color="tab:blue", marker=".")
    ax.set_xlabel("sweep")
    ax.set_ylabel("objective", color="tab:blue")
    ax2 = ax.twinx()
    ax2.step(range(len(k_trace)), k_trace, where="post", color="tab:orange")
    ax2.set_ylabel("k", color="tab:orange")
    ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
