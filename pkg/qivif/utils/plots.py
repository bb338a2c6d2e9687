import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_traces(traces, path) -> None:
    """Relative change per iteration, one line per solver, log scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for trace in traces:
            values = [max(v, 1e-16) for v in trace.relative_change]
            if values:
                ax.semilogy(range(1, len(values) + 1), values, marker="o", markersize=3, label=trace.solver)
        ax.set_xlabel("iteration")
        ax.set_ylabel("relative change")
        ax.grid(True, which="both", alpha=0.3)
        if ax.lines:
            ax.legend(fontsize="small")
        os.makedirs(os.path.dirname(os.fspath(path)) or ".", exist_ok=True)
        fig.savefig(path, dpi=120, bbox_inches="tight")
    finally:
        plt.close(fig)
