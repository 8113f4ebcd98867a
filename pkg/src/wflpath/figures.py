"""Figure rendering for the experiment reports.

The events command writes its scaling data as CSV and, next to it, a PNG
summarizing the same rows: event totals against n^2 for the adversarial
family (where growth is quadratic), and mean fuse/unfuse counts against n
for the random ensembles (where unfuse events stay rare).
"""

from __future__ import annotations

from collections import defaultdict


def render_event_scaling(rows, family: str, out_path) -> None:
    """Render the events-per-size figure for one instance family.

    ``rows`` are dicts with keys n, seed, fuse, unfuse, total, segments
    (the CSV rows of the events command).
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    if family == "worst-case":
        ns = [r["n"] for r in rows]
        ax.plot([n * n for n in ns], [r["total"] for r in rows],
                "o-", label="all events")
        ax.plot([n * n for n in ns], [r["fuse"] for r in rows],
                "s--", label="fuse events")
        ax.plot([n * n for n in ns], [r["unfuse"] for r in rows],
                "^:", label="unfuse events")
        ax.set_xlabel("input size squared, $n^2$")
    else:
        by_n = defaultdict(list)
        for r in rows:
            by_n[r["n"]].append(r)
        ns = sorted(by_n)
        mean = lambda key, n: sum(r[key] for r in by_n[n]) / len(by_n[n])
        ax.plot(ns, [mean("fuse", n) for n in ns], "o-", label="fuse events")
        ax.plot(ns, [mean("unfuse", n) for n in ns], "^:", label="unfuse events")
        ax.set_xlabel("input size, $n$")
    ax.set_ylabel("# critical points")
    ax.set_title(f"path events, {family} instances")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
