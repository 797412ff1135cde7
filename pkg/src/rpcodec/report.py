"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STAGE_LABELS = {"ed": "entropy decoding", "ip": "intra prediction",
                "rd": "residual construction", "lf": "loop filter"}
STAGE_COLORS = {"ed": "#4c72b0", "ip": "#55a868", "rd": "#c44e52", "lf": "#8172b2"}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_stage_timings(rows, path):
    """Stacked bars of mean stage time per strategy, averaged over files."""
    acc: dict = {}
    for r in rows:
        if r["stage"] in STAGE_LABELS:
            acc.setdefault(r["strategy"], {}).setdefault(r["stage"], []).append(r["avg_ms"])
    strategies = list(acc)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    bottom = [0.0] * len(strategies)
    for stage, label in STAGE_LABELS.items():
        vals = [sum(acc[s].get(stage, [0.0])) / max(1, len(acc[s].get(stage, [0.0])))
                for s in strategies]
        ax.bar(strategies, vals, bottom=bottom, label=label, color=STAGE_COLORS[stage])
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_ylabel("time per decode (ms)")
    ax.set_title("Decode time by stage")
    ax.legend(frameon=False, fontsize=8)
    return _finish(fig, path)


def plot_ap(result, path):
    classes = sorted(result.ap)
    names = [result.class_names.get(c, str(c)) for c in classes]
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(classes) + 2), 3.5))
    ax.bar(names, [100 * result.ap[c] for c in classes], color="#4c72b0")
    ax.axhline(100 * result.mAP, color="k", ls="--", lw=1, label=f"mAP {100 * result.mAP:.2f}%")
    ax.set_ylim(0, 105)
    ax.set_ylabel("AP@0.50 (%)")
    ax.legend(frameon=False, loc="lower right")
    return _finish(fig, path)


def plot_batch_psnr(manifest_rows, columns, path):
    """Per-file PSNR against the source for each reconstruction column."""
    ok = [r for r in manifest_rows if r.get("status") == "ok"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in columns:
        ys = [float(r[col]) for r in ok if r[col] not in ("", "identical")]
        ax.plot(range(len(ys)), ys, marker="o", ms=3, label=col.replace("psnr_", ""))
    ax.set_xticks(range(len(ok)))
    ax.set_xticklabels([r["file"] for r in ok], rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("PSNR vs source (dB)")
    ax.legend(frameon=False, fontsize=8)
    return _finish(fig, path)
