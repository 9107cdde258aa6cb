"""Artifact writers: delimited curve output and companion figures.

CSV is the stable contract (fixed column order, 17 significant digits, LF
endings); the rendered figures are a convenience view of the same data.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .montecarlo import BlerCurve

__all__ = ["CSV_COLUMNS", "format_real", "write_curve_csv", "render_bler_figure"]

CSV_COLUMNS = ("scheme", "topology", "R", "p_db", "trials", "errors",
               "bler", "ci_low", "ci_high", "seed")


def format_real(x: float) -> str:
    return f"{x:.17g}"


def write_curve_csv(curve: BlerCurve, path) -> Path:
    """One row per sweep point, UTF-8, LF line endings."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for p_db, trials, errs, bler, (lo, hi) in zip(
            curve.power_db, curve.trials, curve.errors, curve.bler, curve.ci95):
        lines.append(",".join([
            curve.scheme.value,
            curve.topology.kind.value,
            str(curve.topology.relay_count),
            format_real(p_db),
            str(trials),
            str(errs),
            format_real(bler),
            format_real(lo),
            format_real(hi),
            str(curve.seed.seed),
        ]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def render_bler_figure(curves, path, title: str | None = None) -> Path:
    """Semilog error-rate curves with Wilson intervals, one line per scheme."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.5, 5.5))
    for curve in curves:
        pts = [(p, b, lo, hi) for p, b, (lo, hi) in
               zip(curve.power_db, curve.bler, curve.ci95) if b > 0]
        if not pts:
            continue
        p_db = [p for p, *_ in pts]
        bler = [b for _, b, *_ in pts]
        yerr_lo = [max(b - lo, 0.0) for _, b, lo, _ in pts]
        yerr_hi = [max(hi - b, 0.0) for _, b, _, hi in pts]
        ax.errorbar(p_db, bler, yerr=[yerr_lo, yerr_hi], marker="o",
                    capsize=3, label=curve.scheme.value)
    ax.set_yscale("log")
    ax.set_xlabel("per-node power P (dB)")
    ax.set_ylabel("block error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
