"""Static figure rendering for traces.

Renders the comparison figures the trace CSVs describe: per-strategy rate
series over a shared step axis with the utilization path underneath.
Output is SVG tuned for byte reproducibility: fixed hash salt, no embedded
date, text kept as text elements. Floats appear here and nowhere else in
the pipeline; a figure is a display artifact, not a numeric product.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .exceptions import ValidationError
from .numerics import Dec
from .tracefile import RecordedTrace, read_trace

_RC = {
    "svg.hashsalt": "irmlab",
    "svg.fonttype": "none",
    "figure.figsize": (8.0, 5.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 9,
    "axes.labelsize": 10,
}


def _series_floats(recorded: RecordedTrace):
    steps = [int(s) for s in recorded.column("step")]
    utilization = [Dec(u).to_float() for u in recorded.column("utilization")]
    rates = {}
    for col in recorded.columns:
        if col.endswith(".rate"):
            name = col[: -len(".rate")]
            rates[name] = [Dec(v).to_float() for v in recorded.column(col)]
    if not rates:
        raise ValidationError("trace has no '<strategy>.rate' columns to plot")
    return steps, utilization, rates


def render_trace(recorded: RecordedTrace, out_path, title: str | None = None):
    """Write an SVG of the trace: rates on top, utilization below."""
    steps, utilization, rates = _series_floats(recorded)
    with plt.rc_context(_RC):
        fig, (ax_rate, ax_util) = plt.subplots(
            2, 1, sharex=True, gridspec_kw={"height_ratios": [2, 1]}
        )
        for name, series in rates.items():
            ax_rate.plot(steps, series, label=name, linewidth=1.5)
        ax_rate.set_ylabel("borrow rate (APR fraction)")
        ax_rate.legend(loc="upper left")
        if title:
            ax_rate.set_title(title)
        ax_util.plot(steps, utilization, color="dimgray", linewidth=1.5, label="utilization")
        ax_util.set_ylabel("utilization")
        ax_util.set_xlabel("step")
        ax_util.set_ylim(-0.05, 1.05)
        ax_util.legend(loc="lower right")
        fig.tight_layout()
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)


def render_trace_file(trace_csv, out_path, title: str | None = None):
    render_trace(read_trace(trace_csv), out_path, title=title)
