"""Figure analogues rendered from the batch pipeline's CSV outputs.

Strictly a consumer of the documented CSV column dictionaries: every number
drawn comes from a CSV cell, nothing is recomputed. Output is a static vector
image, rendered deterministically (fixed hash salt, no timestamps).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

matplotlib.rcParams["svg.hashsalt"] = "nkfigs"

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")

HF_COLOR = "#1f77b4"
RF_COLOR = "#d62728"


class SchemaError(ValueError):
    """An input CSV does not carry the columns the figure needs."""

    def __init__(self, path, column):
        super().__init__(f"{path}: missing required column {column!r}")
        self.column = column


@dataclass(frozen=True)
class FigureSpec:
    """What to render: figure identifier, input CSVs, output image path."""

    figure: str
    inputs: tuple[Path, ...]
    output: Path
    title: str | None = None
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r}; expected one of {FIGURES}")


def read_columns(path: Path, required: tuple[str, ...]) -> dict[str, list[float]]:
    """Load a CSV as float columns, insisting on the required names."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(path, column)
        rows = list(reader)
    out: dict[str, list[float]] = {name: [] for name in header}
    for row in rows:
        for name in header:
            value = row[name]
            try:
                out[name].append(float(value))
            except ValueError:
                out[name].append(float("nan"))
    return out


IRF_PANELS = (
    ("output", "Output"),
    ("consumption", "Consumption"),
    ("employment", "Employment"),
    ("real_wage", "Real wage"),
    ("inflation", "Inflation"),
    ("real_rate", "Real interest rate"),
    ("exit_rate_bp", "Exit rate (bp)"),
    ("entry_rate_bp", "Entry rate (bp)"),
)


def _percent_label(name: str) -> str:
    return "basis points" if name.endswith("_bp") else "% deviation"


def render_fig3(spec: FigureSpec) -> None:
    """Impulse-response grid with the two economies overlaid."""
    required = ("horizon",) + tuple(name for name, _ in IRF_PANELS)
    hf = read_columns(spec.inputs[0], required)
    rf = read_columns(spec.inputs[1], required)
    fig, axes = plt.subplots(2, 4, figsize=(13, 6), sharex=True)
    for ax, (name, label) in zip(axes.ravel(), IRF_PANELS):
        ax.plot(hf["horizon"], hf[name], color=HF_COLOR, label="heterogeneous firms")
        ax.plot(rf["horizon"], rf[name], color=RF_COLOR, linestyle="--", label="representative firm")
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        ax.set_title(label, fontsize=10)
        ax.set_ylabel(_percent_label(name), fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("quarters")
    axes[0, 0].legend(fontsize=8, frameon=False)
    _finish(fig, spec)


def render_fig4(spec: FigureSpec) -> None:
    """Entry and exit probabilities by productivity, base and one price varied."""
    required = (
        "z",
        "exit_prob_base", "entry_prob_base",
        "exit_prob_high_r", "entry_prob_high_r",
        "exit_prob_high_w", "entry_prob_high_w",
        "exit_prob_high_p", "entry_prob_high_p",
    )
    data = read_columns(spec.inputs[0], required)
    fig, (ax_exit, ax_entry) = plt.subplots(1, 2, figsize=(10, 4))
    lines = (("base", "-", "black"), ("high_r", "--", "#1f77b4"),
             ("high_w", "--", "#2ca02c"), ("high_p", "--", "#d62728"))
    for suffix, style, color in lines:
        ax_exit.plot(data["z"], data[f"exit_prob_{suffix}"], style, color=color, label=suffix)
        ax_entry.plot(data["z"], data[f"entry_prob_{suffix}"], style, color=color, label=suffix)
    for ax, label in ((ax_exit, "Exit probability"), (ax_entry, "Entry probability")):
        ax.set_xscale("log")
        ax.set_xlabel("productivity")
        ax.set_title(label, fontsize=10)
    ax_exit.legend(fontsize=8, frameon=False)
    _finish(fig, spec)


def render_fig5(spec: FigureSpec) -> None:
    """Firm and employment shares plus churn rates by size class."""
    required = ("size_lo", "size_hi", "firm_share", "employment_share", "exit_rate", "entry_rate")
    data = read_columns(spec.inputs[0], required)
    labels = [
        f"{int(lo)}-{int(hi)}" if hi > 0 else f"{int(lo)}+"
        for lo, hi in zip(data["size_lo"], data["size_hi"])
    ]
    x = range(len(labels))
    fig, (ax_share, ax_rate) = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.38
    ax_share.bar([i - width / 2 for i in x], data["firm_share"], width, label="firms", color=HF_COLOR)
    ax_share.bar([i + width / 2 for i in x], data["employment_share"], width, label="employment", color="#ff7f0e")
    ax_share.set_title("Shares by size class", fontsize=10)
    ax_share.legend(fontsize=8, frameon=False)
    ax_rate.bar([i - width / 2 for i in x], data["exit_rate"], width, label="exit rate", color="#d62728")
    ax_rate.bar([i + width / 2 for i in x], data["entry_rate"], width, label="entry rate", color="#2ca02c")
    ax_rate.set_title("Quarterly churn by size class", fontsize=10)
    ax_rate.legend(fontsize=8, frameon=False)
    for ax in (ax_share, ax_rate):
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, fontsize=8)
        ax.set_xlabel("employees")
    _finish(fig, spec)


def render_fig6(spec: FigureSpec) -> None:
    """Per-price contributions to the entry and exit rate responses."""
    channels = ("all", "r", "w", "p")
    required = ("horizon",) + tuple(f"{kind}_{ch}_bp" for kind in ("exit", "entry") for ch in channels)
    data = read_columns(spec.inputs[0], required)
    fig, (ax_exit, ax_entry) = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    styles = {"all": ("-", HF_COLOR, 2.0), "r": ("--", "#ff7f0e", 1.2),
              "w": ("--", "#2ca02c", 1.2), "p": ("--", "#d62728", 1.2)}
    for ch in channels:
        style, color, lw = styles[ch]
        ax_exit.plot(data["horizon"], data[f"exit_{ch}_bp"], style, color=color, linewidth=lw, label=ch)
        ax_entry.plot(data["horizon"], data[f"entry_{ch}_bp"], style, color=color, linewidth=lw, label=ch)
    for ax, label in ((ax_exit, "Exit rate (bp)"), (ax_entry, "Entry rate (bp)")):
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("quarters")
    ax_exit.legend(fontsize=8, frameon=False, title="price held moving")
    _finish(fig, spec)


def render_fig7(spec: FigureSpec) -> None:
    """Employment-response gaps relative to the representative-firm benchmark."""
    required = ("horizon", "labor_demand_gap_pp", "equilibrium_gap_pp")
    data = read_columns(spec.inputs[0], required)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.plot(data["horizon"], data["labor_demand_gap_pp"], color=HF_COLOR,
            label="labour demand at benchmark prices")
    ax.plot(data["horizon"], data["equilibrium_gap_pp"], color="#ff7f0e",
            label="equilibrium difference")
    ax.axhline(0.0, color="0.6", linewidth=0.6)
    ax.set_xlabel("quarters")
    ax.set_ylabel("pp of employment")
    ax.legend(fontsize=8, frameon=False)
    _finish(fig, spec)


def render_fig8(spec: FigureSpec) -> None:
    """Shift of the normalized productivity distribution at selected horizons."""
    data = read_columns(spec.inputs[0], ("z",))
    delta_cols = [name for name in data if name.startswith("delta_h")]
    if not delta_cols:
        raise SchemaError(spec.inputs[0], "delta_h*")
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for name in delta_cols:
        horizon = name.removeprefix("delta_h")
        ax.plot(data["z"], data[name], label=f"h = {horizon}")
    ax.axhline(0.0, color="0.6", linewidth=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("productivity")
    ax.set_ylabel("change in distribution")
    ax.legend(fontsize=8, frameon=False)
    _finish(fig, spec)


def _finish(fig, spec: FigureSpec) -> None:
    if spec.title:
        fig.suptitle(spec.title, fontsize=12)
    fig.tight_layout()
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    save_kwargs = {}
    if spec.output.suffix == ".svg":
        save_kwargs["metadata"] = {"Date": None}
    fig.savefig(spec.output, **save_kwargs)
    plt.close(fig)


_RENDERERS = {
    "fig3": (render_fig3, 2),
    "fig4": (render_fig4, 1),
    "fig5": (render_fig5, 1),
    "fig6": (render_fig6, 1),
    "fig7": (render_fig7, 1),
    "fig8": (render_fig8, 1),
}


def render(spec: FigureSpec) -> Path:
    """Render one figure analogue; returns the output path."""
    renderer, n_inputs = _RENDERERS[spec.figure]
    if len(spec.inputs) != n_inputs:
        raise ValueError(
            f"{spec.figure} takes {n_inputs} input CSV(s), got {len(spec.inputs)}"
        )
    renderer(spec)
    return spec.output
