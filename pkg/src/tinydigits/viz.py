"""Grayscale activation diagrams and training-curve figures as SVG text.

Activation values map to grayscale levels by level = round(255 * clamp(a,
0, 1)), so 0 renders black, 1 renders white, and anything beyond [0, 1]
(relu can exceed it) clamps for display. Rendering is a pure function of
its inputs: the same record and spec always produce identical bytes.
"""

from dataclasses import dataclass

from .network import INPUT_COLS, INPUT_PIXELS, INPUT_ROWS, ActivationRecord
from .training import TrainingHistory


@dataclass(frozen=True)
class DiagramSpec:
    cell_size: int = 12
    layer_gap: int = 28
    show_arrows: bool = True
    max_units_rendered: int = 64

    def __post_init__(self):
        if self.cell_size < 1 or self.layer_gap < 1 or self.max_units_rendered < 1:
            raise ValueError("diagram dimensions must be positive")


@dataclass(frozen=True)
class HeatmapStage:
    name: str
    rows: int
    cols: int
    levels: tuple[int, ...]


@dataclass(frozen=True)
class HeatmapData:
    stages: tuple[HeatmapStage, ...]


def _level(activation: float) -> int:
    clamped = min(1.0, max(0.0, activation))
    return int(255.0 * clamped + 0.5)  # round half up


def activations_to_heatmap(rec: ActivationRecord) -> HeatmapData:
    """Grayscale levels per stage: the input as 6x6, dense stages as 1xN rows."""
    stages = []
    for i, (name, values) in enumerate(rec.stages):
        levels = tuple(_level(v) for v in values)
        if i == 0 and len(values) == INPUT_PIXELS:
            stages.append(HeatmapStage(name, INPUT_ROWS, INPUT_COLS, levels))
        else:
            stages.append(HeatmapStage(name, 1, len(values), levels))
    return HeatmapData(tuple(stages))


def heatmap_to_dicts(heat: HeatmapData) -> list[dict]:
    return [
        {"name": s.name, "rows": s.rows, "cols": s.cols, "levels": list(s.levels)}
        for s in heat.stages
    ]


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_diagram(
    rec: ActivationRecord, spec: DiagramSpec = DiagramSpec(), caption: str | None = None
) -> str:
    """Layer-stack diagram: one grayscale rect per unit, input at the bottom.

    Layers are stacked bottom-to-top with an arrow between consecutive
    layers when show_arrows is set. Exactly one <rect> element is emitted
    per rendered unit, so rect count equals total unit count.
    """
    heat = activations_to_heatmap(rec)
    for stage in heat.stages[1:]:  # the 6x6 input stage always fits
        if stage.cols > spec.max_units_rendered:
            raise ValueError(
                f"stage {stage.name!r} has {stage.cols} units; "
                f"raise max_units_rendered (currently {spec.max_units_rendered}) to render it"
            )
    cell = spec.cell_size
    margin = 16
    label_space = 72
    max_w = max(s.cols * cell for s in heat.stages)
    heights = [s.rows * cell for s in heat.stages]
    caption_space = 24 if caption else 0
    width = margin * 2 + max_w + label_space
    height = margin * 2 + sum(heights) + spec.layer_gap * (len(heat.stages) - 1) + caption_space

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    # Render top-down: the last stage (output) sits at the top of the figure.
    y = margin
    stage_tops = {}
    for idx in range(len(heat.stages) - 1, -1, -1):
        stage = heat.stages[idx]
        stage_tops[idx] = y
        w = stage.cols * cell
        x0 = margin + (max_w - w) // 2
        for r in range(stage.rows):
            for c in range(stage.cols):
                level = stage.levels[r * stage.cols + c]
                fill = f"#{level:02x}{level:02x}{level:02x}"
                parts.append(
                    f'<rect x="{x0 + c * cell}" y="{y + r * cell}" '
                    f'width="{cell}" height="{cell}" fill="{fill}" '
                    f'stroke="#808080" stroke-width="1"/>'
                )
        label_y = y + (stage.rows * cell) // 2 + 4
        parts.append(
            f'<text x="{margin + max_w + 8}" y="{label_y}" font-family="sans-serif" '
            f'font-size="11" fill="#333333">{_esc(stage.name)}</text>'
        )
        y += stage.rows * cell + spec.layer_gap
    if spec.show_arrows:
        cx = margin + max_w // 2
        for idx in range(len(heat.stages) - 1):
            # Arrow from the top edge of stage idx up to the bottom edge of idx+1.
            y_from = stage_tops[idx]
            y_to = stage_tops[idx + 1] + heat.stages[idx + 1].rows * cell
            parts.append(
                f'<line x1="{cx}" y1="{y_from - 2}" x2="{cx}" y2="{y_to + 7}" '
                f'stroke="#555555" stroke-width="2"/>'
            )
            parts.append(
                f'<polygon points="{cx - 4},{y_to + 8} {cx + 4},{y_to + 8} {cx},{y_to + 1}" '
                f'fill="#555555"/>'
            )
    if caption:
        parts.append(
            f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" fill="#333333">{_esc(caption)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- training curves --------------------------------------------------------

_TRAIN_COLOR = "#1f77b4"
_VAL_COLOR = "#ff7f0e"

_PANEL_W = 240
_PANEL_H = 150
_PAD_LEFT = 52
_PAD_RIGHT = 16
_PAD_TOP = 30
_PAD_BOTTOM = 42


def _polyline(xs, ys, color, dash="") -> str:
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{extra} '
        f'points="{points}"/>'
    )


def render_curves(history: TrainingHistory) -> str:
    """Two panels: loss on the left (auto-scaled), accuracy on the right ([0, 1])."""
    if not history.epochs:
        raise ValueError("history is empty")
    n = len(history.epochs)
    epochs = [r.epoch for r in history.epochs]
    series = {
        "loss": (
            [r.train_loss for r in history.epochs],
            [r.val_loss for r in history.epochs],
        ),
        "accuracy": (
            [r.train_acc for r in history.epochs],
            [r.val_acc for r in history.epochs],
        ),
    }
    panel_block = _PAD_LEFT + _PANEL_W + _PAD_RIGHT
    width = panel_block * 2
    height = _PAD_TOP + _PANEL_H + _PAD_BOTTOM

    def x_of(e: float, x0: float) -> float:
        if n == 1:
            return x0 + _PANEL_W / 2.0
        return x0 + (e - epochs[0]) / (epochs[-1] - epochs[0]) * _PANEL_W

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for panel, (title, (train_vals, val_vals)) in enumerate(series.items()):
        x0 = panel * panel_block + _PAD_LEFT
        y0 = _PAD_TOP
        if title == "accuracy":
            y_max = 1.0
        else:
            y_max = max(max(train_vals), max(val_vals))
            if y_max <= 0.0:
                y_max = 1.0

        def y_of(v: float) -> float:
            return y0 + _PANEL_H - (v / y_max) * _PANEL_H

        # Frame and axis labels.
        parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + _PANEL_H}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{x0}" y1="{y0 + _PANEL_H}" x2="{x0 + _PANEL_W}" '
            f'y2="{y0 + _PANEL_H}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x0 + _PANEL_W / 2:.2f}" y="{y0 - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" fill="#111111">{title}</text>'
        )
        parts.append(
            f'<text x="{x0 + _PANEL_W / 2:.2f}" y="{y0 + _PANEL_H + 30}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11" '
            f'fill="#333333">epoch</text>'
        )
        parts.append(
            f'<text x="{x0 - 6}" y="{y0 + _PANEL_H + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="#333333">0</text>'
        )
        parts.append(
            f'<text x="{x0 - 6}" y="{y0 + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="#333333">{y_max:.3g}</text>'
        )
        parts.append(
            f'<text x="{x0:.2f}" y="{y0 + _PANEL_H + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10" fill="#333333">{epochs[0]}</text>'
        )
        parts.append(
            f'<text x="{x0 + _PANEL_W:.2f}" y="{y0 + _PANEL_H + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10" '
            f'fill="#333333">{epochs[-1]}</text>'
        )
        xs = [x_of(e, x0) for e in epochs]
        parts.append(_polyline(xs, [y_of(v) for v in train_vals], _TRAIN_COLOR))
        parts.append(_polyline(xs, [y_of(v) for v in val_vals], _VAL_COLOR, dash="4 3"))
    legend_y = height - 8
    parts.append(
        f'<text x="{_PAD_LEFT}" y="{legend_y}" font-family="sans-serif" font-size="10">'
        f'<tspan fill="{_TRAIN_COLOR}">train</tspan>'
        f'<tspan fill="{_VAL_COLOR}" dx="12">validation</tspan></text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
